use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use pml_lfc::data::{
    format_labels, format_matrix, inject_noise, read_labels, read_matrix, save_dataset, Dataset, DatasetPaths,
    NoiseSpec,
};
use pml_lfc::metrics::evaluate;
use pml_lfc::model::{format_model, load_model};
use pml_lfc::synthetic::{planted_dataset, PlantedSpec};
use pml_lfc::trainer::default_threshold;
use pml_lfc::{fit, TrainConfig, TrainedModel};

use crate::args::{
    AblateArgs, BenchArgs, ConfigArgs, EvaluateArgs, PredictArgs, ProtocolArgs, SweepArgs, SweepParam, SynthArgs,
    TrainArgs,
};
use crate::error::{CliError, CliResult};
use crate::protocol::{run_cells, Cell, Protocol, RunRow, Variant};
use crate::report::{default_summary_path, summarize, write_runs, write_summary};

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    fs::write(path, contents).map_err(io_err(path))
}

/// Defaults, then the config file, then `--set`, then the typed flags.
pub fn build_config(args: &ConfigArgs) -> CliResult<TrainConfig> {
    let mut cfg = TrainConfig::default();
    if let Some(path) = &args.config {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        cfg.apply_text(&text)?;
    }
    for kv in &args.overrides {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        cfg.set(k.trim(), v)?;
    }
    if let Some(v) = args.alpha {
        cfg.alpha = v;
    }
    if let Some(v) = args.beta {
        cfg.beta = v;
    }
    if let Some(v) = args.lambda {
        cfg.lambda = v;
    }
    if let Some(v) = args.outer_iterations {
        cfg.outer_iterations = v;
    }
    if let Some(v) = args.similarity_mode {
        cfg.similarity_mode = v;
    }
    if let Some(v) = args.kernel_width_mode {
        cfg.kernel_width_mode = v;
    }
    if args.two_stage {
        cfg.joint = false;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn train(args: &TrainArgs) -> CliResult<TrainedModel> {
    let mut cfg = build_config(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let x = read_matrix(&args.features)?;
    let y = read_labels(&args.labels)?;
    let model = fit(x.view(), y.view(), &cfg)?;
    if !model.converged {
        log::info!(
            "stopped after {} outer iterations without reaching tolerance {}",
            model.objective_trace.len(),
            cfg.outer_tolerance
        );
    }
    write_file(&args.out_model, &format_model(&model))?;

    let trace_path = args.out_trace.clone().unwrap_or_else(|| {
        let mut p = args.out_model.clone().into_os_string();
        p.push(".trace.csv");
        PathBuf::from(p)
    });
    let mut trace = String::from("iteration,objective\n");
    for (i, v) in model.objective_trace.iter().enumerate() {
        trace.push_str(&format!("{},{v:?}\n", i + 1));
    }
    write_file(&trace_path, &trace)?;
    Ok(model)
}

fn threshold_or_default(threshold: Option<f64>, q: usize) -> f64 {
    threshold.unwrap_or_else(|| default_threshold(q))
}

pub fn predict(args: &PredictArgs) -> CliResult<()> {
    let model = load_model(&args.model)?;
    let x = read_matrix(&args.features)?;
    let pred = model.predict(x.view(), threshold_or_default(args.threshold, model.weights.q()))?;
    write_file(&args.out_scores, &format_matrix(pred.scores.view()))?;
    if let Some(path) = &args.out_labels {
        write_file(path, &format_labels(pred.labels.view()))?;
    }
    Ok(())
}

pub fn evaluate_cmd(args: &EvaluateArgs, out: &mut dyn Write) -> CliResult<()> {
    let model = load_model(&args.model)?;
    let x = read_matrix(&args.features)?;
    let truth = read_labels(&args.truth)?;
    let pred = model.predict(x.view(), threshold_or_default(args.threshold, model.weights.q()))?;
    let r = evaluate(pred.scores.view(), pred.labels.view(), truth.view())?;
    let text = format!(
        "hamming {}\none_error {}\ncoverage {}\nranking {}\navgprec {}\nn_test {}\nrows_without_relevant {}\nrows_skipped_ranking {}\n",
        r.hamming_loss,
        r.one_error,
        r.coverage,
        r.ranking_loss,
        r.average_precision,
        r.n_test,
        r.rows_without_relevant,
        r.rows_skipped_ranking
    );
    out.write_all(text.as_bytes())
        .map_err(io_err(Path::new("<stdout>")))
}

pub fn synth(args: &SynthArgs) -> CliResult<()> {
    let (name, features, truth) = match (&args.features, &args.truth) {
        (Some(f), Some(t)) => {
            let stem = f.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            (stem, read_matrix(f)?, read_labels(t)?)
        }
        _ => {
            let ds = planted_dataset(&PlantedSpec {
                n: args.n,
                d: args.d,
                q: args.q,
                rank: args.rank,
                labels_per_instance: (args.min_labels, args.max_labels),
                score_noise: 0.0,
                seed: args.seed,
            })?;
            (ds.name, ds.features, ds.candidates)
        }
    };
    let candidates = inject_noise(
        truth.view(),
        &NoiseSpec {
            ratio_percent: args.noise,
            seed: args.seed,
        },
    )?;
    let ds = Dataset::new(name, features, candidates, Some(truth))?;
    fs::create_dir_all(&args.out_dir).map_err(io_err(&args.out_dir))?;
    save_dataset(
        &ds,
        &DatasetPaths {
            features: args.out_dir.join("features.txt"),
            labels: args.out_dir.join("labels.txt"),
            truth: Some(args.out_dir.join("truth.txt")),
        },
    )?;
    Ok(())
}

fn load_protocol_dataset(args: &ProtocolArgs) -> CliResult<Dataset> {
    let features = read_matrix(&args.features)?;
    let truth = read_labels(&args.truth)?;
    let name = args.name.clone().unwrap_or_else(|| {
        args.features
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    });
    Ok(Dataset::new(name, features, truth.clone(), Some(truth))?)
}

fn protocol_of(args: &ProtocolArgs, repeats: usize) -> CliResult<Protocol> {
    if repeats == 0 {
        return Err(CliError::Usage("--repeats must be at least 1".into()));
    }
    Ok(Protocol {
        repeats,
        base_seed: args.seed,
        train_fraction: args.train_fraction,
    })
}

fn run_and_report(args: &ProtocolArgs, cells: &[Cell], protocol: &Protocol) -> CliResult<Vec<RunRow>> {
    let ds = load_protocol_dataset(args)?;
    let rows = run_cells(&ds, cells, protocol)?;
    write_runs(&args.out, &rows)?;
    let summary_path = args.summary.clone().unwrap_or_else(|| default_summary_path(&args.out));
    write_summary(&summary_path, &summarize(&rows))?;
    let failed = rows.iter().filter(|r| r.outcome.is_err()).count();
    if failed > 0 {
        return Err(CliError::RunsFailed {
            failed,
            total: rows.len(),
        });
    }
    Ok(rows)
}

pub fn bench(args: &BenchArgs) -> CliResult<Vec<RunRow>> {
    let base = build_config(&args.protocol.config)?;
    let protocol = protocol_of(&args.protocol, args.repeats)?;
    let cells: Vec<Cell> = args
        .variants
        .iter()
        .flat_map(|&variant| {
            let base = &base;
            args.noise_grid.iter().map(move |&noise_pct| Cell {
                variant,
                noise_pct,
                config: base.clone(),
            })
        })
        .collect();
    run_and_report(&args.protocol, &cells, &protocol)
}

pub fn sweep(args: &SweepArgs) -> CliResult<Vec<RunRow>> {
    let base = build_config(&args.protocol.config)?;
    let protocol = protocol_of(&args.protocol, args.repeats)?;
    let cells: Vec<Cell> = args
        .grid
        .iter()
        .map(|&v| {
            let (alpha, beta) = match args.param {
                SweepParam::Alpha => (v, 10.0),
                SweepParam::Beta => (10.0, v),
            };
            Cell {
                variant: Variant::Both,
                noise_pct: args.noise,
                config: TrainConfig {
                    alpha,
                    beta,
                    ..base.clone()
                },
            }
        })
        .collect();
    run_and_report(&args.protocol, &cells, &protocol)
}

pub fn ablate(args: &AblateArgs) -> CliResult<Vec<RunRow>> {
    let base = build_config(&args.protocol.config)?;
    let protocol = protocol_of(&args.protocol, args.repeats)?;
    let cells: Vec<Cell> = Variant::ABLATION
        .iter()
        .map(|&variant| Cell {
            variant,
            noise_pct: args.noise,
            config: base.clone(),
        })
        .collect();
    run_and_report(&args.protocol, &cells, &protocol)
}
