use ndarray::Array2;
use pml_lfc::confidence::{init_confidence, p_gradient, p_objective, update_confidence, PUpdateParams};
use pml_lfc::rng::PortableRng;
use pml_lfc::similarity::{build_bundle, KernelWidthMode};

struct Problem {
    x: Array2<f64>,
    y: Array2<f64>,
    xw: Array2<f64>,
}

fn problem(seed: u64) -> Problem {
    let mut rng = PortableRng::new(seed, 0);
    let n = 3 + rng.below(18) as usize;
    let q = 2 + rng.below(7) as usize;
    let d = 1 + rng.below(5) as usize;
    let x = Array2::from_shape_fn((n, d), |_| rng.normal());
    let mut y = Array2::from_shape_fn((n, q), |_| (rng.unit() < 0.5) as u8 as f64);
    for i in 0..n {
        let c = rng.below(q as u64) as usize;
        y[[i, c]] = 1.0;
    }
    let xw = Array2::from_shape_fn((n, q), |_| rng.unit());
    Problem { x, y, xw }
}

#[test]
fn updates_stay_nonnegative_and_on_support() {
    for seed in 0..100 {
        let pr = problem(seed);
        let bundle = build_bundle(pr.x.view(), pr.y.view(), KernelWidthMode::MeanPairwise).unwrap();
        let mut p = init_confidence(pr.y.view()).unwrap();
        let params = PUpdateParams { inner_iterations: 1, ..PUpdateParams::default() };
        for step in 0..10 {
            p = update_confidence(&p, pr.xw.view(), &bundle, &params).unwrap();
            assert!(p.values.iter().all(|&v| v >= 0.0 && v.is_finite()), "seed {seed} step {step}");
            assert!(p.respects_support(), "seed {seed} step {step}");
        }
    }
}

#[test]
fn p_objective_mostly_non_increasing() {
    let mut violations = 0;
    for seed in 0..100 {
        let pr = problem(1000 + seed);
        let bundle = build_bundle(pr.x.view(), pr.y.view(), KernelWidthMode::MeanPairwise).unwrap();
        let params = PUpdateParams { inner_iterations: 1, ..PUpdateParams::default() };
        let obj = |p: &Array2<f64>| p_objective(p.view(), pr.xw.view(), &bundle, params.beta, params.lambda);
        let mut p = init_confidence(pr.y.view()).unwrap();
        let mut prev = obj(&p.values);
        let mut ok = true;
        for _ in 0..10 {
            p = update_confidence(&p, pr.xw.view(), &bundle, &params).unwrap();
            let cur = obj(&p.values);
            if cur > prev + 1e-8 * prev.abs().max(1.0) {
                ok = false;
            }
            prev = cur;
        }
        violations += usize::from(!ok);
    }
    assert!(violations <= 5, "{violations} of 100 problems went uphill");
}

#[test]
fn converged_points_satisfy_complementarity() {
    let mut checked = 0;
    for seed in 0..40 {
        let pr = problem(5000 + seed);
        let bundle = build_bundle(pr.x.view(), pr.y.view(), KernelWidthMode::MeanPairwise).unwrap();
        let params = PUpdateParams { inner_iterations: 20000, tolerance: 1e-13, ..PUpdateParams::default() };
        let p = update_confidence(&init_confidence(pr.y.view()).unwrap(), pr.xw.view(), &bundle, &params).unwrap();
        let g = p_gradient(p.values.view(), pr.xw.view(), &bundle, params.beta, params.lambda);
        let g_inf = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let residual = (&g * &p.values).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if residual <= 1e-6 * (1.0 + g_inf) {
            checked += 1;
        }
    }
    assert!(checked >= 30, "only {checked} of 40 reached a KKT point");
}
