//! Acceptance suite. Run with `cargo test --test acceptance -- --nocapture`
//! to see one PASS/FAIL line per criterion.

use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use robust_design::apportion::{ceil_then_remove, compare_rounding, loss_of_exact, pukelsheim_rieder};
use robust_design::criteria::{cross_check_variance, maxbias, moments, variance, worst_case_psi};
use robust_design::model::{
    build_grid_space, evaluate_regressors, orthonormalize, DesignMeasure, DesignSpace, OrthonormalBasis,
    RegressorMatrix, RegressorSpec,
};
use robust_design::optimizer::{
    default_nu_grid, directional_scores, find_nu_for_cmb, frontier_point, minimize_loss, solve_rbb, solve_rbv,
    sweep_frontier, OptimizerConfig, DEFAULT_GRID_POINTS,
};

type Outcome = Result<String, String>;

fn model(degree: usize, intercept: bool, space: &DesignSpace) -> (RegressorMatrix, OrthonormalBasis) {
    let f = evaluate_regressors(&RegressorSpec::polynomial(degree, intercept), space).unwrap();
    let q = orthonormalize(&f).unwrap();
    (f, q)
}

fn line() -> OrthonormalBasis {
    let space = build_grid_space(&[(-1.0, 1.0)], &[40]).unwrap();
    model(1, true, &space).1
}

fn quadratic(n: usize) -> (RegressorMatrix, OrthonormalBasis) {
    let space = build_grid_space(&[(-1.0, 1.0)], &[n]).unwrap();
    model(2, true, &space)
}

fn two_point_oracle_var() -> f64 {
    // sum over the grid of x_i^2 with x_i = (2i - 39)/39, as an exact integer numerator
    let num: i64 = (0..40).map(|i: i64| (2 * i - 39).pow(2)).sum();
    assert_eq!(num, 21320);
    40.0 + num as f64 / 1521.0
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn dirichlet(rng: &mut ChaCha8Rng, n: usize, alpha: f64) -> Vec<f64> {
    let g = Gamma::new(alpha, 1.0).unwrap();
    let raw: Vec<f64> = (0..n).map(|_| g.sample(rng)).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / s).collect()
}

/// Random design on a random support of at least `min_support` points.
fn random_design(rng: &mut ChaCha8Rng, n: usize, min_support: usize) -> DesignMeasure {
    let k = rng.random_range(min_support..=n);
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..k {
        let j = rng.random_range(i..n);
        idx.swap(i, j);
    }
    let alpha = [0.3, 1.0, 3.0][rng.random_range(0..3)];
    let w = dirichlet(rng, k, alpha);
    let mut full = vec![0.0; n];
    for (t, &i) in idx[..k].iter().enumerate() {
        full[i] = w[t];
    }
    DesignMeasure::new(full).unwrap()
}

fn c1_uniform_endpoint() -> Outcome {
    let q = line();
    let b = moments(&q, &DesignMeasure::uniform(40)).unwrap();
    let (v, m) = (variance(&b), maxbias(&b));
    check(
        (m - 1.0).abs() <= 1e-9 && (v - 80.0).abs() <= 1e-9,
        format!("maxbias={:.12} var={:.12}", m, v),
    )
}

fn c2_two_point_endpoint() -> Outcome {
    let q = line();
    let b = moments(&q, &DesignMeasure::equal_on(40, &[0, 39]).unwrap()).unwrap();
    let (v, m) = (variance(&b), maxbias(&b));
    let want = two_point_oracle_var();
    check(
        (m - 20.0).abs() <= 1e-9 && (v - want).abs() <= 1e-8,
        format!("maxbias={:.12} var={:.12} (oracle {:.12})", m, v, want),
    )
}

fn c3_optimizer_endpoints() -> Outcome {
    let q = line();
    let cfg = OptimizerConfig::default();
    let (x1, _) = minimize_loss(&q, 1.0, &cfg).unwrap();
    let dev = x1.weights().iter().map(|w| (w - 1.0 / 40.0).abs()).fold(0.0, f64::max);
    let mb1 = maxbias(&moments(&q, &x1).unwrap());
    let (x0, _) = minimize_loss(&q, 0.0, &cfg).unwrap();
    let v0 = variance(&moments(&q, &x0).unwrap());
    let rel = (v0 - two_point_oracle_var()).abs() / two_point_oracle_var();
    let off = 1.0 - x0.weights()[0] - x0.weights()[39];
    check(
        dev < 1e-3 && mb1 < 1.0 + 1e-6 && rel <= 5e-3 && off < 0.02,
        format!(
            "nu=1: max|xi-1/40|={:.2e} maxbias={:.9}; nu=0: var rel err={:.2e} mass off +-1={:.2e}",
            dev, mb1, rel, off
        ),
    )
}

fn c4_cmb_target() -> Outcome {
    let d = find_nu_for_cmb(&line(), 0.33, &OptimizerConfig::default()).unwrap();
    check(
        (0.23..=0.33).contains(&d.point.nu),
        format!("nu={:.6} cmb={:.6}", d.point.nu, d.point.cmb),
    )
}

fn c5_monotone_frontier() -> Outcome {
    let pts = sweep_frontier(&line(), &default_nu_grid(21), &OptimizerConfig::default()).unwrap();
    let mut worst: f64 = 0.0;
    for w in pts.windows(2) {
        worst = worst.max((w[0].var - w[1].var) / w[0].var);
        worst = worst.max((w[1].maxbias - w[0].maxbias) / w[0].maxbias);
    }
    check(worst <= 1e-3, format!("largest relative violation {:.2e}", worst))
}

fn c6_oracle_equivalence() -> Outcome {
    let (f, q) = quadratic(12);
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut e_bias, mut e_var): (f64, f64) = (0.0, 0.0);
    let mut count = 0;
    while count < 100 {
        let xi = random_design(&mut rng, 12, 3);
        let Ok(b) = moments(&q, &xi) else { continue };
        count += 1;
        let mb = maxbias(&b);
        let psi = worst_case_psi(&q, &xi).unwrap();
        e_bias = e_bias.max((mb - psi.attained_bias).abs() / (1.0 + mb));
        let v = variance(&b);
        e_var = e_var.max((v - cross_check_variance(&f, &xi).unwrap()).abs() / v);
    }
    check(
        e_bias <= 1e-8 && e_var <= 1e-8,
        format!("max bias gap {:.2e}, max variance gap {:.2e}", e_bias, e_var),
    )
}

fn mixed_loss(q: &OrthonormalBasis, w: &[f64], nu: f64) -> f64 {
    let b = moments(q, &DesignMeasure::new(w.to_vec()).unwrap()).unwrap();
    (1.0 - nu) * variance(&b) + nu * maxbias(&b)
}

fn c7_gradient_check() -> Outcome {
    let (_, q) = quadratic(12);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    let mut count = 0;
    while count < 50 {
        let d = dirichlet(&mut rng, 12, 1.0);
        let w: Vec<f64> = d.iter().map(|x| 0.9 * x + 0.1 / 12.0).collect();
        let xi = DesignMeasure::new(w.clone()).unwrap();
        if moments(&q, &xi).unwrap().eigen_gap <= 1e-6 {
            continue;
        }
        count += 1;
        for nu in [0.0, 0.28, 0.7, 1.0] {
            let t = directional_scores(&q, &xi, nu).unwrap();
            for (i, &ti) in t.iter().enumerate() {
                let step = |eps: f64| -> Vec<f64> {
                    w.iter()
                        .enumerate()
                        .map(|(j, &x)| (1.0 - eps) * x + if i == j { eps } else { 0.0 })
                        .collect()
                };
                let fd = -(mixed_loss(&q, &step(h), nu) - mixed_loss(&q, &step(-h), nu)) / (2.0 * h);
                worst = worst.max((ti - fd).abs() / (1.0 + ti.abs()));
            }
        }
    }
    check(worst <= 1e-4, format!("largest scaled score error {:.2e}", worst))
}

fn c8_symmetric_family() -> Outcome {
    let space = DesignSpace::from_points(vec![vec![-1.0], vec![0.0], vec![1.0]]).unwrap();
    let (_, q) = model(1, false, &space);
    let family = |a: f64| DesignMeasure::new(vec![a, 1.0 - 2.0 * a, a]).unwrap();
    let mut worst: f64 = 0.0;
    for a in [0.1, 0.25, 0.5] {
        let b = moments(&q, &family(a)).unwrap();
        worst = worst.max((variance(&b) - 1.0 / a).abs()).max((maxbias(&b) - 1.0).abs());
    }
    let mut argmin_ok = true;
    for nu in [0.0, 0.5, 1.0] {
        let at_half = mixed_loss(&q, family(0.5).weights(), nu);
        for k in 1..=500 {
            let a = k as f64 / 1000.0;
            if mixed_loss(&q, family(a).weights(), nu) < at_half - 1e-12 {
                argmin_ok = false;
            }
        }
    }
    check(
        worst <= 1e-12 && argmin_ok,
        format!(
            "max deviation from (1/alpha, 1) = {:.2e}; argmin at alpha=0.5: {}",
            worst, argmin_ok
        ),
    )
}

fn c9_rounding_quality() -> Outcome {
    let q = line();
    let p = frontier_point(&q, 0.28, &OptimizerConfig::default()).unwrap();
    let d = ceil_then_remove(&q, &p.design, 10, 0.28).unwrap();
    let total: usize = d.allocations.iter().sum();
    let excess = loss_of_exact(&q, &d, 0.28).unwrap() / p.loss_value - 1.0;
    check(
        total == 10 && excess <= 0.05,
        format!("sum={} excess={:.4}%", total, 100.0 * excess),
    )
}

fn c10_c11_quadratic_rounding() -> (Outcome, Outcome) {
    let (_, q) = quadratic(40);
    let pts = sweep_frontier(&q, &default_nu_grid(DEFAULT_GRID_POINTS), &OptimizerConfig::default()).unwrap();

    let mut tested = 0;
    let mut violations = 0;
    for p in pts.iter().filter(|p| p.design.support().len() <= 14) {
        tested += 1;
        let mut prev = vec![0usize; 40];
        for n in 14..=20 {
            let a = pukelsheim_rieder(&p.design, n).unwrap().allocations;
            if a.iter().sum::<usize>() != n || a.iter().zip(&prev).any(|(x, y)| x < y) {
                violations += 1;
            }
            prev = a;
        }
    }
    let c10 = check(
        tested > 0 && violations == 0,
        format!("{} designs with support <= 14, {} violations", tested, violations),
    );

    let mut worse = Vec::new();
    for p in &pts {
        let c = compare_rounding(&q, &p.design, 14, p.nu).unwrap();
        if c.loss_efficient.is_some_and(|e| e > c.loss_ceil_remove) {
            worse.push(p.nu);
        }
    }
    let c11 = check(
        !worse.is_empty(),
        format!(
            "efficient apportionment worse at {} of {} nu values (first nu={:?})",
            worse.len(),
            pts.len(),
            worse.first()
        ),
    );
    (c10, c11)
}

fn c12_bounded_optimality() -> Outcome {
    let q = line();
    let cfg = OptimizerConfig::default();
    let half = frontier_point(&q, 0.5, &cfg).unwrap();
    let rbb = solve_rbb(&q, half.maxbias, &cfg).unwrap().point;
    let rbv = solve_rbv(&q, half.var, &cfg).unwrap().point;
    let anchors = [rbb.design.weights().to_vec(), rbv.design.weights().to_vec()];

    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut candidates = |feasible: &dyn Fn(f64, f64) -> bool, anchor: &[f64]| -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        let mut attempt = 0usize;
        while out.len() < 1000 {
            attempt += 1;
            let xi = match attempt % 3 {
                0 => random_design(&mut rng, 40, 2),
                1 => {
                    let mut w = vec![0.0; 40];
                    let k = rng.random_range(1..=6);
                    for _ in 0..k {
                        let i = rng.random_range(0..20);
                        let m: f64 = rng.random_range(0.1..1.0);
                        w[i] += m;
                        w[39 - i] += m;
                    }
                    DesignMeasure::new(normalize(w)).unwrap()
                }
                _ => {
                    let eps: f64 = rng.random_range(1e-4..0.2);
                    let noise = dirichlet(&mut rng, 40, 0.5);
                    let w = anchor
                        .iter()
                        .zip(&noise)
                        .map(|(a, n)| (1.0 - eps) * a + eps * n)
                        .collect();
                    DesignMeasure::new(w).unwrap()
                }
            };
            let Ok(b) = moments(&q, &xi) else { continue };
            let (v, m) = (variance(&b), maxbias(&b));
            if feasible(v, m) {
                out.push((v, m));
            }
        }
        out
    };
    let b2 = half.maxbias;
    let s2 = half.var;
    let by_bias = candidates(&|_, m| m <= b2 + 1e-6, &anchors[0]);
    let by_var = candidates(&|v, _| v <= s2 + 1e-6, &anchors[1]);
    let best_var = by_bias.iter().map(|c| c.0).fold(f64::INFINITY, f64::min);
    let best_bias = by_var.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    check(
        rbb.maxbias <= b2 + 1e-6 && rbb.var <= best_var && rbv.var <= s2 + 1e-6 && rbv.maxbias <= best_bias,
        format!(
            "rbb var={:.6} vs best random {:.6}; rbv maxbias={:.6} vs best random {:.6}",
            rbb.var, best_var, rbv.maxbias, best_bias
        ),
    )
}

fn normalize(w: Vec<f64>) -> Vec<f64> {
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed().as_secs_f64())
}

#[test]
fn acceptance_criteria() {
    let ((c10, c11), t_round) = timed(c10_c11_quadratic_rounding);
    let mut results: Vec<(&str, (Outcome, f64))> = vec![
        ("uniform endpoint", timed(c1_uniform_endpoint)),
        ("two-point endpoint", timed(c2_two_point_endpoint)),
        ("optimizer endpoints", timed(c3_optimizer_endpoints)),
        ("cmb 0.33 on the straight line", timed(c4_cmb_target)),
        ("frontier monotonicity", timed(c5_monotone_frontier)),
        (
            "worst-case oracle and variance equivalence",
            timed(c6_oracle_equivalence),
        ),
        ("analytic scores vs finite differences", timed(c7_gradient_check)),
        ("symmetric three-point family", timed(c8_symmetric_family)),
        ("ceil-then-remove rounding quality", timed(c9_rounding_quality)),
        ("apportionment monotonicity", (c10, t_round)),
        ("apportionment instability", (c11, t_round)),
    ];
    results.push((
        "bounded designs vs random feasible designs",
        timed(c12_bounded_optimality),
    ));
    let mut failed = 0;
    for (k, (name, (r, secs))) in results.iter().enumerate() {
        let (tag, detail) = match r {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("{} {:>2} {}: {} [{:.2}s]", tag, k + 1, name, detail, secs);
    }
    assert_eq!(failed, 0, "{} acceptance criteria failed", failed);
}

#[test]
fn quadratic_space_matches_its_oracle_matrix() {
    let (f, _) = quadratic(12);
    let x: Vec<f64> = (0..12).map(|i| (2 * i as i64 - 11) as f64 / 11.0).collect();
    let want = DMatrix::from_fn(12, 3, |i, j| x[i].powi(j as i32));
    assert!((f.matrix() - want).amax() < 1e-15);
}
