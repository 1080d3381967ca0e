mod common;

use common::*;
use ndarray::Array1;
use serieslm::bootstrap::{
    bootstrap_p_value, bootstrap_residuals, draw_multipliers, wild_bootstrap, Multiplier, MultiplierDist, MAMMEN_HIGH,
    MAMMEN_LOW,
};
use serieslm::lmtest::{normalize, xi_hc, VarianceWeights};
use serieslm::regress::ols_fit;
use serieslm::rng::{substream, uniform_open01, StreamRng};

struct Ones;

impl Multiplier for Ones {
    fn draw(&self, _rng: &mut StreamRng) -> f64 {
        1.0
    }
}

fn observed_t(p: &Problem) -> (serieslm::regress::FitResult, ndarray::Array2<f64>, f64) {
    let fit = ols_fit(p.w.view(), p.y.view()).unwrap();
    let zt = fit.context().residualize_block(p.z.view()).unwrap();
    let xi = xi_hc(
        fit.residuals.view(),
        zt.view(),
        &VarianceWeights::from_residuals(fit.residuals.view()),
    )
    .unwrap();
    let r = zt.ncols();
    (fit, zt, normalize(xi, r))
}

#[test]
fn unit_multipliers_reproduce_observed_statistic() {
    let p = problem(21, 40, 3, 2);
    let (fit, zt, t) = observed_t(&p);
    let res = wild_bootstrap(&fit, zt.view(), 25, &Ones, 5, t, &[0.05]).unwrap();
    assert_eq!(res.t_star.len(), 25);
    assert!(res.t_star.iter().all(|&x| rel_err(x, t) < 1e-10));
    assert_eq!(res.p_value, 1.0);
}

#[test]
fn tiny_instance_matches_scripted_oracle() {
    let p = problem(22, 12, 2, 2);
    let (fit, zt, t) = observed_t(&p);
    let seed = 99;
    let res = wild_bootstrap(&fit, zt.view(), 3, &MultiplierDist::Rademacher, seed, t, &[0.05]).unwrap();

    let w = to_mat(&p.w);
    let mw = annihilator(&w);
    let e = matvec(&mw, &p.y.to_vec());
    let ztd = matmul(&mw, &to_mat(&p.z));
    let ztt = transpose(&ztd);
    let mut script = Vec::new();
    for b in 0..3u64 {
        let mut rng = substream(seed, &[b]);
        let v: Vec<f64> = (0..12)
            .map(|_| if uniform_open01(&mut rng) < 0.5 { -1.0 } else { 1.0 })
            .collect();
        let e_star: Vec<f64> = v.iter().zip(&e).map(|(a, b)| a * b).collect();
        let et = matvec(&mw, &e_star);
        let s: Vec<f64> = et.iter().map(|x| x * x).collect();
        let xi = quad_inv(&matmul(&ztt, &diag_left(&s, &ztd)), &matvec(&ztt, &et));
        script.push((xi - 2.0) / 2.0);
    }
    for (got, want) in res.t_star.iter().zip(&script) {
        assert!(rel_err(*got, *want) < 1e-9, "{got} vs {want}");
    }
    let exceed = script.iter().filter(|&&x| x >= t).count();
    assert_eq!(res.p_value, (exceed + 1) as f64 / 4.0);
}

#[test]
fn shortcut_equals_refit() {
    for seed in 0..10 {
        let p = problem(100 + seed, 50, 4, 3);
        let fit = ols_fit(p.w.view(), p.y.view()).unwrap();
        let mut rng = substream(seed, &[7]);
        let v = draw_multipliers(&MultiplierDist::Mammen, 50, &mut rng);
        let e_star = &v * &fit.residuals;
        let y_star = p.w.dot(&fit.beta) + &e_star;
        let refit = ols_fit(p.w.view(), y_star.view()).unwrap();
        let short = bootstrap_residuals(fit.context(), fit.residuals.view(), v.view()).unwrap();
        let scale = refit.residuals.dot(&refit.residuals).sqrt();
        for (a, b) in short.iter().zip(refit.residuals.iter()) {
            assert!((a - b).abs() <= 1e-10 * scale);
        }
    }
}

fn moments(v: &Array1<f64>) -> (f64, f64, f64) {
    let n = v.len() as f64;
    (
        v.sum() / n,
        v.iter().map(|x| x * x).sum::<f64>() / n,
        v.iter().map(|x| x * x * x).sum::<f64>() / n,
    )
}

#[test]
fn multiplier_moments_at_a_million_draws() {
    let n = 1_000_000;
    let v = draw_multipliers(&MultiplierDist::Rademacher, n, &mut substream(1, &[]));
    let (m1, m2, _) = moments(&v);
    assert!(m1.abs() < 4.0 / (n as f64).sqrt());
    assert_eq!(m2, 1.0);

    let v = draw_multipliers(&MultiplierDist::Mammen, n, &mut substream(2, &[]));
    let (m1, m2, m3) = moments(&v);
    let se = |k: i32, mean: f64| {
        let s2 = v.iter().map(|x| (x.powi(k) - mean).powi(2)).sum::<f64>() / n as f64;
        4.0 * (s2 / n as f64).sqrt()
    };
    assert!(m1.abs() < se(1, m1));
    assert!((m2 - 1.0).abs() < se(2, m2));
    assert!((m3 - 1.0).abs() < se(3, m3));
    let positive = v.iter().filter(|&&x| x > 0.0).count() as f64 / n as f64;
    let p = (5f64.sqrt() - 1.0) / (2.0 * 5f64.sqrt());
    assert!((p - 0.2764).abs() < 1e-4);
    assert!((positive - p).abs() < 0.002);
    assert!(v.iter().all(|&x| x == MAMMEN_LOW || x == MAMMEN_HIGH));
}

#[test]
fn conditional_moments_of_bootstrap_errors() {
    let p = problem(23, 15, 3, 2);
    let fit = ols_fit(p.w.view(), p.y.view()).unwrap();
    let e = &fit.residuals;
    let draws = 20_000;
    for dist in [MultiplierDist::Rademacher, MultiplierDist::Mammen] {
        let mut rng = substream(3, &[]);
        let mut s1 = Array1::<f64>::zeros(15);
        let mut s2 = Array1::<f64>::zeros(15);
        let mut s4 = Array1::<f64>::zeros(15);
        for _ in 0..draws {
            let es = &draw_multipliers(&dist, 15, &mut rng) * e;
            s1 += &es;
            s2 += &es.mapv(|x| x * x);
            s4 += &es.mapv(|x| x.powi(4));
        }
        let b = draws as f64;
        for i in 0..15 {
            let m1 = s1[i] / b;
            let m2 = s2[i] / b;
            let var2 = s4[i] / b - m2 * m2;
            assert!(m1.abs() <= 4.0 * (m2 / b).sqrt() + 1e-15);
            // Rademacher gives e_i^2 exactly; the slack covers summation rounding.
            assert!((m2 - e[i] * e[i]).abs() <= 4.0 * (var2.max(0.0) / b).sqrt() + 1e-10 * e[i] * e[i]);
        }
    }
}

#[test]
fn deterministic_and_thread_count_free() {
    let p = problem(24, 60, 3, 3);
    let (fit, zt, t) = observed_t(&p);
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| wild_bootstrap(&fit, zt.view(), 199, &MultiplierDist::Mammen, 42, t, &[0.1, 0.05]).unwrap())
    };
    let a = run(1);
    assert_eq!(a, run(1));
    assert_eq!(a, run(3));
    assert_eq!(a.replications, 199);
    assert_eq!(a.critical_values.len(), 2);
}

#[test]
fn p_value_ignores_draw_order() {
    let t: Vec<f64> = (0..50).map(|i| ((i * 37) % 50) as f64 / 7.0 - 3.0).collect();
    let mut rev = t.clone();
    rev.reverse();
    let mut sorted = t.clone();
    sorted.sort_by(f64::total_cmp);
    for obs in [-4.0, 0.0, 1.3, 10.0] {
        let p = bootstrap_p_value(&t, obs);
        assert_eq!(p, bootstrap_p_value(&rev, obs));
        assert_eq!(p, bootstrap_p_value(&sorted, obs));
        assert!(p > 0.0 && p <= 1.0);
    }
}

#[test]
fn zero_replications_rejected() {
    let p = problem(25, 30, 3, 2);
    let (fit, zt, t) = observed_t(&p);
    assert!(wild_bootstrap(&fit, zt.view(), 0, &MultiplierDist::Rademacher, 1, t, &[]).is_err());
}
