mod common;

use std::collections::BTreeMap;

use common::*;
use ndarray::{Array1, Array2};
use proptest::prelude::*;
use serieslm::basis::{power_basis, BasisFamily};
use serieslm::design::simulation_design;
use serieslm::lmtest::{run_test, Variant};
use serieslm::mc::{gen_sample, Hypothesis};
use serieslm::rng::{standard_normal, substream, uniform_open01};
use serieslm::tuning::{data_driven_test, gcv, mallows_cp, select_r, Criterion, DataDrivenOptions, TuningGrid};

fn rss(w: &Array2<f64>, y: &Array1<f64>) -> f64 {
    let wm = to_mat(w);
    let beta = normal_equations(&wm, &y.to_vec());
    let fit = matvec(&wm, &beta);
    y.iter().zip(fit).map(|(a, b)| (a - b).powi(2)).sum()
}

fn cubic_problem() -> (Array1<f64>, Vec<Array2<f64>>) {
    let mut rng = substream(31, &[]);
    let n = 200;
    let x: Vec<f64> = (0..n).map(|_| 2.0 * uniform_open01(&mut rng) - 1.0).collect();
    let y = Array1::from_shape_fn(n, |i| {
        let v = x[i];
        1.0 - 2.0 * v + 0.5 * v * v + 3.0 * v * v * v + 1e-6 * standard_normal(&mut rng)
    });
    let designs = (2..=6).map(|a| power_basis(&x, a).unwrap().values).collect();
    (y, designs)
}

#[test]
fn cubic_truth_selects_four_terms() {
    let (y, designs) = cubic_problem();
    let views: Vec<_> = designs.iter().map(|d| d.view()).collect();
    let n = y.len() as f64;
    let table: Vec<(f64, f64)> = designs.iter().map(|d| (d.ncols() as f64, rss(d, &y))).collect();
    let (m_max, rss_max) = *table.last().unwrap();
    let s2 = rss_max / (n - m_max);
    let cp_oracle: Vec<f64> = table.iter().map(|(m, r)| r / n + 2.0 * s2 * m / n).collect();
    let gcv_oracle: Vec<f64> = table.iter().map(|(m, r)| n * r / (n - m).powi(2)).collect();

    let cp = mallows_cp(y.view(), &views).unwrap();
    let g = gcv(y.view(), &views).unwrap();
    for i in 0..designs.len() {
        assert!(rel_err(cp.scores[i], cp_oracle[i]) < 1e-6);
        assert!(rel_err(g.scores[i], gcv_oracle[i]) < 1e-6);
    }
    assert_eq!(cp.index, 2);
    assert_eq!(g.index, 2);
}

#[test]
fn single_candidate_is_chosen() {
    let (y, designs) = cubic_problem();
    let one = [designs[1].view()];
    assert_eq!(mallows_cp(y.view(), &one).unwrap().index, 0);
    assert_eq!(gcv(y.view(), &one).unwrap().index, 0);
}

#[test]
fn ties_go_to_the_smaller_model() {
    let mut rng = substream(32, &[]);
    let n = 100;
    let x: Vec<f64> = (0..n).map(|_| uniform_open01(&mut rng)).collect();
    let y = Array1::from_shape_fn(n, |_| standard_normal(&mut rng));
    let big = power_basis(&x, 4).unwrap().values;
    let small = power_basis(&x, 2).unwrap().values;
    // The same design twice: equal scores, so the first copy wins.
    let views = [big.view(), small.view(), small.view()];
    let cp = mallows_cp(y.view(), &views).unwrap();
    assert_eq!(cp.scores[1], cp.scores[2]);
    if cp.scores[1] <= cp.scores[0] {
        assert_eq!(cp.index, 1);
    }
    // Pure noise, nested designs: nothing scoring within rounding of the
    // winner is smaller than it.
    let nested: Vec<Array2<f64>> = (1..=5).map(|a| power_basis(&x, a).unwrap().values).collect();
    let views: Vec<_> = nested.iter().map(|d| d.view()).collect();
    for sel in [mallows_cp(y.view(), &views).unwrap(), gcv(y.view(), &views).unwrap()] {
        let best = sel.scores[sel.index];
        for (i, s) in sel.scores.iter().enumerate() {
            assert!(*s >= best * (1.0 - 1e-12));
            if (s - best).abs() <= 1e-12 * best {
                assert!(i >= sel.index);
            }
        }
    }
}

fn brute_force_r(map: &BTreeMap<usize, f64>, c: f64) -> usize {
    let r_min = *map.keys().next().unwrap() as f64;
    let gamma = c * (2.0 * (map.len() as f64).ln()).sqrt();
    let mut best: Option<(usize, f64)> = None;
    for (&r, &xi) in map {
        let v = xi - r as f64 - gamma * (2.0 * (r as f64 - r_min)).sqrt();
        match best {
            Some((_, b)) if v <= b => {}
            _ => best = Some((r, v)),
        }
    }
    best.unwrap().0
}

#[test]
fn restriction_count_examples() {
    let one: BTreeMap<usize, f64> = [(11, 3.0)].into_iter().collect();
    assert_eq!(select_r(&one, 3.0).unwrap(), 11);

    let grid = [11usize, 19, 20, 21, 31, 43];
    let calibrated: BTreeMap<usize, f64> = grid.iter().map(|&r| (r, r as f64)).collect();
    assert_eq!(select_r(&calibrated, 3.0).unwrap(), 11);

    let mut bumped = calibrated.clone();
    *bumped.get_mut(&21).unwrap() += 30.0;
    // gamma = 3 sqrt(2 ln 6) ~ 5.67; the criterion at r = 21 is
    // 30 - 5.67 sqrt(20) ~ 4.6 > 0, and every other r is <= 0.
    let gamma = 3.0 * (2.0 * 6f64.ln()).sqrt();
    assert!(30.0 - gamma * 20f64.sqrt() > 0.0);
    assert_eq!(select_r(&bumped, 3.0).unwrap(), 21);
    assert_eq!(brute_force_r(&bumped, 3.0), 21);

    assert!(select_r(&BTreeMap::new(), 3.0).is_err());
}

proptest! {
    #[test]
    fn select_r_is_the_penalized_argmax(
        xs in prop::collection::btree_map(1usize..80, 0.0f64..150.0, 1..8),
        c in 1.0f64..5.0,
    ) {
        prop_assert_eq!(select_r(&xs, c).unwrap(), brute_force_r(&xs, c));
    }
}

#[test]
fn singleton_grid_equals_plain_chi_square_test() {
    let mut rng = substream(33, &[]);
    let s = gen_sample(300, Hypothesis::Alternative, &mut rng);
    let a = 5;
    let grid = TuningGrid::new(vec![a], 3.0).unwrap();
    let levels = [0.01, 0.05, 0.1];
    for criterion in [Criterion::Cp, Criterion::Gcv] {
        let dd = data_driven_test(
            s.y.view(),
            &grid,
            DataDrivenOptions {
                criterion,
                screen: true,
            },
            &levels,
            |a| simulation_design(&s.x1, &s.x2, a, BasisFamily::Spline),
        )
        .unwrap();
        let d = simulation_design(&s.x1, &s.x2, a, BasisFamily::Spline).unwrap();
        let plain = run_test(s.y.view(), d.w.view(), d.z.view(), Variant::HC, &levels).unwrap();
        assert_eq!((dd.r_hat, dd.r_min, dd.m), (plain.r, plain.r, plain.m));
        assert!(rel_err(dd.xi, plain.xi) < 1e-12);
        for (x, y) in dd.decisions.iter().zip(&plain.decisions) {
            assert_eq!(x.2, y.reject_chisq);
        }
    }
}

#[test]
fn data_driven_reports_the_grid() {
    let mut rng = substream(34, &[]);
    let s = gen_sample(250, Hypothesis::Null, &mut rng);
    let grid = TuningGrid::range(4, 8).unwrap();
    let dd = data_driven_test(s.y.view(), &grid, DataDrivenOptions::default(), &[0.05], |a| {
        simulation_design(&s.x1, &s.x2, a, BasisFamily::Power)
    })
    .unwrap();
    let rs: Vec<usize> = dd.xi_by_r.iter().map(|p| p.0).collect();
    assert_eq!(rs, vec![11, 19, 20, 21, 31]);
    assert_eq!(dd.r_min, 11);
    assert!(grid.candidates.contains(&dd.selected_terms));
    assert_eq!(dd.model_scores.len(), 5);
    let map: BTreeMap<usize, f64> = dd.xi_by_r.iter().cloned().collect();
    assert_eq!(dd.r_hat, brute_force_r(&map, 3.0));
}
