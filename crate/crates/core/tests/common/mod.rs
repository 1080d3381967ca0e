#![allow(clippy::needless_range_loop)]

//! Dense reference implementations for the integration tests. Everything here
//! works on plain row-major `Vec<Vec<f64>>` with textbook formulas and
//! Gauss-Jordan inversion, so it shares no code with the library's QR and
//! Cholesky routines.

#![allow(dead_code)]

use ndarray::{Array1, Array2};
use serieslm::rng::{standard_normal, substream, uniform_open01};

pub type Mat = Vec<Vec<f64>>;

pub fn to_mat(a: &Array2<f64>) -> Mat {
    a.rows().into_iter().map(|r| r.to_vec()).collect()
}

pub fn from_mat(a: &Mat) -> Array2<f64> {
    let (n, m) = (a.len(), a[0].len());
    Array2::from_shape_fn((n, m), |(i, j)| a[i][j])
}

pub fn transpose(a: &Mat) -> Mat {
    let (n, m) = (a.len(), a[0].len());
    (0..m).map(|j| (0..n).map(|i| a[i][j]).collect()).collect()
}

pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    let (n, k, m) = (a.len(), b.len(), b[0].len());
    assert_eq!(a[0].len(), k);
    let mut out = vec![vec![0.0; m]; n];
    for i in 0..n {
        for l in 0..k {
            let x = a[i][l];
            for j in 0..m {
                out[i][j] += x * b[l][j];
            }
        }
    }
    out
}

pub fn matvec(a: &Mat, v: &[f64]) -> Vec<f64> {
    a.iter()
        .map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum())
        .collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn identity(n: usize) -> Mat {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

pub fn sub(a: &Mat, b: &Mat) -> Mat {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p - q).collect())
        .collect()
}

/// Rows scaled by `d`, i.e. `diag(d) A`.
pub fn diag_left(d: &[f64], a: &Mat) -> Mat {
    a.iter()
        .zip(d)
        .map(|(row, s)| row.iter().map(|x| x * s).collect())
        .collect()
}

/// Gauss-Jordan inverse with partial pivoting.
pub fn inverse(a: &Mat) -> Mat {
    let n = a.len();
    let mut aug: Mat = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| aug[i][c].abs().total_cmp(&aug[j][c].abs()))
            .unwrap();
        aug.swap(c, p);
        let piv = aug[c][c];
        assert!(piv.abs() > 1e-300, "singular matrix in oracle");
        for x in aug[c].iter_mut() {
            *x /= piv;
        }
        for i in 0..n {
            if i != c {
                let f = aug[i][c];
                if f != 0.0 {
                    for j in 0..2 * n {
                        aug[i][j] -= f * aug[c][j];
                    }
                }
            }
        }
    }
    aug.into_iter().map(|r| r[n..].to_vec()).collect()
}

/// `I - W (W'W)^-1 W'`.
pub fn annihilator(w: &Mat) -> Mat {
    let wt = transpose(w);
    let h = matmul(&matmul(w, &inverse(&matmul(&wt, w))), &wt);
    sub(&identity(w.len()), &h)
}

/// OLS coefficients from the normal equations.
pub fn normal_equations(w: &Mat, y: &[f64]) -> Vec<f64> {
    let wt = transpose(w);
    matvec(&inverse(&matmul(&wt, w)), &matvec(&wt, y))
}

/// `b' A^-1 b`.
pub fn quad_inv(a: &Mat, b: &[f64]) -> f64 {
    dot(b, &matvec(&inverse(a), b))
}

/// Weighted least squares residuals `y - W (W'DW)^-1 W'D y`.
pub fn wls_residuals(w: &Mat, y: &[f64], d: &[f64]) -> Vec<f64> {
    let wt = transpose(w);
    let dw = diag_left(d, w);
    let beta = matvec(
        &inverse(&matmul(&wt, &dw)),
        &matvec(&wt, &y.iter().zip(d).map(|(a, b)| a * b).collect::<Vec<_>>()),
    );
    let fit = matvec(w, &beta);
    y.iter().zip(fit).map(|(a, b)| a - b).collect()
}

/// Random heteroskedastic regression problem: `W` has a constant and
/// `m - 1` uniform columns, `Z` has `r` columns built from squares and
/// products of them plus fresh uniforms.
pub struct Problem {
    pub w: Array2<f64>,
    pub z: Array2<f64>,
    pub y: Array1<f64>,
    pub sigma2: Array1<f64>,
}

pub fn problem(seed: u64, n: usize, m: usize, r: usize) -> Problem {
    let mut rng = substream(seed, &[n as u64, m as u64, r as u64]);
    let w = Array2::from_shape_fn((n, m), |(_, j)| if j == 0 { 1.0 } else { 0.0 });
    let mut w = w;
    for i in 0..n {
        for j in 1..m {
            w[[i, j]] = 2.0 * uniform_open01(&mut rng) - 1.0;
        }
    }
    let mut z = Array2::zeros((n, r));
    for i in 0..n {
        for j in 0..r {
            let base = w[[i, 1 + j % (m - 1).max(1)]];
            z[[i, j]] = base * base * (1.0 + 0.3 * j as f64) + uniform_open01(&mut rng) - 0.5;
        }
    }
    let mut y = Array1::zeros(n);
    let mut sigma2 = Array1::zeros(n);
    for i in 0..n {
        let s2 = 0.5 + w[[i, 1]].powi(2);
        sigma2[i] = s2;
        y[i] = 1.0 + w.row(i).sum() + s2.sqrt() * standard_normal(&mut rng);
    }
    Problem { w, z, y, sigma2 }
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// Fixed two-cell Monte Carlo run behind `golden/mc_two_cells.csv`.
pub fn golden_config() -> serieslm::mc::McConfig {
    use serieslm::basis::BasisFamily;
    use serieslm::lmtest::Variant;
    use serieslm::mc::{Hypothesis, McConfig, McVariant};
    McConfig {
        replications: 40,
        sample_sizes: vec![120],
        terms: vec![4, 5],
        families: vec![BasisFamily::Power],
        hypotheses: vec![Hypothesis::Null],
        variants: vec![McVariant::Asymptotic(Variant::HC)],
        levels: vec![0.05, 0.1],
        seed: 20240607,
        ..McConfig::default()
    }
}

pub fn golden_csv() -> String {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/mc_two_cells.csv");
    std::fs::read_to_string(path).unwrap()
}

pub fn csv_string(report: &serieslm::mc::McReport) -> String {
    let mut buf = Vec::new();
    serieslm::mc::write_csv(report, &mut buf).unwrap();
    String::from_utf8(buf).unwrap()
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
pub fn symmetric_eigenvalues(a: &Mat) -> Vec<f64> {
    let n = a.len();
    let mut a = a.clone();
    for _ in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        let diag: f64 = (0..n).map(|i| a[i][i] * a[i][i]).sum();
        if off <= 1e-30 * diag {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q] == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[i][i]).collect()
}
