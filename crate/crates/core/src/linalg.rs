//! Dense factorizations used by the projection and test-statistic code.
//!
//! Only two are needed: Householder QR with column pivoting (least squares,
//! annihilators, rank detection) and Cholesky of small symmetric
//! positive-definite matrices (the `r x r` inner matrices of the quadratic
//! forms).

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};

use crate::{Error, Result};

/// Relative pivot threshold below which a column counts as linearly dependent.
pub const QR_RANK_TOL: f64 = 1e-12;

/// Smallest admissible Cholesky pivot of a unit-diagonal (equilibrated) matrix.
pub const CHOLESKY_TOL: f64 = 1e-13;

/// Thin Householder QR with column pivoting, `A P = Q R`.
#[derive(Debug, Clone)]
pub struct PivotedQr {
    q: Array2<f64>,
    r: Array2<f64>,
    perm: Vec<usize>,
    rank: usize,
}

impl PivotedQr {
    /// Factorizes `a` (n x m). Pivoting stops once the largest remaining
    /// column norm drops below `rel_tol` times the leading pivot, which fixes
    /// the numerical rank.
    pub fn new(a: ArrayView2<f64>, rel_tol: f64) -> Self {
        let (n, m) = a.dim();
        let mut work = a.to_owned();
        let mut perm: Vec<usize> = (0..m).collect();
        let steps = n.min(m);
        let mut reflectors: Vec<Array1<f64>> = Vec::with_capacity(steps);
        let mut lead = 0.0;
        let mut rank = 0;

        for k in 0..steps {
            // Recomputing the trailing norms is O(nm) per step; m is small here.
            let (mut best, mut best_norm) = (k, -1.0);
            for j in k..m {
                let nrm = work.slice(s![k.., j]).dot(&work.slice(s![k.., j])).sqrt();
                if nrm > best_norm {
                    best = j;
                    best_norm = nrm;
                }
            }
            if k == 0 {
                lead = best_norm;
            }
            if best_norm <= rel_tol * lead || best_norm == 0.0 {
                break;
            }
            if best != k {
                for i in 0..n {
                    work.swap((i, k), (i, best));
                }
                perm.swap(k, best);
            }

            let x = work.slice(s![k.., k]).to_owned();
            let alpha = if x[0] >= 0.0 { -best_norm } else { best_norm };
            let mut v = x;
            v[0] -= alpha;
            let vnorm = v.dot(&v).sqrt();
            if vnorm > 0.0 {
                v.mapv_inplace(|t| t / vnorm);
                let mut trailing = work.slice_mut(s![k.., k..]);
                let proj = v.dot(&trailing);
                for (i, vi) in v.iter().enumerate() {
                    let mut row = trailing.row_mut(i);
                    row.scaled_add(-2.0 * vi, &proj);
                }
            }
            // Exact zeros below the diagonal.
            work[(k, k)] = alpha;
            work.slice_mut(s![k + 1.., k]).fill(0.0);
            reflectors.push(v);
            rank = k + 1;
        }

        let r = work.slice(s![..rank, ..]).to_owned();

        let mut q = Array2::<f64>::zeros((n, rank));
        for i in 0..rank {
            q[(i, i)] = 1.0;
        }
        for (k, v) in reflectors.iter().enumerate().rev() {
            let mut block = q.slice_mut(s![k.., ..]);
            let proj = v.dot(&block);
            for (i, vi) in v.iter().enumerate() {
                block.row_mut(i).scaled_add(-2.0 * vi, &proj);
            }
        }

        PivotedQr { q, r, perm, rank }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Orthonormal basis of the column space, n x rank.
    pub fn q(&self) -> ArrayView2<'_, f64> {
        self.q.view()
    }

    pub fn r(&self) -> ArrayView2<'_, f64> {
        self.r.view()
    }

    /// `perm[k]` is the original index of the k-th pivoted column.
    pub fn permutation(&self) -> &[usize] {
        &self.perm
    }

    /// Original indices of the columns left out of the numerical basis.
    pub fn dependent_columns(&self) -> &[usize] {
        &self.perm[self.rank..]
    }

    /// Least-squares coefficients for a full-rank factorization.
    pub fn solve(&self, y: ArrayView1<f64>) -> Result<Array1<f64>> {
        let m = self.perm.len();
        if self.rank < m {
            return Err(Error::Singular(format!(
                "least-squares system has rank {} < {m}",
                self.rank
            )));
        }
        let qty = self.q.t().dot(&y);
        let z = back_substitute(self.r.slice(s![.., ..m]), qty.view());
        let mut beta = Array1::zeros(m);
        for (k, &j) in self.perm.iter().enumerate() {
            beta[j] = z[k];
        }
        Ok(beta)
    }

    /// `u - Q Q' u`.
    pub fn residual(&self, u: ArrayView1<f64>) -> Array1<f64> {
        let coef = self.q.t().dot(&u);
        &u - &self.q.dot(&coef)
    }

    /// Columnwise `U - Q Q' U`.
    pub fn residual_block(&self, u: ArrayView2<f64>) -> Array2<f64> {
        let coef = self.q.t().dot(&u);
        &u - &self.q.dot(&coef)
    }
}

/// Solves `R x = b` for upper-triangular square `R`.
pub fn back_substitute(r: ArrayView2<f64>, b: ArrayView1<f64>) -> Array1<f64> {
    let m = b.len();
    let mut x = b.to_owned();
    for i in (0..m).rev() {
        let mut acc = x[i];
        for j in i + 1..m {
            acc -= r[(i, j)] * x[j];
        }
        x[i] = acc / r[(i, i)];
    }
    x
}

/// Lower Cholesky factor of a symmetric matrix whose diagonal has been
/// scaled to one. Returns the failing pivot index when a pivot falls below
/// [`CHOLESKY_TOL`].
pub fn cholesky_unit_diag(a: ArrayView2<f64>) -> std::result::Result<Array2<f64>, usize> {
    let p = a.nrows();
    let mut l = Array2::<f64>::zeros((p, p));
    for j in 0..p {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > CHOLESKY_TOL) {
            return Err(j);
        }
        let djj = d.sqrt();
        l[(j, j)] = djj;
        for i in j + 1..p {
            let mut acc = a[(i, j)];
            for k in 0..j {
                acc -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = acc / djj;
        }
    }
    Ok(l)
}

/// `b' (G'G)^-1 b` through a Jacobi-equilibrated Cholesky factorization of
/// the Gram matrix `G'G`. The scaling leaves the quadratic form unchanged.
pub fn inverse_quadratic_form(b: ArrayView1<f64>, g: ArrayView2<f64>) -> Result<f64> {
    let gram = g.t().dot(&g);
    inverse_quadratic_form_gram(b, gram.view())
}

/// As [`inverse_quadratic_form`] with the Gram (or any SPD) matrix supplied.
pub fn inverse_quadratic_form_gram(b: ArrayView1<f64>, a: ArrayView2<f64>) -> Result<f64> {
    let p = a.nrows();
    if a.ncols() != p || b.len() != p {
        return Err(Error::DimensionMismatch(format!(
            "quadratic form: vector length {} vs matrix {}x{}",
            b.len(),
            p,
            a.ncols()
        )));
    }
    let d: Array1<f64> = a.diag().mapv(f64::sqrt);
    if let Some(j) = d.iter().position(|&x| !(x > 0.0) || !x.is_finite()) {
        return Err(Error::Singular(format!("inner matrix has zero diagonal at column {j}")));
    }
    let mut scaled = a.to_owned();
    for i in 0..p {
        for j in 0..p {
            scaled[(i, j)] /= d[i] * d[j];
        }
    }
    let l = cholesky_unit_diag(scaled.view()).map_err(|j| {
        Error::Singular(format!(
            "inner matrix is not positive definite (pivot {j} of {p}); \
             alternative columns are collinear or r is too large"
        ))
    })?;
    let bs = &b / &d;
    // Forward substitution L y = bs.
    let mut y = bs;
    for i in 0..p {
        let mut acc = y[i];
        for k in 0..i {
            acc -= l[(i, k)] * y[k];
        }
        y[i] = acc / l[(i, i)];
    }
    Ok(y.dot(&y))
}

/// Scales row `i` of `a` by `w[i]`.
pub fn scale_rows(a: ArrayView2<f64>, w: ArrayView1<f64>) -> Array2<f64> {
    let mut out = a.to_owned();
    for (mut row, &wi) in out.axis_iter_mut(Axis(0)).zip(w.iter()) {
        row.mapv_inplace(|x| x * wi);
    }
    out
}
