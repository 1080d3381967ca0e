//! Restricted least-squares fit and the annihilator `M_W = I - W (W'W)^-1 W'`.
//!
//! `W` is factorized once with pivoted Householder QR. `M_W u` is applied as
//! `u - Q (Q'u)`, so the `n x n` projector is never formed and the same
//! factorization serves every bootstrap draw.

use std::sync::Arc;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::linalg::{PivotedQr, QR_RANK_TOL};
use crate::{Error, Result};

/// Factorization of `W` supporting repeated application of `M_W`.
#[derive(Debug, Clone)]
pub struct Projection {
    qr: Arc<PivotedQr>,
}

impl Projection {
    /// Factorizes `w`; rank deficiency is an error naming the dependent
    /// column indices.
    pub fn new(w: ArrayView2<f64>) -> Result<Self> {
        let (n, m) = w.dim();
        if m == 0 {
            return Err(Error::InvalidInput("null design has no columns".into()));
        }
        if n <= m {
            return Err(Error::InsufficientData {
                required: m,
                available: n,
            });
        }
        if w.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("null design".into()));
        }
        let qr = PivotedQr::new(w, QR_RANK_TOL);
        if qr.rank() < m {
            return Err(Error::RankDeficient {
                columns: qr.dependent_columns().iter().map(|j| format!("W[{j}]")).collect(),
            });
        }
        Ok(Projection { qr: Arc::new(qr) })
    }

    pub fn nobs(&self) -> usize {
        self.qr.q().nrows()
    }

    pub fn ncols(&self) -> usize {
        self.qr.rank()
    }

    pub fn qr(&self) -> &PivotedQr {
        &self.qr
    }

    /// `M_W u`.
    pub fn annihilate(&self, u: ArrayView1<f64>) -> Result<Array1<f64>> {
        if u.len() != self.nobs() {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} for a projection on {} observations",
                u.len(),
                self.nobs()
            )));
        }
        Ok(self.qr.residual(u))
    }

    /// `M_W Z`, column by column.
    pub fn residualize_block(&self, z: ArrayView2<f64>) -> Result<Array2<f64>> {
        if z.nrows() != self.nobs() {
            return Err(Error::DimensionMismatch(format!(
                "block with {} rows for a projection on {} observations",
                z.nrows(),
                self.nobs()
            )));
        }
        Ok(self.qr.residual_block(z))
    }
}

/// Restricted fit: coefficients, residuals, and the projection context.
#[derive(Debug, Clone)]
pub struct FitResult {
    pub beta: Array1<f64>,
    pub residuals: Array1<f64>,
    projection: Projection,
}

impl FitResult {
    pub fn context(&self) -> &Projection {
        &self.projection
    }

    pub fn fitted(&self, y: ArrayView1<f64>) -> Array1<f64> {
        &y - &self.residuals
    }

    /// Residual sum of squares.
    pub fn rss(&self) -> f64 {
        self.residuals.dot(&self.residuals)
    }
}

/// Least squares of `y` on `w`.
pub fn ols_fit(w: ArrayView2<f64>, y: ArrayView1<f64>) -> Result<FitResult> {
    if y.len() != w.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "response has {} rows, design has {}",
            y.len(),
            w.nrows()
        )));
    }
    if y.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("response".into()));
    }
    let projection = Projection::new(w)?;
    fit_with(projection, y)
}

/// Fit reusing an existing factorization.
pub fn fit_with(projection: Projection, y: ArrayView1<f64>) -> Result<FitResult> {
    let beta = projection.qr.solve(y)?;
    let residuals = projection.annihilate(y)?;
    Ok(FitResult {
        beta,
        residuals,
        projection,
    })
}
