//! LM-type specification statistics and their reference distributions.
//!
//! The proposed statistic is
//!
//! ```text
//! xi_HC = e' Zt (Zt' S Zt)^-1 Zt' e,    t = (xi_HC - r) / sqrt(2 r)
//! ```
//!
//! with `e` the restricted residuals, `Zt = M_W Z` and `S = diag(e_i^2)`.
//! Three comparators share the same numerator structure:
//!
//! | name         | quadratic form                                                       |
//! |--------------|----------------------------------------------------------------------|
//! | `hc_long`    | `e'Z (Z'SZ - Z'SW (W'SW)^-1 W'SZ)^-1 Z'e`                            |
//! | `fgls_long`  | `f'S⁻¹Z (Z'S⁻¹Z - Z'S⁻¹W (W'S⁻¹W)^-1 W'S⁻¹Z)^-1 Z'S⁻¹f`              |
//! | `fgls_short` | `f'S⁻¹Zt (Zt'S⁻¹Zt)^-1 Zt'S⁻¹f`                                      |
//!
//! where `f` are the FGLS residuals of `y` on `W` with weights `S⁻¹`, `S`
//! still built from the OLS residuals. Each has an infeasible mirror that replaces `S` by the true error
//! variances. The "long" inner matrices are Schur complements, computed as
//! Gram matrices of the weighted `Z` after projecting out the weighted `W`.

use ndarray::{Array1, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::dist::{chisq_quantile, chisq_sf, normal_quantile, normal_sf};
use crate::linalg::{inverse_quadratic_form, scale_rows, PivotedQr, QR_RANK_TOL};
use crate::regress::{ols_fit, Projection};
use crate::{Error, Result};

/// Relative floor applied to squared residuals before inverting them.
pub const FGLS_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    /// OLS residuals, short robust variance (the proposed test).
    Hc,
    /// OLS residuals, long robust variance.
    HcLong,
    /// FGLS-weighted residuals, long variance.
    FglsLong,
    /// FGLS-weighted residuals, short variance.
    FglsShort,
}

impl Statistic {
    pub const ALL: [Statistic; 4] = [
        Statistic::Hc,
        Statistic::HcLong,
        Statistic::FglsLong,
        Statistic::FglsShort,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Statistic::Hc => "hc",
            Statistic::HcLong => "hc_long",
            Statistic::FglsLong => "fgls_long",
            Statistic::FglsShort => "fgls_short",
        }
    }

    fn inverts_weights(self) -> bool {
        matches!(self, Statistic::FglsLong | Statistic::FglsShort)
    }
}

/// A statistic together with the source of its variance weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Variant {
    pub statistic: Statistic,
    /// Use the true error variances instead of squared residuals.
    pub infeasible: bool,
}

impl Variant {
    pub const HC: Variant = Variant {
        statistic: Statistic::Hc,
        infeasible: false,
    };

    pub fn feasible(statistic: Statistic) -> Self {
        Variant {
            statistic,
            infeasible: false,
        }
    }

    pub fn infeasible(statistic: Statistic) -> Self {
        Variant {
            statistic,
            infeasible: true,
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.infeasible {
            write!(f, "infeasible_{}", self.statistic.name())
        } else {
            f.write_str(self.statistic.name())
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let (infeasible, base) = match s.strip_prefix("infeasible_") {
            Some(rest) => (true, rest),
            None => (false, s),
        };
        let statistic = Statistic::ALL
            .into_iter()
            .find(|st| st.name() == base)
            .ok_or_else(|| Error::InvalidInput(format!("unknown test variant '{s}'")))?;
        Ok(Variant { statistic, infeasible })
    }
}

/// Diagonal of the variance matrix used by a statistic.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceWeights {
    sigma2: Array1<f64>,
    floor_applied: bool,
    floored: bool,
}

impl VarianceWeights {
    /// Squared residuals, unfloored.
    pub fn from_residuals(e: ArrayView1<f64>) -> Self {
        VarianceWeights {
            sigma2: e.mapv(|x| x * x),
            floor_applied: false,
            floored: false,
        }
    }

    /// Known variances; all must be positive and finite.
    pub fn from_variances(sigma2: ArrayView1<f64>) -> Result<Self> {
        if sigma2.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(Error::InvalidInput("true variances must be positive and finite".into()));
        }
        Ok(VarianceWeights {
            sigma2: sigma2.to_owned(),
            floor_applied: false,
            floored: false,
        })
    }

    /// Raises every weight to at least `FGLS_FLOOR * mean(weights)`.
    /// Applying it twice is a no-op.
    pub fn floored(mut self) -> Result<Self> {
        if self.floored {
            return Ok(self);
        }
        let n = self.sigma2.len().max(1) as f64;
        let floor = FGLS_FLOOR * self.sigma2.sum() / n;
        if !(floor > 0.0) {
            return Err(Error::Singular("all variance weights are zero".into()));
        }
        for s in self.sigma2.iter_mut() {
            if *s < floor {
                *s = floor;
                self.floor_applied = true;
            }
        }
        self.floored = true;
        Ok(self)
    }

    pub fn values(&self) -> ArrayView1<'_, f64> {
        self.sigma2.view()
    }

    pub fn floor_applied(&self) -> bool {
        self.floor_applied
    }

    fn len(&self) -> usize {
        self.sigma2.len()
    }
}

fn check_shapes(e: ArrayView1<f64>, zt: ArrayView2<f64>, w: &VarianceWeights) -> Result<()> {
    let (n, r) = zt.dim();
    if r == 0 {
        return Err(Error::InvalidInput("no alternative columns (r = 0)".into()));
    }
    if e.len() != n || w.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "residuals {}, weights {}, Z has {n} rows",
            e.len(),
            w.len()
        )));
    }
    if n <= r {
        return Err(Error::InsufficientData {
            required: r,
            available: n,
        });
    }
    Ok(())
}

/// `e' Zt (Zt' diag(w) Zt)^-1 Zt' e`.
pub fn xi_hc(e: ArrayView1<f64>, zt: ArrayView2<f64>, weights: &VarianceWeights) -> Result<f64> {
    check_shapes(e, zt, weights)?;
    let b = zt.t().dot(&e);
    let g = scale_rows(zt, weights.sigma2.mapv(f64::sqrt).view());
    inverse_quadratic_form(b.view(), g.view())
}

/// `n R^2` from the uncentered regression of a constant on the rows of
/// `diag(e) Zt`; algebraically equal to [`xi_hc`] with squared-residual
/// weights.
pub fn xi_via_nr2(e: ArrayView1<f64>, zt: ArrayView2<f64>) -> Result<f64> {
    let (n, r) = zt.dim();
    if r == 0 || e.len() != n || n <= r {
        return Err(Error::DimensionMismatch(format!(
            "residuals {} for a {n}x{r} block",
            e.len()
        )));
    }
    let g = scale_rows(zt, e);
    let qr = PivotedQr::new(g.view(), QR_RANK_TOL);
    if qr.rank() < r {
        return Err(Error::Singular(format!("score matrix has rank {} < {r}", qr.rank())));
    }
    let ones = Array1::<f64>::ones(n);
    let c = qr.q().t().dot(&ones);
    // n * (1 - e'e / n) with e the residual of 1 on the scores.
    Ok(c.dot(&c))
}

/// Inputs shared by all statistics for one restricted fit.
#[derive(Debug, Clone, Copy)]
pub struct Restricted<'a> {
    pub w: ArrayView2<'a, f64>,
    pub z: ArrayView2<'a, f64>,
    pub residuals: ArrayView1<'a, f64>,
    pub z_tilde: ArrayView2<'a, f64>,
}

/// QR of the row-weighted `W`, failing if weighting destroyed its rank.
fn weighted_null_qr(w: ArrayView2<f64>, sqrt_w: ArrayView1<f64>) -> Result<PivotedQr> {
    let qr = PivotedQr::new(scale_rows(w, sqrt_w).view(), QR_RANK_TOL);
    if qr.rank() < w.ncols() {
        return Err(Error::Singular("weighted null design is rank deficient".into()));
    }
    Ok(qr)
}

/// Evaluates `stat` on a prepared restricted fit. Weights are floored here
/// for the statistics that invert them.
///
/// The FGLS statistics use the FGLS residuals `e_F = y - W b_F`, with `b_F`
/// weighted by `S⁻¹`. In whitened form `S^-1/2 e_F = M_B S^-1/2 e` with
/// `B = S^-1/2 W`, so the OLS residuals suffice.
pub fn statistic(stat: Statistic, p: &Restricted<'_>, weights: &VarianceWeights) -> Result<f64> {
    check_shapes(p.residuals, p.z_tilde, weights)?;
    let floored;
    let weights = if stat.inverts_weights() {
        floored = weights.clone().floored()?;
        &floored
    } else {
        weights
    };
    let e = p.residuals;
    match stat {
        Statistic::Hc => xi_hc(e, p.z_tilde, weights),
        Statistic::HcLong => {
            let qr = weighted_null_qr(p.w, weights.sigma2.mapv(f64::sqrt).view())?;
            let g = qr.residual_block(scale_rows(p.z, weights.sigma2.mapv(f64::sqrt).view()).view());
            let b = p.z.t().dot(&e);
            inverse_quadratic_form(b.view(), g.view())
        }
        Statistic::FglsLong | Statistic::FglsShort => {
            let inv_sd = weights.sigma2.mapv(|s| s.sqrt().recip());
            let qr = weighted_null_qr(p.w, inv_sd.view())?;
            let s = qr.residual((&e * &inv_sd).view());
            let g = if stat == Statistic::FglsLong {
                qr.residual_block(scale_rows(p.z, inv_sd.view()).view())
            } else {
                scale_rows(p.z_tilde, inv_sd.view())
            };
            let b = g.t().dot(&s);
            inverse_quadratic_form(b.view(), g.view())
        }
    }
}

/// Computes `M_W Z` and evaluates the named statistic.
pub fn xi_variant(
    stat: Statistic,
    e: ArrayView1<f64>,
    w: ArrayView2<f64>,
    z: ArrayView2<f64>,
    weights: &VarianceWeights,
) -> Result<f64> {
    let zt = Projection::new(w)?.residualize_block(z)?;
    statistic(
        stat,
        &Restricted {
            w,
            z,
            residuals: e,
            z_tilde: zt.view(),
        },
        weights,
    )
}

/// `(xi - r) / sqrt(2 r)`.
pub fn normalize(xi: f64, r: usize) -> f64 {
    (xi - r as f64) / (2.0 * r as f64).sqrt()
}

/// Centering by the total number of terms `k` instead of `r`.
pub fn normalize_kn(xi: f64, k: usize) -> f64 {
    normalize(xi, k)
}

/// Decisions at one significance level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Decision {
    pub alpha: f64,
    /// `t > z_{1-alpha}`; the headline rule.
    pub reject_normal: bool,
    /// `xi > chi2_{1-alpha}(r)`.
    pub reject_chisq: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub variant: String,
    pub xi: f64,
    pub m: usize,
    pub r: usize,
    pub k: usize,
    pub t: f64,
    pub p_normal: f64,
    pub p_chisq: f64,
    pub decisions: Vec<Decision>,
    pub floor_applied: bool,
}

impl TestResult {
    pub fn from_statistic(variant: Variant, xi: f64, m: usize, r: usize, levels: &[f64]) -> Result<Self> {
        validate_levels(levels)?;
        if r == 0 {
            return Err(Error::InvalidInput("r must be at least 1".into()));
        }
        let t = normalize(xi, r);
        let rf = r as f64;
        let decisions = levels
            .iter()
            .map(|&alpha| {
                Ok(Decision {
                    alpha,
                    reject_normal: t > normal_quantile(1.0 - alpha)?,
                    reject_chisq: xi > chisq_quantile(1.0 - alpha, rf)?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(TestResult {
            variant: variant.to_string(),
            xi,
            m,
            r,
            k: m + r,
            t,
            p_normal: normal_sf(t).clamp(0.0, 1.0),
            p_chisq: chisq_sf(xi, rf)?.clamp(0.0, 1.0),
            decisions,
            floor_applied: false,
        })
    }

    /// Normal-rule decision at `alpha`, if that level was requested.
    pub fn reject_at(&self, alpha: f64) -> Option<bool> {
        self.decisions
            .iter()
            .find(|d| d.alpha == alpha)
            .map(|d| d.reject_normal)
    }
}

pub fn validate_levels(levels: &[f64]) -> Result<()> {
    match levels.iter().find(|&&a| !(a > 0.0 && a < 1.0)) {
        Some(a) => Err(Error::InvalidInput(format!("significance level {a} outside (0, 1)"))),
        None => Ok(()),
    }
}

/// Runs one statistic end to end: restricted fit, `M_W Z`, weights, and
/// normal/chi-square decisions.
#[derive(Debug, Clone)]
pub struct LmTest {
    pub variant: Variant,
    pub levels: Vec<f64>,
    /// Required by infeasible variants.
    pub true_variances: Option<Array1<f64>>,
}

impl LmTest {
    pub fn new(variant: Variant, levels: &[f64]) -> Self {
        LmTest {
            variant,
            levels: levels.to_vec(),
            true_variances: None,
        }
    }

    pub fn with_true_variances(mut self, sigma2: Array1<f64>) -> Self {
        self.true_variances = Some(sigma2);
        self
    }

    pub fn weights(&self, residuals: ArrayView1<f64>) -> Result<VarianceWeights> {
        if self.variant.infeasible {
            let s = self
                .true_variances
                .as_ref()
                .ok_or_else(|| Error::InvalidInput(format!("variant {} needs true variances", self.variant)))?;
            VarianceWeights::from_variances(s.view())
        } else {
            Ok(VarianceWeights::from_residuals(residuals))
        }
    }

    pub fn run(&self, y: ArrayView1<f64>, w: ArrayView2<f64>, z: ArrayView2<f64>) -> Result<TestResult> {
        if z.nrows() != w.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "W has {} rows, Z has {}",
                w.nrows(),
                z.nrows()
            )));
        }
        let fit = ols_fit(w, y)?;
        let zt = fit.context().residualize_block(z)?;
        let mut weights = self.weights(fit.residuals.view())?;
        if self.variant.statistic.inverts_weights() {
            weights = weights.floored()?;
        }
        let inputs = Restricted {
            w,
            z,
            residuals: fit.residuals.view(),
            z_tilde: zt.view(),
        };
        let xi = statistic(self.variant.statistic, &inputs, &weights)?;
        let mut out = TestResult::from_statistic(self.variant, xi, w.ncols(), z.ncols(), &self.levels)?;
        out.floor_applied = weights.floor_applied();
        Ok(out)
    }
}

/// Feasible test with the normal and chi-square rules at `levels`.
pub fn run_test(
    y: ArrayView1<f64>,
    w: ArrayView2<f64>,
    z: ArrayView2<f64>,
    variant: Variant,
    levels: &[f64],
) -> Result<TestResult> {
    LmTest::new(variant, levels).run(y, w, z)
}
