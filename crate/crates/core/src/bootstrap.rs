//! Wild bootstrap for the normalized statistic.
//!
//! Each draw multiplies the restricted residuals by i.i.d. two-point
//! variables, `e* = V* ⊙ e`. Because `Y* = W b + e*` and `M_W W = 0`, the
//! refitted bootstrap residuals are just `M_W e*`, so the null model is never
//! re-estimated. `Zt` is unchanged across draws.

use ndarray::{Array1, ArrayView1, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::lmtest::{normalize, xi_hc, VarianceWeights};
use crate::regress::{FitResult, Projection};
use crate::rng::{substream, uniform_open01, StreamRng};
use crate::{Error, Result};

pub const DEFAULT_REPLICATIONS: usize = 399;

/// Bootstrap statistics within this relative distance of the observed one
/// count as ties (and so as "at least as large").
const TIE_TOL: f64 = 1e-10;

/// Lower support point of Mammen's distribution, `(1 - √5) / 2`.
pub const MAMMEN_LOW: f64 = -0.618_033_988_749_894_9;
/// Upper support point, `(1 + √5) / 2`.
pub const MAMMEN_HIGH: f64 = 1.618_033_988_749_895;
/// Probability of the lower point, `(√5 + 1) / (2√5)`.
pub const MAMMEN_P_LOW: f64 = 0.723_606_797_749_979;

/// Source of multipliers `V*`.
pub trait Multiplier: Sync {
    fn draw(&self, rng: &mut StreamRng) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MultiplierDist {
    /// ±1 with probability 1/2 each.
    #[default]
    Rademacher,
    /// Two-point distribution with mean 0, variance 1 and third moment 1.
    Mammen,
}

impl MultiplierDist {
    pub fn name(self) -> &'static str {
        match self {
            MultiplierDist::Rademacher => "rademacher",
            MultiplierDist::Mammen => "mammen",
        }
    }
}

impl std::str::FromStr for MultiplierDist {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rademacher" => Ok(MultiplierDist::Rademacher),
            "mammen" => Ok(MultiplierDist::Mammen),
            other => Err(Error::InvalidInput(format!(
                "unknown multiplier distribution '{other}'"
            ))),
        }
    }
}

impl Multiplier for MultiplierDist {
    fn draw(&self, rng: &mut StreamRng) -> f64 {
        let u = uniform_open01(rng);
        match self {
            MultiplierDist::Rademacher => {
                if u < 0.5 {
                    -1.0
                } else {
                    1.0
                }
            }
            MultiplierDist::Mammen => {
                if u < MAMMEN_P_LOW {
                    MAMMEN_LOW
                } else {
                    MAMMEN_HIGH
                }
            }
        }
    }
}

pub fn draw_multipliers<M: Multiplier + ?Sized>(dist: &M, n: usize, rng: &mut StreamRng) -> Array1<f64> {
    Array1::from_shape_fn(n, |_| dist.draw(rng))
}

/// Restricted residuals of the bootstrap sample built from multipliers `v`.
pub fn bootstrap_residuals(ctx: &Projection, residuals: ArrayView1<f64>, v: ArrayView1<f64>) -> Result<Array1<f64>> {
    ctx.annihilate((&v * &residuals).view())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapResult {
    /// Normalized bootstrap statistics in draw order; skipped draws omitted.
    pub t_star: Vec<f64>,
    pub p_value: f64,
    /// `(alpha, critical value)` pairs.
    pub critical_values: Vec<(f64, f64)>,
    pub replications: usize,
    pub skipped: usize,
    pub seed: u64,
}

impl BootstrapResult {
    pub fn reject_at(&self, alpha: f64) -> bool {
        self.p_value <= alpha
    }
}

/// `(#{t* >= t} + 1) / (B + 1)` over the valid draws.
pub fn bootstrap_p_value(t_star: &[f64], t_observed: f64) -> f64 {
    let cut = t_observed - TIE_TOL * t_observed.abs().max(1.0);
    let exceed = t_star.iter().filter(|&&t| t >= cut).count();
    (exceed + 1) as f64 / (t_star.len() + 1) as f64
}

/// Order statistic `ceil((B + 1)(1 - alpha))` of the bootstrap draws.
pub fn bootstrap_critical_value(t_star: &[f64], alpha: f64) -> f64 {
    let mut sorted = t_star.to_vec();
    sorted.sort_by(f64::total_cmp);
    let b = sorted.len();
    let k = (((b + 1) as f64) * (1.0 - alpha)).ceil() as usize;
    sorted[k.clamp(1, b) - 1]
}

/// Runs `replications` wild bootstrap draws. Draw `b` uses the substream
/// `(seed, b)`, so results do not depend on the number of worker threads.
/// Draws whose inner matrix is singular are skipped while they stay at or
/// below 1% of `replications`; beyond that the run fails.
pub fn wild_bootstrap<M: Multiplier + ?Sized>(
    fit: &FitResult,
    z_tilde: ArrayView2<f64>,
    replications: usize,
    dist: &M,
    seed: u64,
    t_observed: f64,
    levels: &[f64],
) -> Result<BootstrapResult> {
    if replications == 0 {
        return Err(Error::InvalidInput("bootstrap needs at least one replication".into()));
    }
    let ctx = fit.context();
    let e = fit.residuals.view();
    let r = z_tilde.ncols();
    let draws: Vec<Result<Option<f64>>> = (0..replications)
        .into_par_iter()
        .map(|b| {
            let mut rng = substream(seed, &[b as u64]);
            let v = draw_multipliers(dist, e.len(), &mut rng);
            let e_star = bootstrap_residuals(ctx, e, v.view())?;
            let weights = VarianceWeights::from_residuals(e_star.view());
            match xi_hc(e_star.view(), z_tilde, &weights) {
                Ok(xi) => Ok(Some(normalize(xi, r))),
                Err(Error::Singular(_)) => Ok(None),
                Err(other) => Err(other),
            }
        })
        .collect();

    let mut t_star = Vec::with_capacity(replications);
    let mut skipped = 0;
    for d in draws {
        match d? {
            Some(t) => t_star.push(t),
            None => skipped += 1,
        }
    }
    if skipped as f64 > 0.01 * replications as f64 || t_star.is_empty() {
        return Err(Error::Singular(format!(
            "{skipped} of {replications} bootstrap draws had a singular inner matrix"
        )));
    }
    let critical_values = levels
        .iter()
        .map(|&a| (a, bootstrap_critical_value(&t_star, a)))
        .collect();
    Ok(BootstrapResult {
        p_value: bootstrap_p_value(&t_star, t_observed),
        t_star,
        critical_values,
        replications,
        skipped,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mammen_constants() {
        let s5 = 5f64.sqrt();
        assert_eq!(MAMMEN_LOW, (1.0 - s5) / 2.0);
        assert_eq!(MAMMEN_HIGH, (1.0 + s5) / 2.0);
        assert!((MAMMEN_P_LOW - (s5 + 1.0) / (2.0 * s5)).abs() <= 4.0 * f64::EPSILON);
        let mean = MAMMEN_P_LOW * MAMMEN_LOW + (1.0 - MAMMEN_P_LOW) * MAMMEN_HIGH;
        let var = MAMMEN_P_LOW * MAMMEN_LOW.powi(2) + (1.0 - MAMMEN_P_LOW) * MAMMEN_HIGH.powi(2);
        let third = MAMMEN_P_LOW * MAMMEN_LOW.powi(3) + (1.0 - MAMMEN_P_LOW) * MAMMEN_HIGH.powi(3);
        assert!(mean.abs() < 1e-15);
        assert!((var - 1.0).abs() < 1e-15);
        assert!((third - 1.0).abs() < 1e-14);
    }

    #[test]
    fn mammen_support() {
        let mut rng = substream(3, &[]);
        let v = draw_multipliers(&MultiplierDist::Mammen, 1000, &mut rng);
        assert!(v.iter().all(|&x| x == MAMMEN_LOW || x == MAMMEN_HIGH));
        let mut rng = substream(3, &[]);
        let v = draw_multipliers(&MultiplierDist::Rademacher, 1000, &mut rng);
        assert!(v.iter().all(|&x| x == 1.0 || x == -1.0));
    }

    #[test]
    fn p_value_and_critical_value_conventions() {
        let t = [0.5, -1.0, 2.0, 1.0];
        assert_eq!(bootstrap_p_value(&t, 1.0), 3.0 / 5.0);
        assert_eq!(bootstrap_p_value(&t, 10.0), 1.0 / 5.0);
        assert_eq!(bootstrap_p_value(&t, -5.0), 1.0);
        let draws: Vec<f64> = (1..=399).map(f64::from).collect();
        assert_eq!(bootstrap_critical_value(&draws, 0.05), 380.0);
    }

    #[test]
    fn distribution_names() {
        assert_eq!("mammen".parse::<MultiplierDist>().unwrap(), MultiplierDist::Mammen);
        assert!("normal".parse::<MultiplierDist>().is_err());
    }
}
