//! Data-driven tuning: Mallows Cp and GCV choose the null model size, and a
//! penalized criterion chooses the number of restrictions.
//!
//! With candidate restriction counts `R` and `r_min = min R`, the selected
//! `r̂` maximizes
//!
//! ```text
//! xi(r) - r - gamma * sqrt(2 (r - r_min)),    gamma = c * sqrt(2 ln |R|)
//! ```
//!
//! and the test rejects when `xi(r̂)` exceeds the `1 - alpha` quantile of
//! `chi2(r_min)`.

use std::collections::BTreeMap;

use ndarray::ArrayView1;
use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::design::{screen_collinear, DesignPair, SCREEN_TOL};
use crate::dist::{chisq_quantile, chisq_sf};
use crate::lmtest::{validate_levels, xi_hc, VarianceWeights};
use crate::regress::{ols_fit, Projection};
use crate::{Error, Result};

pub const DEFAULT_PENALTY: f64 = 3.0;

/// Relative score difference treated as a tie.
const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    #[default]
    #[serde(alias = "mallows_cp")]
    Cp,
    Gcv,
}

impl Criterion {
    pub fn name(self) -> &'static str {
        match self {
            Criterion::Cp => "cp",
            Criterion::Gcv => "gcv",
        }
    }
}

impl std::str::FromStr for Criterion {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cp" | "mallows_cp" => Ok(Criterion::Cp),
            "gcv" => Ok(Criterion::Gcv),
            other => Err(Error::InvalidInput(format!("unknown selection criterion '{other}'"))),
        }
    }
}

/// Chosen candidate and the full score table.
#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub index: usize,
    pub scores: Vec<f64>,
}

fn rss_table(y: ArrayView1<f64>, designs: &[ArrayView2<f64>]) -> Result<Vec<(usize, f64)>> {
    if designs.is_empty() {
        return Err(Error::InvalidInput("no candidate designs".into()));
    }
    designs.iter().map(|w| Ok((w.ncols(), ols_fit(*w, y)?.rss()))).collect()
}

/// Smallest score; near-ties go to the candidate with fewer columns.
fn argmin_parsimonious(scores: &[f64], sizes: &[usize]) -> usize {
    let best = scores.iter().copied().fold(f64::INFINITY, f64::min);
    let tol = TIE_TOL * best.abs().max(f64::MIN_POSITIVE);
    (0..scores.len())
        .filter(|&i| scores[i] - best <= tol)
        .min_by_key(|&i| (sizes[i], i))
        .expect("nonempty")
}

/// `RSS(m)/n + 2 s² m / n`, with `s² = RSS(m_max) / (n - m_max)` from the
/// largest candidate.
pub fn mallows_cp(y: ArrayView1<f64>, designs: &[ArrayView2<f64>]) -> Result<Selection> {
    let table = rss_table(y, designs)?;
    let n = y.len() as f64;
    let &(m_max, rss_max) = table.iter().max_by_key(|(m, _)| *m).expect("nonempty");
    let s2 = rss_max / (n - m_max as f64);
    let scores: Vec<f64> = table
        .iter()
        .map(|&(m, rss)| rss / n + 2.0 * s2 * m as f64 / n)
        .collect();
    let sizes: Vec<usize> = table.iter().map(|t| t.0).collect();
    Ok(Selection {
        index: argmin_parsimonious(&scores, &sizes),
        scores,
    })
}

/// `n RSS(m) / (n - m)^2`.
pub fn gcv(y: ArrayView1<f64>, designs: &[ArrayView2<f64>]) -> Result<Selection> {
    let table = rss_table(y, designs)?;
    let n = y.len() as f64;
    let scores: Vec<f64> = table.iter().map(|&(m, rss)| n * rss / (n - m as f64).powi(2)).collect();
    let sizes: Vec<usize> = table.iter().map(|t| t.0).collect();
    Ok(Selection {
        index: argmin_parsimonious(&scores, &sizes),
        scores,
    })
}

pub fn select_model(criterion: Criterion, y: ArrayView1<f64>, designs: &[ArrayView2<f64>]) -> Result<Selection> {
    match criterion {
        Criterion::Cp => mallows_cp(y, designs),
        Criterion::Gcv => gcv(y, designs),
    }
}

/// Penalty scale `c sqrt(2 ln |R|)`.
pub fn penalty_gamma(card: usize, c: f64) -> f64 {
    c * (2.0 * (card as f64).ln()).sqrt()
}

/// Criterion value for one candidate.
pub fn r_criterion(xi: f64, r: usize, r_min: usize, gamma: f64) -> f64 {
    xi - r as f64 - gamma * (2.0 * (r - r_min) as f64).sqrt()
}

/// Maximizer of the penalized criterion over the map `r -> xi(r)`; ties
/// resolve to the smallest `r`.
pub fn select_r(xi_by_r: &BTreeMap<usize, f64>, c: f64) -> Result<usize> {
    let (&r_min, _) = xi_by_r
        .iter()
        .next()
        .ok_or_else(|| Error::InvalidInput("empty restriction grid".into()))?;
    if !(c >= 1.0) {
        return Err(Error::InvalidInput(format!("penalty constant {c} must be at least 1")));
    }
    let gamma = penalty_gamma(xi_by_r.len(), c);
    let mut best = (r_min, f64::NEG_INFINITY);
    // BTreeMap iterates in increasing r, so strict improvement keeps the
    // smallest maximizer.
    for (&r, &xi) in xi_by_r {
        let v = r_criterion(xi, r, r_min, gamma);
        if v > best.1 {
            best = (r, v);
        }
    }
    Ok(best.0)
}

/// Candidate univariate sizes and the penalty constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuningGrid {
    pub candidates: Vec<usize>,
    #[serde(default = "default_penalty")]
    pub c: f64,
}

fn default_penalty() -> f64 {
    DEFAULT_PENALTY
}

impl TuningGrid {
    pub fn new(candidates: Vec<usize>, c: f64) -> Result<Self> {
        let grid = TuningGrid { candidates, c };
        grid.validate()?;
        Ok(grid)
    }

    pub fn range(lo: usize, hi: usize) -> Result<Self> {
        TuningGrid::new((lo..=hi).collect(), DEFAULT_PENALTY)
    }

    pub fn validate(&self) -> Result<()> {
        if self.candidates.is_empty() {
            return Err(Error::InvalidInput("tuning grid is empty".into()));
        }
        if self.candidates.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("tuning grid must be strictly increasing".into()));
        }
        if !(self.c >= 1.0) {
            return Err(Error::InvalidInput(format!(
                "penalty constant {} must be at least 1",
                self.c
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DataDrivenOptions {
    pub criterion: Criterion,
    /// Screen each candidate `Z` against the selected `W` before use.
    pub screen: bool,
}

impl Default for DataDrivenOptions {
    fn default() -> Self {
        DataDrivenOptions {
            criterion: Criterion::Cp,
            screen: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataDrivenResult {
    pub criterion: Criterion,
    /// Grid value chosen for the null model.
    pub selected_terms: usize,
    pub m: usize,
    pub r_hat: usize,
    pub r_min: usize,
    pub xi: f64,
    /// Upper tail of `chi2(r_min)` at `xi`.
    pub p_chisq: f64,
    /// `(alpha, critical value, reject)`.
    pub decisions: Vec<(f64, f64, bool)>,
    pub xi_by_r: Vec<(usize, f64)>,
    pub model_scores: Vec<f64>,
}

impl DataDrivenResult {
    pub fn reject_at(&self, alpha: f64) -> Option<bool> {
        self.decisions.iter().find(|d| d.0 == alpha).map(|d| d.2)
    }
}

/// Data-driven test over `grid`: `design_for(a)` builds the design pair for
/// candidate `a`. The null model comes from the selected candidate; every
/// candidate's `Z` is then residualized on it to trace out `xi(r)`.
pub fn data_driven_test<F>(
    y: ArrayView1<f64>,
    grid: &TuningGrid,
    options: DataDrivenOptions,
    levels: &[f64],
    design_for: F,
) -> Result<DataDrivenResult>
where
    F: Fn(usize) -> Result<DesignPair>,
{
    grid.validate()?;
    validate_levels(levels)?;
    let designs: Vec<DesignPair> = grid.candidates.iter().map(|&a| design_for(a)).collect::<Result<_>>()?;
    data_driven_from_designs(y, grid, options, levels, &designs)
}

/// As [`data_driven_test`] with the candidate designs already built, in
/// grid order.
pub fn data_driven_from_designs(
    y: ArrayView1<f64>,
    grid: &TuningGrid,
    options: DataDrivenOptions,
    levels: &[f64],
    designs: &[DesignPair],
) -> Result<DataDrivenResult> {
    if designs.len() != grid.candidates.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} designs for {} grid candidates",
            designs.len(),
            grid.candidates.len()
        )));
    }
    let ws: Vec<ArrayView2<f64>> = designs.iter().map(|d| d.w.view()).collect();
    let selection = select_model(options.criterion, y, &ws)?;
    let chosen = &designs[selection.index];
    let projection = Projection::new(chosen.w.view())?;
    let fit = crate::regress::fit_with(projection, y)?;
    let weights = VarianceWeights::from_residuals(fit.residuals.view());

    let mut xi_by_r: BTreeMap<usize, f64> = BTreeMap::new();
    for d in designs {
        let z = if options.screen {
            let pair = DesignPair {
                w: chosen.w.clone(),
                z: d.z.clone(),
                w_labels: chosen.w_labels.clone(),
                z_labels: d.z_labels.clone(),
            };
            screen_collinear(&pair, SCREEN_TOL)?.0.z
        } else {
            d.z.clone()
        };
        let r = z.ncols();
        if r == 0 || xi_by_r.contains_key(&r) {
            continue;
        }
        let zt = fit.context().residualize_block(z.view())?;
        xi_by_r.insert(r, xi_hc(fit.residuals.view(), zt.view(), &weights)?);
    }
    let r_hat = select_r(&xi_by_r, grid.c)?;
    let r_min = *xi_by_r.keys().next().expect("nonempty");
    let xi = xi_by_r[&r_hat];
    let decisions = levels
        .iter()
        .map(|&alpha| {
            let cv = chisq_quantile(1.0 - alpha, r_min as f64)?;
            Ok((alpha, cv, xi > cv))
        })
        .collect::<Result<_>>()?;
    Ok(DataDrivenResult {
        criterion: options.criterion,
        selected_terms: grid.candidates[selection.index],
        m: chosen.m(),
        r_hat,
        r_min,
        xi,
        p_chisq: chisq_sf(xi, r_min as f64)?,
        decisions,
        xi_by_r: xi_by_r.into_iter().collect(),
        model_scores: selection.scores,
    })
}
