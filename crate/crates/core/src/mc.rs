//! Monte Carlo size and power experiments for the partially linear design.
//!
//! Regressors: `X1 = -2 + 4(0.8 V1 + 0.2 V2)`, `X2 = -2 + 4(0.2 V1 + 0.8 V2)`
//! with `V1, V2 ~ U[0,1]`. Errors are normal with variance
//! `1 + 1.75 exp(0.75 (X1 + X2))`. The null mean is
//! `3 + 2 X1 + 2 (exp(X2) - 2 ln(X2 + 3))`; the alternative adds
//! `1.21 cos(X1 - 2) sin(0.75 X2)`.
//!
//! Replication `b` of the cell `(family, n, a, hypothesis)` draws from the
//! substream `(seed, n, hypothesis, family, a, b)`, so every number in a
//! report is fixed by the configuration alone. All variants in a cell see
//! the same samples.

use std::io::Write;

use ndarray::Array1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::BasisFamily;
use crate::bootstrap::{wild_bootstrap, MultiplierDist, DEFAULT_REPLICATIONS};
use crate::design::{simulation_design, DesignPair};
use crate::dist::normal_quantile;
use crate::lmtest::{normalize, normalize_kn, statistic, validate_levels, Restricted, VarianceWeights, Variant};
use crate::regress::ols_fit;
use crate::rng::{splitmix64, standard_normal, substream, uniform_open01};
use crate::tuning::{data_driven_from_designs, Criterion, DataDrivenOptions, TuningGrid, DEFAULT_PENALTY};
use crate::{Error, Result};

pub const MIN_SAMPLE_SIZE: usize = 50;

/// Share of failed replications a cell tolerates before it is abandoned.
pub const MAX_FAILURE_SHARE: f64 = 0.01;

/// Path component standing in for `a` in data-driven cells.
const DATA_DRIVEN_TAG: u64 = 0;
const BOOTSTRAP_TAG: u64 = 0xB007;

pub const CSV_HEADER: &str = "variant,family,n,a_n,hypothesis,alpha,reject_rate,mc_se,M,seed";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hypothesis {
    Null,
    Alternative,
}

impl Hypothesis {
    pub fn name(self) -> &'static str {
        match self {
            Hypothesis::Null => "null",
            Hypothesis::Alternative => "alternative",
        }
    }

    fn tag(self) -> u64 {
        match self {
            Hypothesis::Null => 0,
            Hypothesis::Alternative => 1,
        }
    }
}

impl std::str::FromStr for Hypothesis {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "null" => Ok(Hypothesis::Null),
            "alternative" | "alt" => Ok(Hypothesis::Alternative),
            other => Err(Error::InvalidInput(format!("unknown hypothesis '{other}'"))),
        }
    }
}

fn family_tag(f: BasisFamily) -> u64 {
    match f {
        BasisFamily::Power => 0,
        BasisFamily::Spline => 1,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DgpSpec {
    pub n: usize,
    pub hypothesis: Hypothesis,
    pub seed: u64,
}

impl DgpSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n < MIN_SAMPLE_SIZE {
            return Err(Error::InvalidInput(format!(
                "simulated sample size {} below the minimum {MIN_SAMPLE_SIZE}",
                self.n
            )));
        }
        Ok(())
    }
}

/// One simulated data set, with the true error variances.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub y: Array1<f64>,
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    pub sigma2: Array1<f64>,
}

pub fn regressors(v1: f64, v2: f64) -> (f64, f64) {
    (-2.0 + 4.0 * (0.8 * v1 + 0.2 * v2), -2.0 + 4.0 * (0.2 * v1 + 0.8 * v2))
}

pub fn error_variance(x1: f64, x2: f64) -> f64 {
    1.0 + 1.75 * (0.75 * (x1 + x2)).exp()
}

pub fn null_mean(x1: f64, x2: f64) -> f64 {
    3.0 + 2.0 * x1 + 2.0 * (x2.exp() - 2.0 * (x2 + 3.0).ln())
}

pub fn deviation(x1: f64, x2: f64) -> f64 {
    1.21 * (x1 - 2.0).cos() * (0.75 * x2).sin()
}

/// Draws `n` observations. Each observation consumes `V1`, `V2` and one
/// normal variate, in that order.
pub fn gen_sample<R: rand_chacha::rand_core::RngCore + ?Sized>(
    n: usize,
    hypothesis: Hypothesis,
    rng: &mut R,
) -> Sample {
    let mut x1 = Vec::with_capacity(n);
    let mut x2 = Vec::with_capacity(n);
    let mut y = Array1::zeros(n);
    let mut sigma2 = Array1::zeros(n);
    for i in 0..n {
        let v1 = uniform_open01(rng);
        let v2 = uniform_open01(rng);
        let eps = standard_normal(rng);
        let (a, b) = regressors(v1, v2);
        let s2 = error_variance(a, b);
        let mut mean = null_mean(a, b);
        if hypothesis == Hypothesis::Alternative {
            mean += deviation(a, b);
        }
        y[i] = mean + s2.sqrt() * eps;
        sigma2[i] = s2;
        x1.push(a);
        x2.push(b);
    }
    Sample { y, x1, x2, sigma2 }
}

impl DgpSpec {
    pub fn sample(&self) -> Result<Sample> {
        self.validate()?;
        Ok(gen_sample(self.n, self.hypothesis, &mut substream(self.seed, &[])))
    }
}

/// A procedure whose rejection rate is tabulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum McVariant {
    /// Statistic normalized by `r` with the normal critical value.
    Asymptotic(Variant),
    /// Robust statistic normalized by `k` instead of `r`.
    NoDf,
    /// Robust statistic with wild bootstrap p-values.
    Bootstrap,
    /// Data-driven test over the whole grid of `a`.
    DataDriven(Criterion),
}

impl McVariant {
    pub fn name(&self) -> String {
        match self {
            McVariant::Asymptotic(v) => v.to_string(),
            McVariant::NoDf => "hc_nodf".into(),
            McVariant::Bootstrap => "bootstrap".into(),
            McVariant::DataDriven(c) => format!("dd_{}", c.name()),
        }
    }

    pub fn is_data_driven(&self) -> bool {
        matches!(self, McVariant::DataDriven(_))
    }
}

impl std::fmt::Display for McVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.name())
    }
}

impl std::str::FromStr for McVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hc_nodf" => Ok(McVariant::NoDf),
            "bootstrap" => Ok(McVariant::Bootstrap),
            _ => match s.strip_prefix("dd_") {
                Some(c) => Ok(McVariant::DataDriven(c.parse()?)),
                None => Ok(McVariant::Asymptotic(s.parse()?)),
            },
        }
    }
}

impl TryFrom<String> for McVariant {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<McVariant> for String {
    fn from(v: McVariant) -> String {
        v.name()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub replications: usize,
    pub sample_sizes: Vec<usize>,
    /// Values of `a`; also the grid of the data-driven variants.
    pub terms: Vec<usize>,
    pub families: Vec<BasisFamily>,
    pub hypotheses: Vec<Hypothesis>,
    pub variants: Vec<McVariant>,
    pub levels: Vec<f64>,
    pub seed: u64,
    #[serde(default = "default_boot")]
    pub bootstrap_replications: usize,
    #[serde(default)]
    pub multiplier: MultiplierDist,
    #[serde(default = "default_penalty")]
    pub penalty: f64,
}

fn default_boot() -> usize {
    DEFAULT_REPLICATIONS
}

fn default_penalty() -> f64 {
    DEFAULT_PENALTY
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            replications: 1000,
            sample_sizes: vec![1000],
            terms: (4..=9).collect(),
            families: vec![BasisFamily::Power],
            hypotheses: vec![Hypothesis::Null, Hypothesis::Alternative],
            variants: vec![McVariant::Asymptotic(Variant::HC)],
            levels: vec![0.05],
            seed: 20240101,
            bootstrap_replications: DEFAULT_REPLICATIONS,
            multiplier: MultiplierDist::Rademacher,
            penalty: DEFAULT_PENALTY,
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::InvalidInput("at least one replication is required".into()));
        }
        for list in [
            ("sample_sizes", self.sample_sizes.is_empty()),
            ("terms", self.terms.is_empty()),
            ("families", self.families.is_empty()),
            ("hypotheses", self.hypotheses.is_empty()),
            ("variants", self.variants.is_empty()),
            ("levels", self.levels.is_empty()),
        ] {
            if list.1 {
                return Err(Error::InvalidInput(format!("{} must not be empty", list.0)));
            }
        }
        for &n in &self.sample_sizes {
            DgpSpec {
                n,
                hypothesis: Hypothesis::Null,
                seed: 0,
            }
            .validate()?;
        }
        if let Some(a) = self.terms.iter().find(|&&a| a < 4) {
            return Err(Error::InvalidInput(format!(
                "a = {a}; the simulation design needs a >= 4"
            )));
        }
        if self.variants.iter().any(McVariant::is_data_driven) {
            TuningGrid::new(self.terms.clone(), self.penalty)?;
        }
        if self.variants.contains(&McVariant::Bootstrap) && self.bootstrap_replications == 0 {
            return Err(Error::InvalidInput("bootstrap needs at least one replication".into()));
        }
        validate_levels(&self.levels)
    }
}

/// Tabulated rejection rates for one variant in one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McCell {
    pub variant: String,
    pub family: BasisFamily,
    pub n: usize,
    /// `a` of the design; the largest grid value for data-driven variants.
    pub a_n: usize,
    pub hypothesis: Hypothesis,
    /// `(alpha, rejection rate)`; the rate is NaN when the cell was abandoned.
    pub rates: Vec<(f64, f64)>,
    /// Replications that produced a statistic.
    pub replications: usize,
    pub failures: usize,
    pub aborted: bool,
    /// Mean of the unnormalized statistic over successful replications.
    pub mean_xi: f64,
    pub seed: u64,
}

impl McCell {
    pub fn mc_se(&self, rate: f64) -> f64 {
        (rate * (1.0 - rate) / self.replications as f64).sqrt()
    }

    pub fn rate_at(&self, alpha: f64) -> Option<f64> {
        self.rates.iter().find(|r| r.0 == alpha).map(|r| r.1)
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct McReport {
    pub cells: Vec<McCell>,
}

impl McReport {
    pub fn find(
        &self,
        variant: &str,
        family: BasisFamily,
        n: usize,
        a_n: usize,
        hypothesis: Hypothesis,
    ) -> Option<&McCell> {
        self.cells.iter().find(|c| {
            c.variant == variant && c.family == family && c.n == n && c.a_n == a_n && c.hypothesis == hypothesis
        })
    }
}

/// Outcome of one variant in one replication.
#[derive(Debug, Clone)]
struct Draw {
    xi: f64,
    rejects: Vec<bool>,
}

struct CellPlan<'a> {
    family: BasisFamily,
    n: usize,
    hypothesis: Hypothesis,
    /// `None` for the data-driven cell.
    a: Option<usize>,
    variants: Vec<&'a McVariant>,
}

fn cell_path(p: &CellPlan<'_>) -> [u64; 4] {
    [
        p.n as u64,
        p.hypothesis.tag(),
        family_tag(p.family),
        p.a.map_or(DATA_DRIVEN_TAG, |a| a as u64),
    ]
}

/// Seed of the bootstrap run inside replication `b` of a cell.
fn bootstrap_seed(seed: u64, path: &[u64; 4], b: usize) -> u64 {
    let mut h = splitmix64(seed ^ BOOTSTRAP_TAG);
    for &p in path.iter().chain(std::iter::once(&(b as u64))) {
        h = splitmix64(h ^ p);
    }
    h
}

fn fixed_design_draws(
    cfg: &McConfig,
    plan: &CellPlan<'_>,
    sample: &Sample,
    a: usize,
    z_crit: &[f64],
    boot_seed: u64,
) -> Result<Vec<Result<Draw>>> {
    let design = simulation_design(&sample.x1, &sample.x2, a, plan.family)?;
    let fit = match ols_fit(design.w.view(), sample.y.view()) {
        Ok(f) => f,
        Err(e) if e.is_numerical() => {
            return Ok(plan
                .variants
                .iter()
                .map(|_| Err(Error::Singular(e.to_string())))
                .collect())
        }
        Err(e) => return Err(e),
    };
    let zt = fit.context().residualize_block(design.z.view())?;
    let inputs = Restricted {
        w: design.w.view(),
        z: design.z.view(),
        residuals: fit.residuals.view(),
        z_tilde: zt.view(),
    };
    let (r, k) = (design.r(), design.k());
    let residual_weights = VarianceWeights::from_residuals(fit.residuals.view());
    let hc_xi = || statistic(Variant::HC.statistic, &inputs, &residual_weights);
    let normal_rule = |xi: f64, t: f64| Draw {
        xi,
        rejects: z_crit.iter().map(|&c| t > c).collect(),
    };

    let mut out = Vec::with_capacity(plan.variants.len());
    for v in &plan.variants {
        let draw = match v {
            McVariant::Asymptotic(variant) => {
                let weights = if variant.infeasible {
                    VarianceWeights::from_variances(sample.sigma2.view())?
                } else {
                    residual_weights.clone()
                };
                statistic(variant.statistic, &inputs, &weights).map(|xi| normal_rule(xi, normalize(xi, r)))
            }
            McVariant::NoDf => hc_xi().map(|xi| normal_rule(xi, normalize_kn(xi, k))),
            McVariant::Bootstrap => hc_xi().and_then(|xi| {
                let t = normalize(xi, r);
                let boot = wild_bootstrap(
                    &fit,
                    zt.view(),
                    cfg.bootstrap_replications,
                    &cfg.multiplier,
                    boot_seed,
                    t,
                    &[],
                )?;
                Ok(Draw {
                    xi,
                    rejects: cfg.levels.iter().map(|&alpha| boot.reject_at(alpha)).collect(),
                })
            }),
            McVariant::DataDriven(_) => unreachable!("data-driven variants run in their own cell"),
        };
        match draw {
            Err(e) if !e.is_numerical() => return Err(e),
            d => out.push(d),
        }
    }
    Ok(out)
}

fn data_driven_draws(cfg: &McConfig, plan: &CellPlan<'_>, sample: &Sample) -> Result<Vec<Result<Draw>>> {
    let grid = TuningGrid::new(cfg.terms.clone(), cfg.penalty)?;
    let designs: Vec<DesignPair> = cfg
        .terms
        .iter()
        .map(|&a| simulation_design(&sample.x1, &sample.x2, a, plan.family))
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(plan.variants.len());
    for v in &plan.variants {
        let McVariant::DataDriven(criterion) = v else {
            unreachable!("only data-driven variants run in this cell")
        };
        let options = DataDrivenOptions {
            criterion: *criterion,
            screen: false,
        };
        let res = data_driven_from_designs(sample.y.view(), &grid, options, &cfg.levels, &designs).map(|d| Draw {
            xi: d.xi,
            rejects: d.decisions.iter().map(|x| x.2).collect(),
        });
        match res {
            Err(e) if !e.is_numerical() => return Err(e),
            d => out.push(d),
        }
    }
    Ok(out)
}

fn run_cell(cfg: &McConfig, plan: &CellPlan<'_>, z_crit: &[f64]) -> Result<Vec<McCell>> {
    let path = cell_path(plan);
    let reps: Vec<Result<Vec<Result<Draw>>>> = (0..cfg.replications)
        .into_par_iter()
        .map(|b| {
            let mut rng = substream(cfg.seed, &[path[0], path[1], path[2], path[3], b as u64]);
            let sample = gen_sample(plan.n, plan.hypothesis, &mut rng);
            match plan.a {
                Some(a) => fixed_design_draws(cfg, plan, &sample, a, z_crit, bootstrap_seed(cfg.seed, &path, b)),
                None => data_driven_draws(cfg, plan, &sample),
            }
        })
        .collect();
    let mut per_variant: Vec<Vec<Result<Draw>>> = plan.variants.iter().map(|_| Vec::new()).collect();
    for rep in reps {
        for (j, d) in rep?.into_iter().enumerate() {
            per_variant[j].push(d);
        }
    }
    let a_n = plan.a.unwrap_or_else(|| *cfg.terms.last().expect("validated"));
    Ok(plan
        .variants
        .iter()
        .zip(per_variant)
        .map(|(v, draws)| summarize(cfg, plan, a_n, v, &draws))
        .collect())
}

fn summarize(cfg: &McConfig, plan: &CellPlan<'_>, a_n: usize, v: &McVariant, draws: &[Result<Draw>]) -> McCell {
    let ok: Vec<&Draw> = draws.iter().filter_map(|d| d.as_ref().ok()).collect();
    let failures = draws.len() - ok.len();
    let aborted = ok.is_empty() || failures as f64 > MAX_FAILURE_SHARE * cfg.replications as f64;
    let m = ok.len();
    let rates = cfg
        .levels
        .iter()
        .enumerate()
        .map(|(j, &alpha)| {
            let rate = if aborted {
                f64::NAN
            } else {
                ok.iter().filter(|d| d.rejects[j]).count() as f64 / m as f64
            };
            (alpha, rate)
        })
        .collect();
    let mean_xi = if m == 0 {
        f64::NAN
    } else {
        ok.iter().map(|d| d.xi).sum::<f64>() / m as f64
    };
    McCell {
        variant: v.name(),
        family: plan.family,
        n: plan.n,
        a_n,
        hypothesis: plan.hypothesis,
        rates,
        replications: m,
        failures,
        aborted,
        mean_xi,
        seed: cfg.seed,
    }
}

/// Runs every cell of `cfg` on the current rayon pool. Cells come out in
/// the order hypothesis, n, family, a (data-driven last), variant.
pub fn run_mc(cfg: &McConfig) -> Result<McReport> {
    cfg.validate()?;
    let z_crit: Vec<f64> = cfg
        .levels
        .iter()
        .map(|&a| normal_quantile(1.0 - a))
        .collect::<Result<_>>()?;
    let fixed: Vec<&McVariant> = cfg.variants.iter().filter(|v| !v.is_data_driven()).collect();
    let driven: Vec<&McVariant> = cfg.variants.iter().filter(|v| v.is_data_driven()).collect();
    let mut cells = Vec::new();
    for &hypothesis in &cfg.hypotheses {
        for &n in &cfg.sample_sizes {
            for &family in &cfg.families {
                if !fixed.is_empty() {
                    for &a in &cfg.terms {
                        let plan = CellPlan {
                            family,
                            n,
                            hypothesis,
                            a: Some(a),
                            variants: fixed.clone(),
                        };
                        cells.extend(run_cell(cfg, &plan, &z_crit)?);
                    }
                }
                if !driven.is_empty() {
                    let plan = CellPlan {
                        family,
                        n,
                        hypothesis,
                        a: None,
                        variants: driven.clone(),
                    };
                    cells.extend(run_cell(cfg, &plan, &z_crit)?);
                }
            }
        }
    }
    Ok(McReport { cells })
}

/// [`run_mc`] on a dedicated pool; `None` uses all available cores.
pub fn run_mc_with_threads(cfg: &McConfig, threads: Option<usize>) -> Result<McReport> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        if t == 0 {
            return Err(Error::InvalidInput("thread count must be positive".into()));
        }
        builder = builder.num_threads(t);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| run_mc(cfg))
}

/// Tidy CSV, one row per cell and level. Floats use the shortest
/// representation that round-trips.
pub fn write_csv<W: Write>(report: &McReport, out: W) -> Result<()> {
    let mut w = std::io::BufWriter::new(out);
    writeln!(w, "{CSV_HEADER}")?;
    for c in &report.cells {
        for &(alpha, rate) in &c.rates {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{}",
                c.variant,
                c.family.name(),
                c.n,
                c.a_n,
                c.hypothesis.name(),
                alpha,
                rate,
                c.mc_se(rate),
                c.replications,
                c.seed
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Gnuplot data: one indexed block per (variant, family, n, hypothesis,
/// alpha) with columns `a_n rate mc_se`.
pub fn write_plot_data<W: Write>(report: &McReport, out: W) -> Result<()> {
    let mut w = std::io::BufWriter::new(out);
    let mut keys: Vec<(String, BasisFamily, usize, Hypothesis, u64)> = Vec::new();
    for c in &report.cells {
        for &(alpha, _) in &c.rates {
            let key = (c.variant.clone(), c.family, c.n, c.hypothesis, alpha.to_bits());
            if !keys.contains(&key) {
                keys.push(key);
            }
        }
    }
    for (i, (variant, family, n, hyp, alpha_bits)) in keys.iter().enumerate() {
        let alpha = f64::from_bits(*alpha_bits);
        if i > 0 {
            writeln!(w, "\n")?;
        }
        writeln!(
            w,
            "# variant={variant} family={} n={n} hypothesis={} alpha={alpha}",
            family.name(),
            hyp.name()
        )?;
        writeln!(w, "# a_n reject_rate mc_se")?;
        let mut rows: Vec<(usize, f64, f64)> = report
            .cells
            .iter()
            .filter(|c| &c.variant == variant && c.family == *family && c.n == *n && c.hypothesis == *hyp)
            .filter_map(|c| c.rate_at(alpha).map(|r| (c.a_n, r, c.mc_se(r))))
            .collect();
        rows.sort_by_key(|r| r.0);
        for (a, r, se) in rows {
            writeln!(w, "{a} {r} {se}")?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes `<stem>.csv` and `<stem>.dat` next to each other.
pub fn emit_report(report: &McReport, stem: &std::path::Path) -> Result<(std::path::PathBuf, std::path::PathBuf)> {
    let csv = stem.with_extension("csv");
    let dat = stem.with_extension("dat");
    write_csv(report, std::fs::File::create(&csv)?)?;
    write_plot_data(report, std::fs::File::create(&dat)?)?;
    Ok((csv, dat))
}
