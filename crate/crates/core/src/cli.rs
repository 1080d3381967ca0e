//! Command-line front end.
//!
//! `test` runs the specification test on a CSV file, `tune` runs the
//! data-driven version, and `simulate` runs Monte Carlo experiments. Each
//! command reads an optional TOML config; flags override the config.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use ndarray::ArrayView1;
use serde::{Deserialize, Serialize};

use crate::basis::{BasisFamily, BasisSpec};
use crate::bootstrap::{wild_bootstrap, BootstrapResult, MultiplierDist};
use crate::data::{load_csv, Dataset};
use crate::design::{build_partially_linear, screen_collinear, DesignPair, ModelSpec, SeriesVar, SCREEN_TOL};
use crate::lmtest::{normalize, LmTest, TestResult, Variant};
use crate::mc::{emit_report, run_mc_with_threads, Hypothesis, McConfig, McReport, McVariant};
use crate::regress::ols_fit;
use crate::tuning::{
    data_driven_test, gcv, mallows_cp, Criterion, DataDrivenOptions, DataDrivenResult, TuningGrid, DEFAULT_PENALTY,
};
use crate::{Error, Result};

pub const EXIT_INPUT: u8 = 2;
pub const EXIT_NUMERICAL: u8 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "serieslm",
    version,
    about = "Heteroskedasticity-robust series LM specification tests"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Test a partially linear or additive model on a CSV data set.
    Test(TestArgs),
    /// Data-driven test: choose the null model by Cp/GCV and the number of
    /// restrictions by a penalized criterion.
    Tune(TestArgs),
    /// Monte Carlo size and power experiments.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args, Clone, Default)]
pub struct TestArgs {
    /// Input CSV with a header row.
    #[arg(long)]
    pub data: PathBuf,
    /// TOML run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Response column.
    #[arg(long)]
    pub response: Option<String>,
    /// Columns entering linearly (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub linear: Option<Vec<String>>,
    /// Columns entering through a series expansion (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub series: Option<Vec<String>>,
    /// Basis family for the series columns: power or spline.
    #[arg(long)]
    pub family: Option<BasisFamily>,
    /// Univariate basis size, constant included.
    #[arg(long)]
    pub terms: Option<usize>,
    /// Statistic: hc, hc_long, fgls_long or fgls_short.
    #[arg(long)]
    pub variant: Option<Variant>,
    /// Significance levels (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub alpha: Option<Vec<f64>>,
    /// Number of wild bootstrap draws; 0 disables the bootstrap.
    #[arg(long)]
    pub bootstrap: Option<usize>,
    /// Bootstrap multiplier distribution: rademacher or mammen.
    #[arg(long)]
    pub dist: Option<MultiplierDist>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Smallest grid value of the univariate basis size (tuning).
    #[arg(long)]
    pub a_min: Option<usize>,
    /// Largest grid value of the univariate basis size (tuning).
    #[arg(long)]
    pub a_max: Option<usize>,
    /// Penalty constant of the restriction-count criterion.
    #[arg(long)]
    pub c: Option<f64>,
    /// Null-model selection criterion: cp or gcv.
    #[arg(long)]
    pub criterion: Option<Criterion>,
    /// Map the model's columns to [-1, 1] before building bases.
    #[arg(long)]
    pub rescale: bool,
    /// Result file (TOML).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads for the bootstrap.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Args, Clone, Default)]
pub struct SimulateArgs {
    /// TOML experiment configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Sample sizes (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    /// Monte Carlo replications per cell.
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub a_min: Option<usize>,
    #[arg(long)]
    pub a_max: Option<usize>,
    /// Basis families (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub family: Option<Vec<BasisFamily>>,
    /// Variants such as hc, hc_nodf, fgls_long, infeasible_hc, bootstrap,
    /// dd_cp, dd_gcv (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub variants: Option<Vec<McVariant>>,
    /// Hypotheses: null, alternative (comma separated).
    #[arg(long, value_delimiter = ',')]
    pub hypotheses: Option<Vec<Hypothesis>>,
    /// Bootstrap draws for the bootstrap variant.
    #[arg(long)]
    pub bootstrap: Option<usize>,
    #[arg(long)]
    pub dist: Option<MultiplierDist>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_delimiter = ',')]
    pub alpha: Option<Vec<f64>>,
    /// Penalty constant for the data-driven variants.
    #[arg(long)]
    pub c: Option<f64>,
    /// Output stem; writes `<stem>.csv` and `<stem>.dat`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BootstrapConfig {
    pub replications: usize,
    pub dist: MultiplierDist,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            replications: 0,
            dist: MultiplierDist::Rademacher,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuningConfig {
    pub enabled: bool,
    pub a_min: Option<usize>,
    pub a_max: Option<usize>,
    pub c: f64,
    pub criterion: Criterion,
}

impl Default for TuningConfig {
    fn default() -> Self {
        TuningConfig {
            enabled: false,
            a_min: None,
            a_max: None,
            c: DEFAULT_PENALTY,
            criterion: Criterion::Cp,
        }
    }
}

/// Configuration of `test` and `tune`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub response: String,
    pub variant: String,
    pub levels: Vec<f64>,
    pub seed: u64,
    /// Columns mapped to [-1, 1] before use.
    pub rescale: Vec<String>,
    pub model: ModelSpec,
    pub bootstrap: BootstrapConfig,
    pub tuning: TuningConfig,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            response: "y".into(),
            variant: "hc".into(),
            levels: vec![0.05],
            seed: 1,
            rescale: Vec::new(),
            model: ModelSpec::default(),
            bootstrap: BootstrapConfig::default(),
            tuning: TuningConfig::default(),
            out: None,
        }
    }
}

fn read_toml<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        read_toml(path)
    }

    /// Config file (if any) with flag overrides applied.
    pub fn resolve(args: &TestArgs) -> Result<Self> {
        let mut cfg = match &args.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(r) = &args.response {
            cfg.response = r.clone();
        }
        if let Some(l) = &args.linear {
            cfg.model.linear = l.clone();
        }
        let family = args.family;
        if let Some(s) = &args.series {
            let basis = BasisSpec::new(family.unwrap_or(BasisFamily::Power), args.terms.unwrap_or(4));
            cfg.model.series = s
                .iter()
                .map(|name| SeriesVar {
                    name: name.clone(),
                    basis,
                })
                .collect();
        } else {
            for s in &mut cfg.model.series {
                if let Some(f) = family {
                    s.basis.family = f;
                }
                if let Some(t) = args.terms {
                    s.basis.terms = t;
                }
            }
        }
        if let Some(v) = args.variant {
            cfg.variant = v.to_string();
        }
        if let Some(a) = &args.alpha {
            cfg.levels = a.clone();
        }
        if let Some(b) = args.bootstrap {
            cfg.bootstrap.replications = b;
        }
        if let Some(d) = args.dist {
            cfg.bootstrap.dist = d;
        }
        if let Some(s) = args.seed {
            cfg.seed = s;
        }
        if args.a_min.is_some() || args.a_max.is_some() {
            cfg.tuning.enabled = true;
        }
        cfg.tuning.a_min = args.a_min.or(cfg.tuning.a_min);
        cfg.tuning.a_max = args.a_max.or(cfg.tuning.a_max);
        if let Some(c) = args.c {
            cfg.tuning.c = c;
        }
        if let Some(c) = args.criterion {
            cfg.tuning.criterion = c;
        }
        if args.rescale {
            cfg.rescale = cfg
                .model
                .linear
                .iter()
                .cloned()
                .chain(cfg.model.series.iter().map(|s| s.name.clone()))
                .collect();
        }
        if let Some(o) = &args.out {
            cfg.out = Some(o.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        crate::lmtest::validate_levels(&self.levels)?;
        if self.levels.is_empty() {
            return Err(Error::InvalidInput("no significance levels given".into()));
        }
        let v = self.variant()?;
        if v.infeasible {
            return Err(Error::InvalidInput(format!(
                "variant {v} needs the true error variances and is only available in simulations"
            )));
        }
        if self.bootstrap.replications > 0 && v != Variant::HC {
            return Err(Error::InvalidInput(format!(
                "the wild bootstrap is defined for hc only, not {v}"
            )));
        }
        if self.tuning.enabled {
            self.grid()?;
        }
        Ok(())
    }

    pub fn variant(&self) -> Result<Variant> {
        self.variant.parse()
    }

    /// Tuning grid from the configured bounds; defaults to `4..=terms` of the
    /// first series variable.
    pub fn grid(&self) -> Result<TuningGrid> {
        let current = self.model.series.first().map(|s| s.basis.terms);
        let lo = self.tuning.a_min.or(current).unwrap_or(4);
        let hi = self.tuning.a_max.or(current).unwrap_or(lo);
        if self.model.series.is_empty() {
            return Err(Error::InvalidInput("tuning needs at least one series variable".into()));
        }
        if hi < lo {
            return Err(Error::InvalidInput(format!("a_max = {hi} below a_min = {lo}")));
        }
        TuningGrid::new((lo..=hi).collect(), self.tuning.c)
    }
}

impl SimulateArgs {
    pub fn resolve(&self) -> Result<McConfig> {
        let mut cfg = match &self.config {
            Some(p) => read_toml(p)?,
            None => McConfig::default(),
        };
        if let Some(n) = &self.n {
            cfg.sample_sizes = n.clone();
        }
        if let Some(m) = self.reps {
            cfg.replications = m;
        }
        if self.a_min.is_some() || self.a_max.is_some() {
            let lo = self.a_min.unwrap_or_else(|| cfg.terms.first().copied().unwrap_or(4));
            let hi = self.a_max.unwrap_or_else(|| cfg.terms.last().copied().unwrap_or(lo));
            cfg.terms = (lo..=hi).collect();
        }
        if let Some(f) = &self.family {
            cfg.families = f.clone();
        }
        if let Some(v) = &self.variants {
            cfg.variants = v.clone();
        }
        if let Some(h) = &self.hypotheses {
            cfg.hypotheses = h.clone();
        }
        if let Some(b) = self.bootstrap {
            cfg.bootstrap_replications = b;
        }
        if let Some(d) = self.dist {
            cfg.multiplier = d;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(a) = &self.alpha {
            cfg.levels = a.clone();
        }
        if let Some(c) = self.c {
            cfg.penalty = c;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Machine-readable outcome of `test` and `tune`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub data: String,
    pub n: usize,
    pub response: String,
    pub m: usize,
    pub k: usize,
    pub r: usize,
    pub dropped: Vec<String>,
    pub result: Option<TestResult>,
    pub bootstrap: Option<BootstrapResult>,
    pub tuning: Option<DataDrivenResult>,
}

/// Six significant digits for screen output.
pub fn sig6(x: f64) -> String {
    if !x.is_finite() {
        return format!("{x}");
    }
    if x == 0.0 {
        return "0".into();
    }
    let mag = x.abs().log10().floor() as i32;
    if (-4..6).contains(&mag) {
        format!("{:.*}", (5 - mag).max(0) as usize, x)
    } else {
        format!("{x:.5e}")
    }
}

fn load_data(path: &Path, rescale: &[String]) -> Result<Dataset> {
    let mut data = load_csv(path)?;
    if !rescale.is_empty() {
        data.rescale_unit(rescale)?;
    }
    Ok(data)
}

fn screened_design(data: &Dataset, spec: &ModelSpec) -> Result<(DesignPair, Vec<String>)> {
    let design = build_partially_linear(data, spec)?;
    let (design, report) = screen_collinear(&design, SCREEN_TOL)?;
    if design.r() == 0 {
        return Err(Error::InvalidInput("no restrictions left after screening".into()));
    }
    Ok((design, report.dropped))
}

fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match threads {
        None => f(),
        Some(0) => Err(Error::InvalidInput("thread count must be positive".into())),
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?
            .install(f),
    }
}

/// Runs the plain or data-driven test and returns the report.
pub fn run_test_command(cfg: &RunConfig, data_path: &Path, threads: Option<usize>) -> Result<TestReport> {
    let data = load_data(data_path, &cfg.rescale)?;
    let y = ArrayView1::from(data.column(&cfg.response)?);
    let mut report = TestReport {
        data: data_path.display().to_string(),
        n: data.n_rows(),
        response: cfg.response.clone(),
        m: 0,
        k: 0,
        r: 0,
        dropped: Vec::new(),
        result: None,
        bootstrap: None,
        tuning: None,
    };

    if cfg.tuning.enabled {
        let grid = cfg.grid()?;
        let options = DataDrivenOptions {
            criterion: cfg.tuning.criterion,
            screen: true,
        };
        let dd = data_driven_test(y, &grid, options, &cfg.levels, |a| {
            Ok(screened_design(&data, &cfg.model.with_series_terms(a))?.0)
        })?;
        report.m = dd.m;
        report.r = dd.r_hat;
        report.k = dd.m + dd.r_hat;
        report.tuning = Some(dd);
        return Ok(report);
    }

    let (design, dropped) = screened_design(&data, &cfg.model)?;
    let variant = cfg.variant()?;
    let result = LmTest::new(variant, &cfg.levels).run(y, design.w.view(), design.z.view())?;
    (report.m, report.k, report.r) = design.counts();
    report.dropped = dropped;
    if cfg.bootstrap.replications > 0 {
        let fit = ols_fit(design.w.view(), y)?;
        let zt = fit.context().residualize_block(design.z.view())?;
        let t = normalize(result.xi, design.r());
        let boot = with_pool(threads, || {
            wild_bootstrap(
                &fit,
                zt.view(),
                cfg.bootstrap.replications,
                &cfg.bootstrap.dist,
                cfg.seed,
                t,
                &cfg.levels,
            )
        })?;
        report.bootstrap = Some(boot);
    }
    report.result = Some(result);
    Ok(report)
}

fn print_report<W: Write>(out: &mut W, report: &TestReport, cfg: &RunConfig) -> Result<()> {
    writeln!(out, "data: {} (n = {})", report.data, report.n)?;
    writeln!(out, "m = {}, k = {}, r = {}", report.m, report.k, report.r)?;
    if !report.dropped.is_empty() {
        writeln!(out, "dropped collinear columns: {}", report.dropped.join(", "))?;
    }
    if let Some(res) = &report.result {
        writeln!(out, "variant: {}", res.variant)?;
        writeln!(out, "xi = {}", sig6(res.xi))?;
        writeln!(out, "t = {}", sig6(res.t))?;
        writeln!(out, "p (normal) = {}", sig6(res.p_normal))?;
        writeln!(out, "p (chi-square) = {}", sig6(res.p_chisq))?;
        if res.floor_applied {
            writeln!(out, "note: small squared residuals were floored")?;
        }
        for d in &res.decisions {
            writeln!(
                out,
                "alpha = {}: normal rule {}, chi-square rule {}",
                d.alpha,
                verdict(d.reject_normal),
                verdict(d.reject_chisq)
            )?;
        }
    }
    if let Some(b) = &report.bootstrap {
        writeln!(
            out,
            "bootstrap: B = {}, {} multipliers, seed {}, skipped {}",
            b.replications,
            cfg.bootstrap.dist.name(),
            b.seed,
            b.skipped
        )?;
        writeln!(out, "p (bootstrap) = {}", sig6(b.p_value))?;
        for &(alpha, cv) in &b.critical_values {
            writeln!(
                out,
                "alpha = {alpha}: bootstrap critical value {}, {}",
                sig6(cv),
                verdict(b.reject_at(alpha))
            )?;
        }
    }
    if let Some(dd) = &report.tuning {
        writeln!(out, "criterion: {}", dd.criterion.name())?;
        let scores: Vec<String> = dd.model_scores.iter().map(|s| sig6(*s)).collect();
        writeln!(out, "model scores: {}", scores.join(" "))?;
        writeln!(out, "selected a = {} (m = {})", dd.selected_terms, dd.m)?;
        for (r, xi) in &dd.xi_by_r {
            writeln!(out, "  r = {r}: xi = {}", sig6(*xi))?;
        }
        writeln!(out, "selected r = {} (r_min = {})", dd.r_hat, dd.r_min)?;
        writeln!(out, "xi = {}", sig6(dd.xi))?;
        writeln!(out, "p (chi-square, r_min) = {}", sig6(dd.p_chisq))?;
        for &(alpha, cv, reject) in &dd.decisions {
            writeln!(out, "alpha = {alpha}: critical value {}, {}", sig6(cv), verdict(reject))?;
        }
    }
    Ok(())
}

fn verdict(reject: bool) -> &'static str {
    if reject {
        "reject"
    } else {
        "do not reject"
    }
}

pub fn write_report(report: &TestReport, path: &Path) -> Result<()> {
    let text = toml::to_string(report).map_err(|e| Error::Config(format!("cannot serialize result: {e}")))?;
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_report(path: &Path) -> Result<TestReport> {
    read_toml(path)
}

fn print_selection<W: Write>(out: &mut W, cfg: &RunConfig, data_path: &Path) -> Result<()> {
    // Both criteria, so the choice can be audited against the other one.
    let data = load_data(data_path, &cfg.rescale)?;
    let y = ArrayView1::from(data.column(&cfg.response)?);
    let grid = cfg.grid()?;
    let designs: Vec<DesignPair> = grid
        .candidates
        .iter()
        .map(|&a| Ok(screened_design(&data, &cfg.model.with_series_terms(a))?.0))
        .collect::<Result<_>>()?;
    let ws: Vec<_> = designs.iter().map(|d| d.w.view()).collect();
    let cp = mallows_cp(y, &ws)?;
    let g = gcv(y, &ws)?;
    writeln!(out, "a  m  cp  gcv")?;
    for (i, a) in grid.candidates.iter().enumerate() {
        writeln!(
            out,
            "{a}  {}  {}  {}",
            designs[i].m(),
            sig6(cp.scores[i]),
            sig6(g.scores[i])
        )?;
    }
    writeln!(
        out,
        "cp selects a = {}, gcv selects a = {}",
        grid.candidates[cp.index], grid.candidates[g.index]
    )?;
    Ok(())
}

fn print_simulation<W: Write>(out: &mut W, report: &McReport) -> Result<()> {
    writeln!(out, "variant family n a_n hypothesis alpha rate se M")?;
    for c in &report.cells {
        for &(alpha, rate) in &c.rates {
            writeln!(
                out,
                "{} {} {} {} {} {} {} {} {}{}",
                c.variant,
                c.family.name(),
                c.n,
                c.a_n,
                c.hypothesis.name(),
                alpha,
                sig6(rate),
                sig6(c.mc_se(rate)),
                c.replications,
                if c.aborted { " (aborted)" } else { "" }
            )?;
        }
    }
    Ok(())
}

/// Executes a parsed command, writing human-readable output to `out`.
pub fn execute<W: Write>(cli: &Cli, out: &mut W) -> Result<()> {
    match &cli.command {
        Command::Test(args) => {
            let cfg = RunConfig::resolve(args)?;
            let report = run_test_command(&cfg, &args.data, args.threads)?;
            print_report(out, &report, &cfg)?;
            if let Some(p) = &cfg.out {
                write_report(&report, p)?;
            }
        }
        Command::Tune(args) => {
            let mut cfg = RunConfig::resolve(args)?;
            cfg.tuning.enabled = true;
            cfg.validate()?;
            print_selection(out, &cfg, &args.data)?;
            let report = run_test_command(&cfg, &args.data, args.threads)?;
            print_report(out, &report, &cfg)?;
            if let Some(p) = &cfg.out {
                write_report(&report, p)?;
            }
        }
        Command::Simulate(args) => {
            let cfg = args.resolve()?;
            let report = run_mc_with_threads(&cfg, args.threads)?;
            print_simulation(out, &report)?;
            if let Some(stem) = &args.out {
                let (csv, dat) = emit_report(&report, stem)?;
                writeln!(out, "wrote {} and {}", csv.display(), dat.display())?;
            }
        }
    }
    Ok(())
}

pub fn exit_code(err: &Error) -> u8 {
    if err.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_INPUT
    }
}

/// Entry point used by the binary.
pub fn main_from_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_INPUT)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match execute(&cli, &mut lock) {
        Ok(()) => ExitCode::SUCCESS,
        // Output piped into a reader that stopped early.
        Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_significant_digits() {
        assert_eq!(sig6(0.526), "0.526000");
        assert_eq!(sig6(4.0651234), "4.06512");
        assert_eq!(sig6(-123.456789), "-123.457");
        assert_eq!(sig6(1.5e-7), "1.50000e-7");
        assert_eq!(sig6(0.0), "0");
    }

    #[test]
    fn default_config_round_trips() {
        let cfg = RunConfig::default();
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(toml::from_str::<RunConfig>(&text).unwrap(), cfg);
    }

    #[test]
    fn bootstrap_only_for_hc() {
        let cfg = RunConfig {
            variant: "fgls_long".into(),
            bootstrap: BootstrapConfig {
                replications: 99,
                dist: MultiplierDist::Mammen,
            },
            model: ModelSpec::partially_linear("x1", "x2", BasisSpec::power(4)),
            ..RunConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Singular("x".into())), EXIT_NUMERICAL);
        assert_eq!(exit_code(&Error::InvalidInput("x".into())), EXIT_INPUT);
    }
}
