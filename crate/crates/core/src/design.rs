//! Null design `W` and alternative-only design `Z`.
//!
//! `W` holds one shared intercept, the linear regressors, and the
//! non-constant series terms of each nonparametric variable. `Z` holds the
//! extra terms a general nonparametric model would add: higher-order
//! univariate terms of every expanded variable plus interactions, depending
//! on the recipe. Any candidate `Z` term already present in `W` is removed.
//!
//! Every column is a product of univariate terms of distinct variables, so
//! duplicates are detected by a canonical label rather than numerically.

use std::collections::{BTreeMap, HashSet};

use ndarray::{Array1, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::basis::{restricted_interaction_order, BasisFamily, BasisSpec, UnivariateTerm};
use crate::data::Dataset;
use crate::{Error, Result};

/// Default relative tolerance for [`screen_collinear`].
pub const SCREEN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesVar {
    pub name: String,
    #[serde(flatten)]
    pub basis: BasisSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Recipe {
    /// Full tensor product of the univariate bases of every expanded variable.
    FullTensor,
    /// Univariate terms plus pairwise interactions of reduced-order bases.
    #[default]
    RestrictedTensor,
    /// Univariate terms only.
    AdditiveOnly,
    /// Only the columns listed in [`AlternativeSpec::columns`].
    Custom,
}

impl std::str::FromStr for Recipe {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full_tensor" => Ok(Recipe::FullTensor),
            "restricted_tensor" => Ok(Recipe::RestrictedTensor),
            "additive_only" => Ok(Recipe::AdditiveOnly),
            "custom" => Ok(Recipe::Custom),
            other => Err(Error::InvalidInput(format!("unknown alternative recipe '{other}'"))),
        }
    }
}

/// How the alternative expands the model's variables.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AlternativeSpec {
    pub recipe: Recipe,
    /// Variables expanded under the alternative; defaults to every linear and
    /// series variable.
    pub vars: Option<Vec<String>>,
    /// Univariate basis size (with constant) for expanded variables. Defaults
    /// to the variable's own series size, else that of the first series var.
    pub terms: Option<usize>,
    pub terms_by_var: BTreeMap<String, usize>,
    pub family: Option<BasisFamily>,
    /// Extra product columns such as `"x1*x2^2*x3"`; the whole `Z` for
    /// [`Recipe::Custom`].
    pub columns: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSpec {
    pub linear: Vec<String>,
    pub series: Vec<SeriesVar>,
    pub alternative: AlternativeSpec,
}

impl ModelSpec {
    /// Partially linear model in `x1` (linear) and `x2` (series), tested
    /// against the restricted tensor alternative.
    pub fn partially_linear(linear: &str, series: &str, basis: BasisSpec) -> Self {
        ModelSpec {
            linear: vec![linear.to_string()],
            series: vec![SeriesVar {
                name: series.to_string(),
                basis,
            }],
            alternative: AlternativeSpec::default(),
        }
    }

    /// Same model with every series basis resized to `terms`.
    pub fn with_series_terms(&self, terms: usize) -> Self {
        let mut out = self.clone();
        for s in &mut out.series {
            s.basis.terms = terms;
        }
        out
    }

    fn model_vars(&self) -> Vec<&str> {
        self.linear
            .iter()
            .map(String::as_str)
            .chain(self.series.iter().map(|s| s.name.as_str()))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let vars = self.model_vars();
        if vars.is_empty() {
            return Err(Error::InvalidInput("model has no variables".into()));
        }
        for (i, v) in vars.iter().enumerate() {
            if vars[..i].contains(v) {
                return Err(Error::InvalidInput(format!("variable '{v}' listed more than once")));
            }
        }
        for s in &self.series {
            s.basis.validate()?;
        }
        if self.alternative.recipe == Recipe::Custom && self.alternative.columns.is_empty() {
            return Err(Error::InvalidInput(
                "custom alternative needs at least one column".into(),
            ));
        }
        Ok(())
    }
}

/// A product of univariate terms in distinct variables; the empty product is
/// the intercept.
#[derive(Debug, Clone, PartialEq)]
struct Term {
    factors: Vec<(usize, UnivariateTerm)>,
}

impl Term {
    fn single(var: usize, t: UnivariateTerm) -> Self {
        Term {
            factors: vec![(var, t)],
        }
    }

    fn product(mut factors: Vec<(usize, UnivariateTerm)>) -> Self {
        factors.retain(|(_, t)| !t.is_constant());
        factors.sort_by_key(|(v, _)| *v);
        Term { factors }
    }

    fn label(&self, names: &[String]) -> String {
        if self.factors.is_empty() {
            return "1".to_string();
        }
        self.factors
            .iter()
            .map(|(v, t)| t.label(&names[*v]))
            .collect::<Vec<_>>()
            .join("*")
    }

    fn eval(&self, cols: &[&[f64]], i: usize) -> f64 {
        self.factors.iter().fold(1.0, |acc, (v, t)| acc * t.eval(cols[*v][i]))
    }
}

/// Null and alternative-only regressors with their column labels.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignPair {
    pub w: Array2<f64>,
    pub z: Array2<f64>,
    pub w_labels: Vec<String>,
    pub z_labels: Vec<String>,
}

impl DesignPair {
    pub fn nobs(&self) -> usize {
        self.w.nrows()
    }

    /// Number of null-model terms.
    pub fn m(&self) -> usize {
        self.w.ncols()
    }

    /// Number of restrictions.
    pub fn r(&self) -> usize {
        self.z.ncols()
    }

    /// Total number of terms, `m + r`.
    pub fn k(&self) -> usize {
        self.m() + self.r()
    }

    pub fn counts(&self) -> (usize, usize, usize) {
        (self.m(), self.k(), self.r())
    }
}

struct ColumnSet {
    terms: Vec<Term>,
    labels: Vec<String>,
    seen: HashSet<String>,
}

impl ColumnSet {
    fn new() -> Self {
        ColumnSet {
            terms: Vec::new(),
            labels: Vec::new(),
            seen: HashSet::new(),
        }
    }

    fn push(&mut self, term: Term, names: &[String], exclude: &HashSet<String>) {
        let label = term.label(names);
        if exclude.contains(&label) || !self.seen.insert(label.clone()) {
            return;
        }
        self.terms.push(term);
        self.labels.push(label);
    }

    fn evaluate(&self, cols: &[&[f64]], n: usize) -> Array2<f64> {
        Array2::from_shape_fn((n, self.terms.len()), |(i, j)| self.terms[j].eval(cols, i))
    }
}

fn parse_product(expr: &str, names: &mut Vec<String>) -> Result<Vec<(usize, UnivariateTerm)>> {
    let mut factors = Vec::new();
    for raw in expr.split('*') {
        let f = raw.trim();
        if f.is_empty() {
            return Err(Error::InvalidInput(format!("malformed column '{expr}'")));
        }
        let (name, pow) = match f.split_once('^') {
            Some((n, p)) => {
                let k: u32 = p
                    .trim()
                    .parse()
                    .map_err(|_| Error::InvalidInput(format!("bad exponent in column '{expr}'")))?;
                (n.trim(), k)
            }
            None => (f, 1),
        };
        let idx = match names.iter().position(|n| n == name) {
            Some(i) => i,
            None => {
                names.push(name.to_string());
                names.len() - 1
            }
        };
        if factors.iter().any(|(v, _)| *v == idx) {
            return Err(Error::InvalidInput(format!(
                "variable '{name}' repeated in column '{expr}'; use an exponent"
            )));
        }
        factors.push((idx, UnivariateTerm::Power(pow)));
    }
    Ok(factors)
}

/// Builds `W` and `Z` for `spec` from the named columns of `data`.
pub fn build_partially_linear(data: &Dataset, spec: &ModelSpec) -> Result<DesignPair> {
    spec.validate()?;
    let alt = &spec.alternative;

    // Variable registry: model variables first, then anything only the
    // alternative mentions.
    let mut names: Vec<String> = spec.model_vars().iter().map(|s| s.to_string()).collect();
    let alt_vars: Vec<String> = alt.vars.clone().unwrap_or_else(|| names.clone());
    for v in &alt_vars {
        if !names.contains(v) {
            names.push(v.clone());
        }
    }
    let custom: Vec<Vec<(usize, UnivariateTerm)>> = alt
        .columns
        .iter()
        .map(|c| parse_product(c, &mut names))
        .collect::<Result<_>>()?;

    let cols: Vec<&[f64]> = names.iter().map(|n| data.column(n)).collect::<Result<_>>()?;
    let n = data.n_rows();
    let idx = |name: &str| names.iter().position(|n| n == name).expect("registered");

    // Null design.
    let none = HashSet::new();
    let mut w = ColumnSet::new();
    w.push(Term { factors: vec![] }, &names, &none);
    for v in &spec.linear {
        w.push(Term::single(idx(v), UnivariateTerm::Power(1)), &names, &none);
    }
    for s in &spec.series {
        let vi = idx(&s.name);
        for t in s.basis.terms_for(cols[vi])? {
            if !t.is_constant() {
                w.push(Term::single(vi, t), &names, &none);
            }
        }
    }

    // Univariate basis used for each expanded variable.
    let default_series = spec.series.first().map(|s| s.basis);
    let alt_basis = |v: &str| -> Result<BasisSpec> {
        let own = spec.series.iter().find(|s| s.name == v).map(|s| s.basis);
        let base = own
            .or(default_series)
            .unwrap_or_else(|| BasisSpec::power(alt.terms.unwrap_or(0)));
        let terms = alt
            .terms_by_var
            .get(v)
            .copied()
            .or(alt.terms)
            .or(own.map(|b| b.terms))
            .unwrap_or(base.terms);
        let family = alt.family.unwrap_or(base.family);
        let out = BasisSpec { family, terms, ..base };
        out.validate()
            .map_err(|e| Error::InvalidInput(format!("alternative basis for '{v}': {e}")))?;
        Ok(out)
    };

    let w_keys: HashSet<String> = w.labels.iter().cloned().collect();
    let mut z = ColumnSet::new();
    if alt.recipe != Recipe::Custom {
        let mut univariate: Vec<(usize, BasisSpec, Vec<UnivariateTerm>)> = Vec::new();
        for v in &alt_vars {
            let vi = idx(v);
            let b = alt_basis(v)?;
            let terms = b.terms_for(cols[vi])?;
            univariate.push((vi, b, terms));
        }
        for (vi, _, terms) in &univariate {
            for t in terms.iter().filter(|t| !t.is_constant()) {
                z.push(Term::single(*vi, *t), &names, &w_keys);
            }
        }
        match alt.recipe {
            Recipe::AdditiveOnly | Recipe::Custom => {}
            Recipe::RestrictedTensor => {
                let reduced: Vec<(usize, Vec<UnivariateTerm>)> = univariate
                    .iter()
                    .map(|(vi, b, _)| {
                        let spec = b.with_terms(restricted_interaction_order(b.terms));
                        Ok((*vi, spec.terms_for(cols[*vi])?))
                    })
                    .collect::<Result<_>>()?;
                for i in 0..reduced.len() {
                    for j in i + 1..reduced.len() {
                        let (vi, ti) = &reduced[i];
                        let (vj, tj) = &reduced[j];
                        for a in ti.iter().filter(|t| !t.is_constant()) {
                            for b in tj.iter().filter(|t| !t.is_constant()) {
                                z.push(Term::product(vec![(*vi, *a), (*vj, *b)]), &names, &w_keys);
                            }
                        }
                    }
                }
            }
            Recipe::FullTensor => {
                let total: usize = univariate.iter().map(|(_, _, t)| t.len()).product();
                if total > 100_000 {
                    return Err(Error::InvalidInput(format!(
                        "full tensor alternative would have {total} columns"
                    )));
                }
                let mut index = vec![0usize; univariate.len()];
                for _ in 0..total {
                    let factors = univariate
                        .iter()
                        .zip(&index)
                        .map(|((vi, _, terms), &k)| (*vi, terms[k]))
                        .collect();
                    let term = Term::product(factors);
                    if !term.factors.is_empty() {
                        z.push(term, &names, &w_keys);
                    }
                    // Odometer increment, last variable fastest.
                    for d in (0..index.len()).rev() {
                        index[d] += 1;
                        if index[d] < univariate[d].2.len() {
                            break;
                        }
                        index[d] = 0;
                    }
                }
            }
        }
    }
    for factors in custom {
        z.push(Term::product(factors), &names, &w_keys);
    }

    let design = DesignPair {
        w: w.evaluate(&cols, n),
        z: z.evaluate(&cols, n),
        w_labels: w.labels,
        z_labels: z.labels,
    };
    if design.r() == 0 {
        return Err(Error::InvalidInput(
            "alternative adds no columns beyond the null model".into(),
        ));
    }
    if n <= design.k() {
        return Err(Error::InsufficientData {
            required: design.k(),
            available: n,
        });
    }
    Ok(design)
}

/// Design for the partially linear simulation model with `a` univariate
/// terms: `W = [1, x1, Q(x2) without constant]`, and `Z` = terms of degree
/// 2..a-1 in `x1` (or the matching spline terms) plus all interactions of
/// the constant-free `ā`-term bases of `x1` and `x2`, where
/// `ā = restricted_interaction_order(a)`. Then `k = 2a - 1 + (ā - 1)^2`.
pub fn simulation_design(x1: &[f64], x2: &[f64], a: usize, family: BasisFamily) -> Result<DesignPair> {
    if a < 4 {
        return Err(Error::InvalidInput(format!(
            "simulation design needs at least 4 univariate terms, got {a}"
        )));
    }
    let data = Dataset::from_columns(vec![("x1", x1.to_vec()), ("x2", x2.to_vec())])?;
    let spec = ModelSpec::partially_linear("x1", "x2", BasisSpec::new(family, a));
    build_partially_linear(&data, &spec)
}

/// Outcome of [`screen_collinear`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScreenReport {
    pub dropped: Vec<String>,
}

/// Residual of `x` after projection on the orthonormal columns in `basis`,
/// with one reorthogonalization pass.
fn orthogonal_residual(basis: &[Array1<f64>], x: Array1<f64>) -> Array1<f64> {
    let mut r = x;
    for _ in 0..2 {
        for q in basis {
            let c = q.dot(&r);
            r.scaled_add(-c, q);
        }
    }
    r
}

/// Greedily drops `Z` columns whose residual after projection on `W` and the
/// previously kept `Z` columns has squared norm below `tol` times the
/// column's own squared norm. `W` is never altered; a dependent `W` column
/// is an error.
pub fn screen_collinear(d: &DesignPair, tol: f64) -> Result<(DesignPair, ScreenReport)> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!(
            "screening tolerance {tol} must be positive"
        )));
    }
    let mut basis: Vec<Array1<f64>> = Vec::with_capacity(d.k());
    for (j, col) in d.w.columns().into_iter().enumerate() {
        let norm2 = col.dot(&col);
        let r = orthogonal_residual(&basis, col.to_owned());
        let rn2 = r.dot(&r);
        if !(rn2 >= tol * norm2) || norm2 == 0.0 {
            return Err(Error::RankDeficient {
                columns: vec![d.w_labels[j].clone()],
            });
        }
        basis.push(r / rn2.sqrt());
    }
    let mut keep = Vec::new();
    let mut report = ScreenReport::default();
    for (j, col) in d.z.columns().into_iter().enumerate() {
        let norm2 = col.dot(&col);
        let r = orthogonal_residual(&basis, col.to_owned());
        let rn2 = r.dot(&r);
        if norm2 == 0.0 || !(rn2 >= tol * norm2) {
            report.dropped.push(d.z_labels[j].clone());
        } else {
            basis.push(r / rn2.sqrt());
            keep.push(j);
        }
    }
    let z = select_columns(d.z.view(), &keep);
    let z_labels = keep.iter().map(|&j| d.z_labels[j].clone()).collect();
    Ok((
        DesignPair {
            w: d.w.clone(),
            z,
            w_labels: d.w_labels.clone(),
            z_labels,
        },
        report,
    ))
}

pub(crate) fn select_columns(a: ArrayView2<f64>, keep: &[usize]) -> Array2<f64> {
    let mut out = Array2::zeros((a.nrows(), keep.len()));
    for (c, &j) in keep.iter().enumerate() {
        out.column_mut(c).assign(&a.column(j));
    }
    out
}
