//! Univariate series bases and their tensor interactions.
//!
//! A power basis with `a` terms is `1, v, ..., v^(a-1)`. A spline basis of
//! order `s` with `a` terms is `1, v, ..., v^s` followed by the truncated
//! powers `1{v > t_k} (v - t_k)^s` for `a - s - 1` knots. With no knots the
//! two coincide. Column 0 is always the constant.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisFamily {
    Power,
    Spline,
}

impl BasisFamily {
    pub fn name(self) -> &'static str {
        match self {
            BasisFamily::Power => "power",
            BasisFamily::Spline => "spline",
        }
    }
}

impl std::fmt::Display for BasisFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for BasisFamily {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "power" => Ok(BasisFamily::Power),
            "spline" | "splines" => Ok(BasisFamily::Spline),
            other => Err(Error::InvalidInput(format!("unknown basis family '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KnotRule {
    /// Knots at the sample quantiles `k/(q+1)`, `k = 1..q`.
    #[default]
    EmpiricalQuantile,
}

/// Univariate basis description. `terms` counts the constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BasisSpec {
    pub family: BasisFamily,
    pub terms: usize,
    #[serde(default = "default_spline_order")]
    pub spline_order: usize,
    #[serde(default)]
    pub knot_rule: KnotRule,
}

fn default_spline_order() -> usize {
    3
}

impl BasisSpec {
    pub fn power(terms: usize) -> Self {
        BasisSpec {
            family: BasisFamily::Power,
            terms,
            spline_order: 3,
            knot_rule: KnotRule::EmpiricalQuantile,
        }
    }

    pub fn cubic_spline(terms: usize) -> Self {
        BasisSpec {
            family: BasisFamily::Spline,
            ..BasisSpec::power(terms)
        }
    }

    pub fn new(family: BasisFamily, terms: usize) -> Self {
        BasisSpec {
            family,
            ..BasisSpec::power(terms)
        }
    }

    pub fn with_terms(self, terms: usize) -> Self {
        BasisSpec { terms, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.terms == 0 {
            return Err(Error::InvalidInput("basis needs at least one term".into()));
        }
        if self.family == BasisFamily::Spline {
            if self.spline_order == 0 {
                return Err(Error::InvalidInput("spline order must be positive".into()));
            }
            if self.terms < self.spline_order + 1 {
                return Err(Error::InvalidInput(format!(
                    "spline of order {} needs at least {} terms, got {}",
                    self.spline_order,
                    self.spline_order + 1,
                    self.terms
                )));
            }
        }
        Ok(())
    }

    pub fn knot_count(&self) -> usize {
        match self.family {
            BasisFamily::Power => 0,
            BasisFamily::Spline => self.terms.saturating_sub(self.spline_order + 1),
        }
    }

    /// Term list for this spec, placing knots from the sample `v`.
    pub fn terms_for(&self, v: &[f64]) -> Result<Vec<UnivariateTerm>> {
        self.validate()?;
        match self.family {
            BasisFamily::Power => Ok(power_terms(self.terms)),
            BasisFamily::Spline => {
                let knots = match self.knot_rule {
                    KnotRule::EmpiricalQuantile => quantile_knots(v, self.knot_count())?,
                };
                spline_terms(self.terms, self.spline_order, &knots)
            }
        }
    }

    pub fn evaluate(&self, v: &[f64]) -> Result<BasisMatrix> {
        check_finite(v)?;
        let terms = self.terms_for(v)?;
        Ok(BasisMatrix::from_terms(v, &terms, "v"))
    }
}

/// One univariate basis function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UnivariateTerm {
    Power(u32),
    Truncated { knot: f64, order: u32 },
}

impl UnivariateTerm {
    pub fn eval(&self, v: f64) -> f64 {
        match *self {
            UnivariateTerm::Power(k) => v.powi(k as i32),
            UnivariateTerm::Truncated { knot, order } => {
                if v > knot {
                    (v - knot).powi(order as i32)
                } else {
                    0.0
                }
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, UnivariateTerm::Power(0))
    }

    /// Degree as a polynomial piece; constants are 0.
    pub fn degree(&self) -> u32 {
        match *self {
            UnivariateTerm::Power(k) => k,
            UnivariateTerm::Truncated { order, .. } => order,
        }
    }

    pub fn label(&self, var: &str) -> String {
        match *self {
            UnivariateTerm::Power(0) => "1".to_string(),
            UnivariateTerm::Power(1) => var.to_string(),
            UnivariateTerm::Power(k) => format!("{var}^{k}"),
            UnivariateTerm::Truncated { knot, order: 1 } => format!("({var}-{knot})+"),
            UnivariateTerm::Truncated { knot, order } => format!("({var}-{knot})+^{order}"),
        }
    }
}

/// Evaluated basis: `n x a` values plus one label per column.
#[derive(Debug, Clone, PartialEq)]
pub struct BasisMatrix {
    pub values: Array2<f64>,
    pub column_labels: Vec<String>,
}

impl BasisMatrix {
    fn from_terms(v: &[f64], terms: &[UnivariateTerm], var: &str) -> Self {
        let values = Array2::from_shape_fn((v.len(), terms.len()), |(i, j)| terms[j].eval(v[i]));
        let column_labels = terms.iter().map(|t| t.label(var)).collect();
        BasisMatrix { values, column_labels }
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    fn has_leading_constant(&self) -> bool {
        self.ncols() > 0 && self.values.column(0).iter().all(|&x| x == 1.0)
    }
}

fn check_finite(v: &[f64]) -> Result<()> {
    if v.is_empty() {
        return Err(Error::InvalidInput("empty input vector".into()));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("basis input".into()));
    }
    Ok(())
}

pub fn power_terms(a: usize) -> Vec<UnivariateTerm> {
    (0..a as u32).map(UnivariateTerm::Power).collect()
}

pub fn spline_terms(a: usize, s: usize, knots: &[f64]) -> Result<Vec<UnivariateTerm>> {
    if s == 0 || a < s + 1 {
        return Err(Error::InvalidInput(format!(
            "spline of order {s} needs at least {} terms, got {a}",
            s + 1
        )));
    }
    if knots.len() != a - s - 1 {
        return Err(Error::InvalidInput(format!(
            "spline with {a} terms of order {s} needs {} knots, got {}",
            a - s - 1,
            knots.len()
        )));
    }
    if knots.iter().any(|t| !t.is_finite()) {
        return Err(Error::NonFinite("spline knots".into()));
    }
    if knots.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidInput("spline knots must be nondecreasing".into()));
    }
    let mut terms = power_terms(s + 1);
    terms.extend(
        knots
            .iter()
            .map(|&knot| UnivariateTerm::Truncated { knot, order: s as u32 }),
    );
    Ok(terms)
}

/// Columns `v^0, ..., v^(a-1)`.
pub fn power_basis(v: &[f64], a: usize) -> Result<BasisMatrix> {
    check_finite(v)?;
    if a == 0 {
        return Err(Error::InvalidInput("basis needs at least one term".into()));
    }
    Ok(BasisMatrix::from_terms(v, &power_terms(a), "v"))
}

/// Truncated-power spline basis of order `s` with the given knots.
pub fn spline_basis(v: &[f64], a: usize, s: usize, knots: &[f64]) -> Result<BasisMatrix> {
    check_finite(v)?;
    let terms = spline_terms(a, s, knots)?;
    Ok(BasisMatrix::from_terms(v, &terms, "v"))
}

/// Sample quantiles at levels `k/(q+1)`, `k = 1..q`, using order statistics
/// with linear interpolation (`x[floor(h)]` to `x[floor(h)+1]`, `h = (n-1)p`).
pub fn quantile_knots(v: &[f64], q: usize) -> Result<Vec<f64>> {
    if q == 0 {
        return Ok(Vec::new());
    }
    check_finite(v)?;
    if v.len() <= q {
        return Err(Error::InsufficientData {
            required: q,
            available: v.len(),
        });
    }
    let mut sorted = v.to_vec();
    sorted.sort_by(f64::total_cmp);
    if sorted[0] == sorted[sorted.len() - 1] {
        return Err(Error::InvalidInput("cannot place knots in a constant variable".into()));
    }
    let n = sorted.len();
    Ok((1..=q)
        .map(|k| {
            let p = k as f64 / (q + 1) as f64;
            let h = (n - 1) as f64 * p;
            let lo = h.floor() as usize;
            let frac = h - lo as f64;
            if lo + 1 < n {
                sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
            } else {
                sorted[n - 1]
            }
        })
        .collect())
}

/// Number of univariate terms kept when forming interactions:
/// `max(min(a, 5), floor(a^0.9))`.
pub fn restricted_interaction_order(a: usize) -> usize {
    let pow = (a as f64).powf(0.9);
    let mut fl = pow.floor();
    // Guard against powf landing a hair below an exact integer.
    if (pow - (fl + 1.0)).abs() < 1e-9 {
        fl += 1.0;
    }
    a.min(5).max(fl as usize)
}

/// All elementwise products of the non-constant columns of `b1` and `b2`,
/// ordered with the `b1` column varying slowest.
pub fn tensor_interactions(b1: &BasisMatrix, b2: &BasisMatrix) -> Result<BasisMatrix> {
    if b1.nrows() != b2.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "interaction inputs have {} and {} rows",
            b1.nrows(),
            b2.nrows()
        )));
    }
    if !b1.has_leading_constant() || !b2.has_leading_constant() {
        return Err(Error::InvalidInput(
            "interaction inputs must start with a constant column".into(),
        ));
    }
    let (p, q) = (b1.ncols(), b2.ncols());
    let n = b1.nrows();
    let mut values = Array2::zeros((n, (p - 1) * (q - 1)));
    let mut column_labels = Vec::with_capacity((p - 1) * (q - 1));
    let mut c = 0;
    for i in 1..p {
        for j in 1..q {
            let prod = &b1.values.column(i) * &b2.values.column(j);
            values.column_mut(c).assign(&prod);
            column_labels.push(format!("{}*{}", b1.column_labels[i], b2.column_labels[j]));
            c += 1;
        }
    }
    Ok(BasisMatrix { values, column_labels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    #[test]
    fn power_basis_small_cases() {
        assert_eq!(power_basis(&[2.0], 3).unwrap().values, array![[1.0, 2.0, 4.0]]);
        assert_eq!(power_basis(&[0.0, 1.0], 1).unwrap().values, array![[1.0], [1.0]]);
        assert!(power_basis(&[1.0], 0).is_err());
        assert!(power_basis(&[f64::NAN], 2).is_err());
    }

    #[test]
    fn spline_truncated_terms() {
        let b = spline_basis(&[0.0, 2.0], 5, 3, &[1.0]).unwrap();
        assert_eq!(b.values, array![[1.0, 0.0, 0.0, 0.0, 0.0], [1.0, 2.0, 4.0, 8.0, 1.0]]);
        assert!(spline_basis(&[0.0], 6, 3, &[1.0]).is_err());
        assert!(spline_basis(&[0.0], 6, 3, &[1.0, 0.5]).is_err());
    }

    #[test]
    fn spline_without_knots_is_power() {
        let v = [-2.0, -1.0, 0.0, 1.0, 2.0, 3.0];
        let s = spline_basis(&v, 4, 3, &[]).unwrap();
        let p = power_basis(&v, 4).unwrap();
        assert_eq!(s.values, p.values);
    }

    #[test]
    fn knots_small_cases() {
        assert_eq!(quantile_knots(&[1.0, 2.0, 3.0, 4.0, 5.0], 1).unwrap(), vec![3.0]);
        assert!(quantile_knots(&[1.0, 2.0, 3.0, 4.0], 0).unwrap().is_empty());
        assert!(quantile_knots(&[1.0, 1.0, 1.0], 1).is_err());
        assert!(quantile_knots(&[1.0, 2.0], 2).is_err());
    }

    #[test]
    fn interaction_order_table() {
        let got: Vec<usize> = (1..=10).map(restricted_interaction_order).collect();
        assert_eq!(got, vec![1, 2, 3, 4, 5, 5, 5, 6, 7, 7]);
    }

    #[test]
    fn interactions_of_linear_terms() {
        let b1 = power_basis(&[1.0, 2.0, 3.0], 2).unwrap();
        let b2 = power_basis(&[4.0, 5.0, 6.0], 2).unwrap();
        let out = tensor_interactions(&b1, &b2).unwrap();
        assert_eq!(out.values, array![[4.0], [10.0], [18.0]]);
        assert_eq!(out.column_labels, vec!["v*v".to_string()]);
        let five = power_basis(&[0.5; 3], 5).unwrap();
        assert_eq!(tensor_interactions(&five, &five).unwrap().ncols(), 16);
        let short = power_basis(&[0.5; 2], 2).unwrap();
        assert!(tensor_interactions(&b1, &short).is_err());
    }

    proptest! {
        #[test]
        fn knots_sorted_and_in_range(v in prop::collection::vec(-10.0f64..10.0, 8..60), q in 0usize..6) {
            prop_assume!(v.iter().any(|&x| x != v[0]));
            let k = quantile_knots(&v, q).unwrap();
            let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert_eq!(k.len(), q);
            prop_assert!(k.windows(2).all(|w| w[0] <= w[1]));
            prop_assert!(k.iter().all(|&t| t >= lo && t <= hi));
        }

        #[test]
        fn interaction_order_monotone(a in 1usize..200) {
            let r = restricted_interaction_order(a);
            prop_assert!(r <= a);
            prop_assert!(restricted_interaction_order(a + 1) >= r);
        }

        #[test]
        fn interaction_column_count(p in 1usize..6, q in 1usize..6) {
            let v = [0.3, -0.7, 1.1];
            let out = tensor_interactions(&power_basis(&v, p).unwrap(), &power_basis(&v, q).unwrap()).unwrap();
            prop_assert_eq!(out.ncols(), (p - 1) * (q - 1));
        }
    }
}
