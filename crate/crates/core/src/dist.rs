//! Normal and chi-square distribution functions.
//!
//! Everything is built on the regularized incomplete gamma function:
//! `erfc(z) = Q(1/2, z^2)` for `z >= 0`, and the chi-square CDF with `r`
//! degrees of freedom is `P(r/2, x/2)`. `P` uses the power series below
//! `x < a + 1` and a Lentz continued fraction for `Q` above it.

use crate::{Error, Result};

const LANCZOS_G: f64 = 7.0;
// Published coefficients, kept at full printed precision.
#[allow(clippy::excessive_precision)]
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

const MAX_ITER: usize = 10_000;
const EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection keeps the Lanczos sum in its accurate range.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

fn gamma_prefactor(a: f64, x: f64) -> f64 {
    (a * x.ln() - x - ln_gamma(a)).exp()
}

fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * EPS {
            break;
        }
    }
    sum * gamma_prefactor(a, x)
}

fn gamma_q_continued_fraction(a: f64, x: f64) -> f64 {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    gamma_prefactor(a, x) * h
}

/// Regularized lower incomplete gamma `P(a, x)`.
pub fn gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x < a + 1.0 {
        gamma_p_series(a, x)
    } else {
        1.0 - gamma_q_continued_fraction(a, x)
    }
}

/// Regularized upper incomplete gamma `Q(a, x) = 1 - P(a, x)`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else if x < a + 1.0 {
        1.0 - gamma_p_series(a, x)
    } else {
        gamma_q_continued_fraction(a, x)
    }
}

/// Complementary error function.
pub fn erfc(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    if z >= 0.0 {
        gamma_q(0.5, z * z)
    } else {
        1.0 + gamma_p(0.5, z * z)
    }
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Upper tail `1 - Φ(x)`, accurate far into the right tail.
pub fn normal_sf(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

fn check_probability(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("probability {p} outside (0, 1)")))
    }
}

/// Inverse standard normal CDF: Acklam's rational approximation refined by
/// two Halley steps against [`normal_cdf`].
pub fn normal_quantile(p: f64) -> Result<f64> {
    check_probability(p)?;
    if p > 0.5 {
        return normal_quantile(1.0 - p).map(|x| -x);
    }
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    let mut x = if p < 0.02425 {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };
    for _ in 0..2 {
        let e = normal_cdf(x) - p;
        let u = e / normal_pdf(x);
        x -= u / (1.0 + 0.5 * x * u);
    }
    Ok(x)
}

fn check_df(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("degrees of freedom {r} must be positive")))
    }
}

pub fn chisq_cdf(x: f64, r: f64) -> Result<f64> {
    check_df(r)?;
    if x.is_nan() {
        return Err(Error::NonFinite("chi-square argument".into()));
    }
    Ok(gamma_p(0.5 * r, 0.5 * x.max(0.0)))
}

/// Upper tail `1 - F(x)`; used for p-values.
pub fn chisq_sf(x: f64, r: f64) -> Result<f64> {
    check_df(r)?;
    if x.is_nan() {
        return Err(Error::NonFinite("chi-square argument".into()));
    }
    Ok(gamma_q(0.5 * r, 0.5 * x.max(0.0)))
}

fn chisq_pdf(x: f64, r: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let a = 0.5 * r;
    ((a - 1.0) * (0.5 * x).ln() - 0.5 * x - ln_gamma(a)).exp() * 0.5
}

/// Inverse chi-square CDF: Wilson-Hilferty start, then Newton steps kept
/// inside a bisection bracket.
pub fn chisq_quantile(p: f64, r: f64) -> Result<f64> {
    check_probability(p)?;
    check_df(r)?;
    let z = normal_quantile(p)?;
    let h = 2.0 / (9.0 * r);
    let mut x = (r * (1.0 - h + z * h.sqrt()).powi(3)).max(1e-8);

    let (mut lo, mut hi) = (0.0_f64, x.max(1.0));
    while gamma_p(0.5 * r, 0.5 * hi) < p {
        lo = hi;
        hi *= 2.0;
    }
    if x <= lo || x >= hi {
        x = 0.5 * (lo + hi);
    }
    for _ in 0..200 {
        let f = gamma_p(0.5 * r, 0.5 * x) - p;
        if f < 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let pdf = chisq_pdf(x, r);
        let mut next = if pdf > 0.0 { x - f / pdf } else { f64::NAN };
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        let done = (next - x).abs() <= 1e-15 * x.max(1.0) || hi - lo <= 1e-15 * hi;
        x = next;
        if done {
            break;
        }
    }
    Ok(x)
}
