//! Analytic values used as oracles: Rademacher moments, the known constants
//! of `l_d^p`, Clarkson's constant, and Haagerup's Khintchine constant.
//!
//! Every constant is returned together with the dimension requirement that
//! was checked. Below those dimensions the formulas say nothing, so a
//! violated requirement is an error rather than a warning.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::optimizer::ConstantKind;
use crate::space::{neumaier_sum, Exponent};

/// Largest `n` for which binomials and moment sums stay exact in 64/128-bit.
pub const MAX_EXACT_N: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum OracleValue {
    Point { value: f64 },
    Interval { lo: f64, hi: f64 },
}

impl OracleValue {
    pub fn point(self) -> Option<f64> {
        match self {
            OracleValue::Point { value } => Some(value),
            OracleValue::Interval { .. } => None,
        }
    }

    pub fn bounds(self) -> (f64, f64) {
        match self {
            OracleValue::Point { value } => (value, value),
            OracleValue::Interval { lo, hi } => (lo, hi),
        }
    }

    /// Distance from `x` to the value or interval (0 inside).
    pub fn gap(self, x: f64) -> f64 {
        let (lo, hi) = self.bounds();
        if x < lo {
            lo - x
        } else if x > hi {
            x - hi
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosedFormValue {
    pub value: OracleValue,
    pub kind: ConstantKind,
    /// The dimension requirement that was checked, e.g. `d >= 2^(n-1)`.
    pub applicability: String,
    pub provenance: &'static str,
}

pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * u128::from(n - i) / u128::from(i + 1);
    }
    acc as u64
}

/// `Σ_{k=0}^{⌊n/2⌋} C(n,k)(n−2k)^p` in exact integers; the Rademacher
/// moment is this sum times `2^{1−n}`.
pub fn rademacher_moment_sum_exact(n: usize, p: u32) -> u128 {
    (0..=n / 2)
        .map(|k| u128::from(binomial(n as u64, k as u64)) * ((n - 2 * k) as u128).pow(p))
        .sum()
}

/// `∫₀¹ |Σ_{j≤n} r_j(t)|^p dt = 2^{1−n} Σ_{k=0}^{⌊n/2⌋} C(n,k)(n−2k)^p`.
pub fn rademacher_moment(n: usize, p: Exponent) -> Result<f64> {
    let p = p
        .as_finite()
        .ok_or_else(|| Error::UnsupportedExponent("inf".into(), "Rademacher moments need p < ∞"))?;
    if n == 0 || n > MAX_EXACT_N {
        return Err(Error::NOutOfRange { n, min: 1, max: MAX_EXACT_N });
    }
    let terms = (0..=n / 2)
        .map(|k| binomial(n as u64, k as u64) as f64 * ((n - 2 * k) as f64).powf(p));
    Ok(neumaier_sum(terms) * 2f64.powi(1 - n as i32))
}

/// `n^{−1} (2^{1−n} Σ C(n,k)(n−2k)^p)^{2/p}`, the `p > 2` upper modified value.
fn moment_branch(n: usize, p: f64) -> Result<f64> {
    Ok(rademacher_moment(n, Exponent::Finite(p))?.powf(2.0 / p) / n as f64)
}

/// `n^{2/p − 1}`, with `2/∞ = 0`.
pub fn power_value(n: usize, p: Exponent) -> f64 {
    (n as f64).powf(2.0 * p.recip() - 1.0)
}

fn require_dim(claim: &'static str, d: usize, min: usize, label: &str) -> Result<String> {
    if d >= min {
        Ok(format!("d >= {label} = {min}"))
    } else {
        Err(Error::DimensionPrecondition { claim, requirement: format!("d >= {label} = {min}"), dim: d })
    }
}

fn check_n(n: usize) -> Result<()> {
    if (2..=MAX_EXACT_N).contains(&n) {
        Ok(())
    } else {
        Err(Error::NOutOfRange { n, min: 2, max: MAX_EXACT_N })
    }
}

fn half_dim(n: usize) -> usize {
    1usize << (n - 1)
}

const HILBERT: &str = "Hilbert space: C^(n) is identically 1";

fn hilbert(kind: ConstantKind) -> ClosedFormValue {
    ClosedFormValue {
        value: OracleValue::Point { value: 1.0 },
        kind,
        applicability: "p = 2 (any d)".into(),
        provenance: HILBERT,
    }
}

/// Upper modified constant of `l_d^p`.
pub fn upper_modified_lp(n: usize, p: Exponent, d: usize) -> Result<ClosedFormValue> {
    check_n(n)?;
    let kind = ConstantKind::UpperModified;
    match p {
        Exponent::Finite(q) if q == 2.0 => Ok(hilbert(kind)),
        Exponent::Finite(q) if q < 2.0 => Ok(ClosedFormValue {
            value: OracleValue::Point { value: power_value(n, p) },
            kind,
            applicability: require_dim("upper modified constant, 1 <= p <= 2", d, n, "n")?,
            provenance: "upper modified constant of l^p, 1 <= p <= 2: n^(2/p-1)",
        }),
        Exponent::Finite(q) => Ok(ClosedFormValue {
            value: OracleValue::Point { value: moment_branch(n, q)? },
            kind,
            applicability: require_dim(
                "upper modified constant, 2 < p < inf",
                d,
                half_dim(n),
                "2^(n-1)",
            )?,
            provenance: "upper modified constant of l^p, 2 < p < inf: Rademacher moment formula",
        }),
        Exponent::Infinity => Ok(ClosedFormValue {
            value: OracleValue::Point { value: n as f64 },
            kind,
            applicability: require_dim("upper constants of l^inf", d, half_dim(n), "2^(n-1)")?,
            provenance: "upper constants of l^inf: n, attained by the sign-matrix columns",
        }),
    }
}

/// Upper (non-modified) constant of `l_d^p`; an interval for `2 < p < ∞`.
pub fn upper_nj_lp(n: usize, p: Exponent, d: usize) -> Result<ClosedFormValue> {
    check_n(n)?;
    let kind = ConstantKind::Upper;
    match p {
        Exponent::Finite(q) if q == 2.0 => Ok(hilbert(kind)),
        Exponent::Finite(q) if q < 2.0 => Ok(ClosedFormValue {
            value: OracleValue::Point { value: power_value(n, p) },
            kind,
            applicability: require_dim("upper constant, 1 <= p <= 2", d, n, "n")?,
            provenance: "upper constant of l^p, 1 <= p <= 2: n^(2/p-1)",
        }),
        Exponent::Finite(q) => {
            let applicability =
                require_dim("upper constant two-sided bound, 2 < p < inf", d, half_dim(n), "2^(n-1)")?;
            let lo = moment_branch(n, q)?;
            let mut hi = power_value(n, p.conjugate()).min(haagerup_bp(q)?.powi(2));
            // at n = 2 both ends are the same number computed two ways
            if lo > hi && lo - hi <= 4.0 * f64::EPSILON * hi {
                hi = lo;
            }
            Ok(ClosedFormValue {
                value: OracleValue::Interval { lo, hi },
                kind,
                applicability,
                provenance: "upper constant of l^p, 2 < p < inf: [moment formula, min(n^(2/q-1), B_p^2)]",
            })
        }
        Exponent::Infinity => Ok(ClosedFormValue {
            kind,
            ..upper_modified_lp(n, p, d)?
        }),
    }
}

/// Lower (non-modified) constant of `l_d^p` for `p >= 2`.
pub fn lower_nj_lp(n: usize, p: Exponent, d: usize) -> Result<ClosedFormValue> {
    check_n(n)?;
    let kind = ConstantKind::Lower;
    if matches!(p, Exponent::Finite(q) if q < 2.0) {
        return Err(Error::NoClosedForm(format!("the lower constant of l^p with p = {p} < 2")));
    }
    if p == Exponent::Finite(2.0) {
        return Ok(hilbert(kind));
    }
    Ok(ClosedFormValue {
        value: OracleValue::Point { value: power_value(n, p) },
        kind,
        applicability: require_dim("lower constant, 2 <= p <= inf", d, n, "n")?,
        provenance: "lower constant of l^p, 2 <= p <= inf: n^(2/p-1), attained by the canonical basis",
    })
}

/// Lower modified constant of `l_d^p` for `p >= 2`.
///
/// The canonical basis lies on `S(X)^n` and attains the lower constant, so the
/// lower modified constant takes the same value.
pub fn lower_modified_lp(n: usize, p: Exponent, d: usize) -> Result<ClosedFormValue> {
    let base = lower_nj_lp(n, p, d)
        .map_err(|_| Error::NoClosedForm(format!("the lower modified constant of l^p with p = {p}")))?;
    Ok(ClosedFormValue {
        kind: ConstantKind::LowerModified,
        provenance: if base.provenance == HILBERT {
            HILBERT
        } else {
            "lower modified constant of l^p, 2 <= p <= inf: squeezed between the lower constant and the basis tuple"
        },
        ..base
    })
}

pub fn oracle(kind: ConstantKind, n: usize, p: Exponent, d: usize) -> Result<ClosedFormValue> {
    match kind {
        ConstantKind::Upper => upper_nj_lp(n, p, d),
        ConstantKind::Lower => lower_nj_lp(n, p, d),
        ConstantKind::UpperModified => upper_modified_lp(n, p, d),
        ConstantKind::LowerModified => lower_modified_lp(n, p, d),
    }
}

/// Clarkson's value `C_NJ(L^p) = 2^{2/min(p,q) − 1}`.
pub fn clarkson_cnj(p: Exponent) -> f64 {
    let r = p.recip().max(p.conjugate().recip());
    2f64.powf(2.0 * r - 1.0)
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `Γ(x)` for `x > 0` by the Lanczos approximation (`g = 7`, nine terms),
/// with reflection for `x < 1/2`.
pub fn gamma(x: f64) -> f64 {
    if x < 0.5 {
        return std::f64::consts::PI / ((std::f64::consts::PI * x).sin() * gamma(1.0 - x));
    }
    let x = x - 1.0;
    let mut a = LANCZOS_COEF[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    (2.0 * std::f64::consts::PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
}

/// Haagerup's best type-(2,p) Khintchine constant `B_p = √2 (Γ((p+1)/2)/√π)^{1/p}`.
pub fn haagerup_bp(p: f64) -> Result<f64> {
    if !(p.is_finite() && p >= 2.0) {
        return Err(Error::UnsupportedExponent(p.to_string(), "B_p needs 2 <= p < ∞"));
    }
    let ratio = gamma((p + 1.0) / 2.0) / std::f64::consts::PI.sqrt();
    Ok(std::f64::consts::SQRT_2 * ratio.powf(1.0 / p))
}

/// `(1/(n 2^{n−1})) Σ_{j=0}^{n−1} C(n−1,j)(n−2j)²`, the value of `C^(n)` on an
/// identical tuple, evaluated in exact integers.
pub fn identity_tuple_value(n: usize) -> Result<f64> {
    check_n(n)?;
    let sum: i128 = (0..n)
        .map(|j| {
            let c = i128::from(binomial(n as u64 - 1, j as u64));
            let m = n as i128 - 2 * j as i128;
            c * m * m
        })
        .sum();
    let den = n as i128 * (1i128 << (n - 1));
    Ok(if sum == den { 1.0 } else { sum as f64 / den as f64 })
}
