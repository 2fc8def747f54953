//! The `C^(n)` functional
//!
//! ```text
//!            Σ_θ ‖x₁ + θ₂x₂ + … + θ_n x_n‖²
//! C^(n)(x) = ------------------------------
//!               2^{n−1} Σ_j ‖x_j‖²
//! ```
//!
//! together with sign-pattern enumeration, the minimal signed combination,
//! and the analytic gradient for `1 < p < ∞`.
//!
//! Sign patterns are enumerated by binary counting: pattern `k` has
//! `θ_{j+1} = −1` exactly when bit `j − 1` of `k` is set (positions are
//! 0-based, position 0 is always `+1`). Row `k` of the sign matrix `A_n`
//! is the same pattern.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{abs_pow, lp_norm, neumaier_sum, Exponent, SpaceSpec, Vector, VectorTuple};

/// Default upper limit on `n`; the cost of one evaluation is `Θ(2^{n−1}·n·d)`.
pub const DEFAULT_MAX_N: usize = 20;

/// Default smoothing for gradients at kinks of `‖·‖_p`, `p < 2`.
pub const DEFAULT_SMOOTHING: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SignPattern {
    pub signs: Vec<i8>,
}

impl SignPattern {
    /// Pattern number `k` of length `n` in enumeration order.
    pub fn from_index(n: usize, k: u64) -> Self {
        let signs = (0..n).map(|j| sign_at(k, j)).collect();
        Self { signs }
    }

    pub fn len(&self) -> usize {
        self.signs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signs.is_empty()
    }
}

#[inline]
fn sign_at(k: u64, j: usize) -> i8 {
    if j == 0 || (k >> (j - 1)) & 1 == 0 {
        1
    } else {
        -1
    }
}

pub(crate) fn check_n(n: usize, cap: usize) -> Result<()> {
    if (2..=cap).contains(&n) {
        Ok(())
    } else {
        Err(Error::NOutOfRange { n, min: 2, max: cap })
    }
}

pub fn sign_patterns(n: usize) -> Result<Vec<SignPattern>> {
    sign_patterns_capped(n, DEFAULT_MAX_N)
}

pub fn sign_patterns_capped(n: usize, cap: usize) -> Result<Vec<SignPattern>> {
    check_n(n, cap)?;
    Ok((0..1u64 << (n - 1)).map(|k| SignPattern::from_index(n, k)).collect())
}

/// Writes `x₁ + Σ θ_j x_j` for pattern `k` into `out`.
#[inline]
fn signed_combination(t: &VectorTuple, k: u64, out: &mut [f64]) {
    out.copy_from_slice(&t.vectors[0].coords);
    for (j, x) in t.vectors.iter().enumerate().skip(1) {
        if sign_at(k, j) > 0 {
            out.iter_mut().zip(&x.coords).for_each(|(o, c)| *o += c);
        } else {
            out.iter_mut().zip(&x.coords).for_each(|(o, c)| *o -= c);
        }
    }
}

fn check_input(space: &SpaceSpec, t: &VectorTuple) -> Result<()> {
    space.check_tuple(t)?;
    check_n(t.len(), usize::MAX)
}

/// `Σ_θ ‖x₁ + Σ θ_j x_j‖²` over the `2^{n−1}` patterns.
pub(crate) fn numerator(space: &SpaceSpec, t: &VectorTuple) -> f64 {
    let n = t.len();
    let mut buf = vec![0.0; t.dim()];
    let terms = (0..1u64 << (n - 1)).map(|k| {
        signed_combination(t, k, &mut buf);
        lp_norm(space.exponent, &buf).powi(2)
    });
    neumaier_sum(terms)
}

pub(crate) fn squared_norm_sum(space: &SpaceSpec, t: &VectorTuple) -> f64 {
    neumaier_sum(t.vectors.iter().map(|v| lp_norm(space.exponent, &v.coords).powi(2)))
}

/// `C^(n)(x₁, …, x_n)`.
pub fn evaluate_cn(space: &SpaceSpec, t: &VectorTuple) -> Result<f64> {
    check_input(space, t)?;
    let den = squared_norm_sum(space, t);
    if den == 0.0 {
        return Err(Error::DegenerateTuple);
    }
    let n = t.len();
    Ok(numerator(space, t) / (den * (1u64 << (n - 1)) as f64))
}

/// The full `2^n`-pattern form `Σ_θ ‖Σ θ_j x_j‖² / (2^n Σ ‖x_j‖²)`.
///
/// Agrees with [`evaluate_cn`] and is manifestly invariant under sign flips and
/// permutations of the tuple.
pub fn evaluate_cn_symmetrized(space: &SpaceSpec, t: &VectorTuple) -> Result<f64> {
    check_input(space, t)?;
    let den = squared_norm_sum(space, t);
    if den == 0.0 {
        return Err(Error::DegenerateTuple);
    }
    let n = t.len();
    let mut buf = vec![0.0; t.dim()];
    let terms = (0..1u64 << n).map(|mask| {
        buf.iter_mut().for_each(|b| *b = 0.0);
        for (j, x) in t.vectors.iter().enumerate() {
            let s = if (mask >> j) & 1 == 0 { 1.0 } else { -1.0 };
            buf.iter_mut().zip(&x.coords).for_each(|(o, c)| *o += s * c);
        }
        lp_norm(space.exponent, &buf).powi(2)
    });
    Ok(neumaier_sum(terms) / (den * (1u64 << n) as f64))
}

/// `min_θ ‖x₁ + Σ θ_j x_j‖` and the first pattern attaining it.
pub fn min_sign_combination(space: &SpaceSpec, t: &VectorTuple) -> Result<(f64, SignPattern)> {
    check_input(space, t)?;
    let n = t.len();
    let mut buf = vec![0.0; t.dim()];
    let mut best = (f64::INFINITY, 0u64);
    for k in 0..1u64 << (n - 1) {
        signed_combination(t, k, &mut buf);
        let v = lp_norm(space.exponent, &buf);
        if v < best.0 {
            best = (v, k);
        }
    }
    Ok((best.0, SignPattern::from_index(n, best.1)))
}

/// Norms of all signed combinations, in enumeration order.
pub fn signed_combination_norms(space: &SpaceSpec, t: &VectorTuple) -> Result<Vec<f64>> {
    check_input(space, t)?;
    let mut buf = vec![0.0; t.dim()];
    Ok((0..1u64 << (t.len() - 1))
        .map(|k| {
            signed_combination(t, k, &mut buf);
            lp_norm(space.exponent, &buf)
        })
        .collect())
}

/// Adds `scale · ∇‖v‖_p²` to `out`.
pub(crate) fn add_grad_sq_norm(p: f64, v: &[f64], scale: f64, smoothing: f64, out: &mut [f64]) {
    let m = v.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
    if m == 0.0 {
        return;
    }
    let smooth = p < 2.0 && v.contains(&0.0);
    if smooth {
        // f(v) = (Σ (v_i² + ε²)^{p/2})^{1/p}, ∂f²/∂v_i = 2 f^{2−p} (v_i² + ε²)^{p/2−1} v_i
        let eps2 = smoothing * smoothing;
        let f = neumaier_sum(v.iter().map(|c| (c * c + eps2).powf(p / 2.0))).powf(1.0 / p);
        let lead = 2.0 * f.powf(2.0 - p);
        for (o, c) in out.iter_mut().zip(v) {
            *o += scale * lead * (c * c + eps2).powf(p / 2.0 - 1.0) * c;
        }
        return;
    }
    let w_norm = neumaier_sum(v.iter().map(|c| abs_pow(c / m, p))).powf(1.0 / p);
    let lead = 2.0 * m * w_norm.powf(2.0 - p);
    for (o, c) in out.iter_mut().zip(v) {
        let w = c / m;
        *o += scale * lead * w.signum() * abs_pow(w, p - 1.0);
    }
}

/// `C^(n)` and its gradient with respect to every `x_j`.
pub fn value_and_grad(
    space: &SpaceSpec,
    t: &VectorTuple,
    smoothing: f64,
) -> Result<(f64, VectorTuple)> {
    let p = match space.exponent {
        Exponent::Finite(p) if p > 1.0 => p,
        e => return Err(Error::UnsupportedExponent(e.to_string(), "gradient needs 1 < p < ∞")),
    };
    check_input(space, t)?;
    let n = t.len();
    let d = t.dim();
    let scale = (1u64 << (n - 1)) as f64;
    let den = scale * squared_norm_sum(space, t);
    if den == 0.0 {
        return Err(Error::DegenerateTuple);
    }
    let num = numerator(space, t);
    let value = num / den;

    let mut grads = vec![vec![0.0; d]; n];
    let mut buf = vec![0.0; d];
    let mut g = vec![0.0; d];
    for k in 0..1u64 << (n - 1) {
        signed_combination(t, k, &mut buf);
        g.iter_mut().for_each(|x| *x = 0.0);
        add_grad_sq_norm(p, &buf, 1.0, smoothing, &mut g);
        for (j, gj) in grads.iter_mut().enumerate() {
            let s = f64::from(sign_at(k, j)) / den;
            gj.iter_mut().zip(&g).for_each(|(o, c)| *o += s * c);
        }
    }
    // quotient rule: ∂C = (∂N − C ∂D) / D
    for (gj, x) in grads.iter_mut().zip(&t.vectors) {
        add_grad_sq_norm(p, &x.coords, -value * scale / den, smoothing, gj);
    }
    let grad = VectorTuple { vectors: grads.into_iter().map(Vector::new).collect() };
    Ok((value, grad))
}

/// `∂C^(n)/∂x_j` for every `j`.
pub fn grad_cn(space: &SpaceSpec, t: &VectorTuple, smoothing: f64) -> Result<VectorTuple> {
    value_and_grad(space, t, smoothing).map(|(_, g)| g)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tuple(rows: &[&[f64]]) -> VectorTuple {
        VectorTuple::from_rows(rows).unwrap()
    }

    fn basis(d: usize, n: usize) -> VectorTuple {
        let s = SpaceSpec::lp(2.0, d).unwrap();
        VectorTuple::new((0..n).map(|i| s.basis(i)).collect()).unwrap()
    }

    #[test]
    fn pattern_order() {
        let p2 = sign_patterns(2).unwrap();
        assert_eq!(p2.iter().map(|p| p.signs.clone()).collect::<Vec<_>>(), vec![
            vec![1, 1],
            vec![1, -1]
        ]);
        let p3 = sign_patterns(3).unwrap();
        assert_eq!(p3.len(), 4);
        assert_eq!(p3[0].signs, vec![1, 1, 1]);
        assert_eq!(p3[1].signs, vec![1, -1, 1]);
        assert_eq!(p3[3].signs, vec![1, -1, -1]);
        let p12 = sign_patterns(12).unwrap();
        assert_eq!(p12.len(), 2048);
        let set: std::collections::HashSet<_> = p12.iter().collect();
        assert_eq!(set.len(), 2048);
        assert!(p12.iter().all(|p| p.signs[0] == 1));
    }

    #[test]
    fn pattern_range() {
        assert!(matches!(sign_patterns(1), Err(Error::NOutOfRange { .. })));
        assert!(matches!(sign_patterns(21), Err(Error::NOutOfRange { .. })));
        assert!(sign_patterns_capped(21, 22).is_ok());
    }

    #[test]
    fn cn_examples() {
        let l2 = SpaceSpec::lp(2.0, 3).unwrap();
        assert!((evaluate_cn(&l2, &basis(3, 3)).unwrap() - 1.0).abs() < 1e-15);
        let linf = SpaceSpec::linf(3).unwrap();
        assert!((evaluate_cn(&linf, &basis(3, 3)).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let l1 = SpaceSpec::lp(1.0, 3).unwrap();
        assert!((evaluate_cn(&l1, &basis(3, 3)).unwrap() - 3.0).abs() < 1e-15);
        for s in [l1, linf, SpaceSpec::lp(3.0, 3).unwrap()] {
            let x = s.sample_sphere(11);
            for n in 2..6 {
                let v = evaluate_cn(&s, &VectorTuple::repeated(&x, n)).unwrap();
                assert!((v - 1.0).abs() < 1e-14, "{s} n={n}: {v}");
            }
        }
    }

    #[test]
    fn cn_degenerate() {
        let s = SpaceSpec::lp(2.0, 2).unwrap();
        let z = tuple(&[&[0.0, 0.0], &[0.0, 0.0]]);
        assert_eq!(evaluate_cn(&s, &z), Err(Error::DegenerateTuple));
        assert_eq!(evaluate_cn_symmetrized(&s, &z), Err(Error::DegenerateTuple));
        let bad = tuple(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]]);
        assert!(matches!(evaluate_cn(&s, &bad), Err(Error::DimensionMismatch { .. })));
        let short = tuple(&[&[1.0, 0.0]]);
        assert!(matches!(evaluate_cn(&s, &short), Err(Error::NOutOfRange { .. })));
    }

    #[test]
    fn symmetrized_examples() {
        let e = tuple(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let l2 = SpaceSpec::lp(2.0, 2).unwrap();
        assert!((evaluate_cn_symmetrized(&l2, &e).unwrap() - 1.0).abs() < 1e-15);
        let l1 = SpaceSpec::lp(1.0, 2).unwrap();
        assert!((evaluate_cn_symmetrized(&l1, &e).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn min_sign_examples() {
        let l2 = SpaceSpec::lp(2.0, 2).unwrap();
        let (m, pat) = min_sign_combination(&l2, &tuple(&[&[1.0, 0.0], &[1.0, 0.0]])).unwrap();
        assert_eq!((m, pat.signs), (0.0, vec![1, -1]));
        let (m, pat) = min_sign_combination(&l2, &tuple(&[&[1.0, 0.0], &[0.0, 1.0]])).unwrap();
        assert!((m - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(pat.signs, vec![1, 1]);
        let l1 = SpaceSpec::lp(1.0, 2).unwrap();
        let (m, pat) = min_sign_combination(&l1, &tuple(&[&[1.0, 0.0], &[0.0, 1.0]])).unwrap();
        assert_eq!((m, pat.signs), (2.0, vec![1, 1]));
        let (m, _) = min_sign_combination(&l1, &tuple(&[&[0.0, 0.0], &[0.0, 0.0]])).unwrap();
        assert_eq!(m, 0.0);
    }

    #[test]
    fn gradient_rejects_polyhedral() {
        let t = tuple(&[&[1.0, 0.0], &[0.0, 1.0]]);
        for s in [SpaceSpec::lp(1.0, 2).unwrap(), SpaceSpec::linf(2).unwrap()] {
            assert!(matches!(grad_cn(&s, &t, 1e-12), Err(Error::UnsupportedExponent(..))));
        }
    }

    #[test]
    fn gradient_vanishes_on_hilbert_identical_tuple() {
        let s = SpaceSpec::lp(2.0, 3).unwrap();
        let x = s.sample_sphere(3);
        let g = grad_cn(&s, &VectorTuple::repeated(&x, 3), 1e-12).unwrap();
        for v in &g.vectors {
            assert!(v.coords.iter().all(|c| c.abs() < 1e-14), "{v:?}");
        }
    }

    #[test]
    fn gradient_is_orthogonal_to_the_tuple() {
        // degree-0 homogeneity: Σ_j <∂_j C, x_j> = 0
        for p in [1.5, 3.0] {
            let s = SpaceSpec::lp(p, 3).unwrap();
            for seed in 0..20 {
                let t = VectorTuple::new((0..3).map(|j| s.sample_sphere(seed * 10 + j)).collect())
                    .unwrap();
                let g = grad_cn(&s, &t, 1e-12).unwrap();
                let dot: f64 = g
                    .vectors
                    .iter()
                    .zip(&t.vectors)
                    .flat_map(|(a, b)| a.coords.iter().zip(&b.coords).map(|(x, y)| x * y))
                    .sum();
                assert!(dot.abs() < 1e-12, "p={p} seed={seed}: {dot}");
            }
        }
    }

    #[test]
    fn smoothed_gradient_at_kink_is_finite() {
        let s = SpaceSpec::lp(1.5, 2).unwrap();
        let t = tuple(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let g = grad_cn(&s, &t, DEFAULT_SMOOTHING).unwrap();
        assert!(g.vectors.iter().flat_map(|v| &v.coords).all(|c| c.is_finite()));
    }
}
