//! Finite-dimensional `l_d^p` spaces: norms, duality, sphere projection and
//! sampling, and extreme points of polyhedral unit balls.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Below this magnitude `|x|^p` is evaluated in the log domain.
const TINY: f64 = 1e-300;

/// Norm exponent `p ∈ [1, ∞]`. Infinity is its own variant, never a large float.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "ExponentRepr", try_from = "ExponentRepr")]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ExponentRepr {
    Num(f64),
    Str(String),
}

impl From<Exponent> for ExponentRepr {
    fn from(e: Exponent) -> Self {
        match e {
            Exponent::Finite(p) => ExponentRepr::Num(p),
            Exponent::Infinity => ExponentRepr::Str("inf".into()),
        }
    }
}

impl TryFrom<ExponentRepr> for Exponent {
    type Error = Error;
    fn try_from(r: ExponentRepr) -> Result<Self> {
        match r {
            ExponentRepr::Num(p) => Exponent::finite(p),
            ExponentRepr::Str(s) => s.parse(),
        }
    }
}

impl Exponent {
    pub fn finite(p: f64) -> Result<Self> {
        if p.is_finite() && p >= 1.0 {
            Ok(Exponent::Finite(p))
        } else {
            Err(Error::InvalidExponent(p.to_string()))
        }
    }

    /// Conjugate exponent `q` with `1/p + 1/q = 1`.
    pub fn conjugate(self) -> Exponent {
        match self {
            Exponent::Infinity => Exponent::Finite(1.0),
            Exponent::Finite(p) if p == 1.0 => Exponent::Infinity,
            Exponent::Finite(p) if p == 2.0 => Exponent::Finite(2.0),
            Exponent::Finite(p) => Exponent::Finite(1.0 / (1.0 - 1.0 / p)),
        }
    }

    pub fn is_infinite(self) -> bool {
        matches!(self, Exponent::Infinity)
    }

    /// `1/p`, with `1/∞ = 0`.
    pub fn recip(self) -> f64 {
        match self {
            Exponent::Finite(p) => 1.0 / p,
            Exponent::Infinity => 0.0,
        }
    }

    pub fn as_finite(self) -> Option<f64> {
        match self {
            Exponent::Finite(p) => Some(p),
            Exponent::Infinity => None,
        }
    }

    /// True for `1 < p < ∞`, where the norm is differentiable away from zero.
    pub fn is_smooth(self) -> bool {
        matches!(self, Exponent::Finite(p) if p > 1.0)
    }

    /// True for `p ∈ {1, ∞}`.
    pub fn is_polyhedral(self) -> bool {
        !self.is_smooth()
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(p) => write!(f, "{p}"),
            Exponent::Infinity => f.write_str("inf"),
        }
    }
}

impl std::str::FromStr for Exponent {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "inf" | "infinity" | "∞" => Ok(Exponent::Infinity),
            t => {
                let p: f64 = t.parse().map_err(|_| Error::InvalidExponent(t.to_string()))?;
                Exponent::finite(p)
            }
        }
    }
}

/// The space `l_d^p` over the reals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceSpec {
    pub exponent: Exponent,
    pub dimension: usize,
}

impl SpaceSpec {
    pub fn new(exponent: Exponent, dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::InvalidDimension(dimension));
        }
        if let Exponent::Finite(p) = exponent {
            Exponent::finite(p)?;
        }
        Ok(Self { exponent, dimension })
    }

    pub fn lp(p: f64, dimension: usize) -> Result<Self> {
        Self::new(Exponent::finite(p)?, dimension)
    }

    pub fn linf(dimension: usize) -> Result<Self> {
        Self::new(Exponent::Infinity, dimension)
    }

    /// Parses `lp:p=<p>,dim=<d>` with `p` a number or `inf`.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::InvalidSpace(s.to_string());
        let body = s.strip_prefix("lp:").ok_or_else(bad)?;
        let mut p = None;
        let mut d = None;
        for part in body.split(',') {
            let (key, value) = part.split_once('=').ok_or_else(bad)?;
            match key.trim() {
                "p" => p = Some(value.parse::<Exponent>()?),
                "dim" | "d" => d = Some(value.trim().parse::<usize>().map_err(|_| bad())?),
                _ => return Err(bad()),
            }
        }
        Self::new(p.ok_or_else(bad)?, d.ok_or_else(bad)?)
    }

    /// True when the norm is Euclidean (`p = 2`, or any `p` on the line).
    pub fn is_hilbert(&self) -> bool {
        self.dimension == 1 || self.exponent == Exponent::Finite(2.0)
    }

    pub fn zero(&self) -> Vector {
        Vector::zeros(self.dimension)
    }

    /// Canonical basis vector `e_i` (0-based).
    pub fn basis(&self, i: usize) -> Vector {
        let mut v = self.zero();
        v.coords[i] = 1.0;
        v
    }

    fn check_dim(&self, v: &Vector) -> Result<()> {
        if v.dim() == self.dimension {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected: self.dimension, found: v.dim() })
        }
    }

    /// `‖v‖_p`.
    pub fn norm(&self, v: &Vector) -> Result<f64> {
        self.check_dim(v)?;
        Ok(self.norm_unchecked(&v.coords))
    }

    pub(crate) fn norm_unchecked(&self, coords: &[f64]) -> f64 {
        lp_norm(self.exponent, coords)
    }

    pub fn dual(&self) -> SpaceSpec {
        SpaceSpec { exponent: self.exponent.conjugate(), dimension: self.dimension }
    }

    pub fn project_to_sphere(&self, v: &Vector) -> Result<Vector> {
        let n = self.norm(v)?;
        if n == 0.0 {
            return Err(Error::ZeroVector);
        }
        Ok(v.scaled(1.0 / n))
    }

    /// Gaussian vector projected onto `S(X)`; deterministic in `seed`.
    pub fn sample_sphere(&self, seed: u64) -> Vector {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_sphere_with(&mut rng)
    }

    pub(crate) fn sample_sphere_with<R: rand::Rng>(&self, rng: &mut R) -> Vector {
        loop {
            let coords: Vec<f64> =
                (0..self.dimension).map(|_| StandardNormal.sample(rng)).collect();
            let v = Vector::new(coords);
            let n = self.norm_unchecked(&v.coords);
            if n > 1e-150 {
                return v.scaled(1.0 / n);
            }
        }
    }

    /// Extreme points of the unit ball when there are finitely many.
    pub fn extreme_points(&self) -> ExtremePoints {
        match self.exponent {
            Exponent::Finite(p) if p == 1.0 => {
                let mut pts = Vec::with_capacity(2 * self.dimension);
                for i in 0..self.dimension {
                    pts.push(self.basis(i));
                    pts.push(self.basis(i).scaled(-1.0));
                }
                ExtremePoints::Finite(pts)
            }
            Exponent::Infinity => {
                let d = self.dimension;
                let pts = (0..1u64 << d)
                    .map(|mask| {
                        Vector::new(
                            (0..d).map(|i| if mask >> i & 1 == 0 { 1.0 } else { -1.0 }).collect(),
                        )
                    })
                    .collect();
                ExtremePoints::Finite(pts)
            }
            Exponent::Finite(_) => ExtremePoints::Unsupported,
        }
    }

    /// Extreme points up to sign: one representative per antipodal pair
    /// (first nonzero coordinate positive).
    pub fn extreme_representatives(&self) -> Option<Vec<Vector>> {
        match self.extreme_points() {
            ExtremePoints::Finite(pts) => Some(
                pts.into_iter()
                    .filter(|v| v.coords.iter().find(|c| **c != 0.0).is_some_and(|c| *c > 0.0))
                    .collect(),
            ),
            ExtremePoints::Unsupported => None,
        }
    }

    /// `(Σ_j ‖x_j‖²)^{1/2}`, the norm of `l_n²(X)`.
    pub fn tuple_l2_norm(&self, t: &VectorTuple) -> Result<f64> {
        self.check_tuple(t)?;
        Ok(self.tuple_l2_norm_unchecked(t))
    }

    pub(crate) fn tuple_l2_norm_unchecked(&self, t: &VectorTuple) -> f64 {
        let sq: Vec<f64> =
            t.vectors.iter().map(|v| self.norm_unchecked(&v.coords).powi(2)).collect();
        neumaier_sum(sq.iter().copied()).sqrt()
    }

    pub(crate) fn check_tuple(&self, t: &VectorTuple) -> Result<()> {
        t.vectors.iter().try_for_each(|v| self.check_dim(v))
    }
}

impl fmt::Display for SpaceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "lp:p={},dim={}", self.exponent, self.dimension)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExtremePoints {
    Finite(Vec<Vector>),
    Unsupported,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Vector {
    pub coords: Vec<f64>,
}

impl Vector {
    pub fn new(coords: Vec<f64>) -> Self {
        Self { coords }
    }

    pub fn zeros(d: usize) -> Self {
        Self { coords: vec![0.0; d] }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn scaled(&self, s: f64) -> Vector {
        Vector::new(self.coords.iter().map(|c| c * s).collect())
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|c| *c == 0.0)
    }
}

impl From<Vec<f64>> for Vector {
    fn from(coords: Vec<f64>) -> Self {
        Vector::new(coords)
    }
}

/// An ordered tuple `(x₁, …, x_n)` of vectors of a common dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VectorTuple {
    pub vectors: Vec<Vector>,
}

impl VectorTuple {
    pub fn new(vectors: Vec<Vector>) -> Result<Self> {
        if vectors.is_empty() {
            return Err(Error::EmptyTuple);
        }
        let d = vectors[0].dim();
        if let Some(v) = vectors.iter().find(|v| v.dim() != d) {
            return Err(Error::DimensionMismatch { expected: d, found: v.dim() });
        }
        Ok(Self { vectors })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        Self::new(rows.iter().map(|r| Vector::new(r.to_vec())).collect())
    }

    /// `(x, x, …, x)`.
    pub fn repeated(x: &Vector, n: usize) -> Self {
        Self { vectors: vec![x.clone(); n] }
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors.first().map_or(0, Vector::dim)
    }

    pub fn scaled(&self, s: f64) -> VectorTuple {
        VectorTuple { vectors: self.vectors.iter().map(|v| v.scaled(s)).collect() }
    }
}

/// Compensated (Kahan–Babuška–Neumaier) summation.
pub fn neumaier_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// `|x|^p`, in the log domain for subnormal-scale `x`.
pub(crate) fn abs_pow(x: f64, p: f64) -> f64 {
    let a = x.abs();
    if a == 0.0 {
        0.0
    } else if a < TINY {
        (p * a.ln()).exp()
    } else {
        a.powf(p)
    }
}

pub(crate) fn lp_norm(exponent: Exponent, coords: &[f64]) -> f64 {
    match exponent {
        Exponent::Infinity => coords.iter().fold(0.0_f64, |m, c| m.max(c.abs())),
        Exponent::Finite(p) if p == 1.0 => neumaier_sum(coords.iter().map(|c| c.abs())),
        Exponent::Finite(p) if p == 2.0 => {
            // scale to avoid overflow of squares
            let m = coords.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
            if m == 0.0 {
                return 0.0;
            }
            m * neumaier_sum(coords.iter().map(|c| (c / m).powi(2))).sqrt()
        }
        Exponent::Finite(p) => {
            let m = coords.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
            if m == 0.0 {
                return 0.0;
            }
            m * neumaier_sum(coords.iter().map(|c| abs_pow(c / m, p))).powf(1.0 / p)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn v(c: &[f64]) -> Vector {
        Vector::new(c.to_vec())
    }

    #[test]
    fn norm_examples() {
        assert_eq!(SpaceSpec::lp(2.0, 3).unwrap().norm(&v(&[1.0, 0.0, 0.0])).unwrap(), 1.0);
        assert_eq!(SpaceSpec::lp(1.0, 2).unwrap().norm(&v(&[1.0, -1.0])).unwrap(), 2.0);
        assert_eq!(SpaceSpec::linf(4).unwrap().norm(&v(&[1.0; 4])).unwrap(), 1.0);
        assert_eq!(SpaceSpec::lp(3.0, 2).unwrap().norm(&v(&[0.0, 0.0])).unwrap(), 0.0);
    }

    #[test]
    fn norm_rejects_wrong_dimension() {
        let s = SpaceSpec::lp(2.0, 3).unwrap();
        assert!(matches!(
            s.norm(&v(&[1.0, 2.0])),
            Err(Error::DimensionMismatch { expected: 3, found: 2 })
        ));
    }

    #[test]
    fn invalid_specs() {
        assert!(SpaceSpec::lp(0.5, 2).is_err());
        assert!(SpaceSpec::lp(f64::INFINITY, 2).is_err());
        assert!(SpaceSpec::lp(2.0, 0).is_err());
    }

    #[test]
    fn dual_examples() {
        let d = |p: Exponent| SpaceSpec::new(p, 3).unwrap().dual().exponent;
        assert_eq!(d(Exponent::Finite(2.0)), Exponent::Finite(2.0));
        assert_eq!(d(Exponent::Finite(1.0)), Exponent::Infinity);
        assert_eq!(d(Exponent::Infinity), Exponent::Finite(1.0));
        let Exponent::Finite(q) = d(Exponent::Finite(4.0)) else { panic!() };
        assert!((q - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn dual_is_involution() {
        // exact up to rounding of the two reciprocals
        for p in [1.0, 1.5, 2.0, 3.0, 4.0, 6.0, 7.3] {
            let s = SpaceSpec::lp(p, 5).unwrap();
            let back = s.dual().dual();
            assert_eq!(back.dimension, 5);
            let q = back.exponent.as_finite().unwrap();
            assert!((q - p).abs() <= 4.0 * f64::EPSILON * p, "p={p}: {q}");
        }
        let s = SpaceSpec::linf(3).unwrap();
        assert_eq!(s.dual().dual(), s);
    }

    #[test]
    fn projection_examples() {
        let p = SpaceSpec::lp(2.0, 2).unwrap().project_to_sphere(&v(&[3.0, 4.0])).unwrap();
        assert!((p.coords[0] - 0.6).abs() < 1e-15 && (p.coords[1] - 0.8).abs() < 1e-15);
        let p = SpaceSpec::lp(1.0, 2).unwrap().project_to_sphere(&v(&[1.0, 1.0])).unwrap();
        assert_eq!(p.coords, vec![0.5, 0.5]);
        let p = SpaceSpec::linf(2).unwrap().project_to_sphere(&v(&[2.0, 1.0])).unwrap();
        assert_eq!(p.coords, vec![1.0, 0.5]);
        assert!(matches!(
            SpaceSpec::linf(2).unwrap().project_to_sphere(&v(&[0.0, 0.0])),
            Err(Error::ZeroVector)
        ));
    }

    #[test]
    fn sampling_is_deterministic_and_on_sphere() {
        for exponent in [Exponent::Finite(1.0), Exponent::Finite(3.0), Exponent::Infinity] {
            let s = SpaceSpec::new(exponent, 4).unwrap();
            assert_eq!(s.sample_sphere(7), s.sample_sphere(7));
            for seed in 0..100 {
                let x = s.sample_sphere(seed);
                assert!((s.norm(&x).unwrap() - 1.0).abs() <= 1e-12);
            }
        }
        // pinned pair: seeds 1 and 2 differ
        let s = SpaceSpec::lp(2.0, 3).unwrap();
        assert_ne!(s.sample_sphere(1), s.sample_sphere(2));
    }

    #[test]
    fn extreme_point_examples() {
        let ExtremePoints::Finite(l1) = SpaceSpec::lp(1.0, 2).unwrap().extreme_points() else {
            panic!()
        };
        assert_eq!(
            l1,
            vec![v(&[1.0, 0.0]), v(&[-1.0, 0.0]), v(&[0.0, 1.0]), v(&[0.0, -1.0])]
        );
        let ExtremePoints::Finite(linf) = SpaceSpec::linf(2).unwrap().extreme_points() else {
            panic!()
        };
        assert_eq!(linf.len(), 4);
        for pt in [[1.0, 1.0], [1.0, -1.0], [-1.0, 1.0], [-1.0, -1.0]] {
            assert!(linf.contains(&v(&pt)));
        }
        assert_eq!(SpaceSpec::lp(3.0, 2).unwrap().extreme_points(), ExtremePoints::Unsupported);
    }

    #[test]
    fn extreme_points_unit_and_symmetric() {
        for s in [SpaceSpec::lp(1.0, 4).unwrap(), SpaceSpec::linf(4).unwrap()] {
            let ExtremePoints::Finite(pts) = s.extreme_points() else { panic!() };
            for x in &pts {
                assert_eq!(s.norm(x).unwrap(), 1.0);
                assert!(pts.contains(&x.scaled(-1.0)));
            }
            assert_eq!(s.extreme_representatives().unwrap().len(), pts.len() / 2);
        }
    }

    #[test]
    fn tuple_norm_examples() {
        let s = SpaceSpec::lp(2.0, 2).unwrap();
        let t = VectorTuple::from_rows(&[&[1.0, 0.0], &[0.0, 1.0]]).unwrap();
        assert!((s.tuple_l2_norm(&t).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        let z = VectorTuple::from_rows(&[&[0.0, 0.0], &[0.0, 0.0]]).unwrap();
        assert_eq!(s.tuple_l2_norm(&z).unwrap(), 0.0);
        let s1 = SpaceSpec::lp(1.0, 2).unwrap();
        let t = VectorTuple::repeated(&v(&[1.0, 0.0]), 3);
        assert!((s1.tuple_l2_norm(&t).unwrap() - 3f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn parse_space() {
        let s = SpaceSpec::parse("lp:p=inf,dim=4").unwrap();
        assert_eq!(s, SpaceSpec::linf(4).unwrap());
        let s = SpaceSpec::parse("lp:p=1.5,dim=3").unwrap();
        assert_eq!(s.to_string(), "lp:p=1.5,dim=3");
        assert!(SpaceSpec::parse("lp:p=0.5,dim=3").is_err());
        assert!(SpaceSpec::parse("hilbert:dim=3").is_err());
        assert!(SpaceSpec::parse("lp:p=2").is_err());
    }

    #[test]
    fn tiny_coordinates_do_not_underflow() {
        let s = SpaceSpec::lp(3.0, 2).unwrap();
        let n = s.norm(&v(&[1e-310, 0.0])).unwrap();
        assert!((n / 1e-310 - 1.0).abs() < 1e-6);
    }

    fn exponents() -> impl Strategy<Value = Exponent> {
        prop_oneof![
            Just(Exponent::Finite(1.0)),
            (1.0f64..8.0).prop_map(Exponent::Finite),
            Just(Exponent::Infinity),
        ]
    }

    proptest! {
        #[test]
        fn homogeneity(e in exponents(), c in prop::collection::vec(-10.0f64..10.0, 3), lam in -100.0f64..100.0) {
            let s = SpaceSpec::new(e, 3).unwrap();
            let x = Vector::new(c);
            let lhs = s.norm(&x.scaled(lam)).unwrap();
            let rhs = lam.abs() * s.norm(&x).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(1e-300));
        }

        #[test]
        fn triangle(e in exponents(), a in prop::collection::vec(-10.0f64..10.0, 4), b in prop::collection::vec(-10.0f64..10.0, 4)) {
            let s = SpaceSpec::new(e, 4).unwrap();
            let x = Vector::new(a);
            let y = Vector::new(b);
            let sum = Vector::new(x.coords.iter().zip(&y.coords).map(|(p, q)| p + q).collect());
            prop_assert!(s.norm(&sum).unwrap() <= s.norm(&x).unwrap() + s.norm(&y).unwrap() + 1e-12);
        }
    }
}
