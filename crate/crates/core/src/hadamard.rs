//! The recursive sign matrix
//!
//! ```text
//! A₂ = [ 1  1 ]      A_n = [ A_{n−1}   1 ]
//!      [ 1 −1 ]            [ A_{n−1}  −1 ]
//! ```
//!
//! of size `2^{n−1} × n`, the operator `T_n x = A_n x` from `l_n²(X)` to
//! `l_{2^{n−1}}²(X)`, and the `l^∞` tuple made of its columns.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::functional::{check_n, DEFAULT_MAX_N};
use crate::optimizer::{self, ConstantEstimate, OptimizerConfig};
use crate::space::{SpaceSpec, Vector, VectorTuple};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SignMatrix {
    n: usize,
    /// Row-major, `2^{n−1}` rows of `n` entries.
    entries: Vec<i8>,
}

impl SignMatrix {
    pub fn new(n: usize) -> Result<Self> {
        Self::with_cap(n, DEFAULT_MAX_N)
    }

    pub fn with_cap(n: usize, cap: usize) -> Result<Self> {
        check_n(n, cap)?;
        let mut m = SignMatrix { n: 2, entries: vec![1, 1, 1, -1] };
        while m.n < n {
            m = m.extend();
        }
        Ok(m)
    }

    fn extend(&self) -> SignMatrix {
        let cols = self.n + 1;
        let mut entries = Vec::with_capacity(2 * self.rows() * cols);
        for last in [1i8, -1] {
            for row in self.entries.chunks(self.n) {
                entries.extend_from_slice(row);
                entries.push(last);
            }
        }
        SignMatrix { n: cols, entries }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> usize {
        1 << (self.n - 1)
    }

    pub fn get(&self, i: usize, j: usize) -> i8 {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[i8] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[i8]> {
        self.entries.chunks(self.n)
    }

    pub fn column(&self, j: usize) -> Vec<i8> {
        (0..self.rows()).map(|i| self.get(i, j)).collect()
    }

    /// `Aᵀ A` in 64-bit integers.
    pub fn gram(&self) -> Vec<Vec<i64>> {
        let mut g = vec![vec![0i64; self.n]; self.n];
        for row in self.row_iter() {
            for (a, ga) in row.iter().zip(g.iter_mut()) {
                for (b, gab) in row.iter().zip(ga.iter_mut()) {
                    *gab += i64::from(*a) * i64::from(*b);
                }
            }
        }
        g
    }

    /// `A v` for a real `n`-vector.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.row_iter()
            .map(|row| row.iter().zip(v).map(|(a, x)| f64::from(*a) * x).sum())
            .collect()
    }

    /// `Aᵀ w` for a real `2^{n−1}`-vector.
    pub fn apply_transpose(&self, w: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n];
        for (row, wi) in self.row_iter().zip(w) {
            out.iter_mut().zip(row).for_each(|(o, a)| *o += f64::from(*a) * wi);
        }
        out
    }

    /// `2^{1−n} Aᵀ (A v)`, which is `v` by the Gram identity.
    pub fn pseudo_inverse_roundtrip(&self, v: &[f64]) -> Vec<f64> {
        let scale = 1.0 / self.rows() as f64;
        self.apply_transpose(&self.apply(v)).into_iter().map(|x| x * scale).collect()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        for row in self.row_iter() {
            let line: Vec<String> = row.iter().map(i8::to_string).collect();
            s.push_str(&line.join(","));
            s.push('\n');
        }
        s
    }

    pub fn to_rows(&self) -> Vec<Vec<i8>> {
        self.row_iter().map(<[i8]>::to_vec).collect()
    }
}

/// `T_n t`: entry `i` is `Σ_j a_ij x_j`.
pub fn apply_tn(space: &SpaceSpec, m: &SignMatrix, t: &VectorTuple) -> Result<VectorTuple> {
    space.check_tuple(t)?;
    if t.len() != m.n() {
        return Err(Error::LengthMismatch { expected: m.n(), found: t.len() });
    }
    let d = space.dimension;
    let vectors = m
        .row_iter()
        .map(|row| {
            let mut acc = vec![0.0; d];
            for (a, x) in row.iter().zip(&t.vectors) {
                let a = f64::from(*a);
                acc.iter_mut().zip(&x.coords).for_each(|(o, c)| *o += a * c);
            }
            Vector::new(acc)
        })
        .collect();
    Ok(VectorTuple { vectors })
}

/// Columns of `A_n` as vectors of `l_{2^{n−1}}^∞`.
pub fn extremal_linf_tuple(n: usize) -> Result<VectorTuple> {
    let m = SignMatrix::new(n)?;
    Ok(columns_scaled(&m, 1.0))
}

pub(crate) fn columns_scaled(m: &SignMatrix, scale: f64) -> VectorTuple {
    VectorTuple {
        vectors: (0..m.n())
            .map(|j| Vector::new(m.column(j).into_iter().map(|a| scale * f64::from(a)).collect()))
            .collect(),
    }
}

/// Estimate of `‖T_n‖ = sup { ‖T_n t‖ : t ∈ S(l_n²(X)) }`.
///
/// The returned estimate carries `value = ‖T_n‖` and the maximizing tuple.
pub fn operator_norm_tn(
    space: &SpaceSpec,
    n: usize,
    cfg: &OptimizerConfig,
) -> Result<ConstantEstimate> {
    let m = SignMatrix::with_cap(n, cfg.max_n)?;
    let objective = optimizer::OperatorObjective::new(*space, m);
    let mut est = optimizer::maximize_objective(space, n, &objective, cfg)?;
    est.value = est.value.sqrt();
    Ok(est)
}
