//! Estimation of the four constants as suprema / infima of `C^(n)`.
//!
//! * Upper modified constant on a polyhedral norm (`p ∈ {1, ∞}`): exact, by
//!   enumerating tuples of extreme points. The numerator of `C^(n)` is a sum
//!   of squared norms of linear images, hence convex, so its maximum over
//!   `B(X)^n` sits at a tuple of extreme points, all of which lie on `S(X)^n`.
//! * Everything else: multistart local search, seeded with the known
//!   extremal tuples. Suprema found this way are lower bounds of the true
//!   supremum and infima are upper bounds of the true infimum.
//!
//! Modified kinds search `S(X)^n`. Plain kinds search `S(l_n²(X))`, which is
//! enough because `C^(n)` is invariant under scaling of the whole tuple.
//!
//! Restart `r` draws from its own generator seeded by a splitmix hash of
//! `(seed, r)`; results are merged by value and then by restart index, so the
//! outcome does not depend on the number of worker threads.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functional::{
    add_grad_sq_norm, check_n, evaluate_cn, value_and_grad, DEFAULT_MAX_N, DEFAULT_SMOOTHING,
};
use crate::hadamard::{apply_tn, columns_scaled, SignMatrix};
use crate::space::{lp_norm, neumaier_sum, Exponent, SpaceSpec, Vector, VectorTuple};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConstantKind {
    Upper,
    Lower,
    UpperModified,
    LowerModified,
}

impl ConstantKind {
    pub const ALL: [ConstantKind; 4] = [
        ConstantKind::UpperModified,
        ConstantKind::Upper,
        ConstantKind::LowerModified,
        ConstantKind::Lower,
    ];

    pub fn is_upper(self) -> bool {
        matches!(self, ConstantKind::Upper | ConstantKind::UpperModified)
    }

    pub fn is_modified(self) -> bool {
        matches!(self, ConstantKind::UpperModified | ConstantKind::LowerModified)
    }

    pub fn direction(self) -> Direction {
        if self.is_upper() {
            Direction::Ascend
        } else {
            Direction::Descend
        }
    }

    pub fn domain(self) -> Domain {
        if self.is_modified() {
            Domain::ProductSphere
        } else {
            Domain::L2Sphere
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ConstantKind::Upper => "upper",
            ConstantKind::Lower => "lower",
            ConstantKind::UpperModified => "upper-modified",
            ConstantKind::LowerModified => "lower-modified",
        }
    }
}

impl fmt::Display for ConstantKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ConstantKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        ConstantKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown kind `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    ExtremeEnumeration,
    MultistartGradient,
    SeededCandidatesOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundStatus {
    Exact,
    LowerBoundOfSup,
    UpperBoundOfInf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    Ascend,
    Descend,
}

impl Direction {
    fn better(self, candidate: f64, incumbent: f64, slack: f64) -> bool {
        match self {
            Direction::Ascend => candidate > incumbent + slack,
            Direction::Descend => candidate < incumbent - slack,
        }
    }
}

/// Feasible set of a search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Domain {
    /// `S(X)^n`.
    ProductSphere,
    /// `S(l_n²(X))`.
    L2Sphere,
    /// `B(l_n²(X)) ∖ {0}`.
    L2Ball,
}

/// Which estimation route `estimate_constant` takes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodChoice {
    /// Enumeration when exact, multistart otherwise.
    #[default]
    Auto,
    Enumerate,
    Multistart,
    SeedsOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub max_iterations: usize,
    pub initial_step: f64,
    pub backtrack_factor: f64,
    pub min_step: f64,
    /// Stop a local search once `C^(n)` changes by less than this (relative).
    pub tolerance: f64,
    pub smoothing: f64,
    pub seed: u64,
    pub enumeration_budget: u64,
    pub max_n: usize,
    pub method: MethodChoice,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            restarts: 200,
            max_iterations: 500,
            initial_step: 0.25,
            backtrack_factor: 0.5,
            min_step: 1e-14,
            tolerance: 1e-10,
            smoothing: DEFAULT_SMOOTHING,
            seed: 0,
            enumeration_budget: 10_000_000,
            max_n: DEFAULT_MAX_N,
            method: MethodChoice::Auto,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.restarts == 0 {
            return bad("restarts must be >= 1");
        }
        if self.max_iterations == 0 {
            return bad("max-iterations must be >= 1");
        }
        for (name, v) in [
            ("initial step", self.initial_step),
            ("minimum step", self.min_step),
            ("tolerance", self.tolerance),
            ("smoothing", self.smoothing),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return bad(&format!("{name} must be positive"));
            }
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return bad("backtrack factor must lie in (0, 1)");
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_restarts(mut self, restarts: usize) -> Self {
        self.restarts = restarts;
        self
    }

    pub fn with_method(mut self, method: MethodChoice) -> Self {
        self.method = method;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantEstimate {
    pub kind: ConstantKind,
    pub value: f64,
    pub certificate: VectorTuple,
    pub method: Method,
    pub bound_status: BoundStatus,
    pub restarts_used: usize,
    pub iterations_total: u64,
    pub seed: u64,
}

/// Scale-invariant function of a tuple to be maximized or minimized.
pub trait Objective: Sync {
    fn value(&self, t: &VectorTuple) -> f64;

    /// `None` when the objective is not differentiable (polyhedral norms).
    fn value_and_grad(&self, t: &VectorTuple) -> Option<(f64, VectorTuple)>;
}

/// `C^(n)` itself.
pub struct CnObjective {
    pub space: SpaceSpec,
    pub smoothing: f64,
}

impl Objective for CnObjective {
    fn value(&self, t: &VectorTuple) -> f64 {
        evaluate_cn(&self.space, t).unwrap_or(f64::NAN)
    }

    fn value_and_grad(&self, t: &VectorTuple) -> Option<(f64, VectorTuple)> {
        if !self.space.exponent.is_smooth() {
            return None;
        }
        value_and_grad(&self.space, t, self.smoothing).ok()
    }
}

/// `‖T_n t‖²_{l²(X)} / ‖t‖²_{l²(X)}`, evaluated through the sign matrix.
pub struct OperatorObjective {
    space: SpaceSpec,
    matrix: SignMatrix,
    smoothing: f64,
}

impl OperatorObjective {
    pub fn new(space: SpaceSpec, matrix: SignMatrix) -> Self {
        Self { space, matrix, smoothing: DEFAULT_SMOOTHING }
    }

    fn parts(&self, t: &VectorTuple) -> Option<(VectorTuple, f64, f64)> {
        let image = apply_tn(&self.space, &self.matrix, t).ok()?;
        let num = neumaier_sum(image.vectors.iter().map(|y| self.norm(y).powi(2)));
        let den = neumaier_sum(t.vectors.iter().map(|x| self.norm(x).powi(2)));
        (den > 0.0).then_some((image, num, den))
    }

    fn norm(&self, v: &Vector) -> f64 {
        lp_norm(self.space.exponent, &v.coords)
    }
}

impl Objective for OperatorObjective {
    fn value(&self, t: &VectorTuple) -> f64 {
        self.parts(t).map_or(f64::NAN, |(_, num, den)| num / den)
    }

    fn value_and_grad(&self, t: &VectorTuple) -> Option<(f64, VectorTuple)> {
        let p = self.space.exponent.as_finite().filter(|p| *p > 1.0)?;
        let (image, num, den) = self.parts(t)?;
        let value = num / den;
        let d = self.space.dimension;
        let mut grads = vec![vec![0.0; d]; t.len()];
        let mut g = vec![0.0; d];
        for (row, y) in self.matrix.row_iter().zip(&image.vectors) {
            g.iter_mut().for_each(|c| *c = 0.0);
            add_grad_sq_norm(p, &y.coords, 1.0 / den, self.smoothing, &mut g);
            for (a, gj) in row.iter().zip(grads.iter_mut()) {
                let a = f64::from(*a);
                gj.iter_mut().zip(&g).for_each(|(o, c)| *o += a * c);
            }
        }
        for (gj, x) in grads.iter_mut().zip(&t.vectors) {
            add_grad_sq_norm(p, &x.coords, -value / den, self.smoothing, gj);
        }
        Some((value, VectorTuple { vectors: grads.into_iter().map(Vector::new).collect() }))
    }
}

/// The known extremal tuples, all on `S(X)^n`: the canonical basis (when
/// `d >= n`), an identical tuple, and the columns of `A_n` scaled by
/// `2^{−(n−1)/p}` (when `d >= 2^{n−1}`).
pub fn seeded_candidates(space: &SpaceSpec, n: usize) -> Vec<VectorTuple> {
    let d = space.dimension;
    let mut out = Vec::new();
    if d >= n {
        out.push(VectorTuple { vectors: (0..n).map(|i| space.basis(i)).collect() });
    }
    out.push(VectorTuple::repeated(&space.basis(0), n));
    if n < usize::BITS as usize && d >= 1 << (n - 1) {
        if let Ok(m) = SignMatrix::with_cap(n, usize::MAX) {
            let rows = m.rows() as f64;
            let scale = match space.exponent {
                Exponent::Finite(p) => rows.powf(-1.0 / p),
                Exponent::Infinity => 1.0,
            };
            let cols = columns_scaled(&m, scale);
            out.push(VectorTuple {
                vectors: cols
                    .vectors
                    .into_iter()
                    .map(|mut v| {
                        v.coords.resize(d, 0.0);
                        v
                    })
                    .collect(),
            });
        }
    }
    out
}

/// Moves `t` onto the domain; `None` if that is impossible (a zero vector on
/// the product sphere, or the zero tuple).
fn project(space: &SpaceSpec, t: &VectorTuple, domain: Domain) -> Option<VectorTuple> {
    match domain {
        Domain::ProductSphere => {
            let mut vectors = Vec::with_capacity(t.len());
            for v in &t.vectors {
                let norm = space.norm_unchecked(&v.coords);
                if !(norm > 0.0 && norm.is_finite()) {
                    return None;
                }
                vectors.push(v.scaled(1.0 / norm));
            }
            Some(VectorTuple { vectors })
        }
        Domain::L2Sphere | Domain::L2Ball => {
            let norm = space.tuple_l2_norm_unchecked(t);
            if !(norm > 0.0 && norm.is_finite()) {
                return None;
            }
            if domain == Domain::L2Ball && norm <= 1.0 {
                return Some(t.clone());
            }
            Some(t.scaled(1.0 / norm))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalSearchOutcome {
    pub tuple: VectorTuple,
    pub value: f64,
    pub iterations: u64,
    /// Objective value after every accepted step, starting with the start value.
    pub trace: Vec<f64>,
}

/// Relative slack below which a change is treated as a tie.
const TIE: f64 = 1e-13;

fn slack(v: f64) -> f64 {
    TIE * v.abs().max(1.0)
}

/// Local search for `C^(n)` on the domain of `kind`.
pub fn local_search(
    space: &SpaceSpec,
    start: &VectorTuple,
    direction: Direction,
    kind: ConstantKind,
    cfg: &OptimizerConfig,
) -> Result<VectorTuple> {
    let objective = CnObjective { space: *space, smoothing: cfg.smoothing };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    local_search_with(space, &objective, start, direction, kind.domain(), cfg, &mut rng)
        .map(|o| o.tuple)
}

/// Local search on an explicit domain, returning the full outcome.
pub fn local_search_with<O: Objective, R: Rng>(
    space: &SpaceSpec,
    objective: &O,
    start: &VectorTuple,
    direction: Direction,
    domain: Domain,
    cfg: &OptimizerConfig,
    rng: &mut R,
) -> Result<LocalSearchOutcome> {
    space.check_tuple(start)?;
    let x = project(space, start, domain).ok_or(Error::DegenerateTuple)?;
    Ok(if space.exponent.is_smooth() {
        gradient_search(space, objective, x, direction, domain, cfg)
    } else {
        compass_search(space, objective, x, direction, domain, cfg, rng)
    })
}

/// Projected gradient with backtracking. Steps are taken along the gradient
/// of `objective ∘ projection`, normalized to unit Euclidean length.
fn gradient_search<O: Objective>(
    space: &SpaceSpec,
    objective: &O,
    mut x: VectorTuple,
    direction: Direction,
    domain: Domain,
    cfg: &OptimizerConfig,
) -> LocalSearchOutcome {
    let sign = match direction {
        Direction::Ascend => 1.0,
        Direction::Descend => -1.0,
    };
    let mut f = objective.value(&x);
    let mut trace = vec![f];
    let mut step = cfg.initial_step;
    let mut iterations = 0u64;
    let mut stalls = 0;
    while (iterations as usize) < cfg.max_iterations {
        iterations += 1;
        let Some((_, mut g)) = objective.value_and_grad(&x) else { break };
        if domain == Domain::ProductSphere {
            tangent_on_product_sphere(space, &x, &mut g, cfg.smoothing);
        }
        let gnorm = g
            .vectors
            .iter()
            .flat_map(|v| &v.coords)
            .map(|c| c * c)
            .sum::<f64>()
            .sqrt();
        if !(gnorm > 1e-300 && gnorm.is_finite()) {
            break;
        }
        let mut accepted = None;
        while step >= cfg.min_step {
            let moved = VectorTuple {
                vectors: x
                    .vectors
                    .iter()
                    .zip(&g.vectors)
                    .map(|(xv, gv)| {
                        Vector::new(
                            xv.coords
                                .iter()
                                .zip(&gv.coords)
                                .map(|(a, b)| a + sign * step * b / gnorm)
                                .collect(),
                        )
                    })
                    .collect(),
            };
            if let Some(cand) = project(space, &moved, domain) {
                let fc = objective.value(&cand);
                if direction.better(fc, f, slack(f) * 1e-3) {
                    accepted = Some((cand, fc));
                    break;
                }
            }
            step *= cfg.backtrack_factor;
        }
        let Some((cand, fc)) = accepted else { break };
        let change = (fc - f).abs();
        x = cand;
        f = fc;
        trace.push(f);
        step = (step / cfg.backtrack_factor).min(1.0);
        if change <= cfg.tolerance * f.abs().max(1.0) {
            stalls += 1;
            if stalls >= 3 {
                break;
            }
        } else {
            stalls = 0;
        }
    }
    LocalSearchOutcome { tuple: x, value: f, iterations, trace }
}

/// Replaces `g_j` by the gradient of `x_j ↦ F(x_j/‖x_j‖)` at a unit `x_j`:
/// `g_j − <g_j, x_j> ∇‖x_j‖`.
fn tangent_on_product_sphere(space: &SpaceSpec, x: &VectorTuple, g: &mut VectorTuple, eps: f64) {
    let Some(p) = space.exponent.as_finite() else { return };
    for (gj, xj) in g.vectors.iter_mut().zip(&x.vectors) {
        let radial: f64 = gj.coords.iter().zip(&xj.coords).map(|(a, b)| a * b).sum();
        let norm = space.norm_unchecked(&xj.coords);
        // ∇‖x‖ = ∇‖x‖² / (2‖x‖)
        add_grad_sq_norm(p, &xj.coords, -radial / (2.0 * norm), eps, &mut gj.coords);
    }
}

/// Derivative-free search for polyhedral norms. Each sweep tries coordinate
/// moves on every direction vector, pivots toward random extreme points,
/// and (off the product sphere) moves of the radii `‖x_j‖` on the Euclidean
/// sphere. The step halves after a sweep without improvement.
fn compass_search<O: Objective, R: Rng>(
    space: &SpaceSpec,
    objective: &O,
    x: VectorTuple,
    direction: Direction,
    domain: Domain,
    cfg: &OptimizerConfig,
    rng: &mut R,
) -> LocalSearchOutcome {
    let n = x.len();
    let d = space.dimension;
    let radii_free = domain != Domain::ProductSphere;
    // tuple = (r_j u_j) with u_j ∈ S(X), r on the Euclidean unit sphere
    let mut radii: Vec<f64> = x.vectors.iter().map(|v| space.norm_unchecked(&v.coords)).collect();
    let mut dirs: Vec<Vector> = x
        .vectors
        .iter()
        .zip(&radii)
        .map(|(v, r)| if *r > 0.0 { v.scaled(1.0 / r) } else { space.sample_sphere_with(rng) })
        .collect();
    if radii_free {
        normalize_euclid(&mut radii);
    } else {
        radii.iter_mut().for_each(|r| *r = 1.0);
    }
    let assemble = |radii: &[f64], dirs: &[Vector]| VectorTuple {
        vectors: dirs.iter().zip(radii).map(|(u, r)| u.scaled(*r)).collect(),
    };
    let extreme = space.extreme_representatives().unwrap_or_default();

    let mut f = objective.value(&assemble(&radii, &dirs));
    let mut trace = vec![f];
    let mut step = cfg.initial_step.max(0.5);
    let mut iterations = 0u64;
    while (iterations as usize) < cfg.max_iterations && step >= cfg.min_step.max(1e-12) {
        iterations += 1;
        let f_start = f;
        for j in 0..n {
            // coordinate moves
            for i in 0..d {
                for s in [1.0, -1.0] {
                    let mut u = dirs[j].clone();
                    u.coords[i] += s * step;
                    try_direction(space, objective, &mut dirs, &radii, j, u, direction, &mut f);
                }
            }
            // pivots toward random extreme points
            for _ in 0..2 {
                if extreme.is_empty() {
                    break;
                }
                let v = &extreme[rng.random_range(0..extreme.len())];
                let s = if rng.random::<bool>() { 1.0 } else { -1.0 };
                let u = Vector::new(
                    dirs[j]
                        .coords
                        .iter()
                        .zip(&v.coords)
                        .map(|(a, b)| (1.0 - step.min(1.0)) * a + s * step.min(1.0) * b)
                        .collect(),
                );
                try_direction(space, objective, &mut dirs, &radii, j, u, direction, &mut f);
            }
            if radii_free {
                for s in [1.0, -1.0] {
                    let mut r = radii.clone();
                    r[j] = (r[j] + s * step).abs();
                    if normalize_euclid(&mut r) {
                        let fc = objective.value(&assemble(&r, &dirs));
                        if direction.better(fc, f, slack(f)) {
                            radii = r;
                            f = fc;
                        }
                    }
                }
            }
        }
        if f != f_start {
            trace.push(f);
        }
        let change = (f - f_start).abs();
        if change <= cfg.tolerance * f.abs().max(1.0) {
            step *= cfg.backtrack_factor;
        }
    }
    LocalSearchOutcome { tuple: assemble(&radii, &dirs), value: f, iterations, trace }
}

#[allow(clippy::too_many_arguments)]
fn try_direction<O: Objective>(
    space: &SpaceSpec,
    objective: &O,
    dirs: &mut [Vector],
    radii: &[f64],
    j: usize,
    u: Vector,
    direction: Direction,
    f: &mut f64,
) {
    let norm = space.norm_unchecked(&u.coords);
    if !(norm > 0.0) {
        return;
    }
    let u = u.scaled(1.0 / norm);
    let old = std::mem::replace(&mut dirs[j], u);
    let t = VectorTuple { vectors: dirs.iter().zip(radii).map(|(v, r)| v.scaled(*r)).collect() };
    let fc = objective.value(&t);
    if direction.better(fc, *f, slack(*f)) {
        *f = fc;
    } else {
        dirs[j] = old;
    }
}

fn normalize_euclid(r: &mut [f64]) -> bool {
    let norm = r.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        r.iter_mut().for_each(|x| *x /= norm);
        true
    } else {
        false
    }
}

/// SplitMix64 finalizer.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of restart `index` under master seed `seed`.
pub fn restart_seed(seed: u64, index: u64) -> u64 {
    splitmix64(splitmix64(seed) ^ index.wrapping_mul(0xD1B5_4A32_D192_ED03))
}

fn random_start<R: Rng>(space: &SpaceSpec, n: usize, domain: Domain, rng: &mut R) -> VectorTuple {
    let mut vectors: Vec<Vector> = (0..n).map(|_| space.sample_sphere_with(rng)).collect();
    if domain != Domain::ProductSphere {
        let mut radii: Vec<f64> =
            (0..n).map(|_| StandardNormal.sample(rng)).map(|g: f64| g.abs() + 1e-3).collect();
        normalize_euclid(&mut radii);
        if domain == Domain::L2Ball {
            let shrink = rng.random_range(0.1..1.0);
            radii.iter_mut().for_each(|r| *r *= shrink);
        }
        vectors = vectors.iter().zip(&radii).map(|(v, r)| v.scaled(*r)).collect();
    }
    VectorTuple { vectors }
}

struct Candidate {
    tuple: VectorTuple,
    value: f64,
    iterations: u64,
}

/// Best of `candidates` in order; later entries must win by more than a tie.
fn reduce(candidates: Vec<Candidate>, direction: Direction) -> Option<Candidate> {
    candidates.into_iter().filter(|c| c.value.is_finite()).reduce(|best, c| {
        if direction.better(c.value, best.value, slack(best.value) * 10.0) {
            Candidate { iterations: best.iterations + c.iterations, ..c }
        } else {
            Candidate { iterations: best.iterations + c.iterations, ..best }
        }
    })
}

/// Result of a multistart run before it is labelled with a kind.
pub struct SearchResult {
    pub tuple: VectorTuple,
    pub value: f64,
    pub restarts: usize,
    pub iterations: u64,
}

/// Multistart search: evaluates `seeds` as they are, then runs a local
/// search from each seed and from `cfg.restarts` random starts.
pub fn multistart<O: Objective>(
    space: &SpaceSpec,
    n: usize,
    objective: &O,
    direction: Direction,
    domain: Domain,
    seeds: &[VectorTuple],
    cfg: &OptimizerConfig,
) -> Result<SearchResult> {
    cfg.validate()?;
    let seeds: Vec<VectorTuple> = seeds.iter().filter_map(|s| project(space, s, domain)).collect();
    let mut pool: Vec<Candidate> = seeds
        .iter()
        .map(|t| Candidate { tuple: t.clone(), value: objective.value(t), iterations: 0 })
        .collect();
    let total = seeds.len() + cfg.restarts;
    let searched: Vec<Candidate> = (0..total)
        .into_par_iter()
        .map(|idx| {
            let mut rng = ChaCha8Rng::seed_from_u64(restart_seed(cfg.seed, idx as u64));
            let start = match seeds.get(idx) {
                Some(s) => s.clone(),
                None => random_start(space, n, domain, &mut rng),
            };
            match local_search_with(space, objective, &start, direction, domain, cfg, &mut rng) {
                Ok(o) => Candidate { tuple: o.tuple, value: o.value, iterations: o.iterations },
                Err(_) => Candidate { tuple: start, value: f64::NAN, iterations: 0 },
            }
        })
        .collect();
    pool.extend(searched);
    let best = reduce(pool, direction).ok_or(Error::DegenerateTuple)?;
    Ok(SearchResult { tuple: best.tuple, value: best.value, restarts: total, iterations: best.iterations })
}

/// Maximizes a general objective over `S(l_n²(X))`.
pub fn maximize_objective<O: Objective>(
    space: &SpaceSpec,
    n: usize,
    objective: &O,
    cfg: &OptimizerConfig,
) -> Result<ConstantEstimate> {
    check_n(n, cfg.max_n)?;
    let seeds = seeded_candidates(space, n);
    let r = multistart(space, n, objective, Direction::Ascend, Domain::L2Sphere, &seeds, cfg)?;
    Ok(ConstantEstimate {
        kind: ConstantKind::Upper,
        value: r.value,
        certificate: r.tuple,
        method: Method::MultistartGradient,
        bound_status: BoundStatus::LowerBoundOfSup,
        restarts_used: r.restarts,
        iterations_total: r.iterations,
        seed: cfg.seed,
    })
}

fn inexact_status(kind: ConstantKind) -> BoundStatus {
    if kind.is_upper() {
        BoundStatus::LowerBoundOfSup
    } else {
        BoundStatus::UpperBoundOfInf
    }
}

/// Number of multisets of size `n` drawn from `m` items.
fn multiset_count(m: u64, n: u64) -> u128 {
    let mut acc: u128 = 1;
    for i in 0..n {
        acc = acc * u128::from(m + i) / u128::from(i + 1);
    }
    acc
}

/// Exact upper modified constant for `p ∈ {1, ∞}` by enumerating tuples of
/// extreme points.
///
/// `C^(n)` is invariant under `x_j ↦ −x_j` and under permutations, so only
/// nondecreasing index sequences over one representative per antipodal pair
/// are visited. The seeded candidates are scored first and keep ties.
pub fn enumerate_extreme(
    space: &SpaceSpec,
    n: usize,
    kind: ConstantKind,
    cfg: &OptimizerConfig,
) -> Result<ConstantEstimate> {
    check_n(n, cfg.max_n)?;
    if kind != ConstantKind::UpperModified {
        return Err(Error::InvalidConfig(format!(
            "extreme-point enumeration is exact only for upper-modified, not {kind}"
        )));
    }
    let reps = space
        .extreme_representatives()
        .ok_or_else(|| Error::UnsupportedNorm(space.exponent.to_string()))?;
    let needed = multiset_count(reps.len() as u64, n as u64);
    if needed > u128::from(cfg.enumeration_budget) {
        return Err(Error::BudgetExceeded { needed, budget: cfg.enumeration_budget });
    }
    let objective = CnObjective { space: *space, smoothing: cfg.smoothing };
    let mut best: Option<(f64, VectorTuple)> = None;
    for seed in seeded_candidates(space, n) {
        let v = objective.value(&seed);
        if best.as_ref().is_none_or(|(b, _)| v > b + slack(*b) * 10.0) {
            best = Some((v, seed));
        }
    }
    let mut idx = vec![0usize; n];
    let mut evaluations = 0u64;
    let mut t = VectorTuple { vectors: vec![reps[0].clone(); n] };
    loop {
        for (slot, i) in t.vectors.iter_mut().zip(&idx) {
            slot.coords.copy_from_slice(&reps[*i].coords);
        }
        let v = objective.value(&t);
        evaluations += 1;
        if best.as_ref().is_none_or(|(b, _)| v > b + slack(*b) * 10.0) {
            best = Some((v, t.clone()));
        }
        // next nondecreasing sequence
        let Some(pos) = (0..n).rev().find(|&k| idx[k] + 1 < reps.len()) else { break };
        let next = idx[pos] + 1;
        idx[pos..].iter_mut().for_each(|i| *i = next);
    }
    let (value, certificate) = best.ok_or(Error::DegenerateTuple)?;
    Ok(ConstantEstimate {
        kind,
        value,
        certificate,
        method: Method::ExtremeEnumeration,
        bound_status: BoundStatus::Exact,
        restarts_used: 0,
        iterations_total: evaluations,
        seed: cfg.seed,
    })
}

fn seeds_only(space: &SpaceSpec, n: usize, kind: ConstantKind, cfg: &OptimizerConfig) -> Result<ConstantEstimate> {
    let objective = CnObjective { space: *space, smoothing: cfg.smoothing };
    let pool = seeded_candidates(space, n)
        .into_iter()
        .filter_map(|s| project(space, &s, kind.domain()))
        .map(|t| Candidate { value: objective.value(&t), tuple: t, iterations: 0 })
        .collect();
    let best = reduce(pool, kind.direction()).ok_or(Error::DegenerateTuple)?;
    Ok(ConstantEstimate {
        kind,
        value: best.value,
        certificate: best.tuple,
        method: Method::SeededCandidatesOnly,
        bound_status: inexact_status(kind),
        restarts_used: 0,
        iterations_total: 0,
        seed: cfg.seed,
    })
}

/// Estimate of one of the four constants of `space` at order `n`.
pub fn estimate_constant(
    space: &SpaceSpec,
    n: usize,
    kind: ConstantKind,
    cfg: &OptimizerConfig,
) -> Result<ConstantEstimate> {
    estimate_on_domain(space, n, kind, kind.domain(), cfg)
}

/// As [`estimate_constant`] but on an explicit domain (plain kinds may use
/// either `L2Sphere` or `L2Ball`).
pub fn estimate_on_domain(
    space: &SpaceSpec,
    n: usize,
    kind: ConstantKind,
    domain: Domain,
    cfg: &OptimizerConfig,
) -> Result<ConstantEstimate> {
    cfg.validate()?;
    check_n(n, cfg.max_n)?;
    if kind.is_modified() != (domain == Domain::ProductSphere) {
        return Err(Error::InvalidConfig(format!("domain {domain:?} does not match kind {kind}")));
    }
    let polyhedral = space.exponent.is_polyhedral();
    match cfg.method {
        MethodChoice::Enumerate => return enumerate_extreme(space, n, kind, cfg),
        MethodChoice::SeedsOnly => return seeds_only(space, n, kind, cfg),
        MethodChoice::Auto if kind == ConstantKind::UpperModified && polyhedral => {
            match enumerate_extreme(space, n, kind, cfg) {
                Err(Error::BudgetExceeded { .. }) => {}
                other => return other,
            }
        }
        _ => {}
    }
    let mut seeds = seeded_candidates(space, n);
    if kind == ConstantKind::Upper && polyhedral && cfg.method == MethodChoice::Auto {
        if let Ok(e) = enumerate_extreme(space, n, ConstantKind::UpperModified, cfg) {
            seeds.push(e.certificate);
        }
    }
    // C^(n)(x_1, …, x_{n−1}, 0) = C^(n−1)(x_1, …, x_{n−1}), so the order n−1
    // optimum padded with a zero vector is feasible and keeps its value
    let (mut restarts, mut iterations) = (0, 0);
    if !kind.is_modified() && n > 2 {
        let prev = estimate_on_domain(space, n - 1, kind, domain, cfg)?;
        restarts += prev.restarts_used;
        iterations += prev.iterations_total;
        let mut padded = prev.certificate;
        padded.vectors.push(space.zero());
        seeds.push(padded);
    }
    let objective = CnObjective { space: *space, smoothing: cfg.smoothing };
    let r = multistart(space, n, &objective, kind.direction(), domain, &seeds, cfg)?;
    Ok(ConstantEstimate {
        kind,
        value: r.value,
        certificate: r.tuple,
        method: Method::MultistartGradient,
        bound_status: inexact_status(kind),
        restarts_used: restarts + r.restarts,
        iterations_total: iterations + r.iterations,
        seed: cfg.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> OptimizerConfig {
        OptimizerConfig { restarts: 20, max_iterations: 200, ..Default::default() }
    }

    #[test]
    fn config_validation() {
        assert!(OptimizerConfig::default().validate().is_ok());
        assert!(OptimizerConfig { restarts: 0, ..Default::default() }.validate().is_err());
        assert!(OptimizerConfig { tolerance: 0.0, ..Default::default() }.validate().is_err());
        assert!(OptimizerConfig { backtrack_factor: 1.0, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn kind_names_roundtrip() {
        for k in ConstantKind::ALL {
            assert_eq!(k.as_str().parse::<ConstantKind>().unwrap(), k);
            assert_eq!(serde_json::to_string(&k).unwrap(), format!("\"{k}\""));
        }
    }

    #[test]
    fn seeded_candidate_sets() {
        let l3 = SpaceSpec::lp(3.0, 3).unwrap();
        let c = seeded_candidates(&l3, 3);
        assert_eq!(c.len(), 2);
        assert_eq!(c[0].vectors[2], l3.basis(2));
        assert_eq!(c[1], VectorTuple::repeated(&l3.basis(0), 3));

        let l4 = SpaceSpec::lp(3.0, 4).unwrap();
        let c = seeded_candidates(&l4, 3);
        assert_eq!(c.len(), 3);
        for v in &c[2].vectors {
            assert!((l4.norm(v).unwrap() - 1.0).abs() < 1e-15);
        }

        let l1 = SpaceSpec::lp(3.0, 1).unwrap();
        let c = seeded_candidates(&l1, 2);
        assert_eq!(c, vec![VectorTuple::repeated(&l1.basis(0), 2)]);
    }

    #[test]
    fn enumeration_examples() {
        let cfg = OptimizerConfig::default();
        let e = enumerate_extreme(&SpaceSpec::lp(1.0, 3).unwrap(), 3, ConstantKind::UpperModified, &cfg)
            .unwrap();
        assert_eq!(e.value, 3.0);
        assert_eq!(e.bound_status, BoundStatus::Exact);
        let s = SpaceSpec::lp(1.0, 3).unwrap();
        assert_eq!(e.certificate, VectorTuple::new((0..3).map(|i| s.basis(i)).collect()).unwrap());

        let e = enumerate_extreme(&SpaceSpec::linf(2).unwrap(), 2, ConstantKind::UpperModified, &cfg)
            .unwrap();
        assert_eq!(e.value, 2.0);
        assert_eq!(e.certificate, VectorTuple::from_rows(&[&[1.0, 1.0], &[1.0, -1.0]]).unwrap());
    }

    #[test]
    fn enumeration_errors() {
        let cfg = OptimizerConfig::default();
        let l3 = SpaceSpec::lp(3.0, 2).unwrap();
        assert!(matches!(
            enumerate_extreme(&l3, 2, ConstantKind::UpperModified, &cfg),
            Err(Error::UnsupportedNorm(_))
        ));
        let big = SpaceSpec::linf(12).unwrap();
        let small = OptimizerConfig { enumeration_budget: 1000, ..cfg.clone() };
        assert!(matches!(
            enumerate_extreme(&big, 3, ConstantKind::UpperModified, &small),
            Err(Error::BudgetExceeded { .. })
        ));
        assert!(enumerate_extreme(&SpaceSpec::linf(2).unwrap(), 2, ConstantKind::Lower, &cfg).is_err());
    }

    #[test]
    fn enumeration_matches_unreduced_brute_force() {
        // brute force over all (2d)^n tuples of signed extreme points
        let s = SpaceSpec::lp(1.0, 2).unwrap();
        let crate::space::ExtremePoints::Finite(pts) = s.extreme_points() else { panic!() };
        let mut brute = f64::MIN;
        for a in &pts {
            for b in &pts {
                for c in &pts {
                    let t = VectorTuple::new(vec![a.clone(), b.clone(), c.clone()]).unwrap();
                    brute = brute.max(evaluate_cn(&s, &t).unwrap());
                }
            }
        }
        let e = enumerate_extreme(&s, 3, ConstantKind::UpperModified, &OptimizerConfig::default())
            .unwrap();
        assert_eq!(e.value, brute);
    }

    #[test]
    fn multiset_counts() {
        assert_eq!(multiset_count(4, 2), 10);
        assert_eq!(multiset_count(8, 3), 120);
    }

    #[test]
    fn restart_seeds_are_distinct() {
        let seeds: std::collections::HashSet<u64> = (0..1000).map(|i| restart_seed(42, i)).collect();
        assert_eq!(seeds.len(), 1000);
        assert_ne!(restart_seed(1, 0), restart_seed(2, 0));
    }

    #[test]
    fn hilbert_upper_is_one() {
        let s = SpaceSpec::lp(2.0, 2).unwrap();
        let e = estimate_constant(&s, 2, ConstantKind::Upper, &quick()).unwrap();
        assert!((e.value - 1.0).abs() < 1e-10);
        assert_eq!(e.bound_status, BoundStatus::LowerBoundOfSup);
    }

    #[test]
    fn identical_start_is_stationary_on_hilbert() {
        let s = SpaceSpec::lp(2.0, 3).unwrap();
        let x = s.sample_sphere(5);
        let start = VectorTuple::repeated(&x, 3);
        let out = local_search(&s, &start, Direction::Ascend, ConstantKind::UpperModified, &quick())
            .unwrap();
        assert!((evaluate_cn(&s, &out).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn domain_mismatch_rejected() {
        let s = SpaceSpec::lp(3.0, 2).unwrap();
        assert!(estimate_on_domain(&s, 2, ConstantKind::Upper, Domain::ProductSphere, &quick()).is_err());
        assert!(estimate_on_domain(&s, 2, ConstantKind::LowerModified, Domain::L2Ball, &quick()).is_err());
    }
}
