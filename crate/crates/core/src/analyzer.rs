//! Property suites built on the optimizer and the closed forms.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::closed_form::{self, OracleValue};
use crate::error::{Error, Result};
use crate::functional::{evaluate_cn, min_sign_combination, signed_combination_norms};
use crate::optimizer::{
    estimate_constant, BoundStatus, ConstantEstimate, ConstantKind, Method, OptimizerConfig,
};
use crate::space::{Exponent, SpaceSpec, Vector, VectorTuple};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    Skip,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Expected {
    Value { value: f64 },
    Interval { lo: f64, hi: f64 },
    AtLeast { bound: f64 },
    AtMost { bound: f64 },
    None,
}

impl From<OracleValue> for Expected {
    fn from(o: OracleValue) -> Self {
        match o {
            OracleValue::Point { value } => Expected::Value { value },
            OracleValue::Interval { lo, hi } => Expected::Interval { lo, hi },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub status: Status,
    pub passed: bool,
    pub observed: Vec<f64>,
    pub expected: Expected,
    pub tolerance: f64,
    pub provenance: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    fn new(
        name: impl Into<String>,
        passed: bool,
        observed: Vec<f64>,
        expected: Expected,
        tolerance: f64,
        provenance: impl Into<String>,
    ) -> Self {
        Check {
            name: name.into(),
            status: if passed { Status::Pass } else { Status::Fail },
            passed,
            observed,
            expected,
            tolerance,
            provenance: provenance.into(),
            note: None,
        }
    }

    fn skipped(name: impl Into<String>, provenance: impl Into<String>, note: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            status: Status::Skip,
            passed: false,
            observed: Vec::new(),
            expected: Expected::None,
            tolerance: 0.0,
            provenance: provenance.into(),
            note: Some(note.into()),
        }
    }

    fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

/// One line of the oracle-versus-optimizer table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TableRow {
    pub n: usize,
    pub p: Exponent,
    pub d: usize,
    pub kind: ConstantKind,
    pub status: Status,
    pub pass: bool,
    pub oracle: Option<OracleValue>,
    pub estimate: Option<f64>,
    /// Distance from the estimate to the oracle value or interval.
    pub gap: Option<f64>,
    /// Where the estimate lands in an oracle interval, 0 = lower end.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interval_position: Option<f64>,
    pub tolerance: f64,
    pub method: Option<Method>,
    pub bound_status: Option<BoundStatus>,
    pub oracle_provenance: Option<String>,
    pub estimate_provenance: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub total: usize,
    pub passed: usize,
    pub failed: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub suite: String,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub table: Vec<TableRow>,
    pub summary: Summary,
}

impl CheckReport {
    pub fn new(suite: impl Into<String>, checks: Vec<Check>, table: Vec<TableRow>) -> Self {
        let mut summary = Summary::default();
        let statuses = checks.iter().map(|c| c.status).chain(table.iter().map(|r| r.status));
        for s in statuses {
            summary.total += 1;
            match s {
                Status::Pass => summary.passed += 1,
                Status::Fail => summary.failed += 1,
                Status::Skip => summary.skipped += 1,
            }
        }
        CheckReport { suite: suite.into(), checks, table, summary }
    }

    pub fn all_passed(&self) -> bool {
        self.summary.failed == 0
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub fn estimate_provenance(e: &ConstantEstimate) -> String {
    let method = match e.method {
        Method::ExtremeEnumeration => "extreme-point enumeration",
        Method::MultistartGradient => "multistart search",
        Method::SeededCandidatesOnly => "seeded candidates",
    };
    let bound = match e.bound_status {
        BoundStatus::Exact => "exact",
        BoundStatus::LowerBoundOfSup => "lower bound of the sup",
        BoundStatus::UpperBoundOfInf => "upper bound of the inf",
    };
    format!("estimate: {method}, {bound}")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    CertifiedYes,
    CertifiedNo,
    Undetermined,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NonLn1Detection {
    pub n: usize,
    pub verdict: Verdict,
    /// `1 − √(C̄_m/n)`, uniform for unit vectors.
    pub delta_james: Option<f64>,
    /// `1 − √(U/n)` with `U` a closed-form upper bound of the upper constant;
    /// `min_θ ‖x₁ + Σθ_j x_j‖ ≤ √n(1 − δ)` on `S(l_n²(X))`.
    pub delta_sphere: Option<f64>,
    /// The certified value of `C̄_m` behind a certified verdict.
    pub certified_value: Option<f64>,
    pub certification: String,
    /// Same question decided from the upper (non-modified) constant.
    pub plain_verdict: Verdict,
    pub estimate: ConstantEstimate,
}

/// Slack below `n` within which a constant counts as equal to `n`.
pub const VERDICT_TOL: f64 = 1e-9;

/// Is `space` uniformly non-`l_n^1`, decided through the upper modified
/// constant. Only exact enumeration or a closed form certify `C̄_m < n`;
/// a search that reaches `n` certifies the opposite.
pub fn detect_non_ln1(space: &SpaceSpec, n: usize, cfg: &OptimizerConfig) -> Result<NonLn1Detection> {
    let estimate = estimate_constant(space, n, ConstantKind::UpperModified, cfg)?;
    let nf = n as f64;
    let closed = closed_form::upper_modified_lp(n, space.exponent, space.dimension)
        .ok()
        .and_then(|c| c.value.point().map(|v| (v, c.provenance)));

    let (certified_value, certification) = if estimate.bound_status == BoundStatus::Exact {
        (Some(estimate.value), "exact extreme-point enumeration".to_string())
    } else if let Some((v, prov)) = closed {
        (Some(v), format!("closed form: {prov}"))
    } else {
        (None, "multistart lower bound only".to_string())
    };

    let (verdict, delta_james) = match certified_value {
        Some(c) if c < nf - VERDICT_TOL => (Verdict::CertifiedYes, Some(1.0 - (c / nf).sqrt())),
        Some(_) => (Verdict::CertifiedNo, None),
        None if estimate.value >= nf - VERDICT_TOL => (Verdict::CertifiedNo, None),
        None => (Verdict::Undetermined, None),
    };

    let plain_upper = closed_form::upper_nj_lp(n, space.exponent, space.dimension)
        .ok()
        .map(|c| c.value.bounds().1);
    let delta_sphere = match (verdict, plain_upper) {
        (Verdict::CertifiedYes, Some(u)) if u < nf - VERDICT_TOL => Some(1.0 - (u / nf).sqrt()),
        _ => None,
    };

    let plain_verdict = match plain_upper {
        Some(u) if u < nf - VERDICT_TOL => Verdict::CertifiedYes,
        _ => {
            let plain = estimate_constant(space, n, ConstantKind::Upper, cfg)?;
            if plain.value >= nf - VERDICT_TOL {
                Verdict::CertifiedNo
            } else {
                Verdict::Undetermined
            }
        }
    };

    Ok(NonLn1Detection {
        n,
        verdict,
        delta_james,
        delta_sphere,
        certified_value,
        certification,
        plain_verdict,
        estimate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BConvexity {
    Yes,
    /// Certified `C̄_m^(k) = k` for every `2 <= k <= n_max`.
    NoWitness,
    Undetermined,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BConvexityScan {
    pub b_convex: BConvexity,
    pub witness_n: Option<usize>,
    pub detections: Vec<NonLn1Detection>,
}

/// Smallest `n <= n_max` with a certified `C̄_m^(n) < n`.
pub fn b_convexity_scan(space: &SpaceSpec, n_max: usize, cfg: &OptimizerConfig) -> Result<BConvexityScan> {
    if n_max < 2 || n_max > cfg.max_n {
        return Err(Error::NOutOfRange { n: n_max, min: 2, max: cfg.max_n });
    }
    let mut detections = Vec::new();
    let mut all_no = true;
    for n in 2..=n_max {
        let det = detect_non_ln1(space, n, cfg)?;
        let verdict = det.verdict;
        detections.push(det);
        match verdict {
            Verdict::CertifiedYes => {
                return Ok(BConvexityScan { b_convex: BConvexity::Yes, witness_n: Some(n), detections });
            }
            Verdict::CertifiedNo => {}
            Verdict::Undetermined => all_no = false,
        }
    }
    let b_convex = if all_no { BConvexity::NoWitness } else { BConvexity::Undetermined };
    Ok(BConvexityScan { b_convex, witness_n: None, detections })
}

/// Slack allowed for a non-exact estimate in a duality product.
pub const DUALITY_ESTIMATE_TOL: f64 = 1e-6;

fn estimate_tol(e: &ConstantEstimate) -> f64 {
    if e.bound_status == BoundStatus::Exact {
        0.0
    } else {
        DUALITY_ESTIMATE_TOL
    }
}

/// Both products `C̲(l_d^q)·C̄(l_d^p)` and `C̲(l_d^p)·C̄(l_d^q)` must be at
/// least `1 − tol`, with `tol = tol_upper + tol_lower + 1e−8`.
pub fn duality_check(p: Exponent, d: usize, n: usize, cfg: &OptimizerConfig) -> Result<CheckReport> {
    let x = SpaceSpec::new(p, d)?;
    let xs = x.dual();
    let mut checks = Vec::new();
    for (lower_space, upper_space) in [(xs, x), (x, xs)] {
        let lo = estimate_constant(&lower_space, n, ConstantKind::Lower, cfg)?;
        let up = estimate_constant(&upper_space, n, ConstantKind::Upper, cfg)?;
        let tol = estimate_tol(&up) + estimate_tol(&lo) + 1e-8;
        let product = lo.value * up.value;
        let name = format!(
            "duality n={n}: lower(lp:p={}) * upper(lp:p={})",
            lower_space.exponent, upper_space.exponent
        );
        checks.push(
            Check::new(
                name,
                product >= 1.0 - tol,
                vec![product, lo.value, up.value],
                Expected::AtLeast { bound: 1.0 },
                tol,
                "lower constant of the dual space times upper constant is at least 1",
            )
            .with_note(format!(
                "observed = [product, lower, upper]; lower {}; upper {}",
                estimate_provenance(&lo),
                estimate_provenance(&up)
            )),
        );
    }
    Ok(CheckReport::new(format!("duality lp:p={p},dim={d} n={n}"), checks, Vec::new()))
}

fn random_tuple<R: Rng>(space: &SpaceSpec, n: usize, rng: &mut R) -> VectorTuple {
    let vectors = (0..n)
        .map(|_| {
            let r = (rng.random_range(-3.0..3.0f64)).exp();
            space.sample_sphere_with(rng).scaled(r)
        })
        .collect();
    VectorTuple { vectors }
}

fn norms(space: &SpaceSpec, t: &VectorTuple) -> Vec<f64> {
    t.vectors.iter().map(|v| space.norm_unchecked(&v.coords)).collect()
}

/// Runs every applicable inequality on `samples` random tuples.
pub fn inequality_suite(space: &SpaceSpec, n: usize, samples: usize, seed: u64) -> Result<CheckReport> {
    if samples == 0 {
        return Err(Error::InvalidConfig("samples must be >= 1".into()));
    }
    crate::functional::check_n(n, crate::functional::DEFAULT_MAX_N)?;
    let nf = n as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tuples: Vec<VectorTuple> = (0..samples).map(|_| random_tuple(space, n, &mut rng)).collect();
    let values: Vec<f64> = tuples.iter().map(|t| evaluate_cn(space, t)).collect::<Result<_>>()?;
    let mut checks = Vec::new();

    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    checks.push(Check::new(
        "pointwise-bounds",
        lo >= 1.0 / nf - 1e-9 && hi <= nf + 1e-9,
        vec![lo, hi],
        Expected::Interval { lo: 1.0 / nf, hi: nf },
        1e-9,
        "1/n <= C^(n) <= n for every nonzero tuple",
    ));

    if space.is_hilbert() {
        let dev = values.iter().map(|v| (v - 1.0).abs()).fold(0.0, f64::max);
        checks.push(Check::new(
            "hilbert-identity",
            dev <= 1e-10,
            vec![dev],
            Expected::Value { value: 0.0 },
            1e-10,
            "C^(n) = 1 identically on a Hilbert space",
        ).with_note("observed = max |C^(n) - 1|"));
    } else {
        checks.push(Check::skipped("hilbert-identity", "C^(n) = 1 on a Hilbert space", "not a Hilbert space"));
    }

    let dev = tuples
        .iter()
        .map(|t| evaluate_cn(space, &VectorTuple::repeated(&t.vectors[0], n)).map(|v| (v - 1.0).abs()))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    checks.push(
        Check::new(
            "identical-tuple",
            dev <= 1e-12,
            vec![dev],
            Expected::Value { value: 0.0 },
            1e-12,
            "C^(n)(x, ..., x) = 1",
        )
        .with_note("observed = max |C^(n)(x, ..., x) - 1|"),
    );

    // ‖x+y‖² + ‖x−y‖² ≥ 2 max(‖x‖,‖y‖)² ≥ ‖x‖² + ‖y‖²
    let mut worst = f64::INFINITY;
    for t in &tuples {
        let (x, y) = (&t.vectors[0], &t.vectors[t.len() - 1]);
        let plus: Vec<f64> = x.coords.iter().zip(&y.coords).map(|(a, b)| a + b).collect();
        let minus: Vec<f64> = x.coords.iter().zip(&y.coords).map(|(a, b)| a - b).collect();
        let (nx, ny) = (space.norm_unchecked(&x.coords), space.norm_unchecked(&y.coords));
        let lhs = space.norm_unchecked(&plus).powi(2) + space.norm_unchecked(&minus).powi(2);
        let m = 2.0 * nx.max(ny).powi(2);
        let scale = nx.max(ny).powi(2);
        worst = worst.min(((lhs - m) / scale).min((m - nx * nx - ny * ny) / scale));
    }
    checks.push(
        Check::new(
            "inorm",
            worst >= -1e-12,
            vec![worst],
            Expected::AtLeast { bound: 0.0 },
            1e-12,
            "|x+y|^2 + |x-y|^2 >= 2 max(|x|,|y|)^2 >= |x|^2 + |y|^2",
        )
        .with_note("observed = smallest relative slack"),
    );

    let ratio = tuples
        .iter()
        .map(|t| {
            let ns = norms(space, t);
            ns.iter().sum::<f64>() / (nf.sqrt() * ns.iter().map(|v| v * v).sum::<f64>().sqrt())
        })
        .fold(0.0, f64::max);
    checks.push(
        Check::new(
            "holder",
            ratio <= 1.0 + 1e-12,
            vec![ratio],
            Expected::AtMost { bound: 1.0 },
            1e-12,
            "sum |x_j| <= sqrt(n) (sum |x_j|^2)^(1/2)",
        )
        .with_note("observed = max of lhs / rhs"),
    );

    checks.push(moment_inequality_check(space, n, &tuples)?);
    checks.push(delta_check(space, n, &tuples, seed)?);

    // sampled infimum of (Σ‖x_j‖ − min_θ ‖…‖) / (n min ‖x_i‖)
    let mut defect = f64::INFINITY;
    for t in &tuples {
        let ns = norms(space, t);
        let (m, _) = min_sign_combination(space, t)?;
        let sum: f64 = ns.iter().sum();
        let least = ns.iter().copied().fold(f64::INFINITY, f64::min);
        defect = defect.min((sum - m) / (nf * least));
    }
    checks.push(
        Check::new(
            "kaminska-turett-defect",
            defect >= -1e-12,
            vec![defect],
            Expected::AtLeast { bound: 0.0 },
            1e-12,
            "min over signs <= (1 - delta n min|x_i| / sum|x_j|) sum|x_j|",
        )
        .with_note("observed = sampled infimum of the normalized defect; a sanity indicator, not a certified delta"),
    );

    Ok(CheckReport::new(format!("inequalities {space} n={n} samples={samples}"), checks, Vec::new()))
}

fn moment_inequality_check(space: &SpaceSpec, n: usize, tuples: &[VectorTuple]) -> Result<Check> {
    const NAME: &str = "rademacher-moment-inequality";
    const PROV: &str =
        "sum over signs |x_1 + sum theta_j x_j|^p <= n^-1 sum_k C(n,k)(n-2k)^p sum |x_j|^p, 2 < p < inf";
    let p = match space.exponent {
        Exponent::Finite(p) if p > 2.0 => p,
        _ => return Ok(Check::skipped(NAME, PROV, "applies only for 2 < p < inf")),
    };
    let weight = closed_form::rademacher_moment(n, space.exponent)? * 2f64.powi(n as i32 - 1) / n as f64;
    let mut worst = 0.0f64;
    for t in tuples {
        let lhs: f64 = signed_combination_norms(space, t)?.iter().map(|v| v.powf(p)).sum();
        let rhs = weight * norms(space, t).iter().map(|v| v.powf(p)).sum::<f64>();
        worst = worst.max(lhs / rhs);
    }
    Ok(Check::new(NAME, worst <= 1.0 + 1e-12, vec![worst], Expected::AtMost { bound: 1.0 }, 1e-12, PROV)
        .with_note("observed = max of lhs / rhs"))
}

fn delta_check(space: &SpaceSpec, n: usize, tuples: &[VectorTuple], seed: u64) -> Result<Check> {
    const NAME: &str = "delta-sphere";
    const PROV: &str = "min over signs |x_1 + sum theta_j x_j| <= sqrt(n)(1 - delta) on S(l_n^2(X))";
    let cfg = OptimizerConfig { restarts: 20, ..OptimizerConfig::default().with_seed(seed) };
    let det = detect_non_ln1(space, n, &cfg)?;
    let Some(delta) = det.delta_sphere else {
        return Ok(Check::skipped(NAME, PROV, "no certified delta for this space"));
    };
    let bound = (n as f64).sqrt() * (1.0 - delta);
    let mut worst = 0.0f64;
    for t in tuples {
        let t = t.scaled(1.0 / space.tuple_l2_norm_unchecked(t));
        let (m, _) = min_sign_combination(space, &t)?;
        worst = worst.max(m / bound);
    }
    Ok(Check::new(NAME, worst <= 1.0 + 1e-12, vec![worst, delta], Expected::AtMost { bound: 1.0 }, 1e-12, PROV)
        .with_note("observed = [max of lhs / rhs, delta]"))
}

/// Tolerance of a table row against a point oracle.
pub const TABLE_TOL: f64 = 1e-6;

/// Tolerance of a row certified by exact enumeration.
pub const EXACT_TOL: f64 = 1e-9;

/// `(n, p, d)` grid points.
pub type GridPoint = (usize, Exponent, usize);

/// `n ∈ {2,3}`, `p ∈ {1, 1.5, 2, 3, 4, ∞}`, `d = max(n, 2^{n−1})`.
pub fn default_grid() -> Vec<GridPoint> {
    let ps = [
        Exponent::Finite(1.0),
        Exponent::Finite(1.5),
        Exponent::Finite(2.0),
        Exponent::Finite(3.0),
        Exponent::Finite(4.0),
        Exponent::Infinity,
    ];
    let mut grid = Vec::new();
    for n in [2usize, 3] {
        for p in ps {
            grid.push((n, p, n.max(1 << (n - 1))));
        }
    }
    grid
}

fn table_row(point: GridPoint, kind: ConstantKind, cfg: &OptimizerConfig) -> Result<TableRow> {
    let (n, p, d) = point;
    let mut row = TableRow {
        n,
        p,
        d,
        kind,
        status: Status::Skip,
        pass: false,
        oracle: None,
        estimate: None,
        gap: None,
        interval_position: None,
        tolerance: TABLE_TOL,
        method: None,
        bound_status: None,
        oracle_provenance: None,
        estimate_provenance: None,
        note: None,
    };
    let oracle = match closed_form::oracle(kind, n, p, d) {
        Ok(o) => o,
        Err(e @ (Error::NoClosedForm(_) | Error::DimensionPrecondition { .. })) => {
            row.note = Some(e.to_string());
            return Ok(row);
        }
        Err(e) => return Err(e),
    };
    let space = SpaceSpec::new(p, d)?;
    let est = estimate_constant(&space, n, kind, cfg)?;
    let tol = if est.bound_status == BoundStatus::Exact { EXACT_TOL } else { TABLE_TOL };
    let gap = oracle.value.gap(est.value);
    let pass = gap <= tol;
    if let OracleValue::Interval { lo, hi } = oracle.value {
        if hi > lo {
            row.interval_position = Some((est.value - lo) / (hi - lo));
        }
    }
    row.status = if pass { Status::Pass } else { Status::Fail };
    row.pass = pass;
    row.oracle = Some(oracle.value);
    row.estimate = Some(est.value);
    row.gap = Some(gap);
    row.tolerance = tol;
    row.method = Some(est.method);
    row.bound_status = Some(est.bound_status);
    row.oracle_provenance = Some(format!("oracle: {}", oracle.provenance));
    row.estimate_provenance = Some(estimate_provenance(&est));
    Ok(row)
}

fn dual_remark_checks(grid: &[GridPoint]) -> Vec<Check> {
    const EQ: &str = "n = 2: the upper modified constant of X equals that of the dual, via closed forms";
    const NE: &str = "n >= 3: closed-form upper modified constant of l^r, 1 < r < 2, exceeds the upper end \
                      of the two-sided bound for the conjugate l^s";
    let mut checks = Vec::new();
    for &(n, p, d) in grid {
        let q = p.conjugate();
        let name = format!("dual-remark n={n} p={p} d={d}");
        if n == 2 {
            let (a, b) = (
                closed_form::upper_modified_lp(n, p, d),
                closed_form::upper_modified_lp(n, q, d),
            );
            match (a, b) {
                (Ok(a), Ok(b)) => {
                    let (a, b) = (a.value.bounds().0, b.value.bounds().0);
                    checks.push(Check::new(
                        name,
                        (a - b).abs() <= 1e-12,
                        vec![a, b],
                        Expected::Value { value: a },
                        1e-12,
                        EQ,
                    ));
                }
                (Err(e), _) | (_, Err(e)) => checks.push(Check::skipped(name, EQ, e.to_string())),
            }
            continue;
        }
        // the pair (r, s) with 1 < r < 2 < s < ∞
        let (r, s) = match p {
            Exponent::Finite(x) if x > 1.0 && x < 2.0 => (p, q),
            Exponent::Finite(x) if x > 2.0 => (q, p),
            _ => {
                checks.push(Check::skipped(name, NE, "applies only for 1 < p < 2 or 2 < p < inf"));
                continue;
            }
        };
        let value = closed_form::upper_modified_lp(n, r, d);
        let endpoint = closed_form::upper_nj_lp(n, s, d);
        match (value, endpoint) {
            (Ok(v), Ok(e)) => {
                let (v, hi) = (v.value.bounds().0, e.value.bounds().1);
                if hi < v {
                    checks.push(Check::new(name, true, vec![v, hi], Expected::AtMost { bound: v }, 0.0, NE)
                        .with_note("observed = [closed form at r, upper end of the bound at s]"));
                } else {
                    checks.push(Check::skipped(
                        name,
                        NE,
                        format!("upper end {hi} of the bound at s = {s} is not below {v}; not decidable from closed forms"),
                    ));
                }
            }
            (Err(e), _) | (_, Err(e)) => checks.push(Check::skipped(name, NE, e.to_string())),
        }
    }
    checks
}

/// Oracle-versus-optimizer table over `grid`, all four kinds per point.
/// Points without a closed form or below a dimension precondition are
/// skipped rows.
pub fn reproduce_table(grid: &[GridPoint], cfg: &OptimizerConfig) -> Result<CheckReport> {
    cfg.validate()?;
    let jobs: Vec<(GridPoint, ConstantKind)> =
        grid.iter().flat_map(|g| ConstantKind::ALL.into_iter().map(move |k| (*g, k))).collect();
    let rows = jobs
        .par_iter()
        .map(|(g, k)| table_row(*g, *k, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(CheckReport::new("reproduce-table", dual_remark_checks(grid), rows))
}

/// A tuple on `S(X)^n` drawn from `seed`, for callers that need one.
pub fn sample_unit_tuple(space: &SpaceSpec, n: usize, seed: u64) -> VectorTuple {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    VectorTuple { vectors: (0..n).map(|_| space.sample_sphere_with(&mut rng)).collect::<Vec<Vector>>() }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> OptimizerConfig {
        OptimizerConfig { restarts: 20, ..OptimizerConfig::default().with_seed(7) }
    }

    #[test]
    fn detection_examples() {
        let l2 = SpaceSpec::lp(2.0, 2).unwrap();
        let det = detect_non_ln1(&l2, 2, &cfg()).unwrap();
        assert_eq!(det.verdict, Verdict::CertifiedYes);
        assert!((det.delta_james.unwrap() - (1.0 - 0.5f64.sqrt())).abs() < 1e-15);
        assert_eq!(det.plain_verdict, Verdict::CertifiedYes);

        let l1 = SpaceSpec::lp(1.0, 2).unwrap();
        let det = detect_non_ln1(&l1, 2, &cfg()).unwrap();
        assert_eq!(det.verdict, Verdict::CertifiedNo);
        assert_eq!(det.estimate.value, 2.0);
        assert_eq!(det.plain_verdict, Verdict::CertifiedNo);
    }

    #[test]
    fn scan_examples() {
        let s = b_convexity_scan(&SpaceSpec::lp(1.5, 3).unwrap(), 2, &cfg()).unwrap();
        assert_eq!((s.b_convex, s.witness_n), (BConvexity::Yes, Some(2)));
        let s = b_convexity_scan(&SpaceSpec::linf(8).unwrap(), 3, &cfg()).unwrap();
        assert_eq!((s.b_convex, s.witness_n), (BConvexity::NoWitness, None));
        assert!(b_convexity_scan(&SpaceSpec::linf(8).unwrap(), 1, &cfg()).is_err());
    }

    #[test]
    fn duality_hilbert() {
        let r = duality_check(Exponent::Finite(2.0), 2, 2, &cfg()).unwrap();
        assert!(r.all_passed());
        for c in &r.checks {
            assert!((c.observed[0] - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn inequality_suite_l3() {
        let r = inequality_suite(&SpaceSpec::lp(3.0, 3).unwrap(), 3, 2000, 1).unwrap();
        assert!(r.all_passed(), "{r:#?}");
        assert_eq!(r.check("rademacher-moment-inequality").unwrap().status, Status::Pass);
        assert_eq!(r.check("hilbert-identity").unwrap().status, Status::Skip);
    }

    #[test]
    fn summary_counts() {
        let checks = vec![
            Check::new("a", true, vec![], Expected::None, 0.0, ""),
            Check::new("b", false, vec![1.0], Expected::Value { value: 0.0 }, 0.0, ""),
            Check::skipped("c", "", ""),
        ];
        let r = CheckReport::new("x", checks, Vec::new());
        assert_eq!(r.summary, Summary { total: 3, passed: 1, failed: 1, skipped: 1 });
        assert!(!r.all_passed());
    }

    #[test]
    fn default_grid_shape() {
        let g = default_grid();
        assert_eq!(g.len(), 12);
        assert!(g.contains(&(3, Exponent::Infinity, 4)));
        assert!(g.contains(&(2, Exponent::Finite(1.5), 2)));
    }

    #[test]
    fn remark_checks() {
        let checks = dual_remark_checks(&default_grid());
        let find = |n: &str| checks.iter().find(|c| c.name == n).unwrap();
        assert_eq!(find("dual-remark n=2 p=1.5 d=2").status, Status::Pass);
        assert_eq!(find("dual-remark n=3 p=1.5 d=4").status, Status::Pass);
        assert_eq!(find("dual-remark n=3 p=4 d=4").status, Status::Skip);
        assert!(checks.iter().all(|c| c.status != Status::Fail));
    }
}
