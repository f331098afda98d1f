use std::f64::consts::PI;

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::config::ExperimentConfig;
use super::report::{Assertion, Assertions, Outcome, OutputDir};
use super::HarnessError;
use crate::blockshift::{
    block_power, coord12_bound_check, mat2_mul, Block2, BlockParams, Mat2, EXCLUSION_EPS,
};
use crate::cyclicity::{
    diag_cyclic_test, diagonalize, eigen_span_check, krylov_rank, real_cyclic_test,
    realified_krylov_rank, residual_ok, TriMatrix,
};
use crate::density::{longest_ap, upper_banach_window, DensityReport};
use crate::error::Error;
use crate::rigidity::{RigidityOperator, RigidityParams, Time, PAIRING_FLOOR};
use crate::seqspace::{Field, Scalar, SparseVector};

const ORACLE_TOL: f64 = 1e-9;
const FACT_SWEEP_N: u64 = 10_000;
const PERIOD_TOL: f64 = 1e-9;
const EIGEN_RESIDUAL_TOL: f64 = 1e-12;
const CONJUGACY_TOL: f64 = 1e-9;
const DIAG_RESIDUAL_TOL: f64 = 1e-8;

/// Outcome of an exhaustive inequality sweep.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Sweep {
    pub check: String,
    pub cases: u64,
    pub failures: u64,
    /// Largest `lhs − rhs` over the cases (negative when every case holds with room),
    /// or the largest deviation for equality checks.
    pub worst: f64,
}

impl Sweep {
    fn new(check: &str) -> Self {
        Self {
            check: check.to_string(),
            cases: 0,
            failures: 0,
            worst: f64::NEG_INFINITY,
        }
    }

    /// Records one case; `excess > 0` is a failure.
    fn record(&mut self, excess: f64) {
        self.cases += 1;
        if excess > 0.0 || excess.is_nan() {
            self.failures += 1;
        }
        self.worst = self.worst.max(excess);
    }

    fn record_deviation(&mut self, dev: f64, tol: f64) {
        self.cases += 1;
        if !(dev <= tol) {
            self.failures += 1;
        }
        self.worst = self.worst.max(dev);
    }

    pub fn passed(&self) -> bool {
        self.failures == 0 && self.cases > 0
    }

    fn detail(&self) -> String {
        format!(
            "{} cases, {} failures, worst {:.3e}",
            self.cases, self.failures, self.worst
        )
    }
}

fn rigidity_operator(cfg: &ExperimentConfig) -> Result<RigidityOperator, HarnessError> {
    Ok(RigidityOperator::new(RigidityParams::generate(
        cfg.rigidity.clone(),
        cfg.space,
    )?))
}

fn block_params(cfg: &ExperimentConfig, field: Field) -> Result<BlockParams, HarnessError> {
    let mut bc = cfg.blockshift.clone();
    bc.field = field;
    Ok(BlockParams::generate(&bc, cfg.space)?)
}

fn rng(cfg: &ExperimentConfig) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(cfg.seed)
}

fn random_scalar<R: Rng>(rng: &mut R) -> Scalar {
    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

// --- sweeps shared by facts-suite and the library tests ---

/// `|λ_{k,n}| ≤ n` for `3 ≤ k ≤ k_max`, `n ≤ 10^4`.
pub fn sweep_lambda_upper(op: &RigidityOperator) -> Sweep {
    let mut s = Sweep::new("lambda-upper");
    for k in 3..=op.k_max() {
        for n in 1..=FACT_SWEEP_N {
            s.record(op.lambda_kn(k, n).norm() - n as f64 - ORACLE_TOL);
        }
    }
    s
}

/// `λ_{k, m_n} = 0` for `3 ≤ k ≤ n ≤ j_max`.
pub fn sweep_lambda_vanishing(op: &RigidityOperator) -> Sweep {
    let mut s = Sweep::new("lambda-vanishing");
    let j_max = op.params.cfg.j_max;
    for n in 3..=j_max {
        for k in 3..=n {
            s.record_deviation(op.lambda_kn_at(k, Time::multiple(1, n)).norm(), ORACLE_TOL);
        }
    }
    s
}

/// `|λ_{k,n}| ≥ (2/π) n` at the first `k ≥ 3` with `2n ≤ m_k`, `n ≤ 10^4`.
pub fn sweep_lambda_lower(op: &RigidityOperator) -> Sweep {
    let mut s = Sweep::new("lambda-lower");
    let p = &op.params;
    for n in 1..=FACT_SWEEP_N {
        let Some(k) = (3..=op.k_max()).find(|&j| 2.0 * n as f64 <= p.m(j)) else {
            s.record(f64::INFINITY);
            continue;
        };
        s.record(2.0 / PI * n as f64 - 1e-6 - op.lambda_kn(k, n).norm());
    }
    s
}

/// Corner bound of `A^n` on its window, every `n ≤ 3m²`, `m ∈ 3..=6`.
pub fn sweep_corner_bound(omegas: &[Complex64]) -> Sweep {
    let mut s = Sweep::new("corner-bound");
    for m in 3..=6u64 {
        for &w in omegas {
            let b = Block2::new(m, w);
            for n in 1..=3 * m * m {
                let c = coord12_bound_check(&b, n);
                if c.in_window {
                    s.record(c.bound - 1e-9 - c.value);
                }
            }
        }
    }
    s
}

fn mat2_dev(a: &Mat2, b: &Mat2) -> f64 {
    let mut d: f64 = 0.0;
    for r in 0..2 {
        for c in 0..2 {
            d = d.max((a[r][c] - b[r][c]).norm());
        }
    }
    d
}

/// Closed-form block powers against repeated multiplication, `m ∈ 3..=8`, `n ≤ 2m²`.
pub fn sweep_block_power(omegas: &[Complex64]) -> Sweep {
    let mut s = Sweep::new("block-power");
    let id: Mat2 = [
        [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
        [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
    ];
    for m in 3..=8u64 {
        for &w in omegas {
            let b = Block2::new(m, w);
            let a = b.matrix();
            let mut acc = id;
            for n in 0..=2 * m * m {
                s.record_deviation(mat2_dev(&block_power(&b, n), &acc), ORACLE_TOL);
                acc = mat2_mul(&acc, &a);
            }
            s.record_deviation(mat2_dev(&block_power(&b, m * m), &id), ORACLE_TOL);
        }
    }
    s
}

/// Closed-form coordinates of `T^n x` against `n` truncated applications of `T`.
pub fn sweep_closed_form<R: Rng>(
    op: &RigidityOperator,
    rng: &mut R,
    vectors: usize,
) -> Result<Sweep, HarnessError> {
    let mut s = Sweep::new("closed-form");
    let k_max = op.k_max();
    for _ in 0..vectors {
        let support = rng.random_range(1..=8usize);
        let entries: Vec<(usize, Scalar)> = (0..support)
            .map(|_| (rng.random_range(1..=k_max), random_scalar(rng)))
            .collect();
        let x = SparseVector::from_entries(entries)?;
        let mut y = x.clone();
        for n in 1..=64u64 {
            y = op.apply_t(&y, k_max)?.0;
            let dev = (1..=k_max)
                .map(|k| (op.power_coeff(&x, n, k) - y.get(k)).norm())
                .fold(0.0, f64::max);
            s.record_deviation(dev, ORACLE_TOL);
        }
    }
    Ok(s)
}

fn sweep_assertion(s: &Sweep, invariant: &str) -> Assertion {
    Assertion::new(&s.check, invariant, s.passed(), s.detail())
}

// --- recipes ---

#[derive(Serialize)]
struct CertificateRow {
    vector: usize,
    eps: f64,
    n: String,
    k_j: usize,
    class: usize,
    lower: f64,
    upper: f64,
    analytic_bound: f64,
}

pub(super) fn thm1_recurrence(
    cfg: &ExperimentConfig,
    out: &mut OutputDir,
) -> Result<Outcome, HarnessError> {
    let op = rigidity_operator(cfg)?;
    let mut rng = rng(cfg);
    let r = &cfg.recipe;
    let xs: Vec<SparseVector> = (0..r.vectors).map(|_| op.random_x0(&mut rng, 8)).collect();

    let mut rows = Vec::new();
    let mut missing = Vec::new();
    let mut over_bound = 0usize;
    for (i, x) in xs.iter().enumerate() {
        for &eps in &r.eps {
            match op.recurrence_certificate(x, eps) {
                Ok(c) => {
                    if c.bracket.upper > c.analytic_bound * (1.0 + 1e-9) + 1e-15 {
                        over_bound += 1;
                    }
                    rows.push(CertificateRow {
                        vector: i,
                        eps,
                        n: c.n,
                        k_j: c.k_j,
                        class: c.class,
                        lower: c.bracket.lower,
                        upper: c.bracket.upper,
                        analytic_bound: c.analytic_bound,
                    });
                }
                Err(Error::CertificateNotFound { best, searched }) => {
                    missing.push(format!(
                        "vector {i} eps {eps:e}: best {best:.3e} over {searched} levels"
                    ));
                }
                Err(e) => return Err(e.into()),
            }
        }
    }
    out.write_csv(
        "certificates.csv",
        &[
            "vector",
            "eps",
            "n",
            "k_j",
            "class",
            "lower",
            "upper",
            "analytic_bound",
        ],
        &rows,
    )?;

    let trace = op.orbit_distance_trace(&xs[0], r.trace_horizon, op.k_max(), cfg.parallel)?;
    out.write_csv("trace.csv", &["n", "lower", "upper"], &trace)?;
    let k = cfg.space.k;
    let misordered = trace
        .iter()
        .filter(|t| k * t.lower > t.upper * (1.0 + 1e-12) + 1e-15)
        .count();

    let total = xs.len() * r.eps.len();
    let mut a = Assertions::new(Assertion::new(
        "certificate-found",
        "every vector of X_0 returns within eps at some time m_{k_j-1}",
        missing.is_empty(),
        if missing.is_empty() {
            format!("{total} of {total} certificates found")
        } else {
            missing.join("; ")
        },
    ));
    a.push(Assertion::new(
        "certificate-analytic-bound",
        "upper bracket at m_{k_j-1} is at most 2K|x| c_{k_j}",
        over_bound == 0,
        format!(
            "{over_bound} of {} certificates above the analytic bound",
            rows.len()
        ),
    ));
    a.push(Assertion::new(
        "trace-bracket-order",
        "K times the coordinate lower bound never exceeds the norm upper bound",
        misordered == 0,
        format!("{misordered} of {} rows out of order", trace.len()),
    ));
    let mut o = Outcome::new(a);
    o.summary("vectors", xs.len());
    o.summary("certificates", rows.len());
    o.summary(
        "max_certified_upper",
        rows.iter().map(|r| r.upper).fold(0.0, f64::max),
    );
    o.summary("trace_rows", trace.len());
    Ok(o)
}

pub(super) fn thm1_floor(
    cfg: &ExperimentConfig,
    out: &mut OutputDir,
) -> Result<Outcome, HarnessError> {
    let op = rigidity_operator(cfg)?;
    let r = &cfg.recipe;
    let j_max = cfg.rigidity.j_max;
    let horizon = Time::multiple(1, j_max - 1);
    let d = Complex64::new(r.perturbation, 0.0);
    let k_max = op.k_max();
    let vectors = [
        ("z", op.params.z.clone()),
        ("z+d*e_9", op.z_fiber(&[(9.min(k_max), d)])?),
        (
            "z+d*(e_3+e_15)",
            op.z_fiber(&[(3, d), (15.min(k_max), Complex64::new(0.0, r.perturbation))])?,
        ),
    ];
    let mut reports = Vec::new();
    for (name, x) in &vectors {
        let rep = op.nonrecurrence_floor(x, horizon, r.scan_cap)?;
        log::info!("floor for {name}: {:.6} over {}", rep.floor, rep.horizon);
        reports.push((name.to_string(), rep));
    }

    #[derive(Serialize)]
    struct Row<'a> {
        vector: &'a str,
        floor: f64,
        bound: f64,
        comparator: f64,
        scanned: u64,
        scan_floor: f64,
        scan_argmin: u64,
        segment_floor: Option<f64>,
        segment_level: Option<usize>,
        horizon: &'a str,
    }
    let rows: Vec<Row> = reports
        .iter()
        .map(|(name, f)| Row {
            vector: name,
            floor: f.floor,
            bound: f.bound,
            comparator: f.comparator,
            scanned: f.scanned,
            scan_floor: f.scan_floor,
            scan_argmin: f.scan_argmin,
            segment_floor: f.segment_floor,
            segment_level: f.segment_argmin_level,
            horizon: &f.horizon,
        })
        .collect();
    out.write_csv(
        "floor.csv",
        &[
            "vector",
            "floor",
            "bound",
            "comparator",
            "scanned",
            "scan_floor",
            "scan_argmin",
            "segment_floor",
            "segment_level",
            "horizon",
        ],
        &rows,
    )?;
    let trace = op.orbit_distance_trace(&op.params.z, r.trace_horizon, k_max, cfg.parallel)?;
    out.write_csv("trace.csv", &["n", "lower", "upper"], &trace)?;

    let mut a = Assertions::new({
        let bad: Vec<String> = reports
            .iter()
            .filter(|(_, f)| f.floor < f.bound - r.floor_slack)
            .map(|(n, f)| format!("{n}: {:.6}", f.floor))
            .collect();
        Assertion::new(
            "floor-above-bound",
            "points of P^{-1}({z}) stay at distance at least 1/(K pi) from their orbit",
            bad.is_empty(),
            if bad.is_empty() {
                let min = reports
                    .iter()
                    .map(|(_, f)| f.floor)
                    .fold(f64::INFINITY, f64::min);
                format!(
                    "min floor {min:.6} against {:.6} - {}",
                    1.0 / (cfg.space.k * PI),
                    r.floor_slack
                )
            } else {
                bad.join("; ")
            },
        )
    });
    let bad: Vec<&str> = reports
        .iter()
        .filter(|(_, f)| f.floor < f.comparator - 1e-12)
        .map(|(n, _)| n.as_str())
        .collect();
    a.push(Assertion::new(
        "floor-above-comparator",
        "floor dominates 1/(K pi) minus the diagonal drift of the perturbation",
        bad.is_empty(),
        if bad.is_empty() {
            "all vectors".to_string()
        } else {
            bad.join(", ")
        },
    ));
    let mut o = Outcome::new(a);
    for (name, f) in &reports {
        o.summary(&format!("floor[{name}]"), f.floor);
    }
    o.summary("horizon", op.params.describe(horizon));
    o.summary("bound", 1.0 / (cfg.space.k * PI));
    Ok(o)
}

pub(super) fn thm1_ap(
    cfg: &ExperimentConfig,
    out: &mut OutputDir,
) -> Result<Outcome, HarnessError> {
    let op = rigidity_operator(cfg)?;
    let mut rng = rng(cfg);
    let r = &cfg.recipe;
    let len = r.ap_length;

    #[derive(Serialize)]
    struct Row {
        vector: usize,
        ell: u64,
        n: String,
        upper: f64,
    }
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut short = Vec::new();
    let mut longest = usize::MAX;
    for i in 0..r.vectors {
        let x = op.random_x0(&mut rng, 8);
        match op.ap_witness(&x, r.ap_eps, len) {
            Ok(w) => {
                if w.uppers.iter().any(|u| !(*u < r.ap_eps)) {
                    failures.push(format!("vector {i}: unverified term"));
                }
                for (ell, u) in w.uppers.iter().enumerate() {
                    let ell = ell as u64 + 1;
                    rows.push(Row {
                        vector: i,
                        ell,
                        n: op.params.describe(Time::multiple(ell, w.step.base)),
                        upper: *u,
                    });
                }
                let l = longest_ap(&w.return_set);
                longest = longest.min(l);
                if (l as u64) < len {
                    short.push(format!("vector {i}: {l}"));
                }
                if i == 0 {
                    out.write_with("returnset.csv", |f| w.return_set.write_csv(f))?;
                }
            }
            Err(Error::CertificateNotFound { best, searched }) => {
                failures.push(format!(
                    "vector {i}: no level, best {best:.3e} over {searched}"
                ));
            }
            Err(e) => return Err(e.into()),
        }
    }
    out.write_csv("ap.csv", &["vector", "ell", "n", "upper"], &rows)?;
    let mut a = Assertions::new(Assertion::new(
        "ap-verified",
        "X_0 vectors return along an arithmetic progression of the requested length",
        failures.is_empty(),
        if failures.is_empty() {
            format!(
                "{} progressions of length {len} below {:e}",
                r.vectors, r.ap_eps
            )
        } else {
            failures.join("; ")
        },
    ));
    a.push(Assertion::new(
        "ap-longest",
        "the longest progression in the return set is at least the witnessed length",
        short.is_empty() && failures.is_empty(),
        if short.is_empty() {
            format!("shortest longest_ap {longest}")
        } else {
            short.join("; ")
        },
    ));
    let mut o = Outcome::new(a);
    o.summary("length", len);
    o.summary("eps", r.ap_eps);
    o.summary("terms", rows.len());
    Ok(o)
}

pub(super) fn thm2_exclusion(
    cfg: &ExperimentConfig,
    out: &mut OutputDir,
) -> Result<Outcome, HarnessError> {
    let bp = BlockParams::generate(&cfg.blockshift, cfg.space)?;
    let r = &cfg.recipe;
    if let Some(&j) = r
        .exclusion_blocks
        .iter()
        .find(|&&j| j == 0 || j > bp.j_max())
    {
        return Err(HarnessError::Config(format!(
            "recipe.exclusion_blocks names block {j}, outside 1..={}",
            bp.j_max()
        )));
    }
    let mut reports = Vec::new();
    for &j in &r.exclusion_blocks {
        let x = bp.g_witness(&[j], r.margin)?;
        let m = bp.m_j(j);
        let rep = bp.rrec_exclusion_report(&x, j, 3 * m * m, cfg.parallel)?;
        let banach = upper_banach_window(&rep.return_set, u128::from(m) * u128::from(m))?;
        out.write_csv(
            &format!("windows_j{j}.csv"),
            &["window_start", "count"],
            &rep.window_counts,
        )?;
        out.write_with(&format!("returns_j{j}.csv"), |f| {
            rep.return_set.write_csv(f)
        })?;
        let dr = DensityReport::compute(&rep.return_set);
        out.write_with(&format!("density_j{j}.csv"), |f| dr.write_csv(f))?;
        reports.push((rep, banach));
    }

    #[derive(Serialize)]
    struct Row {
        j: usize,
        m: u64,
        horizon: u64,
        hits: usize,
        max_count: u64,
        allowed: u64,
        bd_estimate: f64,
        bd_bound: f64,
    }
    let rows: Vec<Row> = reports
        .iter()
        .map(|(e, _)| Row {
            j: e.j,
            m: e.m,
            horizon: e.horizon,
            hits: e.hits,
            max_count: e.max_count,
            allowed: e.allowed,
            bd_estimate: e.bd_estimate,
            bd_bound: e.bd_bound,
        })
        .collect();
    out.write_csv(
        "exclusion.csv",
        &[
            "j",
            "m",
            "horizon",
            "hits",
            "max_count",
            "allowed",
            "bd_estimate",
            "bd_bound",
        ],
        &rows,
    )?;

    let over: Vec<String> = reports
        .iter()
        .filter(|(e, _)| e.max_count > e.allowed)
        .map(|(e, _)| format!("j={} count {} > {}", e.j, e.max_count, e.allowed))
        .collect();
    let mut a = Assertions::new(Assertion::new(
        "window-count",
        "every window of length m_j^2 holds at most 2 m_j returns to the eps-ball",
        over.is_empty(),
        if over.is_empty() {
            format!("{} blocks, eps = {EXCLUSION_EPS:.6}", reports.len())
        } else {
            over.join("; ")
        },
    ));
    let dense: Vec<String> = reports
        .iter()
        .filter(|(e, b)| *b > e.bd_bound * (1.0 + 1e-12))
        .map(|(e, b)| format!("j={} {b:.3e} > {:.3e}", e.j, e.bd_bound))
        .collect();
    a.push(Assertion::new(
        "banach-window",
        "upper Banach density over windows of length m_j^2 is at most 2/m_j",
        dense.is_empty(),
        if dense.is_empty() {
            "all blocks".to_string()
        } else {
            dense.join("; ")
        },
    ));
    let bounds: Vec<f64> = reports.iter().map(|(e, _)| e.bd_bound).collect();
    let decreasing = bounds.windows(2).all(|w| w[1] < w[0]);
    a.push(Assertion::new(
        "bound-decreasing",
        "the density bounds 2/m_j strictly decrease to zero",
        decreasing,
        bounds
            .iter()
            .map(|b| format!("{b:.3e}"))
            .collect::<Vec<_>>()
            .join(" > "),
    ));
    let estimates: Vec<f64> = reports.iter().map(|(e, _)| e.bd_estimate).collect();
    a.push(Assertion::new(
        "estimate-decreasing",
        "measured return densities decrease along the witnessed blocks",
        estimates.windows(2).all(|w| w[1] < w[0]),
        estimates
            .iter()
            .map(|b| format!("{b:.3e}"))
            .collect::<Vec<_>>()
            .join(" > "),
    ));
    let cond = bp.condition_b_report();
    a.push(Assertion::new(
        "growth-condition",
        "1/(m_j |omega_{2j-1}|) strictly decreases below the target",
        cond.holds,
        format!("last {:.3e} against {:.3e}", cond.last, cond.target),
    ));
    let mut o = Outcome::new(a);
    o.summary("m", &bp.m);
    o.summary("bd_estimate", estimates);
    o.summary("bd_bound", bounds);
    o.summary("condition_b", cond.b);
    Ok(o)
}

pub(super) fn thm2_periodic(
    cfg: &ExperimentConfig,
    out: &mut OutputDir,
) -> Result<Outcome, HarnessError> {
    let bp = block_params(cfg, Field::Complex)?;

    #[derive(Serialize)]
    struct Row {
        j: usize,
        which: usize,
        lambda_re: f64,
        lambda_im: f64,
        period: u64,
        residual: f64,
        period_error: f64,
    }
    let mut rows = Vec::new();
    for j in 1..=bp.j_max() {
        let m = bp.m_j(j);
        for (which, (lambda, x)) in bp.unimodular_eigenvectors(j)?.into_iter().enumerate() {
            let tx = bp.apply_op(&x, 1)?;
            let residual = (&tx - &x.scale(lambda)).norm(&bp.space);
            let period_error = bp.orbit_distance(&x, m * m)?;
            rows.push(Row {
                j,
                which: which + 1,
                lambda_re: lambda.re,
                lambda_im: lambda.im,
                period: m * m,
                residual,
                period_error,
            });
        }
    }
    out.write_csv(
        "eigen.csv",
        &[
            "j",
            "which",
            "lambda_re",
            "lambda_im",
            "period",
            "residual",
            "period_error",
        ],
        &rows,
    )?;
    let worst_res = rows.iter().map(|r| r.residual).fold(0.0, f64::max);
    let worst_per = rows.iter().map(|r| r.period_error).fold(0.0, f64::max);
    let mut a = Assertions::new(Assertion::new(
        "eigen-residual",
        "e_{2j-1} and e_{2j} + omega/(lambda_{2j}-lambda_{2j-1}) e_{2j-1} are eigenvectors",
        worst_res <= EIGEN_RESIDUAL_TOL,
        format!("worst |Tx - lambda x| = {worst_res:.3e}"),
    ));
    a.push(Assertion::new(
        "exact-period",
        "unimodular eigenvectors of block j are periodic with period m_j^2",
        worst_per <= PERIOD_TOL,
        format!("worst |T^(m_j^2) x - x| = {worst_per:.3e}"),
    ));
    let mut o = Outcome::new(a);
    o.summary("eigenvectors", rows.len());
    o.summary("worst_residual", worst_res);
    o.summary("worst_period_error", worst_per);
    Ok(o)
}

/// Random triangular matrix with well-separated diagonal.
fn random_triangular<R: Rng>(rng: &mut R, n: usize) -> TriMatrix {
    let offset: f64 = rng.random_range(0.0..1.0);
    let d: Vec<Complex64> = (0..n)
        .map(|i| {
            let r = rng.random_range(0.5..1.0);
            Complex64::from_polar(r, 2.0 * PI * (i as f64 + 0.5 * offset) / n as f64)
        })
        .collect();
    let mut a = nalgebra::DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for r in 0..n {
        a[(r, r)] = d[r];
        for c in r + 1..n {
            a[(r, c)] = random_scalar(rng) * 0.5;
        }
    }
    TriMatrix::new(a).expect("upper triangular by construction")
}

/// Coefficients with modulus in `[0.5, 1]`, each zeroed with probability `zero_p`.
fn random_pattern<R: Rng>(rng: &mut R, n: usize, zero_p: f64) -> Vec<Complex64> {
    (0..n)
        .map(|_| {
            if rng.random_bool(zero_p) {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::from_polar(rng.random_range(0.5..1.0), rng.random_range(0.0..2.0 * PI))
            }
        })
        .collect()
}

pub(super) fn thm2_cyclic(
    cfg: &ExperimentConfig,
    out: &mut OutputDir,
) -> Result<Outcome, HarnessError> {
    let mut rng = rng(cfg);
    let r = &cfg.recipe;

    #[derive(Serialize)]
    struct Row {
        trial: usize,
        n: usize,
        zeros: usize,
        diag_cyclic: bool,
        krylov_rank: usize,
        agree: bool,
        residual: f64,
        sigma_ratio: f64,
    }
    let mut rows = Vec::new();
    let mut no_span = 0usize;
    let mut bad_residual = 0usize;
    for trial in 0..r.cyclic_trials {
        let n = 1 + trial % r.cyclic_max_dim;
        let t = random_triangular(&mut rng, n);
        let diag = diagonalize(&t)?;
        let span = eigen_span_check(&t)?;
        // zero patterns are placed on the eigenbasis coordinates, x = L y
        let y = random_pattern(&mut rng, n, if trial % 2 == 0 { 0.0 } else { 0.3 });
        let x = &diag.l * DVector::from_vec(y.clone());
        let cyc = diag_cyclic_test(&diag.d, &y)?;
        let rank = krylov_rank(&t, x.as_slice())?;
        if !span.spans {
            no_span += 1;
        }
        if !(residual_ok(&diag) && diag.residual <= DIAG_RESIDUAL_TOL * diag.scale) {
            bad_residual += 1;
        }
        rows.push(Row {
            trial,
            n,
            zeros: y.iter().filter(|v| v.norm() == 0.0).count(),
            diag_cyclic: cyc,
            krylov_rank: rank,
            agree: cyc == (rank == n),
            residual: diag.residual,
            sigma_ratio: span.sigma_ratio,
        });
    }
    out.write_csv(
        "cyclic.csv",
        &[
            "trial",
            "n",
            "zeros",
            "diag_cyclic",
            "krylov_rank",
            "agree",
            "residual",
            "sigma_ratio",
        ],
        &rows,
    )?;

    let bp = block_params(cfg, Field::Complex)?;
    let restricted = TriMatrix::from_rows(&bp.restricted_matrix(bp.j_max()))?;
    let block_span = eigen_span_check(&restricted)?;

    let disagree = rows.iter().filter(|r| !r.agree).count();
    let mut a = Assertions::new(Assertion::new(
        "cyclic-iff-full-rank",
        "a vector is cyclic exactly when all its eigenbasis coordinates are nonzero",
        disagree == 0,
        format!(
            "{disagree} of {} trials disagree, {} cyclic",
            rows.len(),
            rows.iter().filter(|r| r.diag_cyclic).count()
        ),
    ));
    a.push(Assertion::new(
        "eigenvectors-span",
        "distinct diagonal entries give a spanning set of eigenvectors",
        no_span == 0 && block_span.spans,
        format!(
            "{no_span} random failures; block operator rank {}/{} sigma ratio {:.3e}",
            block_span.rank, block_span.dim, block_span.sigma_ratio
        ),
    ));
    a.push(Assertion::new(
        "diagonalize-residual",
        "T L = L D up to 1e-8 of the matrix scale",
        bad_residual == 0,
        format!("{bad_residual} trials above tolerance"),
    ));
    let mut o = Outcome::new(a);
    o.summary("trials", rows.len());
    o.summary("block_sigma_ratio", block_span.sigma_ratio);
    o.summary("block_ill_conditioned", block_span.ill_conditioned);
    Ok(o)
}

pub(super) fn thm2_real(
    cfg: &ExperimentConfig,
    out: &mut OutputDir,
) -> Result<Outcome, HarnessError> {
    let mut rng = rng(cfg);
    let r = &cfg.recipe;
    let bp = block_params(cfg, Field::Real)?;
    let samples: Vec<[f64; 4]> = (0..8)
        .map(|_| std::array::from_fn(|_| rng.random_range(-1.0..1.0)))
        .collect();

    #[derive(Serialize)]
    struct Row {
        j: usize,
        n: u64,
        deviation: f64,
    }
    let mut rows = Vec::new();
    for j in 1..=r.conjugacy_blocks.min(bp.j_max()) {
        let m = bp.m_j(j);
        for n in [0, 1, 7, m * m] {
            rows.push(Row {
                j,
                n,
                deviation: bp.conjugacy_check(j, n, &samples)?,
            });
        }
    }
    out.write_csv("conjugacy.csv", &["j", "n", "deviation"], &rows)?;
    let worst = rows.iter().map(|r| r.deviation).fold(0.0, f64::max);

    let lambdas = bp.lambdas();
    let mut trials = 0usize;
    let mut disagree = 0usize;
    for j in 1..=r.real_cyclic_blocks.min(bp.j_max()) {
        let d = &lambdas[..2 * j];
        for t in 0..r.real_cyclic_vectors {
            let x = random_pattern(&mut rng, 2 * j, if t % 2 == 0 { 0.0 } else { 0.25 });
            let cyc = real_cyclic_test(d, &x)?;
            let rank = realified_krylov_rank(d, &x)?;
            trials += 1;
            if cyc != (rank == 4 * j) {
                disagree += 1;
            }
        }
    }

    let m2 = {
        let mut m = bp.m.clone();
        m[0] = 2;
        BlockParams::new(Field::Real, bp.v.clone(), bp.omega.clone(), m, bp.space)
    };
    let two = Block2::new(2, Complex64::new(1.0, 0.0));
    let collision = real_cyclic_test(&[two.mu1, two.mu2], &[Complex64::new(1.0, 0.0); 2]);
    let rejected = m2.is_err() && collision.is_err();

    let mut a = Assertions::new(Assertion::new(
        "real-conjugacy",
        "the real 4x4 blocks are conjugate to the complex 2x2 blocks",
        worst <= CONJUGACY_TOL,
        format!("worst deviation {worst:.3e} over {} cases", rows.len()),
    ));
    a.push(Assertion::new(
        "real-cyclic",
        "a real vector is cyclic exactly when every complex block coordinate is nonzero",
        disagree == 0 && trials > 0,
        format!("{disagree} of {trials} vectors disagree"),
    ));
    a.push(Assertion::new(
        "real-m1-rejected",
        "m_1 = 2 produces a real eigenvalue and is rejected over the reals",
        rejected,
        format!(
            "params: {}, cyclic test: {}",
            describe_err(&m2),
            describe_err(&collision)
        ),
    ));
    let mut o = Outcome::new(a);
    o.summary("worst_conjugacy", worst);
    o.summary("real_cyclic_trials", trials);
    Ok(o)
}

fn describe_err<T>(r: &Result<T, Error>) -> String {
    match r {
        Ok(_) => "accepted".to_string(),
        Err(e) => format!("rejected ({e})"),
    }
}

pub(super) fn facts_suite(
    cfg: &ExperimentConfig,
    out: &mut OutputDir,
) -> Result<Outcome, HarnessError> {
    let op = rigidity_operator(cfg)?;
    let mut rng = rng(cfg);
    let omegas = [
        Complex64::new(1.0, 0.0),
        Complex64::new(0.3, -0.4),
        Complex64::new(0.0, 2.0),
    ];
    let sweeps = [
        (sweep_lambda_upper(&op), "|lambda_{k,n}| <= n"),
        (
            sweep_lambda_vanishing(&op),
            "lambda_{k,m_n} = 0 for 3 <= k <= n",
        ),
        (
            sweep_lambda_lower(&op),
            "|lambda_{k,n}| >= 2n/pi at the first k with 2n <= m_k",
        ),
        (
            sweep_corner_bound(&omegas),
            "corner of A^n is at least 2m|omega|/pi on the window",
        ),
        (
            sweep_block_power(&omegas),
            "closed-form block powers match repeated products",
        ),
        (
            sweep_closed_form(&op, &mut rng, cfg.recipe.oracle_vectors)?,
            "closed-form coordinates of T^n x match iterated application",
        ),
    ];
    out.write_csv(
        "facts.csv",
        &["check", "cases", "failures", "worst"],
        &sweeps.iter().map(|(s, _)| s).collect::<Vec<_>>(),
    )?;
    let pairing = op.params.pairing_report();
    let mut a = Assertions::new(Assertion::new(
        "pairing",
        "every generated w_k* pairs with z to modulus 1",
        pairing.max_pairing_error <= PAIRING_FLOOR,
        format!("max pairing {:.3e}", pairing.max_pairing_error),
    ));
    let mut o_sweeps = Vec::new();
    for (s, inv) in &sweeps {
        a.push(sweep_assertion(s, inv));
        o_sweeps.push(s.clone());
    }
    let mut o = Outcome::new(a);
    o.summary("sweeps", o_sweeps);
    o.summary("pairing", pairing);
    Ok(o)
}
