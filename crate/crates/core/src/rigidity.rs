//! A recurrent operator `T = R + Σ_{k≥3} m_{k-1}^{-1} ⟨w_k*, P·⟩ e_k` whose
//! recurrent vectors are dense but contain no dense subspace.
//!
//! `R` is the diagonal operator with `λ_k = exp(2πi/m_k)`, `P` projects onto
//! `span{e_1, e_2}` and the functionals `w_k*` live on the first two coordinates.
//! The integers `m_k` grow super-exponentially, so they are stored as a chain of
//! ratios `r_k = m_k / m_{k-1}` and powers of `T` are evaluated in closed form
//! at times expressed as multiples of some `m_b` (see [`Time`]).

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::ReturnSet;
use crate::error::{Error, Result};
use crate::seqspace::{
    eval_functional, CoordFunctional, Scalar, SpaceConfig, SparseVector, ALGEBRAIC_TOL,
};

/// Pairings `|⟨w̃, z⟩|` below this are skipped when enumerating the dense sequence.
pub const PAIRING_FLOOR: f64 = 1e-9;

/// Required size of the tail quantity `c_j` at `j = j_max`.
pub const TAIL_TARGET: f64 = 1e-6;

/// Default number of leading times checked one by one in [`RigidityOperator::nonrecurrence_floor`].
pub const DEFAULT_SCAN_CAP: u64 = 1 << 20;

// Generalized golden ratio for three dimensions: the real root of x^4 = x + 1.
const KRONECKER_ROOT: f64 = 1.220_744_084_605_759_5;

/// Tunable knobs of the construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RigidityConfig {
    /// Last level at which the tail quantity must already be below [`TAIL_TARGET`].
    pub j_max: usize,
    /// Number of generated levels.
    pub k_max: usize,
    /// Angle of `z = (cos β, sin β)`.
    pub beta: f64,
    /// Number of partition classes actually populated.
    pub n_part: usize,
    /// Base of the geometric decay imposed on the tail quantity.
    pub growth_factor: f64,
}

impl Default for RigidityConfig {
    fn default() -> Self {
        Self {
            j_max: 12,
            k_max: 24,
            beta: 1.0,
            n_part: 4,
            growth_factor: 4.0,
        }
    }
}

impl RigidityConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParams(msg));
        if self.j_max < 3 {
            return bad(format!("j_max must be at least 3, got {}", self.j_max));
        }
        if self.k_max <= self.j_max {
            return bad(format!(
                "k_max ({}) must exceed j_max ({})",
                self.k_max, self.j_max
            ));
        }
        if self.n_part == 0 {
            return bad("n_part must be positive".into());
        }
        if !(self.growth_factor > 1.0 && self.growth_factor.is_finite()) {
            return bad(format!(
                "growth_factor must be > 1, got {}",
                self.growth_factor
            ));
        }
        if !self.beta.is_finite() {
            return bad("beta must be finite".into());
        }
        Ok(())
    }
}

/// The integer `mult · m_base`. Plain integers use `base = 1` (since `m_1 = 1`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Time {
    pub mult: u64,
    pub base: usize,
}

impl Time {
    pub fn plain(n: u64) -> Self {
        Self { mult: n, base: 1 }
    }

    pub fn multiple(mult: u64, base: usize) -> Self {
        Self {
            mult,
            base: base.max(1),
        }
    }
}

/// Enumerates a low-discrepancy sequence on the unit sphere of the dual of
/// `span{e_1, e_2}`: `(cos θ e^{iα}, sin θ e^{iγ})` rescaled to unit dual norm.
#[derive(Clone, Debug)]
pub struct DenseSequence {
    space: SpaceConfig,
}

impl DenseSequence {
    pub fn new(space: SpaceConfig) -> Self {
        Self { space }
    }

    /// The `i`-th raw point, `i ≥ 1`.
    pub fn point(&self, i: u64) -> CoordFunctional {
        let u = |d: i32| (0.5 + i as f64 / KRONECKER_ROOT.powi(d)).fract();
        let theta = u(1) * PI / 2.0;
        let (alpha, gamma) = (2.0 * PI * u(2), 2.0 * PI * u(3));
        let f = CoordFunctional::from_entries([
            (1, Complex64::from_polar(theta.cos(), alpha)),
            (2, Complex64::from_polar(theta.sin(), gamma)),
        ])
        .expect("indices are positive");
        let norm = f.dual_norm(&self.space);
        f.scale(Complex64::new(1.0 / norm, 0.0))
    }

    /// The first `count` points whose pairing with `z` is not negligible.
    pub fn admissible(&self, z: &SparseVector, count: usize) -> Vec<CoordFunctional> {
        (1..)
            .map(|i| self.point(i))
            .filter(|f| eval_functional(f, z).norm() >= PAIRING_FLOOR)
            .take(count)
            .collect()
    }
}

/// Generated data of the construction.
#[derive(Clone, Debug)]
pub struct RigidityParams {
    pub space: SpaceConfig,
    pub cfg: RigidityConfig,
    pub z: SparseVector,
    /// `w̃_n*` for the classes `n = 3, …, n_part + 2`, stored from index 0.
    pub wtilde: Vec<CoordFunctional>,
    /// `w_k* = w̃_n* / |⟨w̃_n*, z⟩|`, one per class.
    pub w: Vec<CoordFunctional>,
    w_norm: Vec<f64>,
    w_sup: f64,
    ratio: Vec<u128>,
    m_exact: Vec<Option<u128>>,
    m_f64: Vec<f64>,
    inv_m: Vec<f64>,
    c: Vec<f64>,
}

impl RigidityParams {
    pub fn generate(cfg: RigidityConfig, space: SpaceConfig) -> Result<Self> {
        cfg.validate()?;
        space.validate()?;
        let z = {
            let raw = SparseVector::from_real([(1, cfg.beta.cos()), (2, cfg.beta.sin())])?;
            let n = raw.norm(&space);
            raw.scale(Complex64::new(1.0 / n, 0.0))
        };
        let wtilde = DenseSequence::new(space).admissible(&z, cfg.n_part);
        let w: Vec<CoordFunctional> = wtilde
            .iter()
            .map(|f| f.scale(Complex64::new(1.0 / eval_functional(f, &z).norm(), 0.0)))
            .collect();
        let w_norm: Vec<f64> = w.iter().map(|f| f.dual_norm(&space)).collect();
        let w_sup = w_norm.iter().copied().fold(0.0, f64::max);

        let class_norm = |k: usize| w_norm[(k - 3) % cfg.n_part];
        let mut ratio = vec![1u128; cfg.k_max + 1];
        for (j, r) in ratio.iter_mut().enumerate().skip(3) {
            *r = if j == 3 {
                2
            } else {
                let target = (class_norm(j + 1) * cfg.growth_factor.powi(j as i32 - 1)).max(2.0);
                if target >= u128::MAX as f64 {
                    return Err(Error::InvalidParams(format!(
                        "ratio r_{j} overflows; lower k_max"
                    )));
                }
                target.ceil() as u128
            };
        }
        let mut m_exact = vec![Some(1u128); cfg.k_max + 1];
        let mut m_f64 = vec![1.0; cfg.k_max + 1];
        let mut inv_m = vec![1.0; cfg.k_max + 1];
        for k in 2..=cfg.k_max {
            m_exact[k] = m_exact[k - 1].and_then(|m| m.checked_mul(ratio[k]));
            m_f64[k] = m_f64[k - 1] * ratio[k] as f64;
            inv_m[k] = inv_m[k - 1] / ratio[k] as f64;
        }
        if !m_f64[cfg.k_max].is_finite() || inv_m[cfg.k_max] == 0.0 {
            return Err(Error::InvalidParams(format!(
                "m_{} leaves the floating-point range; lower k_max",
                cfg.k_max
            )));
        }

        // c_j = m_{j-1} Σ_{k>j} ‖w_k‖/m_{k-1} = (‖w_{j+1}‖ + c_{j+1}) / r_j, closed at k_max by
        // the tail Σ_{k>k_max} ‖w_k‖/m_{k-1} ≤ 2 sup‖w‖ / m_{k_max} (every later ratio is ≥ 2).
        let mut c = vec![f64::NAN; cfg.k_max + 1];
        c[cfg.k_max] = 2.0 * w_sup / ratio[cfg.k_max] as f64;
        for j in (3..cfg.k_max).rev() {
            c[j] = (class_norm(j + 1) + c[j + 1]) / ratio[j] as f64;
        }
        let params = Self {
            space,
            cfg,
            z,
            wtilde,
            w,
            w_norm,
            w_sup,
            ratio,
            m_exact,
            m_f64,
            inv_m,
            c,
        };
        params.check_tail_condition()?;
        Ok(params)
    }

    fn check_tail_condition(&self) -> Result<()> {
        let j_max = self.cfg.j_max;
        for j in 3..j_max {
            if self.c[j + 1] >= self.c[j] {
                return Err(Error::InvalidParams(format!(
                    "tail quantity not decreasing: c_{} = {:e} >= c_{} = {:e}",
                    j + 1,
                    self.c[j + 1],
                    j,
                    self.c[j]
                )));
            }
        }
        if self.c[j_max] >= TAIL_TARGET {
            return Err(Error::InvalidParams(format!(
                "c_{j_max} = {:e} is not below {TAIL_TARGET:e}; raise growth_factor",
                self.c[j_max]
            )));
        }
        Ok(())
    }

    pub fn k_max(&self) -> usize {
        self.cfg.k_max
    }

    /// Partition class `n ≥ 3` of level `k ≥ 3`.
    pub fn class_of(&self, k: usize) -> usize {
        3 + (k - 3) % self.cfg.n_part
    }

    /// Members of class `n` up to `k_max`, ascending.
    pub fn class_members(&self, n: usize) -> impl Iterator<Item = usize> + '_ {
        (n..=self.cfg.k_max).step_by(self.cfg.n_part)
    }

    pub fn w_k(&self, k: usize) -> &CoordFunctional {
        &self.w[(k - 3) % self.cfg.n_part]
    }

    pub fn w_k_norm(&self, k: usize) -> f64 {
        self.w_norm[(k - 3) % self.cfg.n_part]
    }

    /// `w̃_n*` for a populated class `n`.
    pub fn wtilde_n(&self, n: usize) -> Option<&CoordFunctional> {
        n.checked_sub(3).and_then(|i| self.wtilde.get(i))
    }

    pub fn ratio(&self, k: usize) -> u128 {
        self.ratio[k]
    }

    /// `m_k` when it fits in 128 bits.
    pub fn m_exact(&self, k: usize) -> Option<u128> {
        self.m_exact[k]
    }

    pub fn m(&self, k: usize) -> f64 {
        self.m_f64[k]
    }

    /// The tail quantity `c_j` for `3 ≤ j ≤ k_max` (upper bound, tail included).
    pub fn tail_quantity(&self, j: usize) -> f64 {
        self.c[j]
    }

    /// Upper bound on `Σ_{k>k_trunc} ‖w_k*‖/m_{k-1}`.
    pub fn tail_weight(&self, k_trunc: usize) -> f64 {
        let top = self.cfg.k_max;
        let mut sum = 2.0 * self.w_sup * self.inv_m[top];
        for k in (k_trunc + 1).max(3)..=top {
            sum += self.w_k_norm(k) * self.inv_m[k - 1];
        }
        sum
    }

    /// Real value of the time.
    pub fn time_value(&self, t: Time) -> f64 {
        t.mult as f64 * self.m_f64[t.base]
    }

    /// Exact value of the time when it fits in 128 bits.
    pub fn time_exact(&self, t: Time) -> Option<u128> {
        self.m_exact[t.base].and_then(|m| m.checked_mul(t.mult as u128))
    }

    /// Decimal value, or `mult*m_base` when it does not fit in 128 bits.
    pub fn describe(&self, t: Time) -> String {
        match self.time_exact(t) {
            Some(v) => v.to_string(),
            None => format!("{}*m_{}", t.mult, t.base),
        }
    }

    /// Fractional part of `n / m_k`.
    pub fn phase(&self, t: Time, k: usize) -> f64 {
        if k <= t.base {
            return 0.0;
        }
        if t.base <= 2 {
            return match self.m_exact[k] {
                Some(m) => (t.mult as u128 % m) as f64 / m as f64,
                // m_k exceeds 2^128, hence n < m_k
                None => t.mult as f64 * self.inv_m[k],
            };
        }
        let mut d = Some(1u128);
        let mut inv = 1.0;
        for i in t.base + 1..=k {
            d = d.and_then(|d| d.checked_mul(self.ratio[i]));
            inv /= self.ratio[i] as f64;
        }
        match d {
            Some(d) => (t.mult as u128 % d) as f64 / d as f64,
            None => t.mult as f64 * inv,
        }
    }

    /// Checks `|⟨w_k*, z⟩| = 1` and `‖w_k*‖ ≥ 1/‖z‖`; returns the worst deviations.
    pub fn pairing_report(&self) -> PairingReport {
        let z_norm = self.z.norm(&self.space);
        let mut max_pairing_error: f64 = 0.0;
        let mut min_norm_margin = f64::INFINITY;
        for (f, &n) in self.w.iter().zip(&self.w_norm) {
            max_pairing_error =
                max_pairing_error.max((eval_functional(f, &self.z).norm() - 1.0).abs());
            min_norm_margin = min_norm_margin.min(n - 1.0 / z_norm);
        }
        PairingReport {
            max_pairing_error,
            min_norm_margin,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PairingReport {
    pub max_pairing_error: f64,
    pub min_norm_margin: f64,
}

/// Lower and upper bounds on `‖T^n x − x‖`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Bracket {
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceRow {
    pub n: u64,
    pub lower: f64,
    pub upper: f64,
}

/// A return time `n = m_{k_j - 1}` with `‖T^n x − x‖ < ε`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub time: Time,
    pub n: String,
    pub class: usize,
    pub k_j: usize,
    pub bracket: Bracket,
    /// `2K‖x‖ c_{k_j}`.
    pub analytic_bound: f64,
}

/// A verified progression `{ℓ·m_{k_j-1} : 1 ≤ ℓ ≤ L}` inside the ε-ball return set.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ApWitness {
    pub step: Time,
    pub step_value: u128,
    pub class: usize,
    pub k_j: usize,
    /// `2K‖x‖ L c_{k_j}`.
    pub analytic_bound: f64,
    pub uppers: Vec<f64>,
    /// Hits among the progression and the first [`AP_PROBE`] times; a subset of the true return set.
    #[serde(skip)]
    pub return_set: ReturnSet,
}

/// Small times added to the probed return set of an [`ApWitness`].
pub const AP_PROBE: u64 = 64;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FloorReport {
    pub floor: f64,
    /// `1/(Kπ)`.
    pub bound: f64,
    /// `(1/K)(1/π − max_n |⟨e_{k_n}*, R^n x − x⟩|)`.
    pub comparator: f64,
    pub scanned: u64,
    pub scan_floor: f64,
    pub scan_argmin: u64,
    /// Certified lower bound over `(scanned, horizon]`, `None` if that range is empty.
    pub segment_floor: Option<f64>,
    pub segment_argmin_level: Option<usize>,
    pub horizon: String,
}

/// The operator together with its eigenvalues `λ_k`.
#[derive(Clone, Debug)]
pub struct RigidityOperator {
    pub params: RigidityParams,
    pub lambda: Vec<Complex64>,
}

fn project(x: &SparseVector) -> SparseVector {
    SparseVector::from_entries([(1, x.get(1)), (2, x.get(2))]).expect("indices are positive")
}

impl RigidityOperator {
    pub fn new(params: RigidityParams) -> Self {
        let lambda = params
            .inv_m
            .iter()
            .map(|&inv| Complex64::from_polar(1.0, 2.0 * PI * inv))
            .collect();
        Self { params, lambda }
    }

    pub fn with_defaults() -> Result<Self> {
        Ok(Self::new(RigidityParams::generate(
            RigidityConfig::default(),
            SpaceConfig::default(),
        )?))
    }

    pub fn k_max(&self) -> usize {
        self.params.k_max()
    }

    fn k_const(&self) -> f64 {
        self.params.space.k
    }

    /// `⟨e_1*, x⟩ e_1 + ⟨e_2*, x⟩ e_2`.
    pub fn project_p(&self, x: &SparseVector) -> SparseVector {
        project(x)
    }

    /// `λ_{k,n} = Σ_{j<n} λ_k^j`, evaluated as `sin(πf)/sin(π/m_k) · e^{iπ(f − 1/m_k)}`
    /// with `f` the fractional part of `n/m_k`.
    pub fn lambda_kn_at(&self, k: usize, t: Time) -> Complex64 {
        let p = &self.params;
        if k <= 2 {
            return Complex64::new(p.time_value(t), 0.0);
        }
        let f = p.phase(t, k);
        let inv = p.inv_m[k];
        Complex64::from_polar((PI * f).sin() / (PI * inv).sin(), PI * (f - inv))
    }

    pub fn lambda_kn(&self, k: usize, n: u64) -> Complex64 {
        self.lambda_kn_at(k, Time::plain(n))
    }

    /// Direct summation of `λ_{k,n}`; reference implementation for small `n`.
    pub fn lambda_kn_sum(&self, k: usize, n: u64) -> Complex64 {
        let l = self.lambda[k];
        let mut acc = Complex64::new(0.0, 0.0);
        let mut pw = Complex64::new(1.0, 0.0);
        for _ in 0..n {
            acc += pw;
            pw *= l;
        }
        acc
    }

    /// `λ_k^n`.
    pub fn lambda_pow(&self, k: usize, t: Time) -> Complex64 {
        Complex64::from_polar(1.0, 2.0 * PI * self.params.phase(t, k))
    }

    fn perturbation(&self, k: usize, t: Time, px: &SparseVector) -> Complex64 {
        let p = &self.params;
        let pairing = eval_functional(p.w_k(k), px);
        if pairing == Complex64::new(0.0, 0.0) {
            return pairing;
        }
        let f = p.phase(t, k);
        let inv = p.inv_m[k];
        let modulus = (PI * f).sin() / ((PI * inv).sin() * p.m_f64[k - 1]);
        Complex64::from_polar(modulus, PI * (f - inv)) * pairing
    }

    /// `k`-th coordinate of `T^n x`.
    pub fn power_coeff_at(&self, x: &SparseVector, t: Time, k: usize) -> Scalar {
        let diag = self.lambda_pow(k, t) * x.get(k);
        if k <= 2 {
            return diag;
        }
        diag + self.perturbation(k, t, &project(x))
    }

    pub fn power_coeff(&self, x: &SparseVector, n: u64, k: usize) -> Scalar {
        self.power_coeff_at(x, Time::plain(n), k)
    }

    fn check_truncation(&self, x: &SparseVector, k_trunc: usize) -> Result<()> {
        if k_trunc > self.k_max() {
            return Err(Error::InvalidParams(format!(
                "truncation level {k_trunc} beyond generated range {}",
                self.k_max()
            )));
        }
        match x.support_max() {
            Some(s) if s > k_trunc => Err(Error::InvalidParams(format!(
                "vector support reaches {s}, beyond truncation level {k_trunc}"
            ))),
            _ => Ok(()),
        }
    }

    /// Coordinates `≤ k_trunc` of `T^n x`.
    pub fn power_vector(&self, x: &SparseVector, t: Time, k_trunc: usize) -> Result<SparseVector> {
        self.check_truncation(x, k_trunc)?;
        let px = project(x);
        SparseVector::from_entries((1..=k_trunc).map(|k| {
            let mut v = self.lambda_pow(k, t) * x.get(k);
            if k >= 3 {
                v += self.perturbation(k, t, &px);
            }
            (k, v)
        }))
    }

    /// `Tx` truncated to indices `≤ k_trunc`, with a bound on the discarded part.
    pub fn apply_t(&self, x: &SparseVector, k_trunc: usize) -> Result<(SparseVector, f64)> {
        self.check_truncation(x, k_trunc)?;
        let p = &self.params;
        let px = project(x);
        let y = SparseVector::from_entries((1..=k_trunc).map(|k| {
            let mut v = self.lambda[k] * x.get(k);
            if k >= 3 {
                v += eval_functional(p.w_k(k), &px) * p.inv_m[k - 1];
            }
            (k, v)
        }))?;
        Ok((y, px.norm(&p.space) * p.tail_weight(k_trunc)))
    }

    /// Bracket on `‖T^n x − x‖` from coordinates up to `k_trunc`.
    pub fn bracket(&self, x: &SparseVector, t: Time, k_trunc: usize) -> Result<Bracket> {
        let p = &self.params;
        let d = &self.power_vector(x, t, k_trunc)? - x;
        let tail = p.time_value(t) * project(x).norm(&p.space) * p.tail_weight(k_trunc);
        Ok(Bracket {
            lower: d.max_abs() / self.k_const(),
            upper: d.norm(&p.space) + tail,
        })
    }

    /// Brackets for every `1 ≤ n ≤ horizon`.
    pub fn orbit_distance_trace(
        &self,
        x: &SparseVector,
        horizon: u64,
        k_trunc: usize,
        parallel: bool,
    ) -> Result<Vec<TraceRow>> {
        self.check_truncation(x, k_trunc)?;
        let row = |n: u64| {
            let b = self
                .bracket(x, Time::plain(n), k_trunc)
                .expect("truncation checked");
            TraceRow {
                n,
                lower: b.lower,
                upper: b.upper,
            }
        };
        Ok(if parallel {
            (1..=horizon).into_par_iter().map(row).collect()
        } else {
            (1..=horizon).map(row).collect()
        })
    }

    /// Classes `n` with `⟨w̃_n*, Px⟩ = 0`, i.e. witnesses of `x ∈ X_0`.
    pub fn x0_classes(&self, x: &SparseVector) -> Vec<usize> {
        let px = project(x);
        let tol = ALGEBRAIC_TOL * px.norm(&self.params.space).max(1.0);
        (3..3 + self.params.cfg.n_part)
            .filter(|&n| eval_functional(self.params.wtilde_n(n).unwrap(), &px).norm() <= tol)
            .collect()
    }

    /// Admissible levels `k_j ∈ A_n` with `k_j − 1 ≥ k_x`, merged over all witnessing classes.
    fn admissible_levels(&self, x: &SparseVector) -> Result<Vec<(usize, usize)>> {
        let classes = self.x0_classes(x);
        if classes.is_empty() {
            return Err(Error::NotInX0);
        }
        let k_x = x.support_max().unwrap_or(0);
        let mut levels: Vec<(usize, usize)> = classes
            .iter()
            .flat_map(|&n| self.params.class_members(n).map(move |k| (k, n)))
            .filter(|&(k, _)| k > k_x)
            .collect();
        levels.sort_unstable();
        Ok(levels)
    }

    /// Smallest `m_{k_j − 1}` with upper bracket below `eps`.
    pub fn recurrence_certificate(&self, x: &SparseVector, eps: f64) -> Result<Certificate> {
        let levels = self.admissible_levels(x)?;
        let scale = 2.0 * self.k_const() * x.norm(&self.params.space);
        let mut best = f64::INFINITY;
        for (searched, &(k_j, class)) in levels.iter().enumerate() {
            let time = Time::multiple(1, k_j - 1);
            let bracket = self.bracket(x, time, self.k_max())?;
            if bracket.upper < eps {
                log::debug!(
                    "certificate at level {k_j} after {} candidates",
                    searched + 1
                );
                return Ok(Certificate {
                    time,
                    n: self.params.describe(time),
                    class,
                    k_j,
                    bracket,
                    analytic_bound: scale * self.params.tail_quantity(k_j),
                });
            }
            best = best.min(bracket.upper);
        }
        Err(Error::CertificateNotFound {
            best,
            searched: levels.len(),
        })
    }

    /// Progression of length `len` with step `m_{k_j−1}`, `2K‖x‖·len·c_{k_j} < eps`,
    /// each term verified through its upper bracket.
    pub fn ap_witness(&self, x: &SparseVector, eps: f64, len: u64) -> Result<ApWitness> {
        if len == 0 {
            return Err(Error::InvalidParams(
                "progression length must be positive".into(),
            ));
        }
        let levels = self.admissible_levels(x)?;
        let scale = 2.0 * self.k_const() * x.norm(&self.params.space) * len as f64;
        let mut best = f64::INFINITY;
        let found = levels.iter().find(|&&(k, _)| {
            let b = scale * self.params.tail_quantity(k);
            best = best.min(b);
            b < eps
        });
        let &(k_j, class) = found.ok_or(Error::CertificateNotFound {
            best,
            searched: levels.len(),
        })?;
        let step = Time::multiple(1, k_j - 1);
        let step_value = self.params.time_exact(step).ok_or_else(|| {
            Error::InvalidParams(format!("step m_{} does not fit in 128 bits", k_j - 1))
        })?;
        let mut uppers = Vec::with_capacity(len as usize);
        for l in 1..=len {
            let upper = self
                .bracket(x, Time::multiple(l, k_j - 1), self.k_max())?
                .upper;
            if upper >= eps {
                return Err(Error::InvalidWitness(format!(
                    "term {l} of the progression has upper bracket {upper:e} >= {eps:e}"
                )));
            }
            uppers.push(upper);
        }
        let horizon = step_value.checked_mul(len as u128).ok_or_else(|| {
            Error::InvalidParams("progression end does not fit in 128 bits".into())
        })?;
        let mut times: Vec<u128> = (1..=len as u128).map(|l| l * step_value).collect();
        for n in 1..=AP_PROBE.min(u64::try_from(horizon).unwrap_or(u64::MAX)) {
            if self.bracket(x, Time::plain(n), self.k_max())?.upper < eps {
                times.push(n as u128);
            }
        }
        Ok(ApWitness {
            step,
            step_value,
            class,
            k_j,
            analytic_bound: scale * self.params.tail_quantity(k_j),
            uppers,
            return_set: ReturnSet::from_unsorted(times, horizon)?,
        })
    }

    /// Lower bound on `min_{1≤n≤H} ‖T^n x − x‖` for `Px = z`.
    ///
    /// Times up to `scan_cap` are checked one by one through their lower bracket.
    /// Beyond that, the range is cut into the segments `m_{k-1} < 2n ≤ m_k`, on
    /// which coordinate `k` alone gives a certified bound.
    pub fn nonrecurrence_floor(
        &self,
        x: &SparseVector,
        horizon: Time,
        scan_cap: u64,
    ) -> Result<FloorReport> {
        let p = &self.params;
        let px = project(x);
        if (&px - &p.z).max_abs() > ALGEBRAIC_TOL {
            return Err(Error::InvalidWitness("P x differs from z".into()));
        }
        let k_top = self.k_max();
        self.check_truncation(x, k_top)?;
        let h = p.time_value(horizon);
        if 2.0 * h > p.m_f64[k_top] {
            return Err(Error::InvalidParams(format!(
                "horizon {} exceeds the generated range",
                p.describe(horizon)
            )));
        }
        let k_const = self.k_const();
        let scanned = match p.time_exact(horizon) {
            Some(v) => scan_cap.min(u64::try_from(v).unwrap_or(u64::MAX)),
            None => scan_cap,
        };
        let (scan_floor, scan_argmin) = (1..=scanned)
            .into_par_iter()
            .map(|n| {
                let t = Time::plain(n);
                let lower = (3..=k_top)
                    .map(|k| (self.power_coeff_at(x, t, k) - x.get(k)).norm())
                    .fold(0.0, f64::max)
                    / k_const;
                (lower, n)
            })
            .reduce(
                || (f64::INFINITY, 0),
                |a, b| {
                    if b.0 < a.0 || (b.0 == a.0 && b.1 < a.1) {
                        b
                    } else {
                        a
                    }
                },
            );

        let mut segment_floor: Option<(f64, usize)> = None;
        let mut worst_diag: f64 = 0.0;
        for k in 3..=k_top {
            let lo_full = p.m_f64[k - 1] / 2.0;
            let hi = (p.m_f64[k] / 2.0).min(h);
            if lo_full >= hi {
                continue;
            }
            let b = (hi * p.inv_m[k]).min(0.5);
            worst_diag = worst_diag.max(2.0 * (PI * b).sin() * x.get(k).norm());
            let lo = lo_full.max(scanned as f64);
            if lo >= hi {
                continue;
            }
            let a = lo * p.inv_m[k];
            let pairing = eval_functional(p.w_k(k), &p.z).norm();
            let main = (PI * a).sin() / ((PI * p.inv_m[k]).sin() * p.m_f64[k - 1]) * pairing;
            let bound = (main - 2.0 * (PI * b).sin() * x.get(k).norm()) / k_const;
            if segment_floor.is_none_or(|(f, _)| bound < f) {
                segment_floor = Some((bound, k));
            }
        }
        let floor = segment_floor.map_or(scan_floor, |(f, _)| f.min(scan_floor));
        Ok(FloorReport {
            floor,
            bound: 1.0 / (k_const * PI),
            comparator: (1.0 / PI - worst_diag) / k_const,
            scanned,
            scan_floor,
            scan_argmin,
            segment_floor: segment_floor.map(|(f, _)| f),
            segment_argmin_level: segment_floor.map(|(_, k)| k),
            horizon: p.describe(horizon),
        })
    }

    /// `x` with `Px = s·(w̃_2, −w̃_1)` for class `n`, plus a tail on levels `≥ 3`.
    pub fn x0_vector(
        &self,
        class: usize,
        s: Scalar,
        tail: &[(usize, Scalar)],
    ) -> Result<SparseVector> {
        let f = self
            .params
            .wtilde_n(class)
            .ok_or_else(|| Error::InvalidParams(format!("class {class} is not populated")))?;
        if let Some(&(k, _)) = tail.iter().find(|(k, _)| *k < 3) {
            return Err(Error::InvalidParams(format!(
                "tail index {k} must be at least 3"
            )));
        }
        SparseVector::from_entries(
            [(1, s * f.get(2)), (2, -s * f.get(1))]
                .into_iter()
                .chain(tail.iter().copied()),
        )
    }

    /// A random element of `X_0` with a tail supported in `3..=max_level`.
    pub fn random_x0<R: Rng + ?Sized>(&self, rng: &mut R, max_level: usize) -> SparseVector {
        let class = rng.random_range(3..3 + self.params.cfg.n_part);
        let s = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let tail: Vec<(usize, Scalar)> = (0..3)
            .map(|_| {
                let k = rng.random_range(3..=max_level.max(3));
                (
                    k,
                    Complex64::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)),
                )
            })
            .collect();
        self.x0_vector(class, s, &tail)
            .expect("class and tail are valid")
    }

    /// `x = z + Σ δ_k e_k`, an element of `P^{-1}({z})`.
    pub fn z_fiber(&self, tail: &[(usize, Scalar)]) -> Result<SparseVector> {
        if tail.iter().any(|(k, _)| *k < 3) {
            return Err(Error::InvalidParams(
                "perturbation must avoid coordinates 1 and 2".into(),
            ));
        }
        Ok(&self.params.z + &SparseVector::from_entries(tail.iter().copied())?)
    }

    /// `Σ_{k ≤ k_max} |λ_k − 1|` and the bound `2π Σ 1/m_k` with the analytic tail.
    pub fn lambda_variation(&self) -> (f64, f64) {
        let p = &self.params;
        let sum: f64 = self.lambda.iter().skip(1).map(|l| (l - 1.0).norm()).sum();
        let bound = 2.0 * PI * (p.inv_m.iter().skip(1).sum::<f64>() + 2.0 * p.inv_m[self.k_max()]);
        (sum, bound)
    }
}
