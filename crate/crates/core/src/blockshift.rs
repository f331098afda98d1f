//! The operator `T = D_λ + B_ω`, a direct sum of 2×2 upper-triangular blocks
//!
//! ```text
//! A_j = [ exp(2πi/m_j²)   ω_{2j-1}      ]
//!       [ 0               exp(4πi/m_j²) ]
//! ```
//!
//! acting on coordinates `(2j-1, 2j)`, and its real counterpart built from the
//! 4×4 blocks `B_j` on coordinates `4j-3..=4j`.
//!
//! Every power is evaluated in closed form with the phases reduced modulo the
//! exact period `m_j²`, so `T^{m_j²}` is the identity on block `j` to rounding.

use std::f64::consts::PI;

use evalexpr::{ContextWithMutableVariables, DefaultNumericTypes, HashMapContext, Value};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::{self, ReturnSet};
use crate::error::{Error, Result};
use crate::seqspace::{lp_norm, Field, Scalar, SpaceConfig, SparseVector};

/// Radius parameter of the exclusion ball, `2/(3π)`.
pub const EXCLUSION_EPS: f64 = 2.0 / (3.0 * PI);

pub const DEFAULT_M_EXPR: &str = "j*ceil(2^(j/2))+j+1";

pub type Mat2 = [[Complex64; 2]; 2];
pub type Mat4 = [[f64; 4]; 4];

/// How the integers `m_j` are produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MSchedule {
    /// Expression in `j`, e.g. `j*ceil(2^(j/2))+j+1`. Raised as needed to meet the growth conditions.
    Expr(String),
    /// Used verbatim.
    List(Vec<u64>),
}

impl Default for MSchedule {
    fn default() -> Self {
        Self::Expr(DEFAULT_M_EXPR.to_string())
    }
}

fn eval_schedule(expr: &str, j: usize) -> Result<f64> {
    let mut ctx = HashMapContext::<DefaultNumericTypes>::new();
    ctx.set_value("j".into(), Value::Float(j as f64))
        .expect("fresh context accepts variables");
    let bad = |detail: String| Error::Parse {
        what: "m schedule",
        input: format!("{expr}: {detail}"),
    };
    match evalexpr::eval_with_context(expr, &ctx).map_err(|e| bad(e.to_string()))? {
        Value::Float(f) if f.is_finite() => Ok(f),
        Value::Int(i) => Ok(i as f64),
        other => Err(bad(format!("evaluates to {other:?} at j = {j}"))),
    }
}

/// Tunable knobs of the construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BlockConfig {
    pub field: Field,
    pub j_max: usize,
    /// `v_j = v_rate^j` and `ω_{2j-1} = v_j`.
    pub v_rate: f64,
    pub m_schedule: MSchedule,
    /// Required value of `1/(m_j |ω_{2j-1}|)` at `j = j_max`, approached geometrically.
    pub b_target: f64,
}

impl Default for BlockConfig {
    fn default() -> Self {
        Self {
            field: Field::Complex,
            j_max: 8,
            v_rate: 0.9,
            m_schedule: MSchedule::default(),
            b_target: 1e-3,
        }
    }
}

/// One 2×2 block: eigenvalues `e^{2πi/q}`, `e^{4πi/q}` with `q = m²`, corner `w`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Block2 {
    pub m: u64,
    pub mu1: Complex64,
    pub mu2: Complex64,
    pub w: Complex64,
}

fn root(num: u128, q: u128) -> Complex64 {
    Complex64::from_polar(1.0, 2.0 * PI * (num % q) as f64 / q as f64)
}

impl Block2 {
    pub fn new(m: u64, w: Complex64) -> Self {
        let q = m as u128 * m as u128;
        Self {
            m,
            mu1: root(1, q),
            mu2: root(2, q),
            w,
        }
    }

    pub fn period(&self) -> u128 {
        self.m as u128 * self.m as u128
    }

    /// `(μ1^n − μ2^n)/(μ1 − μ2)`, via `e^{2πia} − e^{2πib} = 2i e^{iπ(a+b)} sin(π(a−b))`.
    pub fn divided_difference(&self, n: u64) -> Complex64 {
        let q = self.period();
        let a = (n as u128 % q) as f64 / q as f64;
        let b = ((2 * n as u128) % q) as f64 / q as f64;
        let (a0, b0) = (1.0 / q as f64, 2.0 / q as f64);
        let modulus = (PI * (a - b)).sin() / (PI * (a0 - b0)).sin();
        Complex64::from_polar(modulus, PI * (a + b - a0 - b0))
    }

    /// `λ_2 − λ_1`, evaluated without cancellation.
    pub fn eigen_gap(&self) -> Complex64 {
        let q = self.period() as f64;
        Complex64::from_polar(2.0 * (PI / q).sin(), PI * 3.0 / q + PI / 2.0)
    }

    pub fn power(&self, n: u64) -> Mat2 {
        let q = self.period();
        let zero = Complex64::new(0.0, 0.0);
        [
            [root(n as u128, q), self.divided_difference(n) * self.w],
            [zero, root(2 * n as u128, q)],
        ]
    }

    pub fn matrix(&self) -> Mat2 {
        [[self.mu1, self.w], [Complex64::new(0.0, 0.0), self.mu2]]
    }
}

/// `A^n` in closed form.
pub fn block_power(b: &Block2, n: u64) -> Mat2 {
    b.power(n)
}

pub fn mat2_mul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut c = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            c[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    c
}

/// Result of comparing `|A^n(1,2)|` with `2m|ω|/π`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Coord12 {
    pub value: f64,
    pub bound: f64,
    /// `n = ℓm² + k` with `m ≤ k ≤ m² − m`.
    pub in_window: bool,
}

impl Coord12 {
    pub fn holds(&self) -> bool {
        !self.in_window || self.value >= self.bound - 1e-9
    }
}

pub fn coord12_bound_check(b: &Block2, n: u64) -> Coord12 {
    let q = b.period();
    let k = n as u128 % q;
    let m = b.m as u128;
    Coord12 {
        value: (b.divided_difference(n) * b.w).norm(),
        bound: 2.0 * b.m as f64 * b.w.norm() / PI,
        in_window: m <= k && k <= q - m,
    }
}

/// The real 4×4 block
///
/// ```text
/// [ R(2π/m²)   W        ]      W = [ Re ω  −Im ω ]
/// [ 0          R(4π/m²) ]          [ Im ω   Re ω ]
/// ```
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Block4Real {
    pub m: u64,
    pub w: Complex64,
    pub matrix: Mat4,
}

fn rotation_into(out: &mut Mat4, at: usize, angle: f64, scale: f64) {
    let (s, c) = angle.sin_cos();
    out[at][at] = scale * c;
    out[at][at + 1] = -scale * s;
    out[at + 1][at] = scale * s;
    out[at + 1][at + 1] = scale * c;
}

fn complex_mul_into(out: &mut Mat4, row: usize, col: usize, w: Complex64) {
    out[row][col] = w.re;
    out[row][col + 1] = -w.im;
    out[row + 1][col] = w.im;
    out[row + 1][col + 1] = w.re;
}

impl Block4Real {
    pub fn new(m: u64, w: Complex64) -> Self {
        let q = (m * m) as f64;
        let mut matrix = [[0.0; 4]; 4];
        rotation_into(&mut matrix, 0, 2.0 * PI / q, 1.0);
        rotation_into(&mut matrix, 2, 4.0 * PI / q, 1.0);
        complex_mul_into(&mut matrix, 0, 2, w);
        Self { m, w, matrix }
    }

    /// `B^n` in real closed form. Rotations commute with `W`, so the corner is
    /// `W Σ_{k<n} R((n−1−k)α) R(2kα) = W R((n−1)α) Σ_{k<n} R(kα)`, a rotation
    /// scaled by `sin(nα/2)/sin(α/2)`. All angles are reduced with `n mod m²`.
    pub fn power(&self, n: u64) -> Mat4 {
        let q = self.m as u128 * self.m as u128;
        let r = n as u128 % q;
        let angle = |num: u128, den: u128| 2.0 * PI * (num % den) as f64 / den as f64;
        let mut out = [[0.0; 4]; 4];
        rotation_into(&mut out, 0, angle(r, q), 1.0);
        rotation_into(&mut out, 2, angle(2 * r, q), 1.0);
        if r > 0 {
            let scale = (PI * r as f64 / q as f64).sin() / (PI / q as f64).sin();
            // angle of R((n−1)α) R((n−1)α/2) is 3(n−1)π/q
            let corner = Complex64::from_polar(scale, angle(3 * (r - 1), 2 * q)) * self.w;
            complex_mul_into(&mut out, 0, 2, corner);
        }
        out
    }
}

pub fn mat4_mul(a: &Mat4, b: &Mat4) -> Mat4 {
    let mut c = [[0.0; 4]; 4];
    for i in 0..4 {
        for k in 0..4 {
            if a[i][k] != 0.0 {
                for j in 0..4 {
                    c[i][j] += a[i][k] * b[k][j];
                }
            }
        }
    }
    c
}

pub fn mat4_apply(a: &Mat4, x: &[f64; 4]) -> [f64; 4] {
    let mut y = [0.0; 4];
    for i in 0..4 {
        y[i] = (0..4).map(|k| a[i][k] * x[k]).sum();
    }
    y
}

/// Pairs real coordinates `(2k−1, 2k)` into the complex coordinate `k`.
pub fn phi(x: &[f64; 4]) -> [Complex64; 2] {
    [Complex64::new(x[0], x[1]), Complex64::new(x[2], x[3])]
}

pub fn phi_inv(y: &[Complex64; 2]) -> [f64; 4] {
    [y[0].re, y[0].im, y[1].re, y[1].im]
}

/// Growth condition report: `b_j = 1/(m_j |ω_{2j−1}|)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConditionReport {
    pub b: Vec<f64>,
    pub strictly_decreasing: bool,
    pub last: f64,
    pub target: f64,
    pub holds: bool,
}

/// Data of the construction for `1 ≤ j ≤ j_max`; vectors are indexed from `j = 1` at position 0.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlockParams {
    pub field: Field,
    pub v: Vec<f64>,
    pub omega: Vec<Complex64>,
    pub m: Vec<u64>,
    pub space: SpaceConfig,
    pub b_target: f64,
}

impl BlockParams {
    /// Validates the structural conditions: `m_j > j`, `m` strictly increasing,
    /// `0 < |ω_{2j−1}| ≤ v_j`, and `m_1 ≥ 3` over the reals.
    pub fn new(
        field: Field,
        v: Vec<f64>,
        omega: Vec<Complex64>,
        m: Vec<u64>,
        space: SpaceConfig,
    ) -> Result<Self> {
        space.validate()?;
        let j_max = m.len();
        if j_max == 0 || v.len() != j_max || omega.len() != j_max {
            return Err(Error::InvalidParams(format!(
                "need equally many v, omega and m values, got {}, {}, {}",
                v.len(),
                omega.len(),
                j_max
            )));
        }
        for j in 1..=j_max {
            let (mj, vj, wj) = (m[j - 1], v[j - 1], omega[j - 1]);
            if mj as usize <= j {
                return Err(Error::InvalidParams(format!(
                    "m_{j} = {mj} must exceed {j}"
                )));
            }
            if j > 1 && mj <= m[j - 2] {
                return Err(Error::InvalidParams(format!(
                    "m not strictly increasing at j = {j}"
                )));
            }
            if !(vj > 0.0 && vj.is_finite()) {
                return Err(Error::InvalidParams(format!("v_{j} must be positive")));
            }
            let wn = wj.norm();
            if !(wn > 0.0 && wn <= vj * (1.0 + 1e-12)) {
                return Err(Error::InvalidParams(format!(
                    "need 0 < |omega_{j}| = {wn} <= v_{j} = {vj}"
                )));
            }
            if mj > u32::MAX as u64 {
                return Err(Error::InvalidParams(format!("m_{j} = {mj} is too large")));
            }
        }
        if field == Field::Real && m[0] <= 2 {
            return Err(Error::InvalidParams(
                "the real construction needs m_1 > 2 (otherwise some eigenvalue is real)".into(),
            ));
        }
        Ok(Self {
            field,
            v,
            omega,
            m,
            space,
            b_target: 1e-3,
        })
    }

    /// Builds the default-style schedule and raises each `m_j` until `m_j > j`,
    /// `m` is strictly increasing, `b_j` strictly decreases and `b_j ≤ b_target^{j/j_max}`.
    pub fn generate(cfg: &BlockConfig, space: SpaceConfig) -> Result<Self> {
        if cfg.j_max == 0 {
            return Err(Error::InvalidParams("j_max must be positive".into()));
        }
        if !(cfg.v_rate > 0.0 && cfg.v_rate < 1.0) {
            return Err(Error::InvalidParams(format!(
                "v_rate must lie in (0, 1), got {}",
                cfg.v_rate
            )));
        }
        if !(cfg.b_target > 0.0 && cfg.b_target < 1.0) {
            return Err(Error::InvalidParams(format!(
                "b_target must lie in (0, 1), got {}",
                cfg.b_target
            )));
        }
        let j_max = cfg.j_max;
        let v: Vec<f64> = (1..=j_max).map(|j| cfg.v_rate.powi(j as i32)).collect();
        let omega: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        let m = match &cfg.m_schedule {
            MSchedule::List(list) => {
                if list.len() < j_max {
                    return Err(Error::InvalidParams(format!(
                        "m schedule lists {} values, need {j_max}",
                        list.len()
                    )));
                }
                list[..j_max].to_vec()
            }
            MSchedule::Expr(expr) => {
                let mut m: Vec<u64> = Vec::with_capacity(j_max);
                for j in 1..=j_max {
                    let w = omega[j - 1].norm();
                    let mut mj = eval_schedule(expr, j)?.ceil().max(0.0) as u64;
                    mj = mj.max(j as u64 + 1);
                    if cfg.field == Field::Real {
                        mj = mj.max(3);
                    }
                    if let Some(&prev) = m.last() {
                        mj = mj.max(prev + 1);
                        let prev_w = omega[j - 2].norm();
                        mj = mj.max((prev as f64 * prev_w / w).floor() as u64 + 1);
                    }
                    let envelope = cfg.b_target.powf(-(j as f64) / j_max as f64) / w;
                    mj = mj.max(envelope.ceil() as u64);
                    while 1.0 / (mj as f64 * w) > cfg.b_target.powf(j as f64 / j_max as f64) {
                        mj += 1;
                    }
                    if j == j_max {
                        while 1.0 / (mj as f64 * w) >= cfg.b_target {
                            mj += 1;
                        }
                    }
                    m.push(mj);
                }
                m
            }
        };
        let mut params = Self::new(cfg.field, v, omega, m, space)?;
        params.b_target = cfg.b_target;
        Ok(params)
    }

    pub fn with_defaults(field: Field) -> Result<Self> {
        Self::generate(
            &BlockConfig {
                field,
                ..BlockConfig::default()
            },
            SpaceConfig::default(),
        )
    }

    pub fn j_max(&self) -> usize {
        self.m.len()
    }

    fn check_j(&self, j: usize) -> Result<()> {
        if j == 0 || j > self.j_max() {
            return Err(Error::Structure(format!(
                "block {j} outside 1..={}",
                self.j_max()
            )));
        }
        Ok(())
    }

    pub fn m_j(&self, j: usize) -> u64 {
        self.m[j - 1]
    }

    pub fn omega_j(&self, j: usize) -> Complex64 {
        self.omega[j - 1]
    }

    pub fn block(&self, j: usize) -> Block2 {
        Block2::new(self.m_j(j), self.omega_j(j))
    }

    /// Dimension of the space the generated blocks act on.
    pub fn dimension(&self) -> usize {
        match self.field {
            Field::Complex => 2 * self.j_max(),
            Field::Real => 4 * self.j_max(),
        }
    }

    /// Eigenvalues `λ_1, …, λ_{2 j_max}` of the complex model.
    pub fn lambdas(&self) -> Vec<Complex64> {
        (1..=self.j_max())
            .flat_map(|j| {
                let b = self.block(j);
                [b.mu1, b.mu2]
            })
            .collect()
    }

    pub fn condition_b_report(&self) -> ConditionReport {
        let b: Vec<f64> = (1..=self.j_max())
            .map(|j| 1.0 / (self.m_j(j) as f64 * self.omega_j(j).norm()))
            .collect();
        let strictly_decreasing = b.windows(2).all(|w| w[1] < w[0]);
        let last = *b.last().expect("at least one block");
        ConditionReport {
            strictly_decreasing,
            last,
            target: self.b_target,
            holds: strictly_decreasing && last < self.b_target,
            b,
        }
    }

    /// `Σ v_j` over the generated blocks.
    pub fn v_sum(&self) -> f64 {
        self.v.iter().sum()
    }

    /// Splits `x` into complex blocks `(j, [x_{2j-1}, x_{2j}])`, after `φ` in the real case.
    fn blocks_of(&self, x: &SparseVector) -> Result<Vec<(usize, [Complex64; 2])>> {
        let width = match self.field {
            Field::Complex => 2,
            Field::Real => {
                if !x.is_real() {
                    return Err(Error::FieldMismatch);
                }
                4
            }
        };
        let mut blocks: Vec<(usize, [Complex64; 2])> = Vec::new();
        for (k, v) in x.iter() {
            let j = (k - 1) / width + 1;
            if j > self.j_max() {
                return Err(Error::Structure(format!(
                    "coordinate {k} lies beyond the {} generated blocks",
                    self.j_max()
                )));
            }
            if blocks.last().map(|b| b.0) != Some(j) {
                blocks.push((j, [Complex64::new(0.0, 0.0); 2]));
            }
            let slot = &mut blocks.last_mut().unwrap().1;
            let off = (k - 1) % width;
            match self.field {
                Field::Complex => slot[off] += v,
                Field::Real => {
                    slot[off / 2] += if off % 2 == 0 { v } else { v * Complex64::i() };
                }
            }
        }
        Ok(blocks)
    }

    fn block_entries(&self, j: usize, y: [Complex64; 2]) -> Vec<(usize, Scalar)> {
        match self.field {
            Field::Complex => vec![(2 * j - 1, y[0]), (2 * j, y[1])],
            Field::Real => {
                let r = phi_inv(&y);
                (0..4)
                    .map(|i| (4 * j - 3 + i, Complex64::new(r[i], 0.0)))
                    .collect()
            }
        }
    }

    fn block_step(&self, j: usize, xb: [Complex64; 2], n: u64) -> [Complex64; 2] {
        let a = self.block(j).power(n);
        [a[0][0] * xb[0] + a[0][1] * xb[1], a[1][1] * xb[1]]
    }

    /// Exact `T^n x`, block by block.
    pub fn apply_op(&self, x: &SparseVector, n: u64) -> Result<SparseVector> {
        let blocks = self.blocks_of(x)?;
        SparseVector::from_entries(
            blocks
                .into_iter()
                .flat_map(|(j, xb)| self.block_entries(j, self.block_step(j, xb, n))),
        )
    }

    /// `‖T^n x − x‖` without materializing the vector.
    pub fn orbit_distance(&self, x: &SparseVector, n: u64) -> Result<f64> {
        let blocks = self.blocks_of(x)?;
        Ok(self.distance_from_blocks(&blocks, n))
    }

    fn distance_from_blocks(&self, blocks: &[(usize, [Complex64; 2])], n: u64) -> f64 {
        let p = self.space.p;
        let mut moduli = Vec::with_capacity(blocks.len() * 4);
        for &(j, xb) in blocks {
            let y = self.block_step(j, xb, n);
            let d = [y[0] - xb[0], y[1] - xb[1]];
            match self.field {
                Field::Complex => moduli.extend([d[0].norm(), d[1].norm()]),
                Field::Real => moduli.extend(phi_inv(&d).map(f64::abs)),
            }
        }
        lp_norm(moduli, p)
    }

    /// `x` with `|⟨e_{2j}*, x⟩| = margin/(m_j|ω_{2j−1}|)` for `j ∈ J` (coordinate `4j` over the reals).
    pub fn g_witness(&self, js: &[usize], margin: f64) -> Result<SparseVector> {
        if !(margin > 1.0 && margin.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "margin must exceed 1, got {margin}"
            )));
        }
        if js.is_empty() {
            return Err(Error::InvalidParams(
                "witness needs at least one block".into(),
            ));
        }
        let mut entries = Vec::with_capacity(js.len());
        for &j in js {
            self.check_j(j)?;
            entries.push((self.g_coordinate(j), margin * self.g_threshold(j)));
        }
        SparseVector::from_real(entries)
    }

    /// Index whose size decides membership in the exclusion set.
    pub fn g_coordinate(&self, j: usize) -> usize {
        match self.field {
            Field::Complex => 2 * j,
            Field::Real => 4 * j,
        }
    }

    /// `1/(m_j |ω_{2j−1}|)`.
    pub fn g_threshold(&self, j: usize) -> f64 {
        1.0 / (self.m_j(j) as f64 * self.omega_j(j).norm())
    }

    /// Hit times of `‖T^n x − x‖ < radius` for `1 ≤ n ≤ horizon`.
    pub fn return_set(
        &self,
        x: &SparseVector,
        radius: f64,
        horizon: u64,
        parallel: bool,
    ) -> Result<ReturnSet> {
        let blocks = self.blocks_of(x)?;
        let hit = |n: u64| self.distance_from_blocks(&blocks, n) < radius;
        let times: Vec<u128> = if parallel {
            (1..=horizon)
                .into_par_iter()
                .filter(|&n| hit(n))
                .map(u128::from)
                .collect()
        } else {
            (1..=horizon).filter(|&n| hit(n)).map(u128::from).collect()
        };
        ReturnSet::new(times, horizon as u128)
    }

    /// Window statistics of the return set into the ball of radius `ε/K`, `ε = 2/(3π)`,
    /// without checking that `x` is a witness.
    pub fn return_profile(
        &self,
        x: &SparseVector,
        j: usize,
        horizon: u64,
        parallel: bool,
    ) -> Result<ExclusionReport> {
        self.check_j(j)?;
        let m = self.m_j(j);
        let q = m * m;
        if horizon < 3 * q {
            return Err(Error::InvalidParams(format!(
                "horizon {horizon} below 3 m_j^2 = {}",
                3 * q
            )));
        }
        let s = self.return_set(x, EXCLUSION_EPS / self.space.k, horizon, parallel)?;
        let window_counts: Vec<WindowCount> = (0..=horizon - q)
            .step_by(m as usize)
            .map(|start| WindowCount {
                window_start: start,
                count: s.count_between(start as u128 + 1, (start + q) as u128),
            })
            .collect();
        let max_count = density::max_window_count(&s, q as u128)?;
        let bd_estimate = density::upper_banach_window(&s, q as u128)?;
        let allowed = 2 * m;
        Ok(ExclusionReport {
            j,
            m,
            eps: EXCLUSION_EPS,
            horizon,
            hits: s.len(),
            max_count,
            allowed,
            bd_estimate,
            bd_bound: 2.0 / m as f64,
            contract_holds: max_count <= allowed && bd_estimate <= 2.0 / m as f64,
            window_counts,
            return_set: s,
        })
    }

    /// [`return_profile`](Self::return_profile) for a witness of the inequality at block `j`.
    pub fn rrec_exclusion_report(
        &self,
        x: &SparseVector,
        j: usize,
        horizon: u64,
        parallel: bool,
    ) -> Result<ExclusionReport> {
        self.check_j(j)?;
        let have = x.get(self.g_coordinate(j)).norm();
        let need = self.g_threshold(j);
        if have <= need {
            return Err(Error::InvalidWitness(format!(
                "coordinate {} has modulus {have:e}, not above {need:e}",
                self.g_coordinate(j)
            )));
        }
        self.return_profile(x, j, horizon, parallel)
    }

    /// `(λ_{2j−1}, e_{2j−1})` and `(λ_{2j}, e_{2j} + ω/(λ_{2j}−λ_{2j−1}) e_{2j−1})`, both of unit norm.
    pub fn unimodular_eigenvectors(&self, j: usize) -> Result<[(Complex64, SparseVector); 2]> {
        if self.field != Field::Complex {
            return Err(Error::FieldMismatch);
        }
        self.check_j(j)?;
        let b = self.block(j);
        let first = SparseVector::basis(2 * j - 1);
        let c = b.w / b.eigen_gap();
        let raw = SparseVector::from_entries([(2 * j - 1, c), (2 * j, Complex64::new(1.0, 0.0))])?;
        let second = raw.scale(Complex64::new(1.0 / raw.norm(&self.space), 0.0));
        Ok([(b.mu1, first), (b.mu2, second)])
    }

    pub fn real_block(&self, j: usize) -> Result<Block4Real> {
        if self.field != Field::Real {
            return Err(Error::FieldMismatch);
        }
        self.check_j(j)?;
        Ok(Block4Real::new(self.m_j(j), self.omega_j(j)))
    }

    /// Largest coordinate deviation between `φ(B_j^n x)` and `A_j^n φ(x)` over the samples.
    pub fn conjugacy_check(&self, j: usize, n: u64, samples: &[[f64; 4]]) -> Result<f64> {
        let real = self.real_block(j)?;
        let bn = real.power(n);
        let a = self.block(j).power(n);
        let mut worst: f64 = 0.0;
        for x in samples {
            let lhs = phi(&mat4_apply(&bn, x));
            let z = phi(x);
            let rhs = [a[0][0] * z[0] + a[0][1] * z[1], a[1][1] * z[1]];
            worst = worst
                .max((lhs[0] - rhs[0]).norm())
                .max((lhs[1] - rhs[1]).norm());
        }
        Ok(worst)
    }

    /// Upper-triangular matrix of the operator restricted to the generated blocks
    /// (complex model, dimension `2 j_max`).
    pub fn restricted_matrix(&self, blocks: usize) -> Vec<Vec<Complex64>> {
        let n = 2 * blocks.min(self.j_max());
        let mut t = vec![vec![Complex64::new(0.0, 0.0); n]; n];
        for j in 1..=n / 2 {
            let a = self.block(j).matrix();
            for r in 0..2 {
                for c in 0..2 {
                    t[2 * j - 2 + r][2 * j - 2 + c] = a[r][c];
                }
            }
        }
        t
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct WindowCount {
    pub window_start: u64,
    pub count: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExclusionReport {
    pub j: usize,
    pub m: u64,
    pub eps: f64,
    pub horizon: u64,
    pub hits: usize,
    /// Exact maximum over all windows of length `m²`.
    pub max_count: u64,
    /// `2 m_j`.
    pub allowed: u64,
    pub bd_estimate: f64,
    /// `2 m_j / m_j²`.
    pub bd_bound: f64,
    pub contract_holds: bool,
    /// Windows starting at multiples of `m_j`.
    #[serde(skip)]
    pub window_counts: Vec<WindowCount>,
    #[serde(skip)]
    pub return_set: ReturnSet,
}
