//! Coordinate model of the underlying Banach space.
//!
//! Vectors are finitely supported sequences indexed from 1 (elements of
//! `c_00`), functionals are finitely supported sequences acting by the
//! bilinear pairing `<f, x> = sum_k f_k x_k`, and the norm is the `l^p` norm
//! of the coordinate sequence. The canonical basis has `||e_k|| = 1` and
//! coordinate functionals of norm 1, so the biorthogonality constant `K` is 1
//! in this model; it is still carried in [`SpaceConfig`] so every bound that
//! depends on it reads it from one place.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Scalars are complex doubles; real constructions keep the imaginary part at 0.
pub type Scalar = Complex64;

/// Tolerance used for algebraic identities.
pub const ALGEBRAIC_TOL: f64 = 1e-12;
/// Tolerance used for derived quantities.
pub const RELATIVE_TOL: f64 = 1e-9;

/// Scalar field an operator acts over.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Real,
    #[default]
    Complex,
}

impl FromStr for Field {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "real" => Ok(Field::Real),
            "complex" => Ok(Field::Complex),
            other => Err(Error::Parse {
                what: "field",
                input: other.to_string(),
            }),
        }
    }
}

/// Norm exponent and biorthogonality constant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceConfig {
    /// Exponent of the `l^p` norm, `p >= 1`; `f64::INFINITY` selects the max norm.
    #[serde(default = "default_p")]
    pub p: f64,
    /// `sup_k ||e_k^*||`.
    #[serde(rename = "K", default = "default_k")]
    pub k: f64,
}

fn default_p() -> f64 {
    2.0
}

fn default_k() -> f64 {
    1.0
}

impl Default for SpaceConfig {
    fn default() -> Self {
        Self { p: 2.0, k: 1.0 }
    }
}

impl SpaceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.p >= 1.0) {
            return Err(Error::InvalidParams(format!(
                "norm exponent p = {} < 1",
                self.p
            )));
        }
        if !(self.k > 0.0 && self.k.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "constant K = {} must be positive",
                self.k
            )));
        }
        Ok(())
    }

    /// Conjugate exponent `q` with `1/p + 1/q = 1`.
    pub fn dual_exponent(&self) -> f64 {
        if self.p == 1.0 {
            f64::INFINITY
        } else if self.p.is_infinite() {
            1.0
        } else {
            self.p / (self.p - 1.0)
        }
    }
}

/// `l^p` norm of a finite list of moduli.
pub fn lp_norm<I: IntoIterator<Item = f64>>(moduli: I, p: f64) -> f64 {
    if p.is_infinite() {
        moduli.into_iter().fold(0.0, f64::max)
    } else if p == 1.0 {
        moduli.into_iter().sum()
    } else if p == 2.0 {
        // hypot-style accumulation keeps tiny and huge entries accurate
        let mut scale = 0.0f64;
        let mut ssq = 1.0f64;
        for a in moduli {
            if a == 0.0 {
                continue;
            }
            if scale < a {
                ssq = 1.0 + ssq * (scale / a) * (scale / a);
                scale = a;
            } else {
                ssq += (a / scale) * (a / scale);
            }
        }
        scale * ssq.sqrt()
    } else {
        let moduli: Vec<f64> = moduli.into_iter().collect();
        let max = moduli.iter().copied().fold(0.0, f64::max);
        if max == 0.0 {
            return 0.0;
        }
        max * moduli
            .iter()
            .map(|a| (a / max).powf(p))
            .sum::<f64>()
            .powf(1.0 / p)
    }
}

/// Finitely supported coordinate vector. No stored entry is zero.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseVector {
    entries: BTreeMap<usize, Scalar>,
}

impl SparseVector {
    pub fn zero() -> Self {
        Self::default()
    }

    /// The basis vector `e_k`.
    ///
    /// Panics if `k == 0`.
    pub fn basis(k: usize) -> Self {
        let mut v = Self::zero();
        v.set(k, Scalar::new(1.0, 0.0));
        v
    }

    /// Builds a vector from `(index, value)` pairs; repeated indices are summed.
    pub fn from_entries<I>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, Scalar)>,
    {
        let mut v = Self::zero();
        for (k, a) in entries {
            if k == 0 {
                return Err(Error::ZeroIndex);
            }
            let cur = v.get(k);
            v.set(k, cur + a);
        }
        Ok(v)
    }

    pub fn from_real<I>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, f64)>,
    {
        Self::from_entries(entries.into_iter().map(|(k, a)| (k, Scalar::new(a, 0.0))))
    }

    pub fn get(&self, k: usize) -> Scalar {
        self.entries.get(&k).copied().unwrap_or_default()
    }

    /// Sets coordinate `k`, dropping it when the value is exactly zero.
    ///
    /// Panics if `k == 0`.
    pub fn set(&mut self, k: usize, value: Scalar) {
        assert!(k >= 1, "coordinate indices start at 1");
        if value == Scalar::default() {
            self.entries.remove(&k);
        } else {
            self.entries.insert(k, value);
        }
    }

    /// Largest index carrying a nonzero entry (`k_x`), `None` for the zero vector.
    pub fn support_max(&self) -> Option<usize> {
        self.entries.keys().next_back().copied()
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, Scalar)> + '_ {
        self.entries.iter().map(|(&k, &a)| (k, a))
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.entries.keys().copied()
    }

    pub fn is_real(&self) -> bool {
        self.entries.values().all(|a| a.im == 0.0)
    }

    /// Keeps coordinates `1..=k_max`.
    pub fn truncate(&self, k_max: usize) -> Self {
        Self {
            entries: self
                .entries
                .range(..=k_max)
                .map(|(&k, &a)| (k, a))
                .collect(),
        }
    }

    pub fn scale(&self, a: Scalar) -> Self {
        let mut out = Self::zero();
        for (k, v) in self.iter() {
            out.set(k, v * a);
        }
        out
    }

    pub fn norm(&self, cfg: &SpaceConfig) -> f64 {
        lp_norm(self.entries.values().map(|a| a.norm()), cfg.p)
    }

    /// Largest coordinate modulus.
    pub fn max_abs(&self) -> f64 {
        self.entries.values().map(|a| a.norm()).fold(0.0, f64::max)
    }

    fn combine(&self, other: &Self, sign: f64) -> Self {
        let mut out = self.clone();
        for (k, b) in other.iter() {
            let cur = out.get(k);
            out.set(k, cur + b * sign);
        }
        out
    }
}

impl Add for &SparseVector {
    type Output = SparseVector;
    fn add(self, rhs: &SparseVector) -> SparseVector {
        self.combine(rhs, 1.0)
    }
}

impl Sub for &SparseVector {
    type Output = SparseVector;
    fn sub(self, rhs: &SparseVector) -> SparseVector {
        self.combine(rhs, -1.0)
    }
}

impl Neg for &SparseVector {
    type Output = SparseVector;
    fn neg(self) -> SparseVector {
        self.scale(Scalar::new(-1.0, 0.0))
    }
}

impl Mul<Scalar> for &SparseVector {
    type Output = SparseVector;
    fn mul(self, rhs: Scalar) -> SparseVector {
        self.scale(rhs)
    }
}

/// Formats a scalar as `a` or `a+bi`.
pub fn format_scalar(a: Scalar) -> String {
    if a.im == 0.0 {
        format!("{}", a.re)
    } else if a.im < 0.0 || a.im.is_sign_negative() {
        format!("{}{}i", a.re, a.im)
    } else {
        format!("{}+{}i", a.re, a.im)
    }
}

/// Parses `a`, `bi`, `a+bi` or `a-bi` (exponents allowed in both parts).
pub fn parse_scalar(input: &str) -> Result<Scalar> {
    let err = || Error::Parse {
        what: "scalar",
        input: input.to_string(),
    };
    let s: String = input.chars().filter(|c| !c.is_whitespace()).collect();
    if s.is_empty() {
        return Err(err());
    }
    let Some(body) = s.strip_suffix('i') else {
        return s
            .parse::<f64>()
            .map(|re| Scalar::new(re, 0.0))
            .map_err(|_| err());
    };
    // split at the last sign that is not the leading sign or part of an exponent
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'));
    let parse_im = |t: &str| -> Result<f64> {
        match t {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            t => t.parse::<f64>().map_err(|_| err()),
        }
    };
    match split {
        Some(i) => {
            let re = body[..i].parse::<f64>().map_err(|_| err())?;
            Ok(Scalar::new(re, parse_im(&body[i..])?))
        }
        None => Ok(Scalar::new(0.0, parse_im(body)?)),
    }
}

impl FromStr for SparseVector {
    type Err = Error;

    /// Whitespace-separated `index:value` pairs, e.g. `1:0.5 4:-1.25 2:0+1i`.
    fn from_str(s: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for tok in s.split_whitespace() {
            let (k, a) = tok.split_once(':').ok_or_else(|| Error::Parse {
                what: "sparse vector entry",
                input: tok.to_string(),
            })?;
            let k: usize = k.parse().map_err(|_| Error::Parse {
                what: "coordinate index",
                input: k.to_string(),
            })?;
            pairs.push((k, parse_scalar(a)?));
        }
        Self::from_entries(pairs)
    }
}

impl fmt::Display for SparseVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (k, a) in self.iter() {
            if !first {
                f.write_str(" ")?;
            }
            first = false;
            write!(f, "{}:{}", k, format_scalar(a))?;
        }
        Ok(())
    }
}

/// Finitely supported element of `span{e_k^*}`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CoordFunctional {
    coeffs: SparseVector,
}

impl CoordFunctional {
    /// The coordinate functional `e_k^*`.
    pub fn coordinate(k: usize) -> Self {
        Self {
            coeffs: SparseVector::basis(k),
        }
    }

    pub fn from_entries<I>(entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, Scalar)>,
    {
        Ok(Self {
            coeffs: SparseVector::from_entries(entries)?,
        })
    }

    pub fn get(&self, k: usize) -> Scalar {
        self.coeffs.get(k)
    }

    pub fn coefficients(&self) -> &SparseVector {
        &self.coeffs
    }

    pub fn scale(&self, a: Scalar) -> Self {
        Self {
            coeffs: self.coeffs.scale(a),
        }
    }

    /// Dual norm in the coordinate model (the conjugate `l^q` norm).
    pub fn dual_norm(&self, cfg: &SpaceConfig) -> f64 {
        lp_norm(
            self.coeffs.iter().map(|(_, a)| a.norm()),
            cfg.dual_exponent(),
        )
    }
}

/// `<f, x> = sum_k f_k x_k` over the common support.
pub fn eval_functional(f: &CoordFunctional, x: &SparseVector) -> Scalar {
    let (small, large) = if f.coeffs.nnz() <= x.nnz() {
        (&f.coeffs, x)
    } else {
        (x, &f.coeffs)
    };
    small.iter().map(|(k, a)| a * large.get(k)).sum()
}

pub fn norm(x: &SparseVector, cfg: &SpaceConfig) -> f64 {
    x.norm(cfg)
}

/// Checks `|<e_k^*, x>| <= K ||x||` for every stored coordinate.
pub fn coord_bound_check(x: &SparseVector, cfg: &SpaceConfig) -> bool {
    let bound = cfg.k * x.norm(cfg);
    x.iter().all(|(_, a)| a.norm() <= bound + ALGEBRAIC_TOL)
}
