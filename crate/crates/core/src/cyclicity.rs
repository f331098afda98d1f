//! Finite-dimensional cyclicity tools for upper-triangular matrices with a
//! distinct diagonal: eigenvector bases by back-substitution, cyclic-vector
//! tests and Krylov ranks.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::seqspace::{format_scalar, parse_scalar, ALGEBRAIC_TOL, RELATIVE_TOL};

/// Relative threshold used by every numerical rank in this module.
pub const RANK_TOL: f64 = 1e-9;

/// Below this smallest-to-largest singular value ratio the eigenvector basis is flagged.
pub const CONDITIONING_WARN: f64 = 1e-6;

type CMat = DMatrix<Complex64>;

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

/// Square upper-triangular matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct TriMatrix {
    a: CMat,
    distinct: bool,
}

impl TriMatrix {
    pub fn new(a: CMat) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(Error::Dimension {
                expected: a.nrows(),
                got: a.ncols(),
            });
        }
        let n = a.nrows();
        for r in 0..n {
            for c in 0..r {
                if a[(r, c)] != zero() {
                    return Err(Error::NotUpperTriangular {
                        row: r + 1,
                        col: c + 1,
                    });
                }
            }
        }
        let distinct = first_repeat(&a.diagonal().iter().copied().collect::<Vec<_>>()).is_none();
        Ok(Self { a, distinct })
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::Dimension {
                expected: n,
                got: bad.len(),
            });
        }
        Self::new(CMat::from_fn(n, n, |r, c| rows[r][c]))
    }

    pub fn diagonal_matrix(d: &[Complex64]) -> Self {
        let n = d.len();
        Self::new(CMat::from_fn(
            n,
            n,
            |r, c| if r == c { d[r] } else { zero() },
        ))
        .expect("diagonal is triangular")
    }

    pub fn dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.a
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        self.a.diagonal().iter().copied().collect()
    }

    pub fn has_distinct_diagonal(&self) -> bool {
        self.distinct
    }

    fn require_distinct(&self) -> Result<()> {
        match first_repeat(&self.diagonal()) {
            Some((first, second)) => Err(Error::RepeatedDiagonal { first, second }),
            None => Ok(()),
        }
    }

    fn scale(&self) -> f64 {
        self.a
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE)
    }
}

fn first_repeat(d: &[Complex64]) -> Option<(usize, usize)> {
    for i in 0..d.len() {
        for j in i + 1..d.len() {
            if d[i] == d[j] {
                return Some((i + 1, j + 1));
            }
        }
    }
    None
}

impl FromStr for TriMatrix {
    type Err = Error;

    /// Row-major, whitespace-separated entries, one row per line, `#` starts a comment.
    fn from_str(s: &str) -> Result<Self> {
        let rows = s
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .map(|l| {
                l.split_whitespace()
                    .map(parse_scalar)
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_rows(&rows)
    }
}

impl fmt::Display for TriMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.dim() {
            let row: Vec<String> = (0..self.dim())
                .map(|c| format_scalar(self.a[(r, c)]))
                .collect();
            writeln!(f, "{}", row.join(" "))?;
        }
        Ok(())
    }
}

/// `T = L D L^{-1}` with unit upper-triangular `L`.
#[derive(Clone, Debug, PartialEq)]
pub struct Diagonalization {
    pub l: CMat,
    pub d: Vec<Complex64>,
    /// `max |T L − L D|`.
    pub residual: f64,
    /// `max |T| · max |L|`, the scale residuals are measured against.
    pub scale: f64,
}

impl Diagonalization {
    /// `max |L D L^{-1} − T|`.
    pub fn reassembly_error(&self, t: &TriMatrix) -> f64 {
        let n = self.d.len();
        let ld = CMat::from_fn(n, n, |r, c| self.l[(r, c)] * self.d[c]);
        // L is unit upper-triangular, so the solve cannot fail
        let rebuilt = self
            .l
            .transpose()
            .solve_lower_triangular(&ld.transpose())
            .expect("unit triangular factor")
            .transpose();
        (rebuilt - t.matrix())
            .iter()
            .map(|v| v.norm())
            .fold(0.0, f64::max)
    }
}

/// Eigenvectors by back-substitution on `T − λ_k I`.
pub fn diagonalize(t: &TriMatrix) -> Result<Diagonalization> {
    t.require_distinct()?;
    let n = t.dim();
    let a = t.matrix();
    let d = t.diagonal();
    let mut l = CMat::zeros(n, n);
    for k in 0..n {
        l[(k, k)] = Complex64::new(1.0, 0.0);
        for i in (0..k).rev() {
            let s: Complex64 = (i + 1..=k).map(|j| a[(i, j)] * l[(j, k)]).sum();
            l[(i, k)] = -s / (d[i] - d[k]);
        }
    }
    let ld = CMat::from_fn(n, n, |r, c| l[(r, c)] * d[c]);
    let residual = (a * &l - ld).iter().map(|v| v.norm()).fold(0.0, f64::max);
    let l_max = l.iter().map(|v| v.norm()).fold(0.0, f64::max);
    Ok(Diagonalization {
        l,
        d,
        residual,
        scale: t.scale() * l_max,
    })
}

/// Singular values, descending.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    let mut s: Vec<f64> = m
        .clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Number of singular values above `RANK_TOL` times the largest.
pub fn numerical_rank(m: &CMat) -> usize {
    let s = singular_values(m);
    match s.first() {
        Some(&top) if top > 0.0 => s.iter().filter(|&&v| v > RANK_TOL * top).count(),
        _ => 0,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpanReport {
    pub dim: usize,
    pub rank: usize,
    /// Smallest over largest singular value of the column-normalized eigenvector matrix.
    pub sigma_ratio: f64,
    pub spans: bool,
    pub ill_conditioned: bool,
}

/// Whether the eigenvectors span the whole space, judged on the column-normalized `L`.
pub fn eigen_span_check(t: &TriMatrix) -> Result<SpanReport> {
    let diag = diagonalize(t)?;
    let mut l = diag.l;
    for mut col in l.column_iter_mut() {
        let norm = col.norm();
        col /= Complex64::new(norm, 0.0);
    }
    let s = singular_values(&l);
    let sigma_ratio = s.last().copied().unwrap_or(1.0) / s.first().copied().unwrap_or(1.0);
    let ill_conditioned = sigma_ratio < CONDITIONING_WARN;
    if ill_conditioned {
        log::warn!(
            "eigenvector basis of a {}x{} matrix is badly conditioned (sigma ratio {sigma_ratio:e})",
            t.dim(),
            t.dim()
        );
    }
    let rank = s.iter().filter(|&&v| v > RANK_TOL * s[0]).count();
    Ok(SpanReport {
        dim: t.dim(),
        rank,
        sigma_ratio,
        spans: rank == t.dim(),
        ill_conditioned,
    })
}

/// A vector is cyclic for a diagonal matrix with distinct entries iff no coordinate vanishes.
pub fn diag_cyclic_test(d: &[Complex64], x: &[Complex64]) -> Result<bool> {
    if d.len() != x.len() {
        return Err(Error::Dimension {
            expected: d.len(),
            got: x.len(),
        });
    }
    if let Some((first, second)) = first_repeat(d) {
        return Err(Error::RepeatedDiagonal { first, second });
    }
    Ok(x.iter().all(|v| *v != zero()))
}

/// Dimension of `span{x, Tx, …, T^{N−1}x}`.
///
/// The span is built by Arnoldi iteration with reorthogonalization; it stops
/// when the new direction falls below `RANK_TOL · ‖T‖_F`. The raw power basis
/// is avoided because it is badly conditioned once eigenvalues cluster.
pub fn krylov_rank_of(a: &CMat, x: &[Complex64]) -> Result<usize> {
    let n = a.nrows();
    if x.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: x.len(),
        });
    }
    let v = nalgebra::DVector::from_column_slice(x);
    let norm = v.norm();
    if norm == 0.0 {
        return Ok(0);
    }
    let tol = RANK_TOL * a.norm().max(f64::MIN_POSITIVE);
    let mut basis = vec![v / Complex64::new(norm, 0.0)];
    while basis.len() < n {
        let mut w = a * basis.last().unwrap();
        for _ in 0..2 {
            for q in &basis {
                let h = q.dotc(&w);
                w -= q * h;
            }
        }
        let h = w.norm();
        if h <= tol {
            break;
        }
        basis.push(w / Complex64::new(h, 0.0));
    }
    Ok(basis.len())
}

pub fn krylov_rank(t: &TriMatrix, x: &[Complex64]) -> Result<usize> {
    krylov_rank_of(t.matrix(), x)
}

/// Realification of `diag(d)` acting on `(Re x_1, Im x_1, …)`.
pub fn realify_diagonal(d: &[Complex64]) -> DMatrix<f64> {
    let n = d.len();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for (k, l) in d.iter().enumerate() {
        m[(2 * k, 2 * k)] = l.re;
        m[(2 * k, 2 * k + 1)] = -l.im;
        m[(2 * k + 1, 2 * k)] = l.im;
        m[(2 * k + 1, 2 * k + 1)] = l.re;
    }
    m
}

/// Dimension over the reals of `{p(D)x : p real polynomial, deg p < 2N}` for `D = diag(d)`.
pub fn realified_krylov_rank(d: &[Complex64], x: &[Complex64]) -> Result<usize> {
    if d.len() != x.len() {
        return Err(Error::Dimension {
            expected: d.len(),
            got: x.len(),
        });
    }
    let a = realify_diagonal(d).map(|v| Complex64::new(v, 0.0));
    let v: Vec<Complex64> = x
        .iter()
        .flat_map(|z| [Complex64::new(z.re, 0.0), Complex64::new(z.im, 0.0)])
        .collect();
    krylov_rank_of(&a, &v)
}

fn conjugate_collision(d: &[Complex64]) -> Option<(usize, usize)> {
    for i in 0..d.len() {
        if d[i].im.abs() <= ALGEBRAIC_TOL {
            return Some((i + 1, i + 1));
        }
        for j in i + 1..d.len() {
            if (d[i] - d[j].conj()).norm() <= ALGEBRAIC_TOL || (d[i] - d[j]).norm() <= ALGEBRAIC_TOL
            {
                return Some((i + 1, j + 1));
            }
        }
    }
    None
}

/// Cyclicity with respect to real polynomials for `D = diag(d)`: every
/// coordinate nonzero, provided no `λ_k` is real or conjugate to another.
pub fn real_cyclic_test(d: &[Complex64], x: &[Complex64]) -> Result<bool> {
    if d.len() != x.len() {
        return Err(Error::Dimension {
            expected: d.len(),
            got: x.len(),
        });
    }
    if let Some((first, second)) = conjugate_collision(d) {
        return Err(Error::ConjugateCollision { first, second });
    }
    Ok(x.iter().all(|v| *v != zero()))
}

/// `max |T L − L D|` relative to the diagonalization scale is within the derived tolerance.
pub fn residual_ok(diag: &Diagonalization) -> bool {
    diag.residual <= RELATIVE_TOL * diag.scale.max(1.0)
}
