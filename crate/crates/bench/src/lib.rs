//! Fixtures shared by the benchmarks.

use linrec_core::blockshift::Block2;
use linrec_core::cyclicity::TriMatrix;
use linrec_core::density::ReturnSet;
use linrec_core::rigidity::RigidityOperator;
use linrec_core::seqspace::SparseVector;
use num_complex::Complex64;

pub fn operator() -> RigidityOperator {
    RigidityOperator::with_defaults().expect("default parameters generate")
}

/// An element of `X_0` with a short tail.
pub fn x0_vector(op: &RigidityOperator) -> SparseVector {
    op.x0_vector(
        3,
        Complex64::new(0.6, -0.2),
        &[
            (4, Complex64::new(0.3, 0.1)),
            (7, Complex64::new(-0.2, 0.4)),
        ],
    )
    .expect("class 3 is populated")
}

pub fn block(m: u64) -> Block2 {
    Block2::new(m, Complex64::new(0.9, 0.0))
}

/// Multiples of `step` plus every square, inside `[1, horizon]`.
pub fn return_set(horizon: u128, step: u128) -> ReturnSet {
    let times = (1..=horizon)
        .filter(|n| n % step == 0 || n.isqrt().pow(2) == *n)
        .collect();
    ReturnSet::new(times, horizon).expect("sorted and inside the horizon")
}

/// Triangular matrix with eigenvalues spread on a circle and a dense upper part.
pub fn triangular(n: usize) -> TriMatrix {
    let a = nalgebra::DMatrix::from_fn(n, n, |r, c| {
        if r == c {
            Complex64::from_polar(
                0.8,
                2.0 * std::f64::consts::PI * (r as f64 + 0.3) / n as f64,
            )
        } else if c > r {
            Complex64::new(
                ((r * 7 + c * 3) % 5) as f64 / 10.0,
                ((r + c) % 3) as f64 / 10.0,
            )
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    TriMatrix::new(a).expect("upper triangular by construction")
}

pub fn ones(n: usize) -> Vec<Complex64> {
    vec![Complex64::new(1.0, 0.0); n]
}
