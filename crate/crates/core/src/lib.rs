//! Linear recurrence on sequence spaces.
//!
//! Two operator families and the tools to measure them at finite horizon:
//!
//! * [`rigidity`]: a rank-one perturbation `T = R + Σ m_{k-1}^{-1} w_k* ⊗ e_k` of a
//!   diagonal of roots of unity, with closed-form powers, recurrence certificates,
//!   arithmetic-progression witnesses and a certified non-recurrence floor.
//! * [`blockshift`]: a block upper-triangular operator `D_λ + B_ω` with exact block
//!   powers, the window-count exclusion of reiterative recurrence, and its real model.
//!
//! [`density`] measures return sets, [`cyclicity`] decides cyclic vectors of
//! triangular matrices, and [`harness`] runs configured experiments to CSV and JSON.

// `!(x > 0.0)` and friends are used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod blockshift;
pub mod cyclicity;
pub mod density;
pub mod error;
pub mod harness;
pub mod rigidity;
pub mod seqspace;

pub use blockshift::{Block2, BlockConfig, BlockParams};
pub use density::{DensityReport, ReturnSet};
pub use error::{Error, Result};
pub use harness::{Experiment, ExperimentConfig, RunReport};
pub use rigidity::{RigidityConfig, RigidityOperator, RigidityParams, Time};
pub use seqspace::{Field, Scalar, SpaceConfig, SparseVector};
