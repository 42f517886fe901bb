//! Robust quantum gate synthesis as a zero-sum game between a piecewise-
//! constant control pulse and adversarially chosen model uncertainties,
//! plus a Monte Carlo robustness-evaluation suite.
//!
//! The crate is organized as:
//! - [`linalg`]: complex dense linear algebra (Hermitian operators,
//!   unitaries, spectral matrix exponential, Pauli tensor products,
//!   gate infidelity);
//! - [`model`]: uncertain Hamiltonian models, the box uncertainty domain,
//!   and the benchmark synthesis problems;
//! - [`dynamics`]: unitary propagation and exact infidelity gradients;
//! - [`optim`]: the inner GRAPE minimizer, adversary maximizers, the
//!   adversarial outer loops, and the momentum-SGD baseline;
//! - [`eval`]: empirical CDFs, confidence at thresholds, worst-case
//!   estimation, and 2-D uncertainty landscapes;
//! - [`config`] / [`artifacts`]: declarative run configuration and the
//!   on-disk artifact formats used by the CLI.

pub mod artifacts;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod eval;
pub mod linalg;
pub mod model;
pub mod optim;
pub mod rng;

pub use error::{Error, Result};
