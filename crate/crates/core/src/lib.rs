//! Simulator and algorithms for online learning of an unknown pure state from
//! single-copy projective measurements, where every query both earns reward and
//! disturbs the copy it touches.
//!
//! The crate is organized bottom up:
//!
//! * [`bloch`]: generalized Bloch geometry, reward maps, infidelity, disturbance.
//! * [`linalg`]: the small dense symmetric eigensolver everything shares.
//! * [`env`]: quantum and classical reward environments over one RNG discipline.
//! * [`estimator`]: weighted least squares with k parallel reward streams and
//!   median-of-means selection.
//! * [`policy`]: the optimistic batched bandit with vanishing-variance weights.
//! * [`baselines`]: explore-then-commit, fixed-basis, and oracle references.
//! * [`fit`]: scaling fits over checkpoint traces.
//! * [`harness`]: Monte Carlo experiments, aggregation, and trace output.
//!
//! With the default `parallel` feature episodes run data-parallel under rayon;
//! disabling it leaves the identical sequential code path and results.

pub mod baselines;
pub mod bloch;
pub mod env;
pub mod error;
pub mod estimator;
pub mod fit;
pub mod harness;
pub mod linalg;
pub mod policy;
pub mod record;

pub use error::{Error, Result};
