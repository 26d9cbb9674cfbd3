//! Generalized Bloch parametrization of pure states and the reward maps built on it.
//!
//! A d-dimensional density matrix is written rho_theta = I/d + c_d theta.sigma with
//! theta in R^{d^2-1} and c_d = sqrt(d(d-1)/2)/d; rho_theta is pure iff |theta| = 1.
//! For rank-1 projectors Pi_a, Pi_theta the Born probability is
//!
//! ```text
//! Tr(Pi_a Pi_theta) = (1 + (d-1) <a, theta>) / d,
//! ```
//!
//! so measurement statistics are linear in <a, theta>. Rewards r in {0,1} are mapped to
//! r~ = (d r - 1)/(d - 1), which has mean <theta, a> and variance
//! (1 - <theta,a>)(1 + (d-1)<theta,a>)/(d-1): the variance vanishes as the action
//! approaches the target (for d = 2 it is exactly 1 - <theta,a>^2).
//! Per-step disturbance is measured against the pre-measurement state
//! (largest eigenvalue lambda_max) with the outcome-probability convention p >= 1/2,
//! enforced here by folding p -> max(p, 1-p).

use crate::error::{Error, Result};

// Unit-norm tolerance for UnitVector construction.
const UNIT_TOL: f64 = 1e-12;
// Probabilities may stray this far outside [0,1] before trace_overlap reports an error;
// anything inside the window is clamped.
const PROB_TOL: f64 = 1e-9;

/// Bloch vector of unit norm, dimension n_dim = d^2 - 1 for quantum instances.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitVector(Vec<f64>);

impl UnitVector {
    /// Accepts a vector already normalized to within 1e-12.
    pub fn new(v: Vec<f64>) -> Result<Self> {
        let n = norm(&v);
        if !n.is_finite() || (n - 1.0).abs() > UNIT_TOL {
            return Err(Error::OutOfRange {
                what: "unit vector norm",
                value: n,
                lo: 1.0 - UNIT_TOL,
                hi: 1.0 + UNIT_TOL,
            });
        }
        Ok(UnitVector(v))
    }

    /// Normalizes an arbitrary nonzero vector.
    pub fn normalized(v: Vec<f64>) -> Result<Self> {
        let n = norm(&v);
        if !n.is_finite() || n < 1e-12 {
            return Err(Error::Invariant(format!(
                "cannot normalize vector with norm {n}"
            )));
        }
        Ok(UnitVector(v.iter().map(|x| x / n).collect()))
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dot(&self, other: &UnitVector) -> f64 {
        dot(&self.0, other.as_slice())
    }

    /// Canonical basis vector e_i.
    pub fn basis(n_dim: usize, i: usize) -> Self {
        assert!(i < n_dim);
        let mut v = vec![0.0; n_dim];
        v[i] = 1.0;
        UnitVector(v)
    }
}

impl std::ops::Index<usize> for UnitVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Quantum dimension d and the matching Bloch dimension n_dim = d^2 - 1.
///
/// n_dim is carried explicitly everywhere; classical synthetic environments may use an
/// n_dim that corresponds to no quantum d.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuantumDims {
    d: usize,
}

impl QuantumDims {
    pub fn new(d: usize) -> Result<Self> {
        if d < 2 {
            return Err(Error::config(format!("quantum dimension d = {d}, need d >= 2")));
        }
        Ok(QuantumDims { d })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n_dim(&self) -> usize {
        self.d * self.d - 1
    }

    /// Quantum dimension whose Bloch dimension is n_dim, if one exists.
    pub fn from_n_dim(n_dim: usize) -> Option<Self> {
        let d = ((n_dim + 1) as f64).sqrt().round() as usize;
        (d >= 2 && d * d == n_dim + 1).then_some(QuantumDims { d })
    }
}

/// Born probability Tr(Pi_a Pi_theta) = (1 + (d-1) inner) / d.
///
/// Valid inner products lie in [-1/(d-1), 1]; the result is clamped to [0,1] when the
/// violation is below 1e-9 and reported as OutOfRange beyond that.
pub fn trace_overlap(inner: f64, dims: QuantumDims) -> Result<f64> {
    let d = dims.d() as f64;
    let tr = (1.0 + (d - 1.0) * inner) / d;
    if !(-PROB_TOL..=1.0 + PROB_TOL).contains(&tr) {
        return Err(Error::OutOfRange {
            what: "trace overlap",
            value: tr,
            lo: -PROB_TOL,
            hi: 1.0 + PROB_TOL,
        });
    }
    Ok(tr.clamp(0.0, 1.0))
}

/// Inverse of trace_overlap: <a, theta> = (d tr - 1) / (d - 1).
pub fn inner_from_trace(tr: f64, dims: QuantumDims) -> f64 {
    let d = dims.d() as f64;
    (d * tr - 1.0) / (d - 1.0)
}

/// Centered reward r~ = (d r - 1)/(d - 1); E[r~] = <theta, a> for r ~ Bernoulli(Born).
pub fn renormalize_reward(r: f64, dims: QuantumDims) -> f64 {
    let d = dims.d() as f64;
    (d * r - 1.0) / (d - 1.0)
}

/// Infidelity 1 - F of two pure states with Bloch vectors a, theta:
/// (d-1)/d (1 - <a, theta>). For qubits this equals |theta - a|^2 / 4.
pub fn infidelity_pure(a: &UnitVector, theta: &UnitVector, dims: QuantumDims) -> Result<f64> {
    if a.dim() != theta.dim() {
        return Err(Error::DimensionMismatch {
            what: "infidelity_pure operands",
            expected: a.dim(),
            got: theta.dim(),
        });
    }
    if a.dim() != dims.n_dim() {
        return Err(Error::DimensionMismatch {
            what: "infidelity_pure n_dim vs d^2-1",
            expected: dims.n_dim(),
            got: a.dim(),
        });
    }
    let d = dims.d() as f64;
    Ok((d - 1.0) / d * (1.0 - a.dot(theta)))
}

// Outcome-probability convention: the projective pair {Pi_a, I - Pi_a} is unordered, so
// p and 1-p label the same measurement. Both disturbance maps fold to p >= 1/2.
fn fold_p(p: f64) -> f64 {
    p.max(1.0 - p)
}

/// Expected disturbance of one rank-1 measurement on a state with largest eigenvalue
/// lambda_max, in trace-distance terms: 2 (lambda_max - p)(lambda_max + p - 1).
///
/// Zero iff p = lambda_max (measuring along the dominant eigenvector).
pub fn step_disturbance(lambda_max: f64, p: f64) -> f64 {
    let p = fold_p(p);
    2.0 * (lambda_max - p) * (lambda_max + p - 1.0)
}

/// Expected infidelity 1 - F(rho, rho_post) of one rank-1 measurement, where
/// F = p^2 + (1-p)^2 + 2 sqrt(lambda_max (1-lambda_max) p (1-p)).
///
/// Satisfies (lambda_max - p) <= value <= 2 (lambda_max - p) for p in [1/2, lambda_max].
pub fn step_disturbance_star(lambda_max: f64, p: f64) -> f64 {
    let p = fold_p(p);
    let cross = (lambda_max * (1.0 - lambda_max) * p * (1.0 - p)).max(0.0);
    1.0 - (p * p + (1.0 - p) * (1.0 - p) + 2.0 * cross.sqrt())
}
