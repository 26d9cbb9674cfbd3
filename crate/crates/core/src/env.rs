//! Measurement environments.
//!
//! `PureStateEnv` holds a fixed unknown pure state theta and answers rank-1 projective
//! measurements with Born-rule Bernoulli outcomes. `VanishingVarianceEnv` is the
//! classical abstraction of the same reward process: a linear bandit on the unit sphere
//! whose reward noise variance vanishes as the action approaches theta. Its `born` model
//! reproduces the quantum statistics exactly (and requires n_dim = d^2 - 1); the
//! `gaussian` model keeps only the mean <theta, a> and the variance profile
//! 1 - <theta, a>^2 and runs at any n_dim >= 2.
//!
//! All randomness flows through a counter-based ChaCha8 generator owned by the
//! environment, so a (seed, stream) pair pins the full outcome sequence bit for bit.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::bloch::{self, QuantumDims, UnitVector};
use crate::error::{Error, Result};

/// One projective measurement: raw outcome r, centered reward r~, Born probability p,
/// and whether the state collapsed onto the measured direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementOutcome {
    pub r: u8,
    pub r_tilde: f64,
    pub p: f64,
    pub post_state_aligned: bool,
}

/// Unknown pure state presented through measurement queries.
#[derive(Debug, Clone)]
pub struct PureStateEnv {
    theta: UnitVector,
    dims: QuantumDims,
    rng: ChaCha8Rng,
}

impl PureStateEnv {
    pub fn new(theta: UnitVector, dims: QuantumDims, rng: ChaCha8Rng) -> Result<Self> {
        if theta.dim() != dims.n_dim() {
            return Err(Error::DimensionMismatch {
                what: "environment state dimension",
                expected: dims.n_dim(),
                got: theta.dim(),
            });
        }
        Ok(PureStateEnv { theta, dims, rng })
    }

    pub fn dims(&self) -> QuantumDims {
        self.dims
    }

    pub fn theta(&self) -> &UnitVector {
        &self.theta
    }

    /// Measures {Pi_a, I - Pi_a} on a fresh copy of theta.
    pub fn sample_measurement(&mut self, a: &UnitVector) -> Result<MeasurementOutcome> {
        if a.dim() != self.theta.dim() {
            return Err(Error::DimensionMismatch {
                what: "measurement direction",
                expected: self.theta.dim(),
                got: a.dim(),
            });
        }
        let p = bloch::trace_overlap(a.dot(&self.theta), self.dims)?;
        let r = self.rng.random_bool(p);
        Ok(MeasurementOutcome {
            r: r as u8,
            r_tilde: bloch::renormalize_reward(r as u8 as f64, self.dims),
            p,
            post_state_aligned: r,
        })
    }

    /// Resets the generator so the outcome sequence replays bit-identically.
    pub fn reseed(&mut self, seed: u64, stream: u64) {
        self.rng = substream(seed, stream);
    }
}

/// Noise model for the classical linear abstraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseModel {
    /// Exact quantum statistics; only valid when n_dim = d^2 - 1.
    Born { dims: QuantumDims },
    /// Gaussian noise with the matching variance profile 1 - <theta, a>^2.
    Gaussian,
}

/// Linear reward environment with state-dependent vanishing noise.
#[derive(Debug, Clone)]
pub struct VanishingVarianceEnv {
    theta: UnitVector,
    noise: NoiseModel,
    rng: ChaCha8Rng,
}

impl VanishingVarianceEnv {
    pub fn new(theta: UnitVector, noise: NoiseModel, rng: ChaCha8Rng) -> Result<Self> {
        if let NoiseModel::Born { dims } = noise {
            if theta.dim() != dims.n_dim() {
                return Err(Error::config(format!(
                    "born noise needs n_dim = d^2 - 1 = {}, got {}",
                    dims.n_dim(),
                    theta.dim()
                )));
            }
        }
        Ok(VanishingVarianceEnv { theta, noise, rng })
    }

    pub fn theta(&self) -> &UnitVector {
        &self.theta
    }

    pub fn noise(&self) -> NoiseModel {
        self.noise
    }

    /// Draws the centered reward for action a: mean <theta, a>, variance
    /// (1 - <theta,a>)(1 + (d-1)<theta,a>) under born, 1 - <theta,a>^2 under gaussian.
    pub fn sample_linear(&mut self, a: &UnitVector) -> Result<f64> {
        if a.dim() != self.theta.dim() {
            return Err(Error::DimensionMismatch {
                what: "action dimension",
                expected: self.theta.dim(),
                got: a.dim(),
            });
        }
        let inner = a.dot(&self.theta);
        match self.noise {
            NoiseModel::Born { dims } => {
                let p = bloch::trace_overlap(inner, dims)?;
                let r = self.rng.random_bool(p);
                Ok(bloch::renormalize_reward(r as u8 as f64, dims))
            }
            NoiseModel::Gaussian => {
                let var = (1.0 - inner * inner).max(0.0);
                let z: f64 = self.rng.sample(StandardNormal);
                Ok(inner + var.sqrt() * z)
            }
        }
    }

    pub fn reseed(&mut self, seed: u64, stream: u64) {
        self.rng = substream(seed, stream);
    }
}

/// One sample through the common environment interface: the centered reward plus the
/// full quantum outcome when the noise is Born.
#[derive(Debug, Clone, Copy)]
pub struct LinearSample {
    pub r_tilde: f64,
    pub outcome: Option<MeasurementOutcome>,
}

/// Common face of the two environments, what the bandit policy talks to.
pub trait LinearEnv {
    fn n_dim(&self) -> usize;
    fn theta(&self) -> &UnitVector;
    fn sample(&mut self, a: &UnitVector) -> Result<LinearSample>;
    /// Infidelity between the true state and the pure state along a. Quantum
    /// environments use the Bloch formula; the gaussian abstraction uses (1 - <.,.>)/2.
    fn infidelity(&self, a: &UnitVector) -> Result<f64>;
}

impl LinearEnv for PureStateEnv {
    fn n_dim(&self) -> usize {
        self.theta.dim()
    }

    fn theta(&self) -> &UnitVector {
        &self.theta
    }

    fn sample(&mut self, a: &UnitVector) -> Result<LinearSample> {
        let o = self.sample_measurement(a)?;
        Ok(LinearSample {
            r_tilde: o.r_tilde,
            outcome: Some(o),
        })
    }

    fn infidelity(&self, a: &UnitVector) -> Result<f64> {
        bloch::infidelity_pure(a, &self.theta, self.dims)
    }
}

impl LinearEnv for VanishingVarianceEnv {
    fn n_dim(&self) -> usize {
        self.theta.dim()
    }

    fn theta(&self) -> &UnitVector {
        &self.theta
    }

    fn sample(&mut self, a: &UnitVector) -> Result<LinearSample> {
        match self.noise {
            NoiseModel::Born { dims } => {
                let inner = a.dot(&self.theta);
                let p = bloch::trace_overlap(inner, dims)?;
                let r = self.rng.random_bool(p);
                Ok(LinearSample {
                    r_tilde: bloch::renormalize_reward(r as u8 as f64, dims),
                    outcome: Some(MeasurementOutcome {
                        r: r as u8,
                        r_tilde: bloch::renormalize_reward(r as u8 as f64, dims),
                        p,
                        post_state_aligned: r,
                    }),
                })
            }
            NoiseModel::Gaussian => Ok(LinearSample {
                r_tilde: self.sample_linear(a)?,
                outcome: None,
            }),
        }
    }

    fn infidelity(&self, a: &UnitVector) -> Result<f64> {
        match self.noise {
            NoiseModel::Born { dims } => bloch::infidelity_pure(a, &self.theta, dims),
            NoiseModel::Gaussian => {
                if a.dim() != self.theta.dim() {
                    return Err(Error::DimensionMismatch {
                        what: "action dimension",
                        expected: self.theta.dim(),
                        got: a.dim(),
                    });
                }
                Ok(0.5 * (1.0 - a.dot(&self.theta)))
            }
        }
    }
}

/// ChaCha8 substream: `stream` selects an independent sequence under one master seed.
pub fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform draw from the unit sphere in R^{n_dim} (normalized isotropic Gaussian).
pub fn random_pure_state(rng: &mut impl Rng, n_dim: usize) -> UnitVector {
    loop {
        let v: Vec<f64> = (0..n_dim).map(|_| rng.sample(StandardNormal)).collect();
        if let Ok(u) = UnitVector::normalized(v) {
            return u;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn qubit() -> QuantumDims {
        QuantumDims::new(2).unwrap()
    }

    fn qubit_env(theta: UnitVector, seed: u64) -> PureStateEnv {
        PureStateEnv::new(theta, qubit(), substream(seed, 0)).unwrap()
    }

    #[test]
    fn outcome_fields_are_consistent() {
        let theta = UnitVector::basis(3, 2);
        let mut env = qubit_env(theta, 42);
        let a = UnitVector::normalized(vec![1.0, 0.0, 1.0]).unwrap();
        for _ in 0..100 {
            let o = env.sample_measurement(&a).unwrap();
            assert!((o.p - (1.0 + 1.0 / 2f64.sqrt()) / 2.0).abs() < 1e-12);
            let want = if o.r == 1 { 1.0 } else { -1.0 };
            assert_eq!(o.r_tilde, want);
            assert_eq!(o.post_state_aligned, o.r == 1);
        }
    }

    #[test]
    fn aligned_and_antipodal_are_deterministic() {
        let theta = UnitVector::basis(3, 0);
        let mut env = qubit_env(theta.clone(), 1);
        let anti = UnitVector::normalized(vec![-1.0, 0.0, 0.0]).unwrap();
        for _ in 0..50 {
            assert_eq!(env.sample_measurement(&theta).unwrap().r, 1);
            assert_eq!(env.sample_measurement(&anti).unwrap().r, 0);
        }
    }

    #[test]
    fn reseed_replays_bit_identically() {
        let theta = random_pure_state(&mut substream(9, 7), 3);
        let mut env = qubit_env(theta, 5);
        env.reseed(123, 4);
        let a = UnitVector::basis(3, 1);
        let first: Vec<u8> = (0..200)
            .map(|_| env.sample_measurement(&a).unwrap().r)
            .collect();
        env.reseed(123, 4);
        let second: Vec<u8> = (0..200)
            .map(|_| env.sample_measurement(&a).unwrap().r)
            .collect();
        assert_eq!(first, second);
        // a different stream under the same seed diverges
        env.reseed(123, 5);
        let third: Vec<u8> = (0..200)
            .map(|_| env.sample_measurement(&a).unwrap().r)
            .collect();
        assert_ne!(first, third);
    }

    #[test]
    fn born_model_requires_quantum_n_dim() {
        let theta4 = random_pure_state(&mut substream(2, 0), 4);
        assert!(VanishingVarianceEnv::new(
            theta4.clone(),
            NoiseModel::Born { dims: qubit() },
            substream(0, 0)
        )
        .is_err());
        assert!(
            VanishingVarianceEnv::new(theta4, NoiseModel::Gaussian, substream(0, 0)).is_ok()
        );
    }

    #[test]
    fn born_reward_mean_and_variance() {
        // z-test on the mean at significance 1e-6, plus a 5% relative variance check
        let n = 100_000;
        for x in [-0.5, 0.0, 0.5, 0.9] {
            let theta = UnitVector::basis(3, 0);
            let a = UnitVector::normalized(vec![x, (1.0 - x * x).sqrt(), 0.0]).unwrap();
            let mut env = qubit_env(theta, 77);
            let mut sum = 0.0;
            let mut sq = 0.0;
            for _ in 0..n {
                let o = env.sample_measurement(&a).unwrap();
                sum += o.r_tilde;
                sq += o.r_tilde * o.r_tilde;
            }
            let mean = sum / n as f64;
            let var = sq / n as f64 - mean * mean;
            let var_true = (1.0 - x) * (1.0 + x);
            // z quantile for two-sided 1e-6
            let z = 4.891638;
            assert!(
                (mean - x).abs() <= z * var_true.sqrt() / (n as f64).sqrt(),
                "mean {mean} vs {x}"
            );
            assert!(
                (var - var_true).abs() <= 0.05 * var_true.max(0.05),
                "var {var} vs {var_true}"
            );
        }
    }

    #[test]
    fn gaussian_reward_mean_and_variance() {
        let n = 100_000;
        let theta = random_pure_state(&mut substream(3, 1), 5);
        let a = random_pure_state(&mut substream(3, 2), 5);
        let x = a.dot(&theta);
        let mut env =
            VanishingVarianceEnv::new(theta, NoiseModel::Gaussian, substream(8, 0)).unwrap();
        let mut sum = 0.0;
        let mut sq = 0.0;
        for _ in 0..n {
            let v = env.sample_linear(&a).unwrap();
            sum += v;
            sq += v * v;
        }
        let mean = sum / n as f64;
        let var = sq / n as f64 - mean * mean;
        let var_true = 1.0 - x * x;
        assert!((mean - x).abs() <= 4.891638 * var_true.sqrt() / (n as f64).sqrt());
        assert!((var - var_true).abs() <= 0.05 * var_true);
    }

    #[test]
    fn gaussian_noise_vanishes_at_target() {
        let theta = random_pure_state(&mut substream(4, 0), 4);
        let mut env =
            VanishingVarianceEnv::new(theta.clone(), NoiseModel::Gaussian, substream(4, 1))
                .unwrap();
        for _ in 0..100 {
            let v = env.sample_linear(&theta).unwrap();
            assert!((v - 1.0).abs() < 1e-7);
        }
    }

    #[test]
    fn sphere_sampling_moments() {
        let n = 100_000;
        let mut rng = substream(31, 0);
        for n_dim in [3usize, 8] {
            let mut mean = vec![0.0; n_dim];
            let mut sq0 = 0.0;
            for _ in 0..n {
                let u = random_pure_state(&mut rng, n_dim);
                for (m, x) in mean.iter_mut().zip(u.as_slice()) {
                    *m += x;
                }
                sq0 += u[0] * u[0];
            }
            for m in &mean {
                assert!((m / n as f64).abs() < 0.02);
            }
            let second = sq0 / n as f64;
            assert!((second - 1.0 / n_dim as f64).abs() < 0.02);
        }
    }
}
