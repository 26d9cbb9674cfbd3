//! Reference policies the bandit is compared against.
//!
//! `FixedBasisPolicy` never adapts: it cycles the canonical axes forever, so its regret
//! grows linearly. `EtcPolicy` explores for a fixed budget, commits to the regression
//! estimate, and pays sqrt-of-horizon regret through the estimate it froze.
//! `OraclePolicy` measures the true state itself and bounds everything below.

use rand_chacha::ChaCha8Rng;

use crate::bloch::UnitVector;
use crate::env::{random_pure_state, LinearEnv};
use crate::error::{Error, Result};
use crate::record::{EpisodePolicy, StateSnapshot, StepRecord};

fn plain_snapshot(t: usize, infidelity: f64) -> StateSnapshot {
    StateSnapshot {
        t,
        infidelity,
        lambda_min: 0.0,
        lambda_max: 0.0,
        covered: false,
        spectrum_balance_ok: true,
    }
}

fn normalized_or_basis(v: Vec<f64>) -> UnitVector {
    let n = v.len();
    UnitVector::normalized(v).unwrap_or_else(|_| UnitVector::basis(n, 0))
}

/// Measures e_1, e_2, ..., e_n, e_1, ... forever; the estimate is the normalized
/// vector of per-axis reward means.
#[derive(Debug, Clone)]
pub struct FixedBasisPolicy {
    n_dim: usize,
    sums: Vec<f64>,
    counts: Vec<usize>,
}

impl FixedBasisPolicy {
    pub fn new(n_dim: usize) -> Result<Self> {
        if n_dim < 2 {
            return Err(Error::config("fixed basis policy needs n_dim >= 2"));
        }
        Ok(FixedBasisPolicy {
            n_dim,
            sums: vec![0.0; n_dim],
            counts: vec![0; n_dim],
        })
    }

    pub fn estimate(&self) -> UnitVector {
        let means: Vec<f64> = self
            .sums
            .iter()
            .zip(&self.counts)
            .map(|(s, &c)| if c == 0 { 0.0 } else { s / c as f64 })
            .collect();
        normalized_or_basis(means)
    }
}

impl EpisodePolicy for FixedBasisPolicy {
    fn run(
        &mut self,
        env: &mut dyn LinearEnv,
        horizon: usize,
        step_sink: &mut dyn FnMut(StepRecord),
        state_sink: &mut dyn FnMut(StateSnapshot),
    ) -> Result<()> {
        check_dims(env, self.n_dim)?;
        state_sink(plain_snapshot(0, env.infidelity(&self.estimate())?));
        for t in 1..=horizon {
            let axis = (t - 1) % self.n_dim;
            let a = UnitVector::basis(self.n_dim, axis);
            let inner = a.dot(env.theta());
            let sample = env.sample(&a)?;
            self.sums[axis] += sample.r_tilde;
            self.counts[axis] += 1;
            step_sink(StepRecord::from_sample(t, inner, &sample));
            state_sink(plain_snapshot(t, env.infidelity(&self.estimate())?));
        }
        Ok(())
    }
}

/// How explore-then-commit spends its exploration budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExploreScheme {
    RandomDirections,
    FixedBasis,
}

/// Explore for a fixed number of steps, commit to the regression estimate, exploit.
#[derive(Debug)]
pub struct EtcPolicy {
    n_dim: usize,
    explore_steps: usize,
    scheme: ExploreScheme,
    rng: ChaCha8Rng,
    acc: Vec<f64>,
}

impl EtcPolicy {
    pub fn new(
        n_dim: usize,
        explore_steps: usize,
        scheme: ExploreScheme,
        rng: ChaCha8Rng,
    ) -> Result<Self> {
        if n_dim < 2 {
            return Err(Error::config("etc policy needs n_dim >= 2"));
        }
        if explore_steps == 0 {
            return Err(Error::config("etc policy needs explore_steps >= 1"));
        }
        Ok(EtcPolicy {
            n_dim,
            explore_steps,
            scheme,
            rng,
            acc: vec![0.0; n_dim],
        })
    }

    /// Exploration budget ceil(alpha * horizon); alpha defaults to 1/sqrt(horizon),
    /// which balances the two regret phases.
    pub fn explore_budget(horizon: usize, alpha: Option<f64>) -> usize {
        let h = horizon as f64;
        let a = alpha.unwrap_or(1.0 / h.sqrt());
        ((a * h).ceil() as usize).clamp(1, horizon.max(1))
    }

    /// Unnormalized regression estimate sum_s r~_s a_s, isotropic up to noise.
    pub fn estimate(&self) -> UnitVector {
        normalized_or_basis(self.acc.clone())
    }
}

impl EpisodePolicy for EtcPolicy {
    fn run(
        &mut self,
        env: &mut dyn LinearEnv,
        horizon: usize,
        step_sink: &mut dyn FnMut(StepRecord),
        state_sink: &mut dyn FnMut(StateSnapshot),
    ) -> Result<()> {
        check_dims(env, self.n_dim)?;
        state_sink(plain_snapshot(0, env.infidelity(&self.estimate())?));
        let explore = self.explore_steps.min(horizon);
        for t in 1..=explore {
            let a = match self.scheme {
                ExploreScheme::RandomDirections => random_pure_state(&mut self.rng, self.n_dim),
                ExploreScheme::FixedBasis => UnitVector::basis(self.n_dim, (t - 1) % self.n_dim),
            };
            let inner = a.dot(env.theta());
            let sample = env.sample(&a)?;
            for (acc, ai) in self.acc.iter_mut().zip(a.as_slice()) {
                *acc += sample.r_tilde * ai;
            }
            step_sink(StepRecord::from_sample(t, inner, &sample));
            state_sink(plain_snapshot(t, env.infidelity(&self.estimate())?));
        }
        let committed = self.estimate();
        let inner = committed.dot(env.theta());
        for t in (explore + 1)..=horizon {
            let sample = env.sample(&committed)?;
            step_sink(StepRecord::from_sample(t, inner, &sample));
        }
        Ok(())
    }
}

/// Measures the true state itself; zero regret, zero disturbance, zero infidelity.
#[derive(Debug, Clone, Copy, Default)]
pub struct OraclePolicy;

impl EpisodePolicy for OraclePolicy {
    fn run(
        &mut self,
        env: &mut dyn LinearEnv,
        horizon: usize,
        step_sink: &mut dyn FnMut(StepRecord),
        state_sink: &mut dyn FnMut(StateSnapshot),
    ) -> Result<()> {
        let theta = env.theta().clone();
        state_sink(plain_snapshot(0, 0.0));
        for t in 1..=horizon {
            let sample = env.sample(&theta)?;
            step_sink(StepRecord::from_sample(t, 1.0, &sample));
        }
        Ok(())
    }
}

fn check_dims(env: &dyn LinearEnv, n_dim: usize) -> Result<()> {
    if env.n_dim() != n_dim {
        return Err(Error::DimensionMismatch {
            what: "environment dimension",
            expected: n_dim,
            got: env.n_dim(),
        });
    }
    Ok(())
}
