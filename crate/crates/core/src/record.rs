//! Per-step bookkeeping shared by all policies.
//!
//! A `StepRecord` carries what one measurement cost: instantaneous regret in both
//! conventions plus the disturbance inflicted on the measured copy. A `StateSnapshot`
//! captures the learner's state whenever it changes; the harness joins the two streams
//! at checkpoints. Quantum quantities need a Born outcome; without one (the gaussian
//! noise model) the regrets degrade to their folded and raw linear analogues and the
//! disturbance columns are zero.

use crate::bloch;
use crate::env::{LinearEnv, LinearSample};
use crate::error::Result;

/// Cost of a single measurement step. Regret and disturbance entries are per-step
/// increments, not running sums.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub t: usize,
    pub reward_raw: f64,
    pub reward: f64,
    pub p: Option<f64>,
    pub regret_q: f64,
    pub regret_cl: f64,
    pub disturbance: f64,
    pub disturbance_star: f64,
}

impl StepRecord {
    /// Builds the record for measuring direction a with <theta, a> = inner.
    /// The environment state is a fresh pure copy, so disturbance uses lambda_max = 1.
    pub fn from_sample(t: usize, inner: f64, sample: &LinearSample) -> StepRecord {
        match sample.outcome {
            Some(o) => StepRecord {
                t,
                reward_raw: o.r as f64,
                reward: o.r_tilde,
                p: Some(o.p),
                regret_q: 1.0 - o.p.max(1.0 - o.p),
                regret_cl: 1.0 - inner,
                disturbance: bloch::step_disturbance(1.0, o.p),
                disturbance_star: bloch::step_disturbance_star(1.0, o.p),
            },
            None => StepRecord {
                t,
                reward_raw: sample.r_tilde,
                reward: sample.r_tilde,
                p: None,
                regret_q: 1.0 - inner.abs(),
                regret_cl: 1.0 - inner,
                disturbance: 0.0,
                disturbance_star: 0.0,
            },
        }
    }
}

/// Learner state in force from step `t + 1` onward (t = steps completed when the
/// state was formed). Policies without a design matrix report zero eigenvalues and
/// `covered = false`; those columns are only meaningful for the bandit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StateSnapshot {
    pub t: usize,
    pub infidelity: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub covered: bool,
    pub spectrum_balance_ok: bool,
}

/// One full episode against an environment: step costs go to `step_sink` in order,
/// learner-state changes to `state_sink` (including one snapshot at t = 0).
pub trait EpisodePolicy {
    fn run(
        &mut self,
        env: &mut dyn LinearEnv,
        horizon: usize,
        step_sink: &mut dyn FnMut(StepRecord),
        state_sink: &mut dyn FnMut(StateSnapshot),
    ) -> Result<()>;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::env::MeasurementOutcome;

    #[test]
    fn born_step_quantities() {
        let s = LinearSample {
            r_tilde: 1.0,
            outcome: Some(MeasurementOutcome {
                r: 1,
                r_tilde: 1.0,
                p: 0.8,
                post_state_aligned: true,
            }),
        };
        let rec = StepRecord::from_sample(7, 0.6, &s);
        assert_eq!(rec.t, 7);
        assert_eq!(rec.reward_raw, 1.0);
        assert_eq!(rec.p, Some(0.8));
        assert!((rec.regret_q - 0.2).abs() < 1e-15);
        assert!((rec.regret_cl - 0.4).abs() < 1e-15);
        // pure state: both disturbance notions reduce to 2 p (1 - p)
        assert!((rec.disturbance - 0.32).abs() < 1e-12);
        assert!((rec.disturbance_star - 0.32).abs() < 1e-12);
    }

    #[test]
    fn folded_probability_is_used() {
        let s = LinearSample {
            r_tilde: -1.0,
            outcome: Some(MeasurementOutcome {
                r: 0,
                r_tilde: -1.0,
                p: 0.2,
                post_state_aligned: false,
            }),
        };
        let rec = StepRecord::from_sample(1, -0.6, &s);
        assert!((rec.regret_q - 0.2).abs() < 1e-15);
        assert!((rec.regret_cl - 1.6).abs() < 1e-15);
    }

    #[test]
    fn gaussian_step_quantities() {
        let s = LinearSample {
            r_tilde: 0.37,
            outcome: None,
        };
        let rec = StepRecord::from_sample(3, -0.5, &s);
        assert_eq!(rec.p, None);
        assert_eq!(rec.reward_raw, 0.37);
        assert!((rec.regret_q - 0.5).abs() < 1e-15);
        assert!((rec.regret_cl - 1.5).abs() < 1e-15);
        assert_eq!(rec.disturbance, 0.0);
        assert_eq!(rec.disturbance_star, 0.0);
    }
}
