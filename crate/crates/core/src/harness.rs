//! Experiment harness: Monte Carlo episodes over independent random states,
//! checkpoint aggregation, and trace output.
//!
//! Episode r draws its environment from RNG stream 2r and its policy from stream
//! 2r + 1 under one master seed, so runs are independent, reproducible, and identical
//! whether episodes execute in parallel or sequentially. Cumulative columns (regret,
//! disturbance) are exact per-step sums; state columns (infidelity, spectrum, coverage)
//! come from the latest learner snapshot at or before the checkpoint, so a checkpoint
//! on a batch boundary reports the post-batch state.

use std::cell::RefCell;
use std::collections::BTreeSet;
use std::fs;
use std::io::Write as _;
use std::path::Path;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::baselines::{EtcPolicy, ExploreScheme, FixedBasisPolicy, OraclePolicy};
use crate::bloch::{QuantumDims, UnitVector};
use crate::env::{
    random_pure_state, substream, LinearEnv, NoiseModel, PureStateEnv, VanishingVarianceEnv,
};
use crate::error::{Error, Result};
use crate::fit::FitResult;
use crate::policy::{self, EstimateMode, PolicyConfig, PolicyState};
use crate::record::{EpisodePolicy, StateSnapshot, StepRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyKind {
    LinUcbVvn,
    Etc,
    FixedBasis,
    Oracle,
}

impl PolicyKind {
    pub fn name(&self) -> &'static str {
        match self {
            PolicyKind::LinUcbVvn => "linucb-vvn",
            PolicyKind::Etc => "etc",
            PolicyKind::FixedBasis => "fixed-basis",
            PolicyKind::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    Born,
    Gaussian,
}

impl NoiseKind {
    pub fn name(&self) -> &'static str {
        match self {
            NoiseKind::Born => "born",
            NoiseKind::Gaussian => "gaussian",
        }
    }
}

/// How each episode picks its unknown state.
#[derive(Debug, Clone, PartialEq)]
pub enum EnvInit {
    Random,
    Fixed(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub policy: PolicyKind,
    pub horizon: usize,
    pub k: usize,
    pub runs: usize,
    pub seed: u64,
    pub lambda0: f64,
    /// Linear model dimension n. Born noise requires n = d^2 - 1 for a Hilbert space
    /// dimension d; the qubit experiments use n = 3.
    pub dim: usize,
    pub noise: NoiseKind,
    pub env_init: EnvInit,
    /// Exploration fraction for explore-then-commit; None means 1/sqrt(horizon).
    pub alpha: Option<f64>,
    pub omega_beta: f64,
    pub estimate_mode: EstimateMode,
    /// None selects the default geometric grid.
    pub checkpoints: Option<Vec<usize>>,
}

impl ExperimentConfig {
    pub fn new(policy: PolicyKind, horizon: usize) -> ExperimentConfig {
        ExperimentConfig {
            policy,
            horizon,
            k: 1,
            runs: 1,
            seed: 0,
            lambda0: 2.0,
            dim: 3,
            noise: NoiseKind::Born,
            env_init: EnvInit::Random,
            alpha: None,
            omega_beta: policy::DEFAULT_OMEGA_BETA,
            estimate_mode: EstimateMode::Action,
            checkpoints: None,
        }
    }

    pub fn n_dim(&self) -> usize {
        self.dim
    }

    /// Hilbert dimension matching `dim`, when one exists.
    pub fn quantum_dims(&self) -> Option<QuantumDims> {
        QuantumDims::from_n_dim(self.dim)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::config("dim must be >= 2"));
        }
        if self.noise == NoiseKind::Born && self.quantum_dims().is_none() {
            return Err(Error::config(format!(
                "born noise needs dim = d^2 - 1 for some d >= 2, got {}",
                self.dim
            )));
        }
        if self.horizon == 0 {
            return Err(Error::config("horizon must be >= 1"));
        }
        if self.runs == 0 {
            return Err(Error::config("runs must be >= 1"));
        }
        if let Some(a) = self.alpha {
            if !(a > 0.0 && a <= 1.0) {
                return Err(Error::OutOfRange {
                    what: "alpha",
                    value: a,
                    lo: f64::MIN_POSITIVE,
                    hi: 1.0,
                });
            }
        }
        if let EnvInit::Fixed(v) = &self.env_init {
            if v.len() != self.n_dim() {
                return Err(Error::DimensionMismatch {
                    what: "fixed environment state",
                    expected: self.n_dim(),
                    got: v.len(),
                });
            }
            UnitVector::normalized(v.clone())?;
        }
        if self.policy == PolicyKind::LinUcbVvn {
            let pc = self.policy_config();
            pc.validate()?;
            if self.horizon < 2 * pc.batch_len() {
                return Err(Error::config(format!(
                    "horizon {} holds fewer than two batches of {}",
                    self.horizon,
                    pc.batch_len()
                )));
            }
        }
        if let Some(grid) = &self.checkpoints {
            if grid.is_empty() {
                return Err(Error::config("checkpoint grid is empty"));
            }
            let ok = grid.windows(2).all(|w| w[0] < w[1])
                && grid[0] >= 1
                && *grid.last().unwrap() <= self.horizon;
            if !ok {
                return Err(Error::config(
                    "checkpoints must be strictly increasing, >= 1, and <= horizon",
                ));
            }
        }
        Ok(())
    }

    pub fn policy_config(&self) -> PolicyConfig {
        PolicyConfig {
            n_dim: self.n_dim(),
            k: self.k,
            lambda0: self.lambda0,
            omega_beta: self.omega_beta,
            estimate_mode: self.estimate_mode,
        }
    }

    pub fn checkpoint_grid(&self) -> Vec<usize> {
        self.checkpoints
            .clone()
            .unwrap_or_else(|| default_checkpoints(self.horizon))
    }
}

/// Geometric grid with about 40 points per decade, from 10 up to and including the
/// horizon. Horizons below 10 get the single point {horizon}.
pub fn default_checkpoints(horizon: usize) -> Vec<usize> {
    if horizon < 10 {
        return vec![horizon.max(1)];
    }
    let mut grid = BTreeSet::new();
    let mut j = 0u32;
    loop {
        let t = 10f64.powf(f64::from(j) / 40.0).round() as usize;
        if t >= 10 {
            grid.insert(t.min(horizon));
        }
        if t >= horizon {
            break;
        }
        j += 1;
    }
    grid.into_iter().collect()
}

/// Minimax cumulative regret floor for d-dimensional systems, clipped at zero.
pub fn lower_bound_curve(t: usize, d: usize) -> f64 {
    ((d as f64 - 1.0) * (t as f64 / (d as f64 + 1.0)).ln()).max(0.0)
}

/// Best mean fidelity reachable from n independent copies of an unknown pure state.
pub fn fidelity_bound_curve(n_copies: usize, d: usize) -> f64 {
    (n_copies as f64 + 1.0) / (n_copies as f64 + d as f64)
}

/// Per-run values at one checkpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckpointRow {
    pub t: usize,
    pub regret_q: f64,
    pub regret_cl: f64,
    pub disturbance: f64,
    pub disturbance_star: f64,
    pub infidelity: f64,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub covered: bool,
}

/// One episode reduced to its checkpoint rows.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub rows: Vec<CheckpointRow>,
    pub spectrum_balance_violations: usize,
    pub final_regret_q: f64,
}

/// Streaming fold of step and state events onto the checkpoint grid.
struct Fold<'a> {
    grid: &'a [usize],
    next: usize,
    cum_q: f64,
    cum_cl: f64,
    cum_d: f64,
    cum_ds: f64,
    state: StateSnapshot,
    pending: Vec<CheckpointRow>,
    rows: Vec<CheckpointRow>,
    violations: usize,
}

impl<'a> Fold<'a> {
    fn new(grid: &'a [usize]) -> Fold<'a> {
        Fold {
            grid,
            next: 0,
            cum_q: 0.0,
            cum_cl: 0.0,
            cum_d: 0.0,
            cum_ds: 0.0,
            state: StateSnapshot {
                t: 0,
                infidelity: f64::NAN,
                lambda_min: 0.0,
                lambda_max: 0.0,
                covered: false,
                spectrum_balance_ok: true,
            },
            pending: Vec::new(),
            rows: Vec::with_capacity(grid.len()),
            violations: 0,
        }
    }

    fn step(&mut self, r: &StepRecord) {
        self.cum_q += r.regret_q;
        self.cum_cl += r.regret_cl;
        self.cum_d += r.disturbance;
        self.cum_ds += r.disturbance_star;
        if self.next < self.grid.len() && r.t == self.grid[self.next] {
            // state columns stay open until we know no snapshot lands on this t
            self.pending.push(CheckpointRow {
                t: r.t,
                regret_q: self.cum_q,
                regret_cl: self.cum_cl,
                disturbance: self.cum_d,
                disturbance_star: self.cum_ds,
                infidelity: f64::NAN,
                lambda_min: 0.0,
                lambda_max: 0.0,
                covered: false,
            });
            self.next += 1;
        }
    }

    fn state(&mut self, s: &StateSnapshot) {
        if !s.spectrum_balance_ok {
            self.violations += 1;
        }
        let fill = |row: &mut CheckpointRow, from: &StateSnapshot| {
            row.infidelity = from.infidelity;
            row.lambda_min = from.lambda_min;
            row.lambda_max = from.lambda_max;
            row.covered = from.covered;
        };
        for mut row in self.pending.drain(..) {
            let from = if row.t < s.t { &self.state } else { s };
            fill(&mut row, from);
            self.rows.push(row);
        }
        self.state = *s;
    }

    fn finish(mut self) -> RunTrace {
        for mut row in self.pending.drain(..) {
            row.infidelity = self.state.infidelity;
            row.lambda_min = self.state.lambda_min;
            row.lambda_max = self.state.lambda_max;
            row.covered = self.state.covered;
            self.rows.push(row);
        }
        RunTrace {
            rows: self.rows,
            spectrum_balance_violations: self.violations,
            final_regret_q: self.cum_q,
        }
    }
}

/// Runs episode `run` of the experiment.
pub fn run_episode(cfg: &ExperimentConfig, run: usize) -> Result<RunTrace> {
    let n = cfg.n_dim();
    let mut env_rng = substream(cfg.seed, 2 * run as u64);
    let theta = match &cfg.env_init {
        EnvInit::Random => random_pure_state(&mut env_rng, n),
        EnvInit::Fixed(v) => UnitVector::normalized(v.clone())?,
    };
    let mut env: Box<dyn LinearEnv> = match cfg.noise {
        NoiseKind::Born => {
            let dims = cfg.quantum_dims().ok_or_else(|| {
                Error::config(format!("born noise needs dim = d^2 - 1, got {}", cfg.dim))
            })?;
            Box::new(PureStateEnv::new(theta, dims, env_rng)?)
        }
        NoiseKind::Gaussian => {
            Box::new(VanishingVarianceEnv::new(theta, NoiseModel::Gaussian, env_rng)?)
        }
    };
    let mut policy_rng = substream(cfg.seed, 2 * run as u64 + 1);
    let mut policy: Box<dyn EpisodePolicy> = match cfg.policy {
        PolicyKind::LinUcbVvn => Box::new(PolicyState::new(
            cfg.policy_config(),
            random_pure_state(&mut policy_rng, n),
        )?),
        PolicyKind::Etc => Box::new(EtcPolicy::new(
            n,
            EtcPolicy::explore_budget(cfg.horizon, cfg.alpha),
            ExploreScheme::RandomDirections,
            policy_rng,
        )?),
        PolicyKind::FixedBasis => Box::new(FixedBasisPolicy::new(n)?),
        PolicyKind::Oracle => Box::new(OraclePolicy),
    };
    let grid = cfg.checkpoint_grid();
    let fold = RefCell::new(Fold::new(&grid));
    policy.run(
        env.as_mut(),
        cfg.horizon,
        &mut |r| fold.borrow_mut().step(&r),
        &mut |s| fold.borrow_mut().state(&s),
    )?;
    Ok(fold.into_inner().finish())
}

/// Mean curves across runs at one checkpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregateRow {
    pub t: usize,
    pub regret_q_mean: f64,
    pub regret_q_se: f64,
    pub regret_cl_mean: f64,
    pub disturbance_mean: f64,
    pub disturbance_star_mean: f64,
    pub infidelity_mean: f64,
    pub infidelity_se: f64,
    pub lambda_min_mean: f64,
    pub lambda_max_mean: f64,
    pub coverage_rate: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub rows: Vec<AggregateRow>,
    pub spectrum_balance_violations: usize,
    pub final_regret_q_mean: f64,
    pub runs: usize,
    /// One run only: standard errors are all 0 by construction, not by convergence.
    pub se_degenerate: bool,
}

fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Reduces per-run traces to mean curves. All traces must share one checkpoint grid.
pub fn aggregate(traces: &[RunTrace]) -> Result<ExperimentResult> {
    let len = traces[0].rows.len();
    if traces.iter().any(|t| t.rows.len() != len) {
        return Err(Error::Invariant("episodes disagree on checkpoint count".into()));
    }
    let mut rows = Vec::with_capacity(len);
    let mut buf = vec![0.0; traces.len()];
    for i in 0..len {
        let t = traces[0].rows[i].t;
        let col = |f: &dyn Fn(&CheckpointRow) -> f64, buf: &mut [f64]| {
            for (slot, tr) in buf.iter_mut().zip(traces) {
                *slot = f(&tr.rows[i]);
            }
        };
        col(&|r| r.regret_q, &mut buf);
        let (regret_q_mean, regret_q_se) = mean_se(&buf);
        col(&|r| r.regret_cl, &mut buf);
        let (regret_cl_mean, _) = mean_se(&buf);
        col(&|r| r.disturbance, &mut buf);
        let (disturbance_mean, _) = mean_se(&buf);
        col(&|r| r.disturbance_star, &mut buf);
        let (disturbance_star_mean, _) = mean_se(&buf);
        col(&|r| r.infidelity, &mut buf);
        let (infidelity_mean, infidelity_se) = mean_se(&buf);
        col(&|r| r.lambda_min, &mut buf);
        let (lambda_min_mean, _) = mean_se(&buf);
        col(&|r| r.lambda_max, &mut buf);
        let (lambda_max_mean, _) = mean_se(&buf);
        col(&|r| if r.covered { 1.0 } else { 0.0 }, &mut buf);
        let (coverage_rate, _) = mean_se(&buf);
        rows.push(AggregateRow {
            t,
            regret_q_mean,
            regret_q_se,
            regret_cl_mean,
            disturbance_mean,
            disturbance_star_mean,
            infidelity_mean,
            infidelity_se,
            lambda_min_mean,
            lambda_max_mean,
            coverage_rate,
        });
    }
    let finals: Vec<f64> = traces.iter().map(|t| t.final_regret_q).collect();
    Ok(ExperimentResult {
        rows,
        spectrum_balance_violations: traces.iter().map(|t| t.spectrum_balance_violations).sum(),
        final_regret_q_mean: mean_se(&finals).0,
        runs: traces.len(),
        se_degenerate: traces.len() < 2,
    })
}

/// All episodes in run-index order, one thread.
pub fn episode_traces_sequential(cfg: &ExperimentConfig) -> Result<Vec<RunTrace>> {
    (0..cfg.runs).map(|r| run_episode(cfg, r)).collect()
}

/// All episodes, data-parallel when the `parallel` feature is on. Same results as
/// the sequential driver in either mode.
#[cfg(feature = "parallel")]
pub fn episode_traces(cfg: &ExperimentConfig) -> Result<Vec<RunTrace>> {
    (0..cfg.runs)
        .into_par_iter()
        .map(|r| run_episode(cfg, r))
        .collect()
}

/// All episodes, data-parallel when the `parallel` feature is on. Same results as
/// the sequential driver in either mode.
#[cfg(not(feature = "parallel"))]
pub fn episode_traces(cfg: &ExperimentConfig) -> Result<Vec<RunTrace>> {
    episode_traces_sequential(cfg)
}

/// Full experiment: episodes (data-parallel when the `parallel` feature is on)
/// plus aggregation. Results do not depend on the execution mode.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    aggregate(&episode_traces(cfg)?)
}

/// Same experiment forced onto one thread; reference path for the parallel driver.
pub fn run_experiment_sequential(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    aggregate(&episode_traces_sequential(cfg)?)
}

pub const TRACE_HEADER: &str = "t,regret_q_mean,regret_q_se,regret_cl_mean,disturbance_mean,\
disturbance_star_mean,infidelity_mean,infidelity_se,lambda_min_mean,lambda_max_mean,\
coverage_rate";

/// Writes trace.csv and summary.json into `out`. Fit results land in the summary
/// under `fits`; pass an empty slice when none were computed. With `deterministic`
/// set the summary omits wall-clock fields so identical experiments produce
/// identical bytes.
pub fn write_outputs(
    cfg: &ExperimentConfig,
    result: &ExperimentResult,
    fits: &[FitResult],
    out: &Path,
    deterministic: bool,
) -> Result<()> {
    fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
    let trace_path = out.join("trace.csv");
    let mut csv = String::with_capacity(result.rows.len() * 128);
    csv.push_str(TRACE_HEADER);
    csv.push('\n');
    for r in &result.rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{}\n",
            r.t,
            r.regret_q_mean,
            r.regret_q_se,
            r.regret_cl_mean,
            r.disturbance_mean,
            r.disturbance_star_mean,
            r.infidelity_mean,
            r.infidelity_se,
            r.lambda_min_mean,
            r.lambda_max_mean,
            r.coverage_rate
        ));
    }
    fs::File::create(&trace_path)
        .and_then(|mut f| f.write_all(csv.as_bytes()))
        .map_err(|e| Error::io(&trace_path, e))?;

    let final_row = result.rows.last();
    let mut summary = serde_json::json!({
        "build": concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION")),
        "policy": cfg.policy.name(),
        "horizon": cfg.horizon,
        "k": cfg.k,
        "runs": cfg.runs,
        "seed": cfg.seed,
        "lambda0": cfg.lambda0,
        "dim": cfg.dim,
        "noise": cfg.noise.name(),
        "env": match &cfg.env_init {
            EnvInit::Random => "random".to_string(),
            EnvInit::Fixed(v) => format!(
                "fixed:{}",
                v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
            ),
        },
        "alpha": cfg.alpha,
        "omega_beta": cfg.omega_beta,
        "estimate_mode": match cfg.estimate_mode {
            EstimateMode::Action => "action",
            EstimateMode::Wmom => "wmom",
        },
        "checkpoints": result.rows.len(),
        "se_degenerate": result.se_degenerate,
        "spectrum_balance_violations": result.spectrum_balance_violations,
        "final_regret_q_mean": result.final_regret_q_mean,
        "final_infidelity_mean": final_row.map(|r| r.infidelity_mean),
        "final_coverage_rate": final_row.map(|r| r.coverage_rate),
        "fits": fits.iter().map(|f| serde_json::json!({
            "model": f.model.tag(),
            "m": f.slope,
            "b": f.intercept,
            "se_m": f.se_slope,
            "se_b": f.se_intercept,
            "r2": f.r2,
            "points": f.points,
        })).collect::<Vec<_>>(),
    });
    if !deterministic {
        let epoch = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        summary["created_unix"] = serde_json::json!(epoch);
    }
    let summary_path = out.join("summary.json");
    let body = serde_json::to_string_pretty(&summary).expect("summary is plain data");
    fs::File::create(&summary_path)
        .and_then(|mut f| f.write_all(body.as_bytes()))
        .map_err(|e| Error::io(&summary_path, e))?;
    Ok(())
}
