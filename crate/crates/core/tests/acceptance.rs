//! Acceptance gate. One test per criterion; each prints a single
//! `criterion N: PASS/FAIL (...)` line before asserting, so
//! `cargo test -p psmaqb-core --test acceptance -- --nocapture` reads as a checklist.
//!
//! The heavy experiments are shared through OnceLock fixtures: the headline scaling run
//! (T = 4e4, k = 10, 100 random environments) backs criteria 1, 2, 4, 6 and 7, and the
//! 200-episode T = 1e4 sweeps back criteria 3 and 7.

use std::sync::OnceLock;

use rand::Rng;

use psmaqb_core::bloch::QuantumDims;
use psmaqb_core::env::{random_pure_state, substream, PureStateEnv};
use psmaqb_core::estimator::{beta, DesignMatrix, EstimatorBank};
use psmaqb_core::fit::{fit_infidelity_power, fit_loglog, fit_regret_log2, second_half};
use psmaqb_core::harness::{
    aggregate, episode_traces, lower_bound_curve, run_experiment, ExperimentConfig,
    ExperimentResult, PolicyKind, RunTrace,
};
use psmaqb_core::policy::{lambda0_min, PolicyConfig, PolicyState};

fn report(n: usize, ok: bool, detail: &str) {
    println!("criterion {n}: {} ({detail})", if ok { "PASS" } else { "FAIL" });
    assert!(ok, "criterion {n}: FAIL ({detail})");
}

struct SharedRun {
    traces: Vec<RunTrace>,
    agg: ExperimentResult,
}

fn run_traces(cfg: ExperimentConfig) -> SharedRun {
    cfg.validate().expect("fixture config");
    let traces = episode_traces(&cfg).expect("fixture episodes");
    let agg = aggregate(&traces).expect("fixture aggregate");
    SharedRun { traces, agg }
}

/// The headline scaling run: linucb-vvn, T = 40000, k = 10, 100 runs, lambda0 = 2, dim 3.
fn scaling_run() -> &'static SharedRun {
    static RUN: OnceLock<SharedRun> = OnceLock::new();
    RUN.get_or_init(|| {
        let mut cfg = ExperimentConfig::new(PolicyKind::LinUcbVvn, 40_000);
        cfg.k = 10;
        cfg.runs = 100;
        cfg.seed = 20260814;
        run_traces(cfg)
    })
}

/// 200 episodes at T = 1e4 for each k in {1, 3, 10}.
fn sweeps_1e4() -> &'static Vec<(usize, SharedRun)> {
    static RUNS: OnceLock<Vec<(usize, SharedRun)>> = OnceLock::new();
    RUNS.get_or_init(|| {
        [1usize, 3, 10]
            .iter()
            .map(|&k| {
                let mut cfg = ExperimentConfig::new(PolicyKind::LinUcbVvn, 10_000);
                cfg.k = k;
                cfg.runs = 200;
                cfg.seed = 100 + k as u64;
                (k, run_traces(cfg))
            })
            .collect()
    })
}

#[test]
fn criterion_01_regret_grows_as_log_squared() {
    let rows = second_half(&scaling_run().agg.rows);
    let ts: Vec<usize> = rows.iter().map(|r| r.t).collect();
    let reg: Vec<f64> = rows.iter().map(|r| r.regret_q_mean).collect();
    let f = fit_regret_log2(&ts, &reg).expect("log2 fit");
    let ok = (2.0..=4.5).contains(&f.slope) && f.r2 >= 0.95;
    report(
        1,
        ok,
        &format!(
            "m1={:.4} (se {:.4}) in [2.0,4.5], R2={:.4} >= 0.95, {} checkpoints",
            f.slope, f.se_slope, f.r2, f.points
        ),
    );
}

#[test]
fn criterion_02_infidelity_decays_as_log_over_t() {
    let rows = second_half(&scaling_run().agg.rows);
    let ts: Vec<usize> = rows.iter().map(|r| r.t).collect();
    let infid: Vec<f64> = rows.iter().map(|r| r.infidelity_mean).collect();
    let f = fit_infidelity_power(&ts, &infid).expect("power fit");
    let ok = (0.85..=1.15).contains(&f.slope.abs()) && f.r2 >= 0.9;
    report(
        2,
        ok,
        &format!(
            "|m2|={:.4} (se {:.4}) in [0.85,1.15], R2={:.4} >= 0.9",
            f.slope.abs(),
            f.se_slope,
            f.r2
        ),
    );
}

#[test]
fn criterion_03_spectrum_balance_never_violated() {
    let violations: usize = sweeps_1e4()
        .iter()
        .map(|(_, run)| run.agg.spectrum_balance_violations)
        .sum();
    report(
        3,
        violations == 0,
        &format!("{violations} violations across 200 episodes x k in {{1,3,10}}, T=1e4"),
    );
}

#[test]
fn criterion_04_lambda_max_grows_quadratically_in_batches() {
    // slope vs t equals slope vs batch index: the two differ by a constant log offset
    let rows = second_half(&scaling_run().agg.rows);
    let ts: Vec<f64> = rows.iter().map(|r| r.t as f64).collect();
    let lmax: Vec<f64> = rows.iter().map(|r| r.lambda_max_mean).collect();
    let f = fit_loglog(&ts, &lmax).expect("loglog fit");
    report(
        4,
        f.slope >= 1.8,
        &format!("log-log slope {:.4} >= 1.8 (se {:.4}, R2={:.4})", f.slope, f.se_slope, f.r2),
    );
}

#[test]
fn criterion_05_baseline_regret_exponents_separate() {
    let exponent = |policy: PolicyKind| {
        let horizons = [1_000usize, 10_000, 100_000];
        let finals: Vec<f64> = horizons
            .iter()
            .map(|&t| {
                let mut cfg = ExperimentConfig::new(policy, t);
                cfg.runs = 20;
                cfg.seed = 7;
                run_experiment(&cfg).expect("scaling run").final_regret_q_mean
            })
            .collect();
        let xs: Vec<f64> = horizons.iter().map(|&t| t as f64).collect();
        fit_loglog(&xs, &finals).expect("exponent fit").slope
    };
    let fixed = exponent(PolicyKind::FixedBasis);
    let etc = exponent(PolicyKind::Etc);
    let linucb = exponent(PolicyKind::LinUcbVvn);
    let ok = (0.95..=1.05).contains(&fixed) && (0.4..=0.6).contains(&etc) && linucb <= 0.25;
    report(
        5,
        ok,
        &format!(
            "fixed-basis={fixed:.4} in [0.95,1.05], etc={etc:.4} in [0.4,0.6], \
             linucb-vvn={linucb:.4} <= 0.25 (T in {{1e3,1e4,1e5}}, 20 seeds, k=1)"
        ),
    );
}

#[test]
fn criterion_06_regret_stays_above_lower_bound() {
    let mut worst = f64::INFINITY;
    let mut checked = 0usize;
    for r in &scaling_run().agg.rows {
        if r.t >= 100 {
            worst = worst.min(r.regret_q_mean - lower_bound_curve(r.t, 2));
            checked += 1;
        }
    }
    report(
        6,
        worst >= 0.0,
        &format!("min margin over (d-1) ln(t/(d+1)) is {worst:.3} at {checked} checkpoints"),
    );
}

#[test]
fn criterion_07_disturbance_sandwich_on_every_checkpoint() {
    let mut extra = Vec::new();
    for policy in [PolicyKind::Etc, PolicyKind::FixedBasis, PolicyKind::Oracle] {
        let mut cfg = ExperimentConfig::new(policy, 10_000);
        cfg.runs = 20;
        cfg.seed = 77;
        extra.push(run_traces(cfg));
    }
    let all = scaling_run()
        .traces
        .iter()
        .chain(sweeps_1e4().iter().flat_map(|(_, run)| run.traces.iter()))
        .chain(extra.iter().flat_map(|run| run.traces.iter()));
    let tol = 1e-9;
    let mut rows = 0usize;
    let mut ok = true;
    for trace in all {
        for r in &trace.rows {
            rows += 1;
            ok &= r.disturbance <= 2.0 * r.regret_q + tol
                && r.regret_q <= r.disturbance_star + tol
                && r.disturbance_star <= 2.0 * r.regret_q + tol;
        }
    }
    report(
        7,
        ok,
        &format!("D <= 2 Rq and Rq <= D* <= 2 Rq at tol 1e-9 on {rows} run-checkpoints"),
    );
}

#[test]
fn criterion_08_mom_coverage_beats_theory_floor() {
    // fraction of batches (not checkpoints) whose confidence region holds the truth
    let master = 88u64;
    let dims = QuantumDims::new(2).unwrap();
    let mut covered = 0usize;
    let mut batches = 0usize;
    for run in 0..200u64 {
        let mut env_rng = substream(master, 2 * run);
        let theta = random_pure_state(&mut env_rng, 3);
        let mut env = PureStateEnv::new(theta, dims, env_rng).unwrap();
        let prior = random_pure_state(&mut substream(master, 2 * run + 1), 3);
        let mut pol = PolicyState::new(PolicyConfig::new(3, 10, 2.0), prior).unwrap();
        while pol.steps_done() + pol.config().batch_len() <= 10_000 {
            let snap = pol.run_batch(&mut env, &mut |_| {}).unwrap();
            covered += snap.covered as usize;
            batches += 1;
        }
    }
    let rate = covered as f64 / batches as f64;
    let floor = 1.0 - (-10.0f64 / 24.0).exp();
    report(
        8,
        rate >= floor,
        &format!("observed {rate:.4} over {batches} batches >= 1-exp(-k/24) = {floor:.4}"),
    );
}

#[test]
fn criterion_09_online_solves_match_fresh_normal_equations() {
    let mut rng = substream(9, 0);
    let mut worst = 0.0f64;
    for hist in 0..100usize {
        let k = 1 + hist % 4;
        let mut bank = EstimatorBank::new(3, k, 2.0).unwrap();
        let mut design = DesignMatrix::new(3, 2.0).unwrap();
        let mut b = vec![vec![0.0f64; 3]; k];
        for _ in 0..20 {
            let a = random_pure_state(&mut rng, 3);
            let w = rng.random_range(0.05..3.0);
            let rewards: Vec<f64> = (0..k).map(|_| rng.random_range(-1.0..1.0)).collect();
            bank.observe(a.as_slice(), &rewards, w).unwrap();
            design.rank_one_update(a.as_slice(), w).unwrap();
            for (bi, &ri) in b.iter_mut().zip(&rewards) {
                for (slot, &ai) in bi.iter_mut().zip(a.as_slice()) {
                    *slot += w * ri * ai;
                }
            }
        }
        let online = bank.estimates().unwrap();
        for (est, rhs) in online.iter().zip(&b) {
            let fresh = design.solve_fresh(rhs).unwrap();
            let num: f64 = est
                .iter()
                .zip(&fresh)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt();
            let den: f64 = fresh.iter().map(|x| x * x).sum::<f64>().sqrt();
            worst = worst.max(num / den.max(1e-12));
        }
    }
    report(
        9,
        worst <= 1e-8,
        &format!("worst relative error {worst:.2e} <= 1e-8 over 100 histories of 20 steps"),
    );
}

#[test]
fn criterion_10_confidence_constants_are_exact() {
    let b = beta(3, 2.0);
    let exact = 279.0 + 108.0 * 3.0f64.sqrt();
    let beta_err = (b - exact).abs();
    let lambda_err = (lambda0_min(3, b) - 2.0).abs();
    let ok = beta_err <= 1e-9 && lambda_err <= 1e-9;
    report(
        10,
        ok,
        &format!(
            "|beta(3,2) - (279+108 sqrt(3))| = {beta_err:.2e}, |lambda0_min(3,beta) - 2| = \
             {lambda_err:.2e}, both <= 1e-9"
        ),
    );
}
