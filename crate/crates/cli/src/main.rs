//! Command-line driver: run Monte Carlo experiments and fit scaling models to the
//! traces they write.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use psmaqb_core::fit::{fit_infidelity_power, fit_regret_log2, second_half, FitResult};
use psmaqb_core::harness::{
    run_experiment, write_outputs, EnvInit, ExperimentConfig, NoiseKind, PolicyKind,
};
use psmaqb_core::policy::k_from_horizon;

#[derive(Parser)]
#[command(name = "psmaqb", version, about = "Low-disturbance online learning of pure states")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run an experiment and write trace.csv and summary.json
    Run(RunArgs),
    /// Fit a scaling model to a written trace
    Fit(FitArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    LinucbVvn,
    Etc,
    FixedBasis,
    Oracle,
}

#[derive(Clone, Copy, ValueEnum)]
enum NoiseArg {
    Born,
    Gaussian,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    /// regret ~ slope ln^2 t + intercept
    Log2,
    /// infidelity ~ (ln t / t)^slope
    Power,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_enum, default_value_t = PolicyArg::LinucbVvn)]
    policy: PolicyArg,
    /// Measurement horizon
    #[arg(long = "T", default_value_t = 10_000)]
    horizon: usize,
    /// Estimator copies; `theory` derives the count from the horizon
    #[arg(long, default_value = "1")]
    k: String,
    #[arg(long, default_value_t = 1)]
    runs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 2.0)]
    lambda0: f64,
    /// Linear model dimension; born noise needs d^2 - 1 (3 = qubit)
    #[arg(long, default_value_t = 3)]
    dim: usize,
    #[arg(long, value_enum, default_value_t = NoiseArg::Born)]
    noise: NoiseArg,
    /// `random`, or `fixed:<x,y,...>` with `dim` components
    #[arg(long, default_value = "random")]
    env: String,
    /// Exploration fraction for etc; defaults to 1/sqrt(T)
    #[arg(long)]
    alpha: Option<f64>,
    /// Output directory for trace.csv and summary.json
    #[arg(long)]
    out: PathBuf,
    /// Omit wall-clock fields so identical runs write identical bytes
    #[arg(long)]
    deterministic: bool,
}

#[derive(Args)]
struct FitArgs {
    /// Path to a trace.csv written by `run`
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, value_enum)]
    model: ModelArg,
    /// Tail fraction of checkpoints to fit; 0.5 skips the burn-in, 1 uses everything
    #[arg(long, default_value_t = 0.5)]
    window: f64,
}

fn main() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::Run(args) => run(args),
        Cmd::Fit(args) => fit(args),
    }
}

fn run(args: RunArgs) -> Result<()> {
    let mut cfg = ExperimentConfig::new(
        match args.policy {
            PolicyArg::LinucbVvn => PolicyKind::LinUcbVvn,
            PolicyArg::Etc => PolicyKind::Etc,
            PolicyArg::FixedBasis => PolicyKind::FixedBasis,
            PolicyArg::Oracle => PolicyKind::Oracle,
        },
        args.horizon,
    );
    cfg.runs = args.runs;
    cfg.seed = args.seed;
    cfg.lambda0 = args.lambda0;
    cfg.dim = args.dim;
    cfg.noise = match args.noise {
        NoiseArg::Born => NoiseKind::Born,
        NoiseArg::Gaussian => NoiseKind::Gaussian,
    };
    cfg.alpha = args.alpha;
    cfg.k = match args.k.as_str() {
        "theory" => k_from_horizon(args.horizon, cfg.n_dim()),
        other => other
            .parse()
            .with_context(|| format!("--k expects a positive integer or `theory`, got `{other}`"))?,
    };
    cfg.env_init = parse_env(&args.env, cfg.n_dim())?;

    let result = run_experiment(&cfg)?;
    // standard scaling fits over the back half; skipped when the window is too
    // short or degenerate (oracle traces are identically zero)
    let ts: Vec<usize> = result.rows.iter().map(|r| r.t).collect();
    let regret: Vec<f64> = result.rows.iter().map(|r| r.regret_q_mean).collect();
    let infid: Vec<f64> = result.rows.iter().map(|r| r.infidelity_mean).collect();
    let fits: Vec<FitResult> = [
        fit_regret_log2(second_half(&ts), second_half(&regret)),
        fit_infidelity_power(second_half(&ts), second_half(&infid)),
    ]
    .into_iter()
    .flatten()
    .collect();
    write_outputs(&cfg, &result, &fits, &args.out, args.deterministic)?;
    println!(
        "wrote {} ({} checkpoints, {} runs, k={})",
        args.out.join("trace.csv").display(),
        result.rows.len(),
        result.runs,
        cfg.k
    );
    if result.spectrum_balance_violations > 0 {
        println!(
            "warning: {} spectrum balance violations",
            result.spectrum_balance_violations
        );
    }
    Ok(())
}

fn parse_env(spec: &str, n_dim: usize) -> Result<EnvInit> {
    if spec == "random" {
        return Ok(EnvInit::Random);
    }
    let Some(body) = spec.strip_prefix("fixed:") else {
        bail!("--env expects `random` or `fixed:<x,y,...>`, got `{spec}`");
    };
    let v: Vec<f64> = body
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .with_context(|| format!("bad fixed state `{body}`"))?;
    if v.len() != n_dim {
        bail!("fixed state needs {n_dim} components, got {}", v.len());
    }
    Ok(EnvInit::Fixed(v))
}

fn fit(args: FitArgs) -> Result<()> {
    if !args.window.is_finite() || args.window <= 0.0 || args.window > 1.0 {
        bail!("--window expects a fraction in (0, 1], got {}", args.window);
    }
    let (ts, regret, infid) = read_trace(&args.input)?;
    let total = ts.len();
    let tail = |n: usize| n - ((n as f64 * args.window).ceil() as usize).min(n);
    let ts_w = &ts[tail(ts.len())..];
    let result = match args.model {
        ModelArg::Log2 => fit_regret_log2(ts_w, &regret[tail(regret.len())..])?,
        ModelArg::Power => fit_infidelity_power(ts_w, &infid[tail(infid.len())..])?,
    };
    print_fit(&result, args.model, ts_w, total);
    Ok(())
}

fn print_fit(f: &FitResult, model: ModelArg, window: &[usize], total: usize) {
    match model {
        ModelArg::Log2 => println!("model: regret ~ slope * ln(t)^2 + intercept"),
        ModelArg::Power => println!("model: infidelity ~ exp(intercept) * (ln(t)/t)^slope"),
    }
    println!(
        "window: {} checkpoints of {} (t in [{}, {}])",
        f.points,
        total,
        window.first().unwrap(),
        window.last().unwrap()
    );
    println!("slope: {:.6} (se {:.6})", f.slope, f.se_slope);
    println!("intercept: {:.6} (se {:.6})", f.intercept, f.se_intercept);
    println!("r2: {:.6}", f.r2);
}

/// Pulls t, regret_q_mean, infidelity_mean out of a trace written by `run`.
fn read_trace(path: &Path) -> Result<(Vec<usize>, Vec<f64>, Vec<f64>)> {
    let body = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    let mut lines = body.lines();
    let header = lines.next().context("trace is empty")?;
    let cols: Vec<&str> = header.split(',').collect();
    let find = |name: &str| {
        cols.iter()
            .position(|c| *c == name)
            .with_context(|| format!("trace has no `{name}` column"))
    };
    let (ti, ri, fi) = (find("t")?, find("regret_q_mean")?, find("infidelity_mean")?);
    let mut ts = Vec::new();
    let mut regret = Vec::new();
    let mut infid = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let get = |i: usize| {
            fields
                .get(i)
                .with_context(|| format!("line {}: missing column {i}", lineno + 2))
        };
        ts.push(get(ti)?.parse::<usize>()?);
        regret.push(get(ri)?.parse::<f64>()?);
        infid.push(get(fi)?.parse::<f64>()?);
    }
    Ok((ts, regret, infid))
}
