use anyhow::{Context, Result};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use dyexp::runner::{
    parse_adversary, parse_eta, parse_learner, parse_sweep_param, run_all, sweep, trace_csv,
    write_csv, Row, RunSpec,
};
use dyexp::suites::{run_suite, SuiteConfig};
use std::io::Write;
use std::path::PathBuf;

/// Simulator for online learning with dying experts.
#[derive(Parser)]
#[command(name = "dyexp", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one experiment and emit one CSV row per seed
    Run(RunArgs),
    /// Run a verification suite against brute force
    Verify(VerifyArgs),
    /// Run an experiment across several values of one parameter
    Sweep(SweepArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Learner: hedge, resetting, hpu, hpk, ftl, adahedge, flipflop, quantile
    #[arg(long)]
    learner: String,
    /// Adversary: bernoulli, unknown-lb, known-lb, gap, file
    #[arg(long)]
    adversary: String,
    /// Number of experts
    #[arg(long, default_value_t = 4)]
    k: usize,
    /// Horizon in rounds
    #[arg(long, default_value_t = 100)]
    t: usize,
    /// Number of deaths, for the adversaries that take one
    #[arg(long, default_value_t = 0)]
    m: usize,
    /// Number of replications; replication i uses seed (base seed) + i
    #[arg(long, default_value_t = 1)]
    seeds: usize,
    /// Base seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Learning rate: default, fixed:<x>, anytime, adahedge
    #[arg(long, default_value = "default")]
    eta: String,
    /// Loss probability for the bernoulli adversary
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    /// Comma-separated per-expert means for the gap adversary
    #[arg(long, value_delimiter = ',')]
    means: Option<Vec<f64>>,
    /// Instance file for --adversary file
    #[arg(long)]
    file: Option<PathBuf>,
    /// Output CSV path; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory receiving instance-<seed>.txt for every replication
    #[arg(long)]
    dump_instance: Option<PathBuf>,
    /// Write per-round adaptive diagnostics for the base seed to this CSV
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Suite: thm1, thm7, thm8, dummy, ftl-lstar
    #[arg(long)]
    suite: String,
    /// Largest expert count exercised
    #[arg(long, default_value_t = 6)]
    k_max: usize,
    /// Randomized trials per configuration
    #[arg(long, default_value_t = 50)]
    trials: usize,
    /// Certification tolerance on per-round distributions
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    /// Base seed for trial generation
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Swept parameter: t, m or k
    #[arg(long)]
    param: String,
    /// Comma-separated parameter values
    #[arg(long, value_delimiter = ',', required = true)]
    values: Vec<usize>,
}

fn main() {
    std::process::exit(real_main());
}

fn real_main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    if let Ok(v) = std::env::var("DYEXP_THREADS") {
        match v.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
            _ => eprintln!("ignoring invalid DYEXP_THREADS value '{v}'"),
        }
    }
    let outcome = match cli.cmd {
        Cmd::Run(args) => cmd_run(args),
        Cmd::Verify(args) => cmd_verify(args),
        Cmd::Sweep(args) => cmd_sweep(args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

fn to_spec(args: &RunArgs) -> Result<RunSpec> {
    Ok(RunSpec {
        learner: parse_learner(&args.learner)?,
        eta: parse_eta(&args.eta)?,
        adversary: parse_adversary(&args.adversary, args.file.clone())?,
        k: args.k,
        t: args.t,
        m: args.m,
        seeds: args.seeds,
        base_seed: args.seed,
        p: args.p,
        means: args.means.clone(),
        dump_dir: args.dump_instance.clone(),
    })
}

fn emit(out: &Option<PathBuf>, rows: &[Row], with_param: bool) -> Result<()> {
    match out {
        Some(path) => {
            let mut file = std::fs::File::create(path)
                .with_context(|| format!("creating {}", path.display()))?;
            write_csv(&mut file, rows, with_param)?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write_csv(&mut lock, rows, with_param)?;
            lock.flush()?;
        }
    }
    Ok(())
}

fn cmd_run(args: RunArgs) -> Result<i32> {
    let spec = to_spec(&args)?;
    let rows = run_all(&spec)?;
    emit(&args.out, &rows, false)?;
    if let Some(path) = &args.trace {
        match trace_csv(&spec)? {
            Some(text) => std::fs::write(path, text)
                .with_context(|| format!("writing {}", path.display()))?,
            None => eprintln!("note: this learner exposes no diagnostics; no trace written"),
        }
    }
    Ok(0)
}

fn cmd_sweep(args: SweepArgs) -> Result<i32> {
    let spec = to_spec(&args.run)?;
    let param = parse_sweep_param(&args.param)?;
    let rows = sweep(&spec, param, &args.values)?;
    emit(&args.run.out, &rows, true)?;
    Ok(0)
}

fn cmd_verify(args: VerifyArgs) -> Result<i32> {
    let cfg = SuiteConfig {
        k_max: args.k_max,
        trials: args.trials,
        tol: args.tol,
        seed: args.seed,
    };
    let report = run_suite(&args.suite, &cfg)?;
    println!(
        "suite {} (k_max {}, trials {}, tol {:.1e})",
        report.name, cfg.k_max, cfg.trials, cfg.tol
    );
    for line in &report.lines {
        println!("  {line}");
    }
    if report.pass {
        println!("PASS");
        Ok(0)
    } else {
        println!("FAIL");
        Ok(2)
    }
}
