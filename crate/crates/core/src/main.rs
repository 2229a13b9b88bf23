use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use lrcs::bandit::{run_calibration, sweep, CalibrationResult, RunResult};
use lrcs::config::ExperimentConfig;
use lrcs::output::{write_calibration, write_runs};
use lrcs::selftest::{self, Fault};

const EXIT_CONFIG: u8 = 2;
const EXIT_RUN: u8 = 3;

#[derive(Parser)]
#[command(
    name = "lrcs",
    version,
    about = "Likelihood-ratio confidence sequences and UCB experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunArgs {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output CSV; overrides the config's `out`, defaults to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the UCB sweep and write one CSV row per (seed, method, round).
    Run {
        #[command(flatten)]
        args: RunArgs,
        /// Add the bound_t4 and bound_t6 columns.
        #[arg(long)]
        report_bounds: bool,
    },
    /// Estimate coverage per (method, alpha, scenario).
    Calibrate {
        #[command(flatten)]
        args: RunArgs,
    },
    /// Run the fast invariant suite.
    Selftest {
        /// Negative control: swap in a wrong convention.
        #[arg(long, value_enum)]
        inject_fault: Option<FaultArg>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum FaultArg {
    /// Gaussian sufficient statistic y/σ instead of y/σ².
    WrongSufficientStatistic,
}

enum Failure {
    Config(String),
    Run(String),
}

fn load(args: &RunArgs) -> Result<ExperimentConfig, Failure> {
    if !args.config.exists() {
        return Err(Failure::Config(format!(
            "config file {} does not exist",
            args.config.display()
        )));
    }
    let mut cfg =
        ExperimentConfig::load(&args.config).map_err(|e| Failure::Config(e.to_string()))?;
    if let Ok(seed) = std::env::var("LRCS_SEED") {
        cfg.base_seed = seed.trim().parse().map_err(|_| {
            Failure::Config(format!(
                "LRCS_SEED must be an unsigned integer, got `{seed}`"
            ))
        })?;
    }
    if let Some(out) = &args.out {
        cfg.out = Some(out.clone());
    }
    if let Some(jobs) = args.jobs {
        if jobs == 0 {
            return Err(Failure::Config("--jobs must be at least 1".into()));
        }
        // Fails only if a global pool already exists, which cannot happen here.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global();
    }
    Ok(cfg)
}

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>, Failure> {
    match path {
        Some(p) => {
            let f = File::create(p)
                .map_err(|e| Failure::Run(format!("cannot create {}: {e}", p.display())))?;
            Ok(Box::new(BufWriter::new(f)))
        }
        None => Ok(Box::new(BufWriter::new(io::stdout().lock()))),
    }
}

fn cmd_run(args: &RunArgs, report_bounds: bool) -> Result<(), Failure> {
    let mut cfg = load(args)?;
    cfg.report_bounds |= report_bounds;
    let (env, info) = cfg
        .environment()
        .map_err(|e| Failure::Config(e.to_string()))?;
    eprintln!(
        "# environment {:?}: {} actions, rank {}, feature scale {:.6e}, |theta*| {:.6}, residual {:.3e}",
        cfg.environment.benchmark,
        env.actions.len(),
        info.rank,
        info.feature_scale,
        info.theta_norm,
        info.residual
    );
    let outcomes = sweep(
        &env,
        &cfg.methods,
        &cfg.method_params(),
        cfg.horizon,
        cfg.base_seed,
        cfg.seeds,
    );
    let mut ok: Vec<&RunResult> = Vec::new();
    let mut failures = 0;
    for o in &outcomes {
        match &o.result {
            Ok(r) => ok.push(r),
            Err(e) => {
                failures += 1;
                eprintln!("run failed: seed {} method {}: {e}", o.seed, o.method);
            }
        }
    }
    let mut out = open_output(cfg.out.as_deref())?;
    write_runs(&mut out, &ok, cfg.report_bounds).map_err(|e| Failure::Run(e.to_string()))?;
    out.flush().map_err(|e| Failure::Run(e.to_string()))?;
    if failures > 0 {
        return Err(Failure::Run(format!(
            "{failures} of {} runs failed",
            outcomes.len()
        )));
    }
    Ok(())
}

fn cmd_calibrate(args: &RunArgs) -> Result<(), Failure> {
    let cfg = load(args)?;
    if cfg.calibration.runs == 0 {
        return Err(Failure::Config(
            "calibration.runs must be at least 1".into(),
        ));
    }
    let (env, _) = cfg
        .environment()
        .map_err(|e| Failure::Config(e.to_string()))?;
    if cfg.calibration.theta_norm > cfg.bound {
        return Err(Failure::Config(format!(
            "calibration.theta_norm {} exceeds B = {}",
            cfg.calibration.theta_norm, cfg.bound
        )));
    }
    let params = cfg.method_params();
    let mut rows: Vec<CalibrationResult> = Vec::new();
    let mut failures = 0;
    for &method in &cfg.methods {
        for alpha in cfg.calibration_alphas() {
            for &scenario in &cfg.calibration.scenarios {
                match run_calibration(
                    &env,
                    method,
                    &params,
                    alpha,
                    scenario,
                    cfg.calibration.theta_norm,
                    cfg.calibration.runs,
                    cfg.calibration.horizon,
                    cfg.base_seed,
                ) {
                    Ok(r) => rows.push(r),
                    Err(e) => {
                        failures += 1;
                        eprintln!("calibration failed: {method} alpha {alpha} {scenario}: {e}");
                    }
                }
            }
        }
    }
    let mut out = open_output(cfg.out.as_deref())?;
    write_calibration(&mut out, &rows).map_err(|e| Failure::Run(e.to_string()))?;
    out.flush().map_err(|e| Failure::Run(e.to_string()))?;
    if failures > 0 {
        return Err(Failure::Run(format!("{failures} calibration cells failed")));
    }
    Ok(())
}

fn cmd_selftest(fault: Option<FaultArg>) -> ExitCode {
    let fault = fault.map(|f| match f {
        FaultArg::WrongSufficientStatistic => Fault::GaussianStatisticOverSigma,
    });
    let results = selftest::run(fault);
    let mut failed = Vec::new();
    for r in &results {
        println!(
            "{} {}: {}",
            if r.passed { "PASS" } else { "FAIL" },
            r.name,
            r.detail
        );
        if !r.passed {
            failed.push(r.name);
        }
    }
    if failed.is_empty() {
        println!("all {} properties passed", results.len());
        ExitCode::SUCCESS
    } else {
        eprintln!("failed properties: {}", failed.join(", "));
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run {
            args,
            report_bounds,
        } => cmd_run(args, *report_bounds),
        Command::Calibrate { args } => cmd_calibrate(args),
        Command::Selftest { inject_fault } => return cmd_selftest(*inject_fault),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Run(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(EXIT_RUN)
        }
    }
}
