//! Command-line driver for the sign-recovery experiments and the privacy audit.
//!
//! Exit codes: 0 success, 1 configuration error, 2 audit violation, 3 runtime failure.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dpvote::sim::{
    dp_audit_with, run_comparison, write_csv, ExperimentConfig, ExperimentOutput, Method, Preset, Problem, Scale, Sweep,
    SweepAxis,
};
use dpvote::{Error, NoiseScale, PrivacyBudget, RandomStream};

const EXIT_CONFIG: u8 = 1;
const EXIT_VIOLATION: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(name = "dpvote", version, about = "Private majority-vote sign recovery experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sparse mean sign recovery.
    MeanExp(ExpArgs),
    /// Sparse linear regression sign recovery.
    RegExp(ExpArgs),
    /// Monte-Carlo audit of the privacy guarantee on neighbouring vote matrices.
    DpAudit(AuditArgs),
}

#[derive(Args)]
struct ExpArgs {
    /// Start from a named configuration (fig2, fig3, fig4, fig5); other flags override it.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    p: Option<usize>,
    #[arg(long = "s-tilde")]
    s_tilde: Option<usize>,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long = "lambda-n")]
    lambda_n: Option<f64>,
    /// One or more of vote, dpvote, cwz (comma separated).
    #[arg(long, value_delimiter = ',')]
    method: Vec<String>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Toeplitz decay of the covariance.
    #[arg(long)]
    decay: Option<f64>,
    /// Sweep axis: machines or epsilon.
    #[arg(long)]
    sweep: Option<String>,
    /// Inclusive range a:b:step for the sweep axis.
    #[arg(long = "sweep-values")]
    sweep_values: Option<String>,
    /// CSV destination (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Use the published problem sizes (p = n = 500) instead of desk scale.
    #[arg(long = "full-scale")]
    full_scale: bool,
    /// Record wall-clock time per replication in the wall_ms column.
    #[arg(long = "record-timing")]
    record_timing: bool,
}

#[derive(Args)]
struct AuditArgs {
    #[arg(long, default_value_t = 4)]
    p: usize,
    #[arg(long, default_value_t = 12)]
    m: usize,
    #[arg(long = "s-tilde", default_value_t = 2)]
    s_tilde: usize,
    #[arg(long, default_value_t = 1.0)]
    eps: f64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, default_value_t = 200_000)]
    trials: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Multiply the mechanism's noise (values below 1 break the calibration on purpose).
    #[arg(long = "noise-multiplier", default_value_t = 1.0)]
    noise_multiplier: f64,
}

enum Failure {
    Config(String),
    Runtime(String),
    Violation,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(msg) => Failure::Config(msg),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn build_config(problem: Problem, args: &ExpArgs) -> Result<(ExperimentConfig, Vec<Method>), Failure> {
    let scale = if args.full_scale { Scale::Full } else { Scale::Desk };
    let mut cfg = match &args.preset {
        Some(name) => {
            let preset: Preset = name.parse()?;
            let cfg = preset.config(scale);
            if cfg.problem != problem {
                return Err(Failure::Config(format!("preset {name} is a {} experiment", cfg.problem)));
            }
            cfg
        }
        None => ExperimentConfig::new(problem, scale),
    };
    if let Some(v) = args.m {
        cfg.m = v;
    }
    if let Some(v) = args.n {
        cfg.n = v;
    }
    if let Some(v) = args.p {
        cfg.p = v;
    }
    if let Some(v) = args.s_tilde {
        cfg.s_tilde = v;
    }
    if let Some(v) = args.eps {
        cfg.epsilon = v;
    }
    if let Some(v) = args.delta {
        cfg.delta = v;
    }
    if let Some(v) = args.lambda_n {
        cfg.lambda_n = v;
    }
    if let Some(v) = args.reps {
        cfg.replications = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(v) = args.decay {
        cfg.decay = v;
    }
    cfg.record_timing = args.record_timing;
    match (&args.sweep, &args.sweep_values) {
        (Some(axis), Some(values)) => {
            let axis: SweepAxis = axis.parse()?;
            cfg.sweep = Some(Sweep::parse_range(axis, values)?);
        }
        (None, None) => {}
        (Some(_), None) => return Err(Failure::Config("--sweep needs --sweep-values".into())),
        (None, Some(values)) => {
            // keep the preset's axis if there is one
            let axis = cfg.sweep.as_ref().map(|s| s.axis).ok_or_else(|| Failure::Config("--sweep-values needs --sweep".into()))?;
            cfg.sweep = Some(Sweep::parse_range(axis, values)?);
        }
    }
    let methods = if args.method.is_empty() {
        vec![Method::DpVote]
    } else {
        args.method.iter().map(|s| s.trim().parse()).collect::<Result<Vec<Method>, _>>()?
    };
    cfg.method = methods[0];
    cfg.validate()?;
    Ok((cfg, methods))
}

fn summarize(output: &ExperimentOutput) {
    struct Group {
        point: usize,
        method: Method,
        m: usize,
        epsilon: f64,
        fdr: f64,
        power: f64,
        count: f64,
    }
    let mut groups: Vec<Group> = Vec::new();
    for r in &output.records {
        match groups.iter_mut().find(|g| g.point == r.point && g.method == r.method) {
            Some(g) => {
                g.fdr += r.fdr;
                g.power += r.power;
                g.count += 1.0;
            }
            None => groups.push(Group {
                point: r.point,
                method: r.method,
                m: r.m,
                epsilon: r.epsilon,
                fdr: r.fdr,
                power: r.power,
                count: 1.0,
            }),
        }
    }
    eprintln!("{:>6} {:>8} {:>8} {:>8} {:>8}", "m", "epsilon", "method", "fdr", "power");
    for g in groups {
        eprintln!("{:>6} {:>8} {:>8} {:>8.4} {:>8.4}", g.m, g.epsilon, g.method.as_str(), g.fdr / g.count, g.power / g.count);
    }
}

fn run_experiment_command(problem: Problem, args: &ExpArgs) -> Result<(), Failure> {
    let (cfg, methods) = build_config(problem, args)?;
    let output = run_comparison(&cfg, &methods)?;
    let sink: Box<dyn Write> = match &args.out {
        Some(path) => Box::new(BufWriter::new(File::create(path).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?)),
        None => Box::new(io::stdout().lock()),
    };
    write_csv(&output.records, sink).map_err(|e| Failure::Runtime(e.to_string()))?;
    summarize(&output);
    if !output.failures.is_empty() {
        for f in &output.failures {
            let method = f.method.map_or("-", |m| m.as_str());
            eprintln!("replication failed: point {} rep {} method {}: {}", f.point, f.rep, method, f.message);
        }
        return Err(Failure::Runtime(format!("{} replication(s) failed", output.failures.len())));
    }
    Ok(())
}

fn run_audit_command(args: &AuditArgs) -> Result<(), Failure> {
    let budget = PrivacyBudget::new(args.eps, args.delta, args.s_tilde)?;
    let noise = NoiseScale(args.noise_multiplier);
    let report = dp_audit_with(args.p, args.m, &budget, args.trials, noise, &RandomStream::new(args.seed))?;
    println!("pair,checks,max_margin");
    for pair in &report.pairs {
        println!("{},{},{}", pair.name, pair.checks.len(), pair.max_margin);
    }
    if let Some((pair, check)) = report.worst() {
        let pattern: Vec<String> = check.pattern.iter().map(|s| s.to_string()).collect();
        eprintln!(
            "worst pattern on {}: [{}] p={} p'={} margin={}",
            pair.name,
            pattern.join(" "),
            check.p_hat,
            check.p_neighbor_hat,
            check.margin
        );
    }
    if report.violated() {
        eprintln!("privacy bound violated beyond Monte-Carlo slack");
        return Err(Failure::Violation);
    }
    eprintln!("no violation: max margin {}", report.max_margin);
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_CONFIG),
            };
        }
    };
    let result = match &cli.command {
        Command::MeanExp(args) => run_experiment_command(Problem::Mean, args),
        Command::RegExp(args) => run_experiment_command(Problem::Regression, args),
        Command::DpAudit(args) => run_audit_command(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("configuration error: {msg}");
            ExitCode::from(EXIT_CONFIG)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_RUNTIME)
        }
        Err(Failure::Violation) => ExitCode::from(EXIT_VIOLATION),
    }
}
