//! `gradheat` command-line front end.
//!
//! Exit status: 0 when every hard invariant holds, 1 when one fails or a
//! check errors at run time, 2 for configuration and usage errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gradheat::doubling::{find_doubling_point, DoublingInstance};
use gradheat::experiment::{run_checks, Check, ExperimentConfig, RunOutcome};
use gradheat::params::{
    bidaut_veron_exponent, m0_threshold, parse_rational, ratio_to_f64, sobolev_exponent, ProblemParams,
};
use gradheat::report::{num, Report, Table};
use gradheat::Error;

/// Environment variable naming the default output directory.
const OUT_ENV: &str = "GRADHEAT_OUT";

#[derive(Parser, Debug)]
#[command(name = "gradheat", version, about = "Numerical checks for u_t - Δu = u^p + M|∇u|^q")]
struct Cli {
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (default: config `out`, then $GRADHEAT_OUT, then ./gradheat-out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Position of q relative to 2p/(p+1).
    Classify {
        p: String,
        q: String,
    },
    /// p_S and p_B for dimension N, plus M₀ when p is given.
    Exponents {
        n: usize,
        #[arg(long)]
        p: Option<String>,
    },
    /// Solve and export the trajectory.
    Solve,
    VerifyBernstein,
    VerifyIntegral,
    VerifyEstimates,
    /// Doubling suite from the config, or a single fixture instance.
    DoublingCheck {
        #[arg(long)]
        fixture: Option<PathBuf>,
    },
    RescaleCheck,
    /// Configured checks over every sweep point.
    Sweep,
    /// Configured checks (alias of `sweep`).
    Run,
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) => Failure::Usage(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

/// Bad values given directly on the command line.
fn usage(e: Error) -> Failure {
    Failure::Usage(e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, Failure> {
    let path = cli.config.as_ref().ok_or_else(|| Failure::Usage("this command needs --config PATH".into()))?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let out = output_dir(cli, Some(&cfg));
    cfg.out = Some(out);
    Ok(cfg)
}

fn output_dir(cli: &Cli, cfg: Option<&ExperimentConfig>) -> PathBuf {
    cli.out
        .clone()
        .or_else(|| cfg.and_then(|c| c.out.clone()))
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("gradheat-out"))
}

fn execute(cli: &Cli) -> Result<bool, Failure> {
    let jobs = cli.jobs.max(1);
    match &cli.command {
        Command::Classify { p, q } => {
            let p = parse_rational(p).map_err(usage)?;
            let q = parse_rational(q).map_err(usage)?;
            let params = ProblemParams::new(1, p, q, 1.0).map_err(usage)?;
            println!("{}", params.regime());
            Ok(true)
        }
        Command::Exponents { n, p } => {
            println!("p_S={}", sobolev_exponent(*n));
            println!("p_B={}", bidaut_veron_exponent(*n));
            if let Some(p) = p {
                let p = ratio_to_f64(parse_rational(p).map_err(usage)?);
                if p.is_nan() || p <= 1.0 || *n == 0 {
                    return Err(Failure::Usage(format!("M0 needs p > 1 and N ≥ 1, got p = {p}, N = {n}")));
                }
                println!("M0={}", num(m0_threshold(*n, p)));
            }
            Ok(true)
        }
        Command::Solve => single(cli, Check::Solve, jobs),
        Command::VerifyBernstein => single(cli, Check::Bernstein, jobs),
        Command::VerifyIntegral => single(cli, Check::Integral, jobs),
        Command::VerifyEstimates => single(cli, Check::Estimates, jobs),
        Command::RescaleCheck => single(cli, Check::Rescaling, jobs),
        Command::DoublingCheck { fixture: Some(path) } => doubling_fixture(cli, path),
        Command::DoublingCheck { fixture: None } => single(cli, Check::Doubling, jobs),
        Command::Sweep | Command::Run => {
            let cfg = load_config(cli)?;
            let out = run_checks(&cfg, &cfg.checks, jobs)?;
            finish(&out, cfg.out.as_deref().expect("output set"))
        }
    }
}

fn single(cli: &Cli, check: Check, jobs: usize) -> Result<bool, Failure> {
    let mut cfg = load_config(cli)?;
    if check == Check::Solve {
        cfg.grid.export_snapshots = true;
    }
    let out = run_checks(&cfg, &[check], jobs)?;
    finish(&out, cfg.out.as_deref().expect("output set"))
}

fn finish(out: &RunOutcome, dir: &Path) -> Result<bool, Failure> {
    out.write(dir)?;
    for p in &out.points {
        for r in &p.reports {
            print_line(&p.label, r);
        }
    }
    Ok(out.passed())
}

fn print_line(label: &str, r: &Report) {
    let status = if r.passed() { "PASS" } else { "FAIL" };
    match r.get("error") {
        Some(e) => println!("{label} {} {status} ({e})", r.check),
        None if r.passed() => println!("{label} {} {status}", r.check),
        None => println!("{label} {} {status} [{}]", r.check, r.failures.join(", ")),
    }
}

fn doubling_fixture(cli: &Cli, path: &Path) -> Result<bool, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let inst = DoublingInstance::from_toml(&text)?;
    let mut report = Report::new("doubling_fixture");
    let mut table = Table::new("starts", &["start", "result", "hops", "hop_bound", "m_dist_over_2k", "violations"]);
    let mut ok = true;
    for s in (0..inst.points.len()).filter(|&i| inst.in_d(i)) {
        match find_doubling_point(&inst, s) {
            Ok(res) => {
                let c = &res.certificate;
                ok &= c.holds() && res.hops <= res.hop_bound;
                let ratio = match c.m_dist {
                    gradheat::doubling::Distance::Finite(v) => num(v / (2.0 * inst.k)),
                    gradheat::doubling::Distance::Infinite => "inf".into(),
                };
                table.push(vec![
                    s.to_string(),
                    res.index.to_string(),
                    res.hops.to_string(),
                    res.hop_bound.to_string(),
                    ratio,
                    c.violations.to_string(),
                ]);
            }
            Err(Error::HypothesisFails { .. }) => {
                table.push(vec![s.to_string(), "hypothesis_fails".into(), "".into(), "".into(), "".into(), "".into()]);
            }
            Err(e) => return Err(e.into()),
        }
    }
    report.field("points", inst.points.len()).field("k", num(inst.k)).field("starts", table.rows.len());
    report.invariant("certified", ok);
    report.tables.push(table);
    let dir = output_dir(cli, None);
    report.write(&dir)?;
    print!("{}", report.summary());
    Ok(report.passed())
}
