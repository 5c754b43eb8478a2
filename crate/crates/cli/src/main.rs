use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Parser, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use painleve_lax::compat::random_evaluation_point;
use painleve_lax::config::Config;
use painleve_lax::dynamics::PainleveState;
use painleve_lax::orbit::{elliptic_orbit, qp6_orbit};
use painleve_lax::qp6::QP6State;
use painleve_lax::verify::{aggregate, Check, Options, Registry, Trial};
use painleve_lax::Error;

const REPORT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    GenConfig,
    VerifyCompat,
    VerifyLemmas,
    Flow,
    Qp6Verify,
    P6Verify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum System {
    Elliptic,
    Qp6,
}

/// Numerical verification of a geometric Lax pair for the elliptic
/// difference Painleve equation.
#[derive(Debug, Parser)]
#[command(name = "painleve-lax", version)]
struct Cli {
    mode: Mode,
    /// Configuration JSON; verify and flow modes generate one from the seed
    /// when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    trials: u64,
    /// Replaces every default threshold.
    #[arg(long, value_parser = positive)]
    tol: Option<f64>,
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    steps: u64,
    /// Samples per identity in verify-lemmas.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    samples: u64,
    /// Output path; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Compare against an unrelated point; verification must then fail.
    #[arg(long)]
    negative_control: bool,
    #[arg(long, value_enum, default_value_t = System::Elliptic)]
    system: System,
    /// Start the elliptic orbit on the curve C0 at the configured `z`.
    #[arg(long)]
    on_curve: bool,
}

fn positive(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err("must be a positive number".into())
    }
}

#[derive(Debug, Serialize)]
struct Report<'a> {
    version: u32,
    mode: &'a str,
    seed: u64,
    trials: u64,
    config: &'a Config,
    checks: Vec<Check>,
    pass: bool,
    wall_ms: u128,
}

/// Failure classes mapped to exit codes.
enum Failure {
    Verification,
    Input(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Input(e)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Input(e.into())
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification) => ExitCode::from(1),
        Err(Failure::Input(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli) -> Result<(), Failure> {
    match cli.mode {
        Mode::GenConfig => {
            let cfg = Config::generate(cli.seed)?;
            emit(cli.out.as_deref(), &cfg.to_json())?;
            Ok(())
        }
        Mode::Flow => flow(cli),
        Mode::VerifyCompat | Mode::VerifyLemmas | Mode::Qp6Verify | Mode::P6Verify => verify(cli),
    }
}

fn load_config(cli: &Cli) -> anyhow::Result<Config> {
    match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            Config::from_json(&text).with_context(|| format!("loading {}", path.display()))
        }
        None => Ok(Config::generate(cli.seed)?),
    }
}

fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::GenConfig => "gen-config",
        Mode::VerifyCompat => "verify-compat",
        Mode::VerifyLemmas => "verify-lemmas",
        Mode::Flow => "flow",
        Mode::Qp6Verify => "qp6-verify",
        Mode::P6Verify => "p6-verify",
    }
}

fn verify(cli: &Cli) -> Result<(), Failure> {
    let start = Instant::now();
    let cfg = load_config(cli)?;
    let registry = Registry::default();
    let name = mode_name(cli.mode);
    let verifier = registry
        .get(name)
        .ok_or_else(|| anyhow::anyhow!("no verifier registered as {name}"))?;
    let opts = Options {
        tol: cli.tol,
        negative_control: cli.negative_control,
        samples: cli.samples as usize,
    };
    let results: Vec<_> = (0..cli.trials)
        .into_par_iter()
        .map(|k| {
            let mut trial = Trial::new(&cfg, cli.seed, k).map_err(|e| (k, e))?;
            verifier.run(&mut trial, &opts).map_err(|e| (k, e))
        })
        .collect::<Vec<Result<Vec<Check>, (u64, Error)>>>()
        .into_iter()
        .collect::<Result<_, _>>()
        .map_err(|(k, e)| anyhow::anyhow!("trial {k}: {e}"))?;
    let checks = aggregate(&results);
    let pass = checks.iter().all(|c| c.pass);
    for c in &checks {
        log::info!(
            "{} {:e} < {:e}: {}",
            c.name,
            c.residual,
            c.threshold,
            c.pass
        );
    }
    let report = Report {
        version: REPORT_VERSION,
        mode: name,
        seed: cli.seed,
        trials: cli.trials,
        config: &cfg,
        checks,
        pass,
        wall_ms: start.elapsed().as_millis(),
    };
    let text = serde_json::to_string_pretty(&report).context("serializing report")?;
    emit(cli.out.as_deref(), &text)?;
    if pass {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}

fn flow(cli: &Cli) -> Result<(), Failure> {
    let cfg = load_config(cli)?;
    let steps = cli.steps as usize;
    let orbit = match cli.system {
        System::Elliptic => {
            let data = cfg.elliptic.data()?;
            let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
            let p = if cli.on_curve {
                data.point(data.z)?
            } else {
                random_evaluation_point(&data, &mut rng)?
            };
            elliptic_orbit(PainleveState { data, p }, steps, &mut rng)
        }
        System::Qp6 => {
            let s = match &cfg.qp6 {
                Some(s) => s.clone(),
                None => QP6State::random(&mut ChaCha8Rng::seed_from_u64(cli.seed))?,
            };
            qp6_orbit(s, steps)
        }
    };
    emit(cli.out.as_deref(), &orbit.to_csv())?;
    match orbit.failure {
        None => Ok(()),
        Some((k, e)) => Err(Failure::Input(anyhow::anyhow!(
            "orbit stopped at step {k}: {e}"
        ))),
    }
}

/// Writes through a temporary file in the target directory and renames it
/// into place.
fn emit(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    let Some(path) = out else {
        let mut stdout = std::io::stdout().lock();
        stdout.write_all(text.as_bytes())?;
        if !text.ends_with('\n') {
            stdout.write_all(b"\n")?;
        }
        return Ok(());
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating file in {}", dir.display()))?;
    tmp.write_all(text.as_bytes())?;
    if !text.ends_with('\n') {
        tmp.write_all(b"\n")?;
    }
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
