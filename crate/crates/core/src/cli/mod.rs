//! Command surface. Every run resolves its configuration, hashes it and
//! writes into `<out>/<hash>/`: CSV data, JSON and Markdown reports, gnuplot
//! scripts and `manifest.json`.
//!
//! Exit status: 0 when every check passes, 2 when a check fails, 1 on a
//! usage or configuration error, 3 when the numerics break an invariant.

pub mod commands;
pub mod config;
pub mod report;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::analysis::Verdict;
use crate::error::{Error, Result};

pub use commands::Inputs;
pub use config::{parse_init, FluxBlock, RunConfig, Settings};
pub use report::{emit_report, to_json_string, ClaimsMatrix, Report, ReportFormat, RunManifest, VerdictSummary};

/// Environment variable overriding the worker count.
pub const JOBS_ENV: &str = "VISCID_JOBS";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_CHECK_FAILED: i32 = 2;
pub const EXIT_INVARIANT: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "viscid", version, about = "Viscous conservation laws with measure data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct CommandArgs {
    /// TOML configuration file; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    settings: Settings,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve and write snapshot profiles.
    Solve(CommandArgs),
    /// Solve the Hamilton–Jacobi form and check its gradient.
    Hj(CommandArgs),
    /// Check the decay estimates on one run and fit decay exponents.
    Decay(CommandArgs),
    /// Certify the p-condition of the flux.
    Pcond(CommandArgs),
    /// Sweep the viscosity and test ε-independence of a decay ratio.
    Sweep(CommandArgs),
    /// Vanishing-viscosity study from a point mass.
    Inviscid(CommandArgs),
    /// Mollification-independence probe.
    Unique(CommandArgs),
    /// Compare a solver with a closed-form source solution.
    Oracle(CommandArgs),
    /// Evaluate every implemented estimate and emit the claims matrix.
    Claims(CommandArgs),
}

impl Command {
    fn split(self) -> (&'static str, CommandArgs) {
        match self {
            Command::Solve(a) => ("solve", a),
            Command::Hj(a) => ("hj", a),
            Command::Decay(a) => ("decay", a),
            Command::Pcond(a) => ("pcond", a),
            Command::Sweep(a) => ("sweep", a),
            Command::Inviscid(a) => ("inviscid", a),
            Command::Unique(a) => ("unique", a),
            Command::Oracle(a) => ("oracle", a),
            Command::Claims(a) => ("claims", a),
        }
    }
}

/// Result of a completed invocation.
#[derive(Debug)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub manifest: RunManifest,
    pub exit_code: i32,
}

/// Errors that signal broken numerics rather than bad input.
pub fn is_invariant_failure(e: &Error) -> bool {
    matches!(
        e,
        Error::Instability { .. }
            | Error::NonContraction { .. }
            | Error::DomainTooSmall(_)
            | Error::Extrapolation { .. }
    )
}

fn worker_count(settings: &Settings) -> Result<Option<usize>> {
    match std::env::var(JOBS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::Config(format!("{JOBS_ENV} must be a positive integer, got {v:?}"))),
        },
        Err(_) => Ok(settings.jobs),
    }
}

/// Resolve, hash, run and persist one command. Invariant failures leave
/// `diagnostic.json` in the run directory and are returned as errors.
pub fn execute(command: &str, settings: &Settings) -> Result<RunOutcome> {
    let cfg = RunConfig::resolve(command, settings)?;
    let flux = cfg.flux.build()?;
    let measure = parse_init(&cfg.init)?;
    let hash = cfg.hash(&flux, &measure)?;
    let root = settings.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    let dir = report::run_dir(&root, &hash)?;
    let inputs = Inputs { cfg, flux, measure };

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = worker_count(settings)? {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let outcome = match pool.install(|| commands::dispatch(&inputs, &dir)) {
        Ok(o) => o,
        Err(e) => {
            if is_invariant_failure(&e) {
                write_diagnostic(&dir, &inputs, &e)?;
            }
            return Err(e);
        }
    };

    let verdicts: Vec<VerdictSummary> = outcome.checks.iter().map(VerdictSummary::from).collect();
    let mut outputs = outcome.outputs;
    if inputs.cfg.claims_matrix {
        let matrix = ClaimsMatrix { rows: verdicts.clone() };
        for f in [ReportFormat::Json, ReportFormat::Md] {
            outputs.extend(emit_report(&matrix, f, &dir, "claims")?);
        }
    }
    outputs.push("manifest.json".into());
    outputs.sort();
    outputs.dedup();
    let manifest = RunManifest {
        config_hash: hash,
        command: command.into(),
        inputs: report::ManifestInputs { config: inputs.cfg, flux: inputs.flux, init: inputs.measure },
        outputs,
        verdicts,
        tool_version: env!("CARGO_PKG_VERSION").into(),
    };
    std::fs::write(dir.join("manifest.json"), to_json_string(&manifest)?)?;
    let failed = manifest.verdicts.iter().any(|v| v.verdict == Verdict::Fail);
    Ok(RunOutcome { dir, manifest, exit_code: if failed { EXIT_CHECK_FAILED } else { EXIT_OK } })
}

fn write_diagnostic(dir: &Path, inputs: &Inputs, e: &Error) -> Result<()> {
    #[derive(serde::Serialize)]
    struct Diagnostic<'a> {
        error: String,
        config: &'a RunConfig,
    }
    let text = to_json_string(&Diagnostic { error: e.to_string(), config: &inputs.cfg })?;
    std::fs::write(dir.join("diagnostic.json"), text)?;
    Ok(())
}

/// Parse `args` (program name first), run, print a summary and return the
/// exit status.
pub fn run_command<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let (command, args) = cli.command.split();
    let settings = match &args.config {
        Some(path) => match Settings::load(path) {
            Ok(file) => file.merged(args.settings),
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_USAGE;
            }
        },
        None => args.settings,
    };
    match execute(command, &settings) {
        Ok(o) => {
            for v in &o.manifest.verdicts {
                println!("{:<24} {:<12} max ratio {:.6e}", v.name, report::verdict_word(v.verdict), v.lhs_max_ratio);
            }
            println!("results in {}", o.dir.display());
            o.exit_code
        }
        Err(e) => {
            eprintln!("error: {e}");
            if is_invariant_failure(&e) {
                EXIT_INVARIANT
            } else {
                EXIT_USAGE
            }
        }
    }
}
