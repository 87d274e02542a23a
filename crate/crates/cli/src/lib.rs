//! Experiment orchestration for the `roughlab` binary: parameter
//! resolution, report tables, atomic artifact writes and golden-file
//! regression.

pub mod args;
pub mod error;
pub mod experiments;
pub mod golden;
pub mod output;
pub mod params;
pub mod table;

use args::*;
use error::{CliError, CliResult};
use experiments::Report;
use output::{manifest, manifest_path, persist_all, Artifact};
use params::resolve;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

/// Environment variable capping the worker pool.
pub const THREADS_ENV: &str = "LAB_THREADS";

/// Size the global pool from `LAB_THREADS` (unset: rayon's default).
pub fn init_threads() -> CliResult<()> {
    let Ok(raw) = std::env::var(THREADS_ENV) else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("cannot size the worker pool: {e}")))
}

/// Run an experiment command. Relative input and config paths resolve
/// against `base`. Returns `None` for commands that are not experiments.
pub fn build_report(command: &Command, base: &Path) -> CliResult<Option<(Report, IoArgs)>> {
    let cfg = |io: &IoArgs| io.config.as_ref().map(|c| base.join(c));
    let out = match command {
        Command::Lp(LpCommand::Verify(a)) => (experiments::lp_verify(&resolve(a, cfg(&a.io).as_deref())?)?, a.io.clone()),
        Command::Norms(NormsCommand::Compute(a)) => {
            (experiments::norms_compute(&resolve(a, cfg(&a.io).as_deref())?, base)?, a.io.clone())
        }
        Command::Cz(CzCommand::Run(a)) => (experiments::cz_run(&resolve(a, cfg(&a.io).as_deref())?, base)?, a.io.clone()),
        Command::Stoptime(StoptimeCommand::Fuzz(a)) => {
            (experiments::stoptime_fuzz(&resolve(a, cfg(&a.io).as_deref())?)?, a.io.clone())
        }
        Command::Rough(RoughCommand::Sharpness(a)) => {
            (experiments::rough_sharpness(&resolve(a, cfg(&a.io).as_deref())?)?, a.io.clone())
        }
        Command::Curve(CurveCommand::Decay(a)) => (experiments::curve_decay(&resolve(a, cfg(&a.io).as_deref())?)?, a.io.clone()),
        Command::Curve(CurveCommand::Sobolev(a)) => {
            (experiments::curve_sobolev(&resolve(a, cfg(&a.io).as_deref())?)?, a.io.clone())
        }
        Command::Prop41(Prop41Command::Ratio(a)) => {
            (experiments::prop41_ratio(&resolve(a, cfg(&a.io).as_deref())?)?, a.io.clone())
        }
        Command::Golden(_) => return Ok(None),
    };
    Ok(Some(out))
}

/// Encoded report body in the requested format.
pub fn render(report: &Report, format: Format) -> Vec<u8> {
    match format {
        Format::Csv => report.table.to_csv(),
        Format::Json => report.table.to_json(),
    }
}

/// Execute a parsed command line, writing artifacts or stdout.
pub fn run(cli: Cli) -> CliResult<()> {
    if let Command::Golden(GoldenCommand::Check(g)) = &cli.command {
        let outcome = golden::check(g)?;
        std::io::stdout().write_all(&outcome.table.to_csv()).map_err(|e| error::io_err("stdout", e))?;
        return match outcome.failures.is_empty() {
            true => Ok(()),
            false => Err(CliError::Golden(format!("golden suite {:?} failed: {}", g.suite, outcome.failures.join("; ")))),
        };
    }
    let started = Instant::now();
    let (report, io) = build_report(&cli.command, Path::new("."))?.expect("experiment command");
    let wall = started.elapsed().as_secs_f64();
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    let body = render(&report, io.format);
    match &io.out {
        Some(path) => persist_all(vec![
            Artifact { path: path.clone(), bytes: body },
            Artifact {
                path: manifest_path(path),
                bytes: manifest(report.command, &report.config, report.seed, wall, &report.diagnostics),
            },
        ]),
        None => std::io::stdout().write_all(&body).map_err(|e| error::io_err("stdout", e)),
    }
}
