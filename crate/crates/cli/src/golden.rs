//! Golden-file regression. A suite `<dir>/<name>.toml` lists fixtures as
//! command lines; each stored report lives at `<dir>/<name>/<fixture>.csv`.
//! Relative paths inside fixture command lines resolve against `<dir>`.

use crate::args::{Cli, GoldenArgs};
use crate::error::{io_err, CliError, CliResult};
use crate::output::{persist_all, Artifact};
use crate::table::{Cell, Table};
use clap::Parser;
use serde::Deserialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

pub const DEFAULT_TOL: f64 = 1e-9;
/// Fitted slopes go through a log-log regression and carry more rounding.
pub const SLOPE_TOL: f64 = 1e-6;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Suite {
    fixture: Vec<Fixture>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Fixture {
    name: String,
    args: Vec<String>,
}

pub struct CheckOutcome {
    /// `fixture,status,detail`, sorted by fixture.
    pub table: Table,
    pub failures: Vec<String>,
}

pub fn default_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("golden")
}

/// Tolerance for `column`: override, else by column role.
pub fn column_tol(column: &str, overrides: &BTreeMap<String, f64>) -> f64 {
    overrides.get(column).copied().unwrap_or(if column.contains("slope") { SLOPE_TOL } else { DEFAULT_TOL })
}

fn parse_overrides(raw: &[String]) -> CliResult<BTreeMap<String, f64>> {
    raw.iter()
        .map(|s| {
            let (k, v) = s.split_once('=').ok_or_else(|| CliError::Usage(format!("--tol expects column=value, got {s:?}")))?;
            let v: f64 = v.trim().parse().map_err(|_| CliError::Usage(format!("bad tolerance in {s:?}")))?;
            Ok((k.trim().to_string(), v))
        })
        .collect()
}

fn run_fixture(fx: &Fixture, dir: &Path) -> CliResult<Table> {
    let argv = std::iter::once("roughlab".to_string()).chain(fx.args.iter().cloned());
    let cli = Cli::try_parse_from(argv).map_err(|e| CliError::Usage(format!("fixture {}: {}", fx.name, e.kind())))?;
    let (report, _) = crate::build_report(&cli.command, dir)?
        .ok_or_else(|| CliError::Usage(format!("fixture {} is not an experiment", fx.name)))?;
    Ok(report.table)
}

/// Compare a fresh table with stored CSV text; the first mismatch is returned.
pub fn compare(fresh: &Table, stored: &[u8], overrides: &BTreeMap<String, f64>) -> Result<(), String> {
    let mut rd = csv::Reader::from_reader(stored);
    let header: Vec<String> = rd.headers().map_err(|e| e.to_string())?.iter().map(str::to_string).collect();
    if header != fresh.header {
        return Err(format!("header {} differs from {}", fresh.header.join(","), header.join(",")));
    }
    let rows: Vec<csv::StringRecord> = rd.records().collect::<Result<_, _>>().map_err(|e| e.to_string())?;
    if rows.len() != fresh.rows.len() {
        return Err(format!("{} rows, stored {}", fresh.rows.len(), rows.len()));
    }
    for (i, (got, want)) in fresh.rows.iter().zip(&rows).enumerate() {
        for (j, (cell, text)) in got.iter().zip(want.iter()).enumerate() {
            let col = &header[j];
            let ok = match (cell, text.parse::<f64>()) {
                (Cell::Float(a), Ok(b)) if a.is_finite() && b.is_finite() => {
                    let tol = column_tol(col, overrides);
                    (a - b).abs() <= tol * b.abs().max(1.0)
                }
                _ => cell.render() == text,
            };
            if !ok {
                return Err(format!(
                    "column {col} row {}: got {} stored {text} (tol {:e})",
                    i + 1,
                    match cell {
                        Cell::Float(a) => format!("{a:e}"),
                        other => other.render(),
                    },
                    column_tol(col, overrides)
                ));
            }
        }
    }
    Ok(())
}

pub fn check(args: &GoldenArgs) -> CliResult<CheckOutcome> {
    let dir = args.dir.clone().unwrap_or_else(default_dir);
    let suite_path = dir.join(format!("{}.toml", args.suite));
    let text = std::fs::read_to_string(&suite_path).map_err(|e| io_err(suite_path.display(), e))?;
    let suite: Suite = toml::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {}", suite_path.display(), e.message())))?;
    let overrides = parse_overrides(&args.tol)?;
    let store = dir.join(&args.suite);
    let stored_path = |fx: &Fixture| store.join(format!("{}.csv", fx.name));

    if args.regenerate {
        std::fs::create_dir_all(&store).map_err(|e| io_err(store.display(), e))?;
        let artifacts = suite
            .fixture
            .iter()
            .map(|fx| Ok(Artifact { path: stored_path(fx), bytes: run_fixture(fx, &dir)?.to_csv() }))
            .collect::<CliResult<Vec<_>>>()?;
        persist_all(artifacts)?;
    }

    let missing: Vec<&str> = suite.fixture.iter().filter(|fx| !stored_path(fx).exists()).map(|fx| fx.name.as_str()).collect();
    if !missing.is_empty() {
        return Err(CliError::Golden(format!(
            "missing golden files in {}: {}",
            store.display(),
            missing.join(", ")
        )));
    }

    let mut table = Table::new(&["fixture", "status", "detail"], 1);
    let mut failures = Vec::new();
    for fx in &suite.fixture {
        let stored = std::fs::read(stored_path(fx)).map_err(|e| io_err(stored_path(fx).display(), e))?;
        let verdict = run_fixture(fx, &dir).map_err(|e| e.to_string()).and_then(|t| compare(&t, &stored, &overrides));
        match verdict {
            Ok(()) => table.push(vec![fx.name.as_str().into(), "pass".into(), Cell::Empty]),
            Err(why) => {
                failures.push(format!("{}: {why}", fx.name));
                table.push(vec![fx.name.as_str().into(), "fail".into(), why.into()]);
            }
        }
    }
    table.sort();
    Ok(CheckOutcome { table, failures })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(v: f64) -> Table {
        let mut t = Table::new(&["k", "norm", "slope"], 1);
        t.push(vec![Cell::Int(1), Cell::Float(v), Cell::Float(v)]);
        t
    }

    #[test]
    fn tolerances_by_column_role() {
        let none = BTreeMap::new();
        let stored = one(0.5f64.sqrt()).to_csv();
        assert!(compare(&one(0.5f64.sqrt()), &stored, &none).is_ok());
        // 12 printed digits leave a ~2e-13 gap, inside the default tolerance.
        let zero: BTreeMap<String, f64> = [("norm".to_string(), 0.0)].into();
        let err = compare(&one(0.5f64.sqrt()), &stored, &zero).unwrap_err();
        assert!(err.contains("column norm"), "{err}");
        let slope_only = one(0.5f64.sqrt() + 1e-8);
        let err = compare(&slope_only, &stored, &none).unwrap_err();
        assert!(err.contains("column norm"), "{err}");
        let mut t = Table::new(&["k", "norm", "slope"], 1);
        t.push(vec![Cell::Int(1), Cell::Float(0.5f64.sqrt()), Cell::Float(0.5f64.sqrt() + 1e-8)]);
        assert!(compare(&t, &stored, &none).is_ok());
    }

    #[test]
    fn shape_mismatches_are_reported() {
        let none = BTreeMap::new();
        assert!(compare(&one(1.0), b"k,other,slope\n1,1,1\n", &none).unwrap_err().contains("header"));
        assert!(compare(&one(1.0), b"k,norm,slope\n", &none).unwrap_err().contains("rows"));
        assert!(compare(&one(1.0), b"k,norm,slope\n2,1,1\n", &none).unwrap_err().contains("column k"));
    }
}
