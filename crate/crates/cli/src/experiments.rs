//! One driver per subcommand: resolved parameters in, report table out.

use crate::error::{CliError, CliResult};
use crate::params::*;
use crate::table::{Cell, Table};
use rayon::prelude::*;
use roughlab::curve_ops::{self, SobolevConfig};
use roughlab::grid::io::read_grid;
use roughlab::rough_ops::{sharpness_experiment, SharpnessEngine};
use roughlab::stopping_time::fuzz_trial;
use roughlab::{dyadic, littlewood_paley as lp, lorentz, GridFunction, LorentzExponents, MultiIndexGamma};
use serde::Serialize;
use serde_json::{json, Value};
use std::path::Path;

/// A finished experiment, ready to be written.
#[derive(Debug, Clone)]
pub struct Report {
    pub command: &'static str,
    pub config: Value,
    pub seed: Option<u64>,
    pub table: Table,
    pub diagnostics: Value,
    pub warnings: Vec<String>,
}

impl Report {
    fn new(command: &'static str, params: &impl Serialize, seed: Option<u64>, mut table: Table) -> Self {
        table.sort();
        Report {
            command,
            config: serde_json::to_value(params).expect("params serialize"),
            seed,
            table,
            diagnostics: Value::Null,
            warnings: Vec::new(),
        }
    }

    fn with_diagnostics(mut self, d: Value) -> Self {
        self.diagnostics = d;
        self
    }
}

fn require_input(input: &Option<std::path::PathBuf>, base: &Path) -> CliResult<GridFunction> {
    let path = input.as_ref().ok_or_else(|| CliError::Usage("--input is required".into()))?;
    Ok(read_grid(&base.join(path))?)
}

pub fn lp_verify(p: &LpVerifyParams) -> CliResult<Report> {
    let side = p.side.unwrap_or(3.0 * p.eps);
    let fam = lp::build_lp_family(p.dim, p.r, p.n0, p.eps, side)?;
    let rep = lp::lp_verify(&fam, p.n, side, p.inputs, p.seed)?;
    let mut t = Table::new(&["metric", "value"], 1);
    let rows: [(&str, Cell); 10] = [
        ("band_hi", rep.band.1.into()),
        ("band_lo", rep.band.0.into()),
        ("identity_residual", rep.identity_residual.into()),
        ("inputs", rep.inputs.into()),
        ("k_hi", rep.k_range.1.into()),
        ("k_lo", rep.k_range.0.into()),
        ("max_moment", rep.max_moment.into()),
        ("reproduce_residual", rep.reproduce_residual.into()),
        ("support_leak", rep.support_leak.into()),
        ("telescope_residual", rep.telescope_residual.into()),
    ];
    for (k, v) in rows {
        t.push(vec![k.into(), v]);
    }
    Ok(Report::new("lp verify", p, Some(p.seed), t).with_diagnostics(json!({ "side": side })))
}

pub fn norms_compute(p: &NormsParams, base: &Path) -> CliResult<Report> {
    let f = require_input(&p.input, base)?;
    let mut t = Table::new(&["p", "q", "norm"], 2);
    for q in &p.q {
        let e = LorentzExponents::new(p.p.0, q.0)?;
        t.push(vec![p.p.0.into(), q.0.into(), lorentz::lorentz_norm(&f, e).into()]);
    }
    let diag = json!({ "dim": f.dim(), "n": f.n(), "L": f.side(), "support_measure": lorentz::rearrange(&f).total_measure() });
    Ok(Report::new("norms compute", p, None, t).with_diagnostics(diag))
}

pub fn cz_run(p: &CzParams, base: &Path) -> CliResult<Report> {
    if p.input.is_some() {
        let f = require_input(&p.input, base)?;
        let cz = dyadic::cz_decompose(&f, p.alpha)?;
        let check = dyadic::check_cz(&f, &cz);
        let two_d = f.dim() == 2;
        let mut t = Table::new(if two_d { &["scale", "k1", "k2", "mean"] } else { &["scale", "k1", "mean"] }, 1 + f.dim());
        for (c, &mean) in cz.cubes.iter().zip(&cz.means) {
            let mut row: Vec<Cell> = vec![c.scale.into()];
            row.extend(c.k.iter().map(|&k| Cell::Int(k)));
            row.push(mean.into());
            t.push(row);
        }
        let diag = json!({
            "check": check,
            "off_set_max_avg": cz.off_set_max_avg,
            "total_selected_measure": cz.total_selected_measure,
        });
        return Ok(Report::new("cz run", p, None, t).with_diagnostics(diag));
    }
    let trials = dyadic::cz_fuzz(p.trials, p.n, p.side, p.seed)?;
    let header = [
        "trial",
        "alpha",
        "cubes",
        "selected_measure",
        "measure_budget",
        "disjoint",
        "means_above",
        "parents_below",
        "measure_bound",
    ];
    let mut t = Table::new(&header, 1);
    let mut failures = 0;
    for r in &trials {
        failures += usize::from(!r.check.all());
        t.push(vec![
            r.trial.into(),
            r.alpha.into(),
            r.cubes.into(),
            r.selected_measure.into(),
            r.measure_budget.into(),
            r.check.disjoint.into(),
            r.check.means_above.into(),
            r.check.parents_below.into(),
            r.check.measure_bound.into(),
        ]);
    }
    Ok(Report::new("cz run", p, Some(p.seed), t).with_diagnostics(json!({ "failures": failures })))
}

pub fn stoptime_fuzz(p: &FuzzParams) -> CliResult<Report> {
    let outcomes: Vec<_> = (0..p.trials).into_par_iter().map(|i| fuzz_trial(i, p.max_size, p.seed)).collect();
    let mut t = Table::new(&["trial", "kind", "size", "selected", "passed", "exhaustive", "witness"], 1);
    for o in &outcomes {
        t.push(vec![
            o.trial.into(),
            format!("{:?}", o.kind).to_lowercase().into(),
            o.size.into(),
            o.selected.into(),
            o.witness.is_none().into(),
            o.exhaustive.into(),
            o.witness.clone().into(),
        ]);
    }
    let diag = json!({
        "failures": outcomes.iter().filter(|o| o.witness.is_some()).count(),
        "exhaustive_checked": outcomes.iter().filter(|o| o.exhaustive.is_some()).count(),
        "exhaustive_failures": outcomes.iter().filter(|o| o.exhaustive == Some(false)).count(),
    });
    Ok(Report::new("stoptime fuzz", p, Some(p.seed), t).with_diagnostics(diag))
}

pub fn rough_sharpness(p: &SharpnessParams) -> CliResult<Report> {
    let engine = match p.engine.as_str() {
        "polar" => SharpnessEngine::Polar,
        "grid" => SharpnessEngine::Grid { n: p.n, side: p.side, n_samples: p.samples },
        other => return Err(CliError::Usage(format!("unknown engine {other:?}, expected polar or grid"))),
    };
    let qs: Vec<f64> = p.q.iter().map(|q| q.0).collect();
    let rep = sharpness_experiment(&qs, &p.n_terms, p.c, p.eps0, engine)?;
    let mut t = Table::new(&["N", "q", "norm", "log2_norm", "slope"], 2);
    for r in &rep.rows {
        t.push(vec![r.n_big.into(), r.q.into(), r.norm.into(), r.log2_norm.into(), r.slope.into()]);
    }
    let diag = json!({ "slopes": rep.slopes, "excised": rep.excised });
    Ok(Report::new("rough sharpness", p, None, t).with_diagnostics(diag))
}

pub fn curve_decay(p: &DecayParams) -> CliResult<Report> {
    let [g1, g2] = p.gamma[..] else {
        return Err(CliError::Usage(format!("--gamma takes two values, got {}", p.gamma.len())));
    };
    let rep = curve_ops::measure_decay(MultiIndexGamma::real(g1, g2)?, p.m, &p.radii)?;
    let mut t = Table::new(&["R", "normalized_sup"], 1);
    let mut warnings: Vec<String> = rep.warning.iter().cloned().collect();
    for r in &rep.rows {
        t.push(vec![r.radius.into(), r.normalized_sup.into()]);
        if !r.converged {
            warnings.push(format!("R = {}: quadratures disagree (refinement gap {:e})", r.radius, r.refine_gap));
        }
    }
    let mut out = Report::new("curve decay", p, None, t).with_diagnostics(json!({ "rows": rep.rows, "warning": rep.warning }));
    out.warnings = warnings;
    Ok(out)
}

pub fn curve_sobolev(p: &SobolevParams) -> CliResult<Report> {
    let cfg = SobolevConfig {
        m: p.m,
        trials: p.trials,
        n: p.n,
        side: p.side,
        max_freq: p.max_freq,
        seed: p.seed,
        ..SobolevConfig::default()
    };
    let rep = curve_ops::sobolev_smoothing_experiment(&cfg)?;
    let mut t = Table::new(&["trial", "ratio"], 1);
    for &(trial, ratio) in &rep.rows {
        t.push(vec![trial.into(), ratio.into()]);
    }
    let diag = json!({ "max": rep.max, "median": rep.median, "eta": cfg.eta });
    Ok(Report::new("curve sobolev", p, Some(p.seed), t).with_diagnostics(diag))
}

pub fn prop41_ratio(p: &Prop41Params) -> CliResult<Report> {
    let l_range = match p.l_range.as_deref() {
        None => curve_ops::default_l_range(&GridFunction::zeros(2, p.n, p.side)?, p.m),
        Some(&[lo, hi]) => (lo, hi),
        Some(v) => return Err(CliError::Usage(format!("--l-range takes two values, got {}", v.len()))),
    };
    let rows = curve_ops::square_function_ratio(p.n, p.side, p.m, &p.scales, l_range)?;
    let mut t = Table::new(&["scale", "lhs", "proxy", "ratio"], 1);
    for r in &rows {
        t.push(vec![r.scale.into(), r.lhs.into(), r.proxy.into(), r.ratio.into()]);
    }
    Ok(Report::new("prop41 ratio", p, None, t).with_diagnostics(json!({ "l_range": [l_range.0, l_range.1] })))
}
