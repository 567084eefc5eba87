use serde::Serialize;
use singsym::actionangle::{
    integrate_flow_at, normal_form_residual, period_lattice, ActionAngleOptions, FlowOptions, LatticeOptions, Section, TorusChart,
};
use singsym::config::{export_system, ConfigFile, Input};
use singsym::constructions::modular_period;
use singsym::gallery::run_all_checks;
use singsym::geometry::{validate_form_with, ValidationTolerances};
use singsym::hamiltonian::is_folded_function;
use singsym::report::{json_line, Cell, Format, Table};
use singsym::sampling::SamplePlan;
use singsym::systems::{check_commutation, check_independence, IntegrableSystem};
use singsym::{Error, Result};

use crate::Common;

pub(crate) type Runner = fn(&ConfigFile, &Common) -> Result<(bool, String)>;

const DEFAULT_SAMPLES: usize = 2000;
const DEFAULT_SEED: u64 = 7;
const COMMUTATION_TOL: f64 = 1e-8;
const ADMISSIBILITY_TOL: f64 = 1e-8;
const NORMAL_FORM_TOL: f64 = 1e-5;
const FLOW_TOL: f64 = 1e-10;
const DRIFT_TOL: f64 = 1e-7;

struct Settings {
    plan: SamplePlan,
    tol: Option<f64>,
    format: Format,
}

fn settings(cfg: &ConfigFile, c: &Common) -> Settings {
    let run = cfg.run();
    let interior = c.samples.or(run.samples).unwrap_or(DEFAULT_SAMPLES);
    let on_z = run.z_samples.unwrap_or(interior / 4);
    Settings {
        plan: SamplePlan::new(interior, on_z, c.seed.or(run.seed).unwrap_or(DEFAULT_SEED)),
        tol: c.tol.or(run.tol),
        format: c.format.into(),
    }
}

fn need_system(input: &Input) -> Result<&IntegrableSystem> {
    input
        .system()
        .ok_or_else(|| Error::Config("this command needs a system with observables".into()))
}

/// Accumulates records; in CSV mode they collapse to a summary table.
struct Report {
    format: Format,
    lines: String,
    summary: Table,
}

impl Report {
    fn new(format: Format) -> Report {
        Report {
            format,
            lines: String::new(),
            summary: Table::new(vec!["record".into(), "pass".into(), "metric".into(), "value".into()]),
        }
    }

    fn record<T: Serialize>(&mut self, kind: &str, data: &T) -> Result<()> {
        self.lines.push_str(&json_line(kind, data)?);
        self.lines.push('\n');
        Ok(())
    }

    fn summary(&mut self, kind: &str, pass: bool, metric: &str, value: f64) -> Result<()> {
        self.summary
            .push(vec![kind.into(), if pass { "true" } else { "false" }.into(), metric.into(), value.into()])
    }

    fn finish(self, table: Option<&Table>, kind: &str) -> Result<String> {
        match self.format {
            Format::Json => {
                let mut out = self.lines;
                if let Some(t) = table {
                    out.push_str(&t.to_json_lines(kind)?);
                }
                Ok(out)
            }
            Format::Csv => table.unwrap_or(&self.summary).to_csv(),
        }
    }
}

pub(crate) fn validate(cfg: &ConfigFile, c: &Common) -> Result<(bool, String)> {
    let s = settings(cfg, c);
    let input = cfg.input()?;
    let form = input.form().ok_or_else(|| Error::Config("config declares no form".into()))?;
    let mut tol = ValidationTolerances::default();
    if let Some(t) = s.tol {
        tol.closed = t;
    }
    let r = validate_form_with(&form, &s.plan, &tol)?;
    let mut rep = Report::new(s.format);
    rep.record("validate", &r)?;
    rep.summary("validate", r.pass, "max_dw", r.max_dw)?;
    Ok((r.pass, rep.finish(None, "")?))
}

#[derive(Serialize)]
struct CheckSummary {
    system: String,
    pass: bool,
}

pub(crate) fn check(cfg: &ConfigFile, c: &Common) -> Result<(bool, String)> {
    let s = settings(cfg, c);
    let input = cfg.input()?;
    let sys = need_system(&input)?;
    let chart = sys.chart();
    let mut rep = Report::new(s.format);
    let mut pass = true;

    let z_pts = s.plan.z_points(chart);
    if sys.form.is_folded() {
        for (name, o) in sys.names.iter().zip(&sys.observables) {
            let r = is_folded_function(o, &sys.form, &z_pts, ADMISSIBILITY_TOL)?;
            pass &= r.pass;
            rep.summary(&format!("admissibility:{name}"), r.pass, "worst_margin", r.worst_margin)?;
            rep.record("admissibility", &serde_json::json!({ "observable": name, "report": r }))?;
        }
    }
    let mut pts = s.plan.interior_points(chart);
    pts.extend(z_pts);
    let com = check_commutation(sys, &pts, s.tol.unwrap_or(COMMUTATION_TOL));
    let com_pass = com.pass && com.skipped == 0;
    pass &= com_pass;
    rep.summary("commutation", com_pass, "max_abs", com.max_abs)?;
    rep.record("commutation", &com)?;
    let ind = check_independence(sys, &s.plan);
    pass &= ind.pass;
    rep.summary("independence", ind.pass, "min_fraction", ind.interior_fraction.min(ind.z_fraction))?;
    rep.record("independence", &ind)?;
    if let Input::Gallery(entry) = &input {
        let g = run_all_checks(entry, &SamplePlan::default())?;
        pass &= g.matches_expected;
        rep.summary("gallery", g.matches_expected, "matches_expected", f64::from(u8::from(g.matches_expected)))?;
        rep.record(
            "gallery",
            &serde_json::json!({ "id": g.id, "outcome": g.outcome, "matches_expected": g.matches_expected }),
        )?;
    }
    rep.record(
        "check",
        &CheckSummary {
            system: sys.name.clone(),
            pass,
        },
    )?;
    Ok((pass, rep.finish(None, "")?))
}

fn indices(sys: &IntegrableSystem, names: &[String]) -> Result<Vec<usize>> {
    names
        .iter()
        .map(|n| {
            sys.chart()
                .index(n)
                .ok_or_else(|| Error::Config(format!("unknown coordinate `{n}`")))
        })
        .collect()
}

pub(crate) fn actionangle(cfg: &ConfigFile, c: &Common) -> Result<(bool, String)> {
    let s = settings(cfg, c);
    let input = cfg.input()?;
    let sys = need_system(&input)?;
    let spec = cfg
        .actionangle
        .clone()
        .ok_or_else(|| Error::Config("`actionangle` needs an `[actionangle]` table".into()))?;
    let n = sys.n();
    let mut lattice = LatticeOptions::for_dofs(n);
    if let Some(t) = spec.t_max {
        lattice.t_max = t;
    }
    if let Some(g) = spec.grid_step {
        lattice.grid_step = g;
    }
    let probes = if spec.probes.is_empty() { spec.region.clone() } else { spec.probes.clone() };
    if probes.is_empty() {
        return Err(Error::Config("`[actionangle]` needs `probes` or `region`".into()));
    }
    for p in &probes {
        sys.chart().check_len(p)?;
        if !sys.chart().contains(p, 0.0) {
            return Err(Error::Config(format!("probe {p:?} lies outside chart `{}`", sys.chart().name)));
        }
    }
    let mut rep = Report::new(s.format);
    let mut pass = true;

    let mut bases = Vec::new();
    for p in &probes {
        let l = period_lattice(sys, p, &lattice)?;
        rep.record("lattice", &l)?;
        rep.summary("lattice", true, "det", l.det())?;
        bases.push(l.basis);
        if sys.form.is_b() {
            let t = modular_period(&sys.form, p, &lattice)?;
            rep.record("modular_period", &serde_json::json!({ "probe": p, "period": t }))?;
            rep.summary("modular_period", true, "period", t)?;
        }
    }

    let mut header = vec!["probe".to_string()];
    header.extend(sys.chart().names());
    let chart = match &spec.center {
        Some(center) => {
            let fixed = spec
                .section
                .iter()
                .map(|(k, v)| Ok((indices(sys, std::slice::from_ref(k))?[0], *v)))
                .collect::<Result<Vec<_>>>()?;
            let section = Section {
                fixed,
                free: indices(sys, &spec.free)?,
            };
            let region = if spec.region.is_empty() { probes.clone() } else { spec.region.clone() };
            let opts = ActionAngleOptions {
                lattice,
                ..ActionAngleOptions::default()
            };
            Some(TorusChart::new(sys.clone(), section, center, &region, opts)?)
        }
        None => None,
    };
    if chart.is_some() {
        header.extend((1..=n).map(|i| format!("sigma{i}")));
        header.extend((1..=n).map(|i| format!("theta{i}")));
    }
    for k in 1..=n {
        header.extend((1..=n).map(|j| format!("lambda{k}_{j}")));
    }
    let mut table = Table::new(header);
    for (i, (p, basis)) in probes.iter().zip(&bases).enumerate() {
        let mut row: Vec<Cell> = vec![i.into()];
        row.extend(p.iter().map(|v| Cell::from(*v)));
        if let Some(tc) = &chart {
            let a = tc.actions(p)?;
            let th = tc.angles(p)?;
            row.extend(a.sigma.iter().map(|v| Cell::from(*v)));
            row.extend(th.iter().map(|v| Cell::from(*v)));
        }
        for b in basis {
            row.extend(b.iter().map(|v| Cell::from(*v)));
        }
        table.push(row)?;
    }
    if let Some(tc) = &chart {
        let r = normal_form_residual(tc, &probes, spec.step.unwrap_or(1e-4))?;
        let tol = s.tol.unwrap_or(NORMAL_FORM_TOL);
        let ok = r.max_residual <= tol;
        pass &= ok;
        rep.summary("normal_form", ok, "max_residual", r.max_residual)?;
        rep.record("normal_form", &serde_json::json!({ "report": r, "tol": tol, "pass": ok }))?;
    }
    let out = match s.format {
        Format::Json => rep.finish(Some(&table), "actionangle")?,
        Format::Csv => table.to_csv()?,
    };
    Ok((pass, out))
}

#[derive(Serialize)]
struct FlowSummary {
    observable: String,
    time: f64,
    rows: usize,
    steps: usize,
    rejected: usize,
    truncated: bool,
    reason: Option<String>,
    max_drift: f64,
    drift_tol: f64,
    pass: bool,
}

pub(crate) fn flow(cfg: &ConfigFile, c: &Common) -> Result<(bool, String)> {
    let s = settings(cfg, c);
    let input = cfg.input()?;
    let sys = need_system(&input)?;
    let spec = cfg.flow.clone().ok_or_else(|| Error::Config("`flow` needs a `[flow]` table".into()))?;
    let chart = sys.chart();
    chart.check_len(&spec.start)?;
    if !chart.contains(&spec.start, 0.0) {
        return Err(Error::Config(format!("start point {:?} lies outside chart `{}`", spec.start, chart.name)));
    }
    if !spec.time.is_finite() {
        return Err(Error::Config("flow time must be finite".into()));
    }
    let k = match &spec.observable {
        Some(name) => sys
            .names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::Config(format!("unknown observable `{name}`")))?,
        None => 0,
    };
    let opts = FlowOptions::with_tol(s.tol.unwrap_or(FLOW_TOL));
    let traj = integrate_flow_at(&sys.fields[k], &spec.start, spec.time, spec.outputs.unwrap_or(0), &opts)?;
    let f0 = sys.values(&spec.start);
    let mut header = vec!["t".to_string()];
    header.extend(chart.names());
    header.extend(sys.names.iter().map(|n| format!("drift[{n}]")));
    let mut table = Table::new(header);
    let mut max_drift: f64 = 0.0;
    for (t, p) in traj.times.iter().zip(&traj.points) {
        let mut row: Vec<Cell> = vec![(*t).into()];
        row.extend(p.iter().map(|v| Cell::from(*v)));
        for (v, v0) in sys.values(p).iter().zip(&f0) {
            let d = (v - v0).abs() / (1.0 + v0.abs());
            max_drift = max_drift.max(d);
            row.push(d.into());
        }
        table.push(row)?;
    }
    let pass = !traj.truncated && max_drift <= DRIFT_TOL;
    let summary = FlowSummary {
        observable: sys.names[k].clone(),
        time: spec.time,
        rows: table.rows.len(),
        steps: traj.steps,
        rejected: traj.rejected,
        truncated: traj.truncated,
        reason: traj.reason.clone(),
        max_drift,
        drift_tol: DRIFT_TOL,
        pass,
    };
    let out = match s.format {
        Format::Json => {
            let mut out = json_line("flow", &summary)?;
            out.push('\n');
            out.push_str(&table.to_json_lines("point")?);
            out
        }
        Format::Csv => table.to_csv()?,
    };
    Ok((pass, out))
}

pub(crate) fn construct(cfg: &ConfigFile, c: &Common) -> Result<(bool, String)> {
    let s = settings(cfg, c);
    let spec = cfg
        .construction
        .as_ref()
        .ok_or_else(|| Error::Config("`construct` needs a `[construction]` table".into()))?;
    if cfg.gallery.is_some() || cfg.chart.is_some() || cfg.form.is_some() {
        return Err(Error::Config("`construct` takes only a `[construction]` table".into()));
    }
    let built = singsym::config::construct(spec)?;
    match &built.system {
        Some(sys) => {
            let mut out = String::new();
            for line in serde_json::to_string_pretty(&built.details)
                .map_err(|e| Error::Numerical(e.to_string()))?
                .lines()
            {
                out.push_str("# ");
                out.push_str(line);
                out.push('\n');
            }
            out.push_str(&export_system(sys)?.to_toml()?);
            Ok((built.pass, out))
        }
        None => {
            let mut rep = Report::new(s.format);
            rep.record("construct", &serde_json::json!({ "pass": built.pass, "details": built.details }))?;
            let verdict = built.details.get("summary").and_then(|v| v.as_str()).map(str::to_owned);
            match verdict {
                Some(v) => rep.summary(&v, built.pass, "pass", f64::from(u8::from(built.pass)))?,
                None => rep.summary("construct", built.pass, "pass", f64::from(u8::from(built.pass)))?,
            }
            Ok((built.pass, rep.finish(None, "")?))
        }
    }
}
