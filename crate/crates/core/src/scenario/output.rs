use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::spec::{parse_scenario, ScenarioSpec};
use crate::flows::{FlowState, RunStatus, Trajectory};
use crate::functionals::{
    bounded_report, closedness_report, form_energy_identity_report, l1_monotonicity_report, labels,
    length_bound_report, max_principle_report, pairing_drift_report, theorem1_report, MonitorRecord, MonitorSet,
    Verdict,
};
use crate::geometry::{Grid2D, MetricField, OneFormField, Parameterization, ScalarField, ScalarRole};
use crate::{Error, Result};

pub const MONITORS_CSV: &str = "monitors.csv";
pub const SUMMARY_JSON: &str = "summary.json";
pub const SCENARIO_FILE: &str = "scenario.cfg";

/// Gauge deviation allowed on a static background.
pub const GAUGE_TOL_STATIC: f64 = 1e-6;
/// Gauge deviation allowed on an evolving background.
pub const GAUGE_TOL_EVOLVING: f64 = 1e-4;
/// Energy identity residual allowed per record pair, relative to m(0).
pub const ENERGY_TOL: f64 = 1e-3;

/// Verdict tagged with the property it checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoremVerdict {
    pub theorem: String,
    #[serde(flatten)]
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub name: String,
    pub scenario_hash: String,
    pub grid_hash: String,
    pub status: String,
    pub detail: String,
    /// Time of the last valid state.
    pub last_t: f64,
    pub steps: usize,
    pub records: usize,
    pub verdicts: Vec<TheoremVerdict>,
    pub all_pass: bool,
}

pub fn scenario_hash(spec: &ScenarioSpec) -> String {
    let digest = Sha256::digest(spec.to_text().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Evaluates every property the scenario's monitors support.
pub fn compute_verdicts(
    spec: &ScenarioSpec,
    monitors: &MonitorSet,
    records: &[MonitorRecord],
) -> Result<Vec<TheoremVerdict>> {
    let mut out = Vec::new();
    if records.is_empty() {
        return Ok(out);
    }
    let mut push = |theorem: String, verdict: Verdict| out.push(TheoremVerdict { theorem, verdict });
    for f in &spec.forms {
        let l = &f.label;
        push(format!("theorem1[{l}]"), theorem1_report(records, l)?);
        push(format!("max-principle[{l}]"), max_principle_report(records, l)?);
        push(format!("closedness[{l}]"), closedness_report(records, l)?);
        if spec.monitors.energy {
            let e = form_energy_identity_report(records, l)?;
            let allowed = ENERGY_TOL * e.initial;
            let margin = allowed - e.max_residual;
            push(
                format!("energy-identity[{l}]"),
                Verdict {
                    name: "energy identity residual <= 1e-3 m(0)".into(),
                    pass: margin >= 0.0,
                    worst_margin: (!e.residuals.is_empty()).then_some(margin),
                    checked: e.residuals.len(),
                    r_nonneg_held: records.iter().all(MonitorRecord::r_nonneg),
                    note: format!("max residual {:e}", e.max_residual),
                },
            );
            if let Some(m) = e.monotone {
                push(format!("energy-monotone[{l}]"), m);
            }
        }
    }
    if records[0].get(labels::MASS_U).is_some() {
        let r = l1_monotonicity_report(records)?;
        push("lemma-l1".into(), r.inequality);
        if let Some(m) = r.monotone {
            push("l1-monotone".into(), m);
        }
    }
    for p in &monitors.probes {
        let lb = length_bound_report(p, records)?;
        push(format!("length-bound-chain[{}]", p.label), lb.chain);
        push(format!("length-bound-uniform[{}]", p.label), lb.uniform);
        push(format!("pairing-drift[{}]", p.label), pairing_drift_report(p, records)?);
    }
    if spec.gauge.is_some() {
        let tol = if spec.evolve_metric { GAUGE_TOL_EVOLVING } else { GAUGE_TOL_STATIC };
        push("gauge".into(), bounded_report("gauge deviation bounded", records, labels::GAUGE_DEV, tol)?);
    }
    if let Some(b) = monitors.buffer.as_ref().filter(|b| b.enforce) {
        push("buffer".into(), bounded_report("buffer unchanged", records, labels::BUFFER_DEV, b.threshold)?);
    }
    Ok(out)
}

fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

/// monitors.csv with columns t, dt, then every monitor label in record
/// order (sup_R, min_R, vol first).
pub fn monitors_csv(records: &[MonitorRecord]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::InvalidParameter(format!("csv: {e}"));
    if let Some(first) = records.first() {
        let mut header = vec!["t".to_string(), "dt".to_string()];
        header.extend(first.values.iter().map(|(l, _)| l.clone()));
        w.write_record(&header).map_err(csv_err)?;
    }
    for r in records {
        let mut row = vec![fmt_f64(r.t), fmt_f64(r.dt)];
        row.extend(r.values.iter().map(|(_, v)| fmt_f64(*v)));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| Error::InvalidParameter(format!("csv: {e}")))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Writes monitors.csv, summary.json, scenario.cfg and any snapshots into
/// `dir`, creating it if needed.
pub fn write_outputs(dir: &Path, spec: &ScenarioSpec, monitors: &MonitorSet, traj: &Trajectory) -> Result<Summary> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_file(&dir.join(SCENARIO_FILE), spec.to_text().as_bytes())?;
    write_file(&dir.join(MONITORS_CSV), &monitors_csv(&traj.records)?)?;
    let verdicts = compute_verdicts(spec, monitors, &traj.records)?;
    let summary = Summary {
        name: spec.name.clone(),
        scenario_hash: scenario_hash(spec),
        grid_hash: traj.grid.hash(),
        status: traj.status.as_str().into(),
        detail: traj.detail.clone(),
        last_t: traj.last_t(),
        steps: traj.steps.len(),
        records: traj.records.len(),
        all_pass: verdicts.iter().all(|v| v.verdict.pass),
        verdicts,
    };
    write_file(&dir.join(SUMMARY_JSON), serde_json::to_string_pretty(&summary)?.as_bytes())?;
    if spec.snapshots > 0 {
        for s in &traj.snapshots {
            write_snapshot(dir, &traj.grid, s)?;
        }
    }
    Ok(summary)
}

// ---------------------------------------------------------------------------
// Snapshots

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArrayEntry {
    pub name: String,
    /// Byte offset into the .bin file.
    pub offset: usize,
    /// Number of f64 values.
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub grid: Grid2D,
    pub t: f64,
    pub step: usize,
    pub shape: [usize; 2],
    pub axis_order: String,
    pub component_order: [String; 2],
    pub dtype: String,
    pub metric_param: String,
    pub forms: Vec<String>,
    pub gauge_form: Option<String>,
    pub sink: Option<f64>,
    pub data: String,
    pub arrays: Vec<ArrayEntry>,
}

fn snapshot_arrays(state: &FlowState) -> Vec<(String, &[f64])> {
    let m = &state.metric;
    let mut a: Vec<(String, &[f64])> =
        vec![("metric.gxx".into(), &m.gxx), ("metric.gxy".into(), &m.gxy), ("metric.gyy".into(), &m.gyy)];
    match &m.param {
        Parameterization::General => {}
        Parameterization::Conformal { u } => a.push(("metric.u".into(), u)),
        Parameterization::Warped { h, f } => {
            a.push(("metric.h".into(), h));
            a.push(("metric.f".into(), f));
        }
    }
    for f in &state.forms {
        a.push((format!("form.{}.phi_x", f.label), &f.form.x));
        a.push((format!("form.{}.phi_theta", f.label), &f.form.y));
    }
    if let Some(g) = &state.gauge {
        a.push(("gauge.base.phi_x".into(), &g.base.x));
        a.push(("gauge.base.phi_theta".into(), &g.base.y));
        a.push(("gauge.F".into(), &g.f.values));
    }
    if let Some(s) = &state.subsolution {
        a.push(("subsolution.u".into(), &s.u.values));
    }
    a
}

/// Writes `snap_<step>.json` and `snap_<step>.bin` (little-endian f64).
pub fn write_snapshot(dir: &Path, grid: &Grid2D, state: &FlowState) -> Result<PathBuf> {
    let stem = format!("snap_{:08}", state.step);
    let mut bin = Vec::new();
    let mut arrays = Vec::new();
    for (name, values) in snapshot_arrays(state) {
        arrays.push(ArrayEntry { name, offset: bin.len(), len: values.len() });
        for v in values {
            bin.write_all(&v.to_le_bytes()).expect("vec write");
        }
    }
    let header = SnapshotHeader {
        grid: grid.clone(),
        t: state.t,
        step: state.step,
        shape: [grid.nx(), grid.ny()],
        axis_order: "row-major x-then-theta".into(),
        component_order: ["phi_x".into(), "phi_theta".into()],
        dtype: "f64-le".into(),
        metric_param: state.metric.tag().into(),
        forms: state.forms.iter().map(|f| f.label.clone()).collect(),
        gauge_form: state.gauge.as_ref().map(|g| g.form_label.clone()),
        sink: state.subsolution.as_ref().map(|s| s.sink),
        data: format!("{stem}.bin"),
        arrays,
    };
    write_file(&dir.join(format!("{stem}.bin")), &bin)?;
    let json = dir.join(format!("{stem}.json"));
    write_file(&json, serde_json::to_string_pretty(&header)?.as_bytes())?;
    Ok(json)
}

/// Reads a snapshot header and rebuilds the state it describes.
pub fn load_snapshot(header_path: &Path) -> Result<(SnapshotHeader, FlowState)> {
    let bad = |reason: String| Error::RunDir { path: header_path.to_path_buf(), reason };
    let text = fs::read_to_string(header_path).map_err(|e| Error::io(header_path, e))?;
    let header: SnapshotHeader = serde_json::from_str(&text).map_err(|e| bad(format!("bad header: {e}")))?;
    let bin_path = header_path.with_file_name(&header.data);
    let bin = fs::read(&bin_path).map_err(|e| Error::io(&bin_path, e))?;
    let n = header.grid.len();
    let array = |name: &str| -> Result<Vec<f64>> {
        let e = header.arrays.iter().find(|a| a.name == name).ok_or_else(|| bad(format!("array '{name}' missing")))?;
        let end = e.offset + 8 * e.len;
        if e.len != n || end > bin.len() {
            return Err(bad(format!("array '{name}' has the wrong size")));
        }
        Ok(bin[e.offset..end].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    };
    let grid = &header.grid;
    let metric = match header.metric_param.as_str() {
        "conformal" => MetricField::from_param(grid, Parameterization::Conformal { u: array("metric.u")? })?,
        "warped" => MetricField::from_param(
            grid,
            Parameterization::Warped { h: array("metric.h")?, f: array("metric.f")? },
        )?,
        "general" => MetricField::general(grid, array("metric.gxx")?, array("metric.gxy")?, array("metric.gyy")?)?,
        other => return Err(bad(format!("unknown metric parameterization '{other}'"))),
    };
    let mut state = FlowState::new(metric);
    state.t = header.t;
    state.step = header.step;
    for l in &header.forms {
        let form = OneFormField::new(array(&format!("form.{l}.phi_x"))?, array(&format!("form.{l}.phi_theta"))?);
        state = state.with_form(l.clone(), form);
    }
    if let Some(l) = &header.gauge_form {
        state = state.with_gauge(l).ok_or_else(|| bad(format!("gauge form '{l}' missing")))?;
        let g = state.gauge.as_mut().expect("just set");
        g.base = OneFormField::closed(array("gauge.base.phi_x")?, array("gauge.base.phi_theta")?);
        g.f = ScalarField::new(ScalarRole::Gauge, array("gauge.F")?);
    }
    if let Some(sink) = header.sink {
        state = state.with_subsolution(array("subsolution.u")?, sink);
    }
    Ok((header, state))
}

// ---------------------------------------------------------------------------
// Run directories

/// Parses monitors.csv back into records. Steps are not stored in the file;
/// records are numbered by row instead.
pub fn read_monitors_csv(path: &Path, grid_hash: &str) -> Result<Vec<MonitorRecord>> {
    let bad = |reason: String| Error::RunDir { path: path.to_path_buf(), reason };
    let mut rd = csv::Reader::from_path(path).map_err(|e| bad(e.to_string()))?;
    let header: Vec<String> = rd.headers().map_err(|e| bad(e.to_string()))?.iter().map(str::to_string).collect();
    if header.len() < 2 || header[0] != "t" || header[1] != "dt" {
        return Err(bad("header must start with t,dt".into()));
    }
    let mut out = Vec::new();
    for (k, row) in rd.records().enumerate() {
        let row = row.map_err(|e| bad(e.to_string()))?;
        let vals: Vec<f64> = row
            .iter()
            .map(|s| s.parse::<f64>().map_err(|_| bad(format!("row {}: '{s}' is not a number", k + 1))))
            .collect::<Result<_>>()?;
        out.push(MonitorRecord {
            t: vals[0],
            dt: vals[1],
            step: k,
            grid_hash: grid_hash.to_string(),
            values: header[2..].iter().cloned().zip(vals[2..].iter().copied()).collect(),
        });
    }
    Ok(out)
}

/// Output directory of a finished run.
#[derive(Debug, Clone)]
pub struct RunDir {
    pub path: PathBuf,
    pub summary: Summary,
    pub spec: ScenarioSpec,
    pub records: Vec<MonitorRecord>,
}

impl RunDir {
    pub fn open(path: &Path) -> Result<RunDir> {
        let bad = |reason: String| Error::RunDir { path: path.to_path_buf(), reason };
        let summary_path = path.join(SUMMARY_JSON);
        let text = fs::read_to_string(&summary_path).map_err(|e| bad(format!("cannot read {SUMMARY_JSON}: {e}")))?;
        let summary: Summary = serde_json::from_str(&text).map_err(|e| bad(format!("bad {SUMMARY_JSON}: {e}")))?;
        if RunStatus::parse(&summary.status).is_none() {
            return Err(bad(format!("unknown status '{}'", summary.status)));
        }
        let cfg = fs::read_to_string(path.join(SCENARIO_FILE))
            .map_err(|e| bad(format!("cannot read {SCENARIO_FILE}: {e}")))?;
        let spec = parse_scenario(&cfg).map_err(|e| bad(e.to_string()))?;
        let records = read_monitors_csv(&path.join(MONITORS_CSV), &summary.grid_hash)?;
        Ok(RunDir { path: path.to_path_buf(), summary, spec, records })
    }

    /// Snapshot headers in step order.
    pub fn snapshot_headers(&self) -> Result<Vec<PathBuf>> {
        let rd = fs::read_dir(&self.path).map_err(|e| Error::io(&self.path, e))?;
        let mut out: Vec<PathBuf> = rd
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.extension().is_some_and(|x| x == "json")
                    && p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with("snap_"))
            })
            .collect();
        out.sort();
        Ok(out)
    }

    pub fn load_snapshots(&self) -> Result<(Grid2D, Vec<FlowState>)> {
        let mut grid = None;
        let mut states = Vec::new();
        for p in self.snapshot_headers()? {
            let (h, s) = load_snapshot(&p)?;
            grid.get_or_insert(h.grid);
            states.push(s);
        }
        let grid = grid.ok_or_else(|| Error::RunDir {
            path: self.path.clone(),
            reason: "no snapshots; rerun with output.snapshots > 0".into(),
        })?;
        Ok((grid, states))
    }
}
