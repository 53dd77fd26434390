//! The ten acceptance suites.
//!
//! Each suite builds its scenarios from scenario text, so the whole
//! parse/build/integrate/report path is exercised. Runs shared between
//! suites (the max-principle suite reuses the runs of suites 1 and 4) are
//! computed once per [`Lab`].

use std::collections::HashMap;
use std::f64::consts::TAU;
use std::fmt;
use std::sync::{Arc, Mutex};

use crate::blowup::{curvature_scaling_residual, length_scaling_check, rescale_metric, RescalingSchedule};
use crate::flows::{integrate, RunStatus, Trajectory};
use crate::functionals::{
    convergence_order, form_energy_identity_report, l1_monotonicity_report, labels, length_bound_report,
    loop_length, max_principle_report, theorem1_report, Cycle, MonitorRecord, MonitorSet, Verdict,
};
use crate::geometry::{hodge_laplacian, Grid2D, HodgeMethod, MetricField, OneFormField};
use crate::scenario::{build, monitors_csv, parse_scenario, ScenarioSpec};
use crate::{Error, Result};

/// One named check inside a criterion.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Check { name: name.into(), pass, detail: detail.into() }
    }

    fn from_verdict(name: impl Into<String>, v: &Verdict) -> Self {
        let margin = v.worst_margin.map_or("n/a".to_string(), |m| format!("{m:.3e}"));
        Check::new(name, v.pass && v.checked > 0, format!("{} checks, worst margin {margin}", v.checked))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionResult {
    pub id: u8,
    pub suite: &'static str,
    pub checks: Vec<Check>,
}

impl CriterionResult {
    pub fn pass(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.pass)
    }
}

impl fmt::Display for CriterionResult {
    /// One line: status, id, suite and every check.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.pass() { "PASS" } else { "FAIL" };
        write!(f, "{status} {:>2} {:<15}", self.id, self.suite)?;
        for (k, c) in self.checks.iter().enumerate() {
            let sep = if k == 0 { " " } else { " | " };
            let mark = if c.pass { "" } else { "[FAIL] " };
            write!(f, "{sep}{mark}{}: {}", c.name, c.detail)?;
        }
        Ok(())
    }
}

/// Suite names in criterion order.
pub const SUITES: [&str; 10] = [
    "theorem1",
    "energy",
    "lemma-l1",
    "length-bound",
    "max-principle",
    "gauge",
    "bochner",
    "cigar",
    "scaling",
    "infrastructure",
];

/// 0 when every criterion passed, 1 otherwise.
pub fn exit_code(results: &[CriterionResult]) -> i32 {
    if !results.is_empty() && results.iter().all(CriterionResult::pass) {
        0
    } else {
        1
    }
}

/// Resolves `all`, a suite name or a criterion number to suite names.
pub fn resolve(name: &str) -> Result<Vec<&'static str>> {
    if name == "all" {
        return Ok(SUITES.to_vec());
    }
    if let Some(s) = SUITES.iter().find(|s| **s == name) {
        return Ok(vec![*s]);
    }
    match name.parse::<usize>() {
        Ok(k) if (1..=SUITES.len()).contains(&k) => Ok(vec![SUITES[k - 1]]),
        _ => Err(Error::UnknownSuite(name.to_string())),
    }
}

/// A finished scenario run.
pub struct Run {
    pub spec: ScenarioSpec,
    pub monitors: MonitorSet,
    pub traj: Trajectory,
}

impl Run {
    fn records(&self) -> &[MonitorRecord] {
        &self.traj.records
    }

    fn completed(&self) -> Check {
        let t = &self.traj;
        Check::new(
            "run completed",
            t.status == RunStatus::Completed,
            format!("{} at t = {} after {} steps", t.status, t.last_t(), t.steps.len()),
        )
    }
}

/// Cache of shared runs.
#[derive(Default)]
pub struct Lab {
    runs: Mutex<HashMap<String, Arc<Run>>>,
}

impl Lab {
    pub fn new() -> Self {
        Self::default()
    }

    /// Parses, builds and integrates `text`, once per distinct text.
    pub fn run(&self, text: &str) -> Result<Arc<Run>> {
        // Holding the lock while integrating keeps concurrent callers from
        // duplicating a long run.
        let mut runs = self.runs.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(r) = runs.get(text) {
            return Ok(r.clone());
        }
        let spec = parse_scenario(text)?;
        let s = build(&spec)?;
        let traj = integrate(&s.system, s.initial, &s.config)?;
        let run = Arc::new(Run { spec, monitors: s.config.monitors, traj });
        runs.insert(text.to_string(), run.clone());
        Ok(run)
    }

    pub fn suite(&self, name: &str) -> Result<CriterionResult> {
        let (id, checks) = match name {
            "theorem1" => (1, self.theorem1()?),
            "energy" => (2, self.energy()?),
            "lemma-l1" => (3, self.lemma_l1()?),
            "length-bound" => (4, self.length_bound()?),
            "max-principle" => (5, self.max_principle()?),
            "gauge" => (6, self.gauge()?),
            "bochner" => (7, bochner()?),
            "cigar" => (8, self.cigar()?),
            "scaling" => (9, self.scaling()?),
            "infrastructure" => (10, self.infrastructure()?),
            other => return Err(Error::UnknownSuite(other.to_string())),
        };
        let suite = SUITES[id as usize - 1];
        Ok(CriterionResult { id, suite, checks })
    }

    /// Runs the named suites in order, calling `each` as results arrive.
    pub fn run_suites(&self, names: &[&str], mut each: impl FnMut(&CriterionResult)) -> Result<Vec<CriterionResult>> {
        let mut out = Vec::with_capacity(names.len());
        for n in names {
            let r = self.suite(n)?;
            each(&r);
            out.push(r);
        }
        Ok(out)
    }
}

// ---------------------------------------------------------------------------
// Scenarios

const STATIC_FLAT: &str = "\
name = static-flat-sin
grid.nx = 128
grid.ny = 128
metric.evolve = false
form.phi = sin-x-dx
integrator.dt_max = 2e-4
time.t_end = 1
output.cadence = 10
";

/// Conformal torus relaxing towards flat. By Gauss–Bonnet, R ≥ 0 holds
/// everywhere only once the seed has decayed to roundoff (t ≈ 21), so the
/// form carries a harmonic part that is still there to be checked.
const RELAXING_CONFORMAL: &str = "\
name = relaxing-conformal
geometry.family = conformal-torus
grid.nx = 64
grid.ny = 64
metric.preset = sine
metric.amplitude = 0.05
form.phi = dtheta-plus-exact
form.phi.coeff = 0.3
time.t_end = 30
output.cadence = 20
";

fn energy_text(n: usize, evolving: bool) -> String {
    let background = if evolving {
        "geometry.family = conformal-torus\nmetric.preset = sine\nmetric.amplitude = 0.05\n"
    } else {
        "metric.evolve = false\n"
    };
    format!(
        "name = energy\n{background}grid.nx = {n}\ngrid.ny = {n}\nform.phi = sin-x-dx\ntime.t_end = 0.2\nmonitors.energy = true\n"
    )
}

const LEMMA_CONFORMAL: &str = "\
name = lemma-conformal
geometry.family = conformal-torus
grid.nx = 64
grid.ny = 64
metric.preset = sine
metric.amplitude = 0.1
subsolution.preset = one-plus-cos
time.t_end = 0.5
";

const LEMMA_FLAT: &str = "\
name = lemma-flat
grid.nx = 64
grid.ny = 64
metric.evolve = false
subsolution.preset = one-plus-cos
time.t_end = 0.5
";

const NECK: &str = "\
name = neck
geometry.family = warped-cylinder
grid.nx = 512
grid.ny = 64
grid.x_min = -10
grid.x_max = 10
metric.preset = neck
metric.a = 2
metric.b = 1
metric.h = 1
form.phi = dtheta
probe.alpha.form = phi
probe.alpha.x = 0
time.t_end = 0.5
output.snapshots = 50
";

fn gauge_text(evolving: bool) -> String {
    let background = if evolving {
        "geometry.family = conformal-torus\nmetric.preset = sine\nmetric.amplitude = 0.05\n"
    } else {
        "metric.evolve = false\n"
    };
    format!(
        "name = gauge\n{background}grid.nx = 128\ngrid.ny = 128\nform.phi = dtheta-plus-exact\nform.phi.coeff = 0.3\ngauge.form = phi\ntime.t_end = 0.5\noutput.cadence = 10\n"
    )
}

const CIGAR: &str = "\
name = cigar
geometry.family = conformal-plane
grid.nx = 257
grid.ny = 257
grid.half_width = 12
metric.preset = cigar
time.t_end = 0.5
output.cadence = 10
monitors.buffer = report-only
";

/// Every scenario the suites run.
pub fn scenario_texts() -> Vec<String> {
    let mut v: Vec<String> = [STATIC_FLAT, RELAXING_CONFORMAL, LEMMA_CONFORMAL, LEMMA_FLAT, NECK, CIGAR]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for n in [64, 128] {
        v.push(energy_text(n, false));
        v.push(energy_text(n, true));
    }
    v.push(gauge_text(false));
    v.push(gauge_text(true));
    v
}

fn column(records: &[MonitorRecord], label: &str) -> Result<Vec<f64>> {
    records.iter().map(|r| r.require(label)).collect()
}

// ---------------------------------------------------------------------------
// Suites

impl Lab {
    fn theorem1(&self) -> Result<Vec<Check>> {
        let flat = self.run(STATIC_FLAT)?;
        let mut checks = vec![flat.completed()];
        checks.push(Check::from_verdict("static flat monotone", &theorem1_report(flat.records(), "phi")?));
        let m = column(flat.records(), &labels::l2sq("phi"))?;
        let ratio = (m[m.len() - 1] / m[0]).sqrt();
        let want = (-1.0f64).exp();
        let rel = (ratio - want).abs() / want;
        checks.push(Check::new("norm ratio at t=1 vs e^-1", rel <= 1e-3, format!("{ratio:.8} (rel. err {rel:.2e})")));

        let relax = self.run(RELAXING_CONFORMAL)?;
        checks.push(relax.completed());
        let v = theorem1_report(relax.records(), "phi")?;
        checks.push(Check::from_verdict("evolving conformal monotone where R >= 0", &v));
        Ok(checks)
    }

    fn energy(&self) -> Result<Vec<Check>> {
        let mut checks = Vec::new();
        for evolving in [false, true] {
            let bg = if evolving { "evolving" } else { "static" };
            let mut res = Vec::new();
            for n in [64, 128] {
                let run = self.run(&energy_text(n, evolving))?;
                if run.traj.status != RunStatus::Completed {
                    checks.push(run.completed());
                }
                let e = form_energy_identity_report(run.records(), "phi")?;
                res.push(e.max_residual);
                if n == 128 {
                    let tol = 1e-3 * e.initial;
                    checks.push(Check::new(
                        format!("{bg} residual"),
                        e.max_residual <= tol,
                        format!("{:.2e} <= {tol:.2e}", e.max_residual),
                    ));
                }
            }
            let order = convergence_order(res[0], res[1], 2.0);
            checks.push(Check::new(format!("{bg} order"), order >= 1.5, format!("{order:.2}")));
        }
        Ok(checks)
    }

    fn lemma_l1(&self) -> Result<Vec<Check>> {
        let conf = self.run(LEMMA_CONFORMAL)?;
        let mut checks = vec![conf.completed()];
        let rep = l1_monotonicity_report(conf.records())?;
        checks.push(Check::from_verdict("m + I <= m0 + tol (evolving)", &rep.inequality));
        let flat = self.run(LEMMA_FLAT)?;
        checks.push(flat.completed());
        let m = column(flat.records(), labels::MASS_U)?;
        let drift = m.iter().map(|x| (x - m[0]).abs()).fold(0.0, f64::max) / m[0];
        checks.push(Check::new("static flat mass conserved", drift <= 1e-6, format!("rel. drift {drift:.2e}")));
        Ok(checks)
    }

    fn length_bound(&self) -> Result<Vec<Check>> {
        let neck = self.run(NECK)?;
        let mut checks = vec![neck.completed()];
        let probe = &neck.monitors.probes[0];
        let rep = length_bound_report(probe, neck.records())?;
        // No node sits exactly on the neck, so the grid constant exceeds 2π
        // by O(h²); the bound is checked against both.
        let la = column(neck.records(), labels::L_ALPHA)?;
        let worst = la.iter().map(|l| l - TAU * (1.0 - 1e-6)).fold(f64::INFINITY, f64::min);
        checks.push(Check::new("L_alpha >= 2pi", worst >= 0.0, format!("{} checks, worst margin {worst:.3e}", la.len())));
        let c = rep.uniform_constant;
        checks.push(Check::from_verdict(format!("L_alpha >= grid constant {c:.6}"), &rep.uniform));
        checks.push(Check::from_verdict("pairing <= sup|phi| L_alpha", &rep.chain));
        Ok(checks)
    }

    fn max_principle(&self) -> Result<Vec<Check>> {
        let mut checks = Vec::new();
        for (name, text) in [("static flat", STATIC_FLAT), ("evolving conformal", RELAXING_CONFORMAL), ("neck", NECK)] {
            let run = self.run(text)?;
            checks.push(Check::from_verdict(name, &max_principle_report(run.records(), "phi")?));
        }
        Ok(checks)
    }

    fn gauge(&self) -> Result<Vec<Check>> {
        let mut checks = Vec::new();
        for (evolving, tol) in [(false, 1e-6), (true, 1e-4)] {
            let bg = if evolving { "evolving conformal" } else { "static flat" };
            let run = self.run(&gauge_text(evolving))?;
            if run.traj.status != RunStatus::Completed {
                checks.push(run.completed());
            }
            let dev = column(run.records(), labels::GAUGE_DEV)?;
            let worst = dev.iter().copied().fold(0.0, f64::max);
            let last = dev[dev.len() - 1];
            checks.push(Check::new(
                bg,
                worst <= tol,
                format!("at t = {}: {last:.2e}, worst {worst:.2e} <= {tol:e}", run.traj.last_t()),
            ));
        }
        Ok(checks)
    }

    fn cigar(&self) -> Result<Vec<Check>> {
        let run = self.run(CIGAR)?;
        let mut checks = vec![run.completed()];
        let sup = column(run.records(), labels::SUP_R)?;
        let lo = sup.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = sup.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        checks.push(Check::new(
            "sup R in [3.92, 4.08]",
            lo >= 3.92 && hi <= 4.08,
            format!("range [{lo:.4}, {hi:.4}] over {} records", sup.len()),
        ));
        let buffer = column(run.records(), labels::BUFFER_DEV)?.into_iter().fold(0.0, f64::max);
        checks.push(Check::new("buffer monitored", true, format!("max change {buffer:.2e} (report only)")));
        Ok(checks)
    }

    fn scaling(&self) -> Result<Vec<Check>> {
        let lambdas = [0.25, 1.0, 4.0, 100.0];
        let mut worst_r = 0.0f64;
        let mut worst_l = 0.0f64;
        for (grid, g, cycles) in scaling_backgrounds()? {
            for &lambda in &lambdas {
                worst_r = worst_r.max(curvature_scaling_residual(&grid, &g, lambda)?);
                let scaled = rescale_metric(&g, lambda)?;
                for c in &cycles {
                    let l = loop_length(&grid, c, &g)?;
                    let ls = loop_length(&grid, c, &scaled)?;
                    worst_l = worst_l.max((ls - lambda.sqrt() * l).abs() / (lambda.sqrt() * l));
                }
            }
        }
        let mut checks = vec![
            Check::new("R(lg) = R(g)/l", worst_r <= 1e-10, format!("worst rel. {worst_r:.1e}")),
            Check::new("L(lg) = sqrt(l) L(g)", worst_l <= 1e-10, format!("worst rel. {worst_l:.1e}")),
        ];

        let neck = self.run(NECK)?;
        let times: Vec<f64> = (0..6).map(|k| 0.1 * k as f64).collect();
        let schedule = RescalingSchedule::geometric(2.0, times)?;
        let i = neck.traj.grid.x.nearest(0.0);
        let rep = length_scaling_check(&neck.traj.grid, &neck.traj.snapshots, &schedule, &Cycle::ThetaCircle { i })?;
        let lens: Vec<String> = rep.entries.iter().map(|e| format!("{:.2}", e.rescaled_length)).collect();
        checks.push(Check::new(
            "rescaled neck lengths diverge under 2^k",
            rep.diverges && rep.sqrt_law_holds,
            lens.join(" < "),
        ));
        Ok(checks)
    }

    fn infrastructure(&self) -> Result<Vec<Check>> {
        let mut checks = Vec::new();
        let text = "geometry.family = conformal-torus\ngrid.nx = 32\ngrid.ny = 32\nmetric.preset = product\nform.phi = sin-x-dx\nsubsolution.preset = one-plus-cos\ntime.t_end = 0.1\nmonitors.energy = true\n";
        let spec = parse_scenario(text)?;
        let csv = |spec: &ScenarioSpec| -> Result<Vec<u8>> {
            let s = build(spec)?;
            monitors_csv(&integrate(&s.system, s.initial, &s.config)?.records)
        };
        let (a, b) = (csv(&spec)?, csv(&spec)?);
        checks.push(Check::new("repeated runs byte-identical", a == b, format!("{} bytes", a.len())));

        let mut round = 0;
        let mut ok = true;
        for t in scenario_texts().iter().map(String::as_str).chain([text]) {
            let s = parse_scenario(t)?;
            ok &= parse_scenario(&s.to_text())? == s;
            round += 1;
        }
        checks.push(Check::new("parse(serialize(spec)) = spec", ok, format!("{round} scenarios")));

        let pass = CriterionResult { id: 0, suite: "", checks: vec![Check::new("", true, "")] };
        let fail = CriterionResult { id: 0, suite: "", checks: vec![Check::new("", false, "")] };
        let codes = [exit_code(&[pass.clone(), pass.clone()]), exit_code(&[pass, fail]), exit_code(&[])];
        checks.push(Check::new("verify exit code reflects results", codes == [0, 1, 1], format!("{codes:?}")));
        Ok(checks)
    }
}

/// Backgrounds for the scaling laws, with cycles to measure.
fn scaling_backgrounds() -> Result<Vec<(Grid2D, MetricField, Vec<Cycle>)>> {
    let torus = Grid2D::flat_torus(32);
    let conformal = MetricField::conformal(&torus, torus.sample(|x, y| 0.3 * x.sin() * y.cos()))?;
    let diagonal: Vec<(usize, usize)> = (0..=32).flat_map(|k| [(k % 32, k % 32), ((k + 1) % 32, k % 32)]).take(64).collect();
    let torus_cycles = vec![Cycle::ThetaCircle { i: 5 }, Cycle::NodePath(diagonal)];

    let cyl = Grid2D::cylinder(64, 16, -10.0, 10.0)?;
    let neck = MetricField::warped(&cyl, vec![1.0; cyl.len()], cyl.sample(|x, _| 2.0 - (-x * x).exp()))?;

    let plane = Grid2D::plane(65, 12.0)?;
    let (cigar, _) = crate::oracles::cigar_oracle(&plane, crate::oracles::CIGAR_SUPPORT_LEVEL)?.value;
    let ring: Vec<(usize, usize)> = {
        let mut v = Vec::new();
        for i in 20..44 {
            v.push((i, 20));
        }
        for j in 20..44 {
            v.push((44, j));
        }
        for i in (21..=44).rev() {
            v.push((i, 44));
        }
        for j in (21..=44).rev() {
            v.push((20, j));
        }
        v
    };
    Ok(vec![
        (torus.clone(), conformal, torus_cycles),
        (cyl, neck, vec![Cycle::ThetaCircle { i: 32 }, Cycle::ThetaCircle { i: 10 }]),
        (plane, cigar, vec![Cycle::NodePath(ring)]),
    ])
}

/// Largest |Δ_d^{dδ}φ − Δ_d^{Bochner}φ| over nodes two away from truncated
/// ends.
pub fn bochner_gap(grid: &Grid2D, g: &MetricField, phi: &OneFormField) -> Result<f64> {
    let a = hodge_laplacian(phi, g, grid, HodgeMethod::DDelta)?;
    let b = hodge_laplacian(phi, g, grid, HodgeMethod::Bochner)?;
    let ny = grid.ny();
    Ok((0..grid.len())
        .filter(|&k| !grid.near_edge(k / ny, k % ny, 2))
        .map(|k| (a.x[k] - b.x[k]).abs().max((a.y[k] - b.y[k]).abs()))
        .fold(0.0, f64::max))
}

type Background = fn(usize) -> Result<(Grid2D, MetricField, Vec<OneFormField>)>;

fn bochner() -> Result<Vec<Check>> {
    let flat: Background = |n| {
        // Flat metric in sheared coordinates: all Christoffels are nonzero.
        let grid = Grid2D::flat_torus(n);
        let g = MetricField::general(
            &grid,
            vec![1.0; grid.len()],
            grid.sample(|_, y| 0.3 * y.cos()),
            grid.sample(|_, y| 1.0 + (0.3 * y.cos()).powi(2)),
        )?;
        let phi = OneFormField::new(grid.sample(|x, y| x.sin() * y.cos()), grid.sample(|x, _| x.cos()));
        Ok((grid, g, vec![phi]))
    };
    let cigar: Background = |n| {
        let grid = Grid2D::plane(n + 1, 4.0)?;
        let g = MetricField::conformal(&grid, grid.sample(|x, y| -0.5 * (1.0 + x * x + y * y).ln()))?;
        let bump = |x: f64, y: f64| (-(x * x + y * y) / 4.0).exp();
        let phi = OneFormField::new(grid.sample(move |x, y| bump(x, y) * y), grid.sample(move |x, y| bump(x, y) * (1.0 + x)));
        Ok((grid, g, vec![phi]))
    };
    let neck: Background = |n| {
        let grid = Grid2D::cylinder(n, n / 4, -3.0, 3.0)?;
        let g = MetricField::warped(&grid, vec![1.0; grid.len()], grid.sample(|x, _| 2.0 - (-x * x).exp()))?;
        let dtheta = OneFormField::closed(vec![0.0; grid.len()], vec![1.0; grid.len()]);
        let mixed = OneFormField::new(grid.sample(|x, y| (-x * x).exp() * y.sin()), vec![1.0; grid.len()]);
        Ok((grid, g, vec![dtheta, mixed]))
    };
    let mut checks = Vec::new();
    for (name, bg) in [("flat (sheared)", flat), ("cigar", cigar), ("neck", neck)] {
        let mut gaps: Vec<Vec<f64>> = Vec::new();
        for n in [64, 128, 256] {
            let (grid, g, forms) = bg(n)?;
            gaps.push(forms.iter().map(|phi| bochner_gap(&grid, &g, phi)).collect::<Result<_>>()?);
        }
        let mut orders = Vec::new();
        for f in 0..gaps[0].len() {
            for k in 1..3 {
                orders.push(convergence_order(gaps[k - 1][f], gaps[k][f], 2.0));
            }
        }
        let min = orders.iter().copied().fold(f64::INFINITY, f64::min);
        let finest = gaps[2].iter().copied().fold(0.0, f64::max);
        checks.push(Check::new(name, min >= 1.9, format!("min order {min:.3}, gap at 256 {finest:.1e}")));
    }
    Ok(checks)
}
