use serde::{Deserialize, Serialize};

use super::monitor::{labels, MonitorRecord};
use super::probe::CohomologyProbe;
use crate::{Error, Result};

/// Pass/fail outcome of one check over a record series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    /// Smallest (allowed − observed) over all checked records; negative
    /// means violated. `None` when nothing was checked.
    pub worst_margin: Option<f64>,
    /// Records (or record pairs) the check was applied to.
    pub checked: usize,
    /// Whether min R ≥ 0 held at every record of the series.
    pub r_nonneg_held: bool,
    pub note: String,
}

impl Verdict {
    fn new(name: &str, records: &[MonitorRecord]) -> Self {
        Verdict {
            name: name.to_string(),
            pass: true,
            worst_margin: None,
            checked: 0,
            r_nonneg_held: records.iter().all(MonitorRecord::r_nonneg),
            note: String::new(),
        }
    }

    /// Records one check with margin `allowed − observed`.
    fn check(&mut self, margin: f64) {
        self.checked += 1;
        // NaN is reported as the most negative finite margin.
        let margin = if margin.is_nan() { f64::MIN } else { margin };
        if self.worst_margin.map_or(true, |w| margin < w) {
            self.worst_margin = Some(margin);
        }
        if margin < 0.0 {
            self.pass = false;
        }
    }

    fn noted(mut self, note: impl Into<String>) -> Self {
        self.note = note.into();
        self
    }
}

fn series(records: &[MonitorRecord], label: &str) -> Result<Vec<f64>> {
    if records.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    records.iter().map(|r| r.require(label)).collect()
}

/// Non-increase of `label` between consecutive records (restricted to
/// pairs where R ≥ 0 held at both ends when `conditional`), with per-step
/// tolerance `rel_tol`·initial.
fn non_increasing(
    name: &str,
    records: &[MonitorRecord],
    values: &[f64],
    rel_tol: f64,
    conditional: bool,
) -> Verdict {
    let mut v = Verdict::new(name, records);
    let tol = rel_tol * values[0].abs();
    for k in 1..values.len() {
        if conditional && !(records[k - 1].r_nonneg() && records[k].r_nonneg()) {
            continue;
        }
        v.check(values[k - 1] + tol - values[k]);
    }
    v
}

/// Theorem 1: ‖φ(t)‖_{L²} non-increasing on the steps where R ≥ 0 held,
/// per-step tolerance 1e−8·initial.
pub fn theorem1_report(records: &[MonitorRecord], form: &str) -> Result<Verdict> {
    let norms: Vec<f64> = series(records, &labels::l2sq(form))?.iter().map(|m| m.sqrt()).collect();
    let v = non_increasing("L2 norm non-increasing where R >= 0", records, &norms, 1e-8, true);
    let note = format!("{} of {} step pairs in the R >= 0 domain", v.checked, records.len().saturating_sub(1));
    Ok(v.noted(note))
}

/// sup|φ(t)|_g non-increasing with per-step tolerance 1e−8·initial. The
/// series is the certified upper bound for |Φ|(t).
pub fn max_principle_report(records: &[MonitorRecord], form: &str) -> Result<Verdict> {
    let sup = series(records, &labels::sup(form))?;
    Ok(non_increasing("sup norm non-increasing", records, &sup, 1e-8, false))
}

/// Energy identity d/dt∫|φ|²dv = −2∫|∇φ|²dv − ∫R|φ|²dv between records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    /// |Δm/Δt + 2∫|∇φ|² + ∫R|φ|²| per record pair, right side averaged.
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    /// m(0) = ∫|φ(0)|²dv.
    pub initial: f64,
    /// Present when R ≥ 0 held throughout: m non-increasing (1e−8·m(0)).
    pub monotone: Option<Verdict>,
}

pub fn form_energy_identity_report(records: &[MonitorRecord], form: &str) -> Result<EnergyReport> {
    let m = series(records, &labels::l2sq(form))?;
    let grad = series(records, &labels::grad(form))?;
    let curv = series(records, &labels::curv(form))?;
    let rhs = |k: usize| -2.0 * grad[k] - curv[k];
    let residuals: Vec<f64> = (1..m.len())
        .map(|k| {
            let dt = records[k].t - records[k - 1].t;
            ((m[k] - m[k - 1]) / dt - 0.5 * (rhs(k) + rhs(k - 1))).abs()
        })
        .collect();
    let max_residual = residuals.iter().copied().fold(0.0, f64::max);
    let monotone = records
        .iter()
        .all(MonitorRecord::r_nonneg)
        .then(|| non_increasing("energy non-increasing", records, &m, 1e-8, false));
    Ok(EnergyReport { residuals, max_residual, initial: m[0], monotone })
}

/// Observed order log(e_coarse/e_fine)/log(ratio).
pub fn convergence_order(coarse: f64, fine: f64, ratio: f64) -> f64 {
    (coarse / fine).ln() / ratio.ln()
}

/// Integral inequality m(t) + ∫₀ᵗ∫uR dv dt ≤ m(0) + tol_accum for a scalar
/// subsolution, plus plain L¹ monotonicity when R ≥ 0 held throughout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct L1Report {
    /// Accumulated ∫₀ᵗ∫uR dv dt at each record (trapezoid in time).
    pub accumulated: Vec<f64>,
    /// 1e−6·m(0) + 10·dt²·T·sup|R|·sup u.
    pub tol_accum: f64,
    pub inequality: Verdict,
    pub monotone: Option<Verdict>,
}

pub fn l1_monotonicity_report(records: &[MonitorRecord]) -> Result<L1Report> {
    let m = series(records, labels::MASS_U)?;
    let ur = series(records, labels::INT_UR)?;
    let sup_r = series(records, labels::SUP_R)?;
    let min_r = series(records, labels::MIN_R)?;
    let max_u = series(records, labels::MAX_U)?;
    let mut acc = vec![0.0; m.len()];
    for k in 1..m.len() {
        let dt = records[k].t - records[k - 1].t;
        acc[k] = acc[k - 1] + 0.5 * dt * (ur[k] + ur[k - 1]);
    }
    let dt_max = records.iter().map(|r| r.dt).fold(0.0, f64::max);
    let horizon = records.last().map_or(0.0, |r| r.t);
    let r_bound = sup_r.iter().chain(&min_r).fold(0.0f64, |a, v| a.max(v.abs()));
    let u_bound = max_u.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let tol_accum = 1e-6 * m[0].abs() + 10.0 * dt_max * dt_max * horizon * r_bound * u_bound;
    let mut inequality = Verdict::new("m(t) + I(t) <= m(0) + tol", records);
    for k in 0..m.len() {
        inequality.check(m[0] + tol_accum - (m[k] + acc[k]));
    }
    let monotone = inequality.r_nonneg_held.then(|| {
        let mut v = Verdict::new("L1 mass non-increasing", records);
        for k in 1..m.len() {
            v.check(m[k - 1] + tol_accum - m[k]);
        }
        v
    });
    Ok(L1Report { accumulated: acc, tol_accum, inequality, monotone })
}

/// Length lower bound for a probe: the chain ⟨Φ,α⟩ ≤ sup|φ(t)|·L_α(t) and
/// the uniform bound L_α(t) ≥ ⟨Φ,α⟩/‖φ₀‖_{g(0)}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthBoundReport {
    /// ⟨Φ,α⟩/‖φ₀‖_{g(0)}.
    pub uniform_constant: f64,
    pub chain: Verdict,
    pub uniform: Verdict,
}

pub fn length_bound_report(probe: &CohomologyProbe, records: &[MonitorRecord]) -> Result<LengthBoundReport> {
    probe.require_infinite_order()?;
    let sup = series(records, &labels::sup(&probe.form_label))?;
    let la = series(records, labels::L_ALPHA)?;
    let pairing = probe.pairing;
    let slack = 1e-6 * pairing;
    let c = pairing / sup[0];
    let mut chain = Verdict::new("pairing <= sup|phi| * L_alpha", records);
    let mut uniform = Verdict::new("L_alpha >= pairing / |phi0|", records);
    for k in 0..records.len() {
        chain.check(sup[k] * la[k] - (pairing - slack));
        uniform.check(la[k] - (c - 1e-6 * c));
    }
    Ok(LengthBoundReport { uniform_constant: c, chain, uniform })
}

/// Largest value of `label` stays within `tol`.
pub fn bounded_report(name: &str, records: &[MonitorRecord], label: &str, tol: f64) -> Result<Verdict> {
    let s = series(records, label)?;
    let mut v = Verdict::new(name, records);
    for x in s {
        v.check(tol - x);
    }
    Ok(v)
}

/// |dφ(t)| ≤ 10·|dφ(0)|, floored at 1e−10 for forms that start closed to
/// roundoff.
pub fn closedness_report(records: &[MonitorRecord], form: &str) -> Result<Verdict> {
    let s = series(records, &labels::closed(form))?;
    let tol = (10.0 * s[0]).max(1e-10);
    bounded_report("closedness preserved", records, &labels::closed(form), tol)
}

/// Relative drift of ⟨Φ,α⟩ evaluated on φ(t), bounded by 1e−6.
pub fn pairing_drift_report(probe: &CohomologyProbe, records: &[MonitorRecord]) -> Result<Verdict> {
    let s = series(records, &labels::pairing(&probe.label))?;
    let mut v = Verdict::new("pairing invariant", records);
    let scale = probe.pairing.abs().max(f64::MIN_POSITIVE);
    for x in s {
        v.check(1e-6 - (x - probe.pairing).abs() / scale);
    }
    Ok(v)
}
