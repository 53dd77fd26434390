use super::spec::{BufferMode, Family, FormPreset, MetricPreset, ScenarioSpec, SubsolutionPreset};
use crate::flows::{integrate, FlowState, FlowSystem, RunConfig, Trajectory};
use crate::functionals::{BufferSpec, CohomologyProbe, Cycle, MonitorSet};
use crate::geometry::{Axis, Grid2D, MetricField, OneFormField};
use crate::oracles::{cigar_oracle, CIGAR_SUPPORT_LEVEL};
use crate::Result;

/// A scenario ready to integrate.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub system: FlowSystem,
    pub initial: FlowState,
    pub config: RunConfig,
}

pub fn build_grid(spec: &ScenarioSpec) -> Result<Grid2D> {
    let g = &spec.grid;
    let tau = std::f64::consts::TAU;
    match spec.family {
        Family::FlatTorus | Family::ConformalTorus => {
            Grid2D::new(Axis::periodic(g.nx, 0.0, tau), Axis::periodic(g.ny, 0.0, tau), (0, 0))
        }
        Family::WarpedCylinder => Grid2D::cylinder(g.nx, g.ny, g.x_min, g.x_max),
        Family::ConformalPlane => {
            let w = g.half_width;
            let (x, y) = (Axis::truncated(g.nx, -w, w), Axis::truncated(g.ny, -w, w));
            Grid2D::new(x, y, (x.nearest(0.0), y.nearest(0.0)))
        }
    }
}

fn build_metric(spec: &ScenarioSpec, grid: &Grid2D) -> Result<MetricField> {
    let n = grid.len();
    match (spec.family, spec.metric) {
        (Family::WarpedCylinder, MetricPreset::Flat) => {
            MetricField::warped(grid, vec![1.0; n], vec![1.0; n])
        }
        (Family::WarpedCylinder, MetricPreset::Neck { a, b, h }) => {
            MetricField::warped(grid, vec![h; n], grid.sample(move |x, _| a - b * (-x * x).exp()))
        }
        (_, MetricPreset::Flat) => Ok(MetricField::flat(grid)),
        (_, MetricPreset::Sheared { epsilon: e }) => MetricField::general(
            grid,
            vec![1.0; n],
            grid.sample(move |_, y| e * y.cos()),
            grid.sample(move |_, y| 1.0 + (e * y.cos()).powi(2)),
        ),
        (_, MetricPreset::Sine { amplitude: a }) => MetricField::conformal(grid, grid.sample(move |x, _| a * x.sin())),
        (_, MetricPreset::Product { amplitude: a }) => {
            MetricField::conformal(grid, grid.sample(move |x, y| a * x.sin() * y.cos()))
        }
        (_, MetricPreset::Cigar) => Ok(cigar_oracle(grid, CIGAR_SUPPORT_LEVEL)?.value.0),
        (_, MetricPreset::Neck { .. }) => unreachable!("neck is rejected off the cylinder at parse time"),
    }
}

fn build_form(preset: FormPreset, grid: &Grid2D) -> OneFormField {
    let n = grid.len();
    match preset {
        FormPreset::Dtheta => OneFormField::closed(vec![0.0; n], vec![1.0; n]),
        FormPreset::SinXDx => OneFormField::closed(grid.sample(|x, _| x.sin()), vec![0.0; n]),
        FormPreset::DthetaPlusExact { coeff: c } => {
            OneFormField::closed(grid.sample(move |x, _| c * x.cos()), vec![1.0; n])
        }
        FormPreset::Zero => OneFormField::closed(vec![0.0; n], vec![0.0; n]),
    }
}

fn build_subsolution(preset: SubsolutionPreset, grid: &Grid2D) -> Option<Vec<f64>> {
    match preset {
        SubsolutionPreset::None => None,
        SubsolutionPreset::OnePlusCos => Some(grid.sample(|x, _| 1.0 + x.cos())),
        SubsolutionPreset::Bump { center, width, height } => Some(grid.sample(move |x, _| {
            let s = (x - center) / width;
            if s.abs() < 1.0 {
                height * (1.0 - s * s).powi(3)
            } else {
                0.0
            }
        })),
        SubsolutionPreset::Constant { value } => Some(vec![value; grid.len()]),
    }
}

fn buffer(spec: &ScenarioSpec) -> Option<BufferSpec> {
    let enforce = match (spec.monitors.buffer, spec.family) {
        (BufferMode::Off, _) => return None,
        (BufferMode::Auto, Family::FlatTorus | Family::ConformalTorus) => return None,
        (BufferMode::Auto, Family::WarpedCylinder) | (BufferMode::On, _) => true,
        (BufferMode::Auto, Family::ConformalPlane) | (BufferMode::ReportOnly, _) => false,
    };
    Some(BufferSpec {
        fraction: spec.monitors.buffer_fraction,
        threshold: spec.monitors.buffer_threshold,
        enforce,
    })
}

/// Materializes the grid, initial data, probes and run configuration.
pub fn build(spec: &ScenarioSpec) -> Result<Scenario> {
    let grid = build_grid(spec)?;
    let mut system = FlowSystem::new(grid.clone()).with_ricci_path(spec.ricci_path).with_hodge(spec.hodge);
    if !spec.evolve_metric {
        system = system.static_metric();
    }
    if spec.family == Family::ConformalPlane {
        // Evolve only the inscribed disk; its rim keeps a full stencil inside.
        let rim = spec.grid.half_width - 2.0 * grid.hx().max(grid.hy());
        system = system.freeze_where(move |x, y| x.hypot(y) > rim);
    }

    let mut initial = FlowState::new(build_metric(spec, &grid)?);
    for f in &spec.forms {
        initial = initial.with_form(f.label.clone(), build_form(f.preset, &grid));
    }
    if let Some(label) = &spec.gauge {
        initial = initial.with_gauge(label).expect("gauge form checked at parse time");
    }
    if let Some(u) = build_subsolution(spec.subsolution, &grid) {
        initial = initial.with_subsolution(u, spec.sink);
    }

    let mut probes = Vec::with_capacity(spec.probes.len());
    for p in &spec.probes {
        let base = initial.form(&p.form).expect("probe form checked at parse time").clone();
        let cycle = Cycle::ThetaCircle { i: grid.x.nearest(p.x) };
        let probe = CohomologyProbe::new(&grid, p.label.clone(), p.form.clone(), base, cycle)?;
        probe.require_infinite_order()?;
        probes.push(probe);
    }
    let monitors = MonitorSet {
        energy: spec.monitors.energy,
        bochner_gap: spec.monitors.bochner_gap,
        probes,
        buffer: buffer(spec),
    };
    let config = RunConfig {
        horizon: spec.t_end,
        integrator: spec.integrator.clone(),
        monitors,
        snapshot_every: spec.snapshots,
    };
    Ok(Scenario { system, initial, config })
}

pub fn run_scenario(spec: &ScenarioSpec) -> Result<Trajectory> {
    let s = build(spec)?;
    integrate(&s.system, s.initial, &s.config)
}
