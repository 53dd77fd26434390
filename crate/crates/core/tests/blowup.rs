use std::f64::consts::PI;

use ricciform::blowup::*;
use ricciform::flows::{integrate, FlowState, FlowSystem, IntegratorSpec, RunConfig};
use ricciform::functionals::{loop_length, Cycle, MonitorSet};
use ricciform::geometry::{curvature, reduced_scalar_curvature, MetricField, OneFormField};
use ricciform::oracles::cigar_oracle;
use ricciform::{Error, Grid2D};

fn neck_metric(grid: &Grid2D) -> MetricField {
    MetricField::warped(grid, vec![1.0; grid.len()], grid.sample(|x, _| 2.0 - (-x * x).exp())).unwrap()
}

#[test]
fn unit_scale_is_the_identity() {
    let grid = Grid2D::cylinder(32, 8, -3.0, 3.0).unwrap();
    let g = neck_metric(&grid);
    let s = rescale_metric(&g, 1.0).unwrap();
    assert_eq!((&s.gxx, &s.gxy, &s.gyy), (&g.gxx, &g.gxy, &g.gyy));
    assert!(rescale_metric(&g, 0.0).is_err());
    assert!(rescale_metric(&g, -2.0).is_err());
}

#[test]
fn flat_stays_flat() {
    let grid = Grid2D::flat_torus(16);
    for lambda in [0.25, 4.0, 100.0] {
        let g = rescale_metric(&MetricField::flat(&grid), lambda).unwrap();
        let c = curvature(&g, &grid).unwrap();
        assert!(c.scalar.iter().all(|r| *r == 0.0));
    }
}

#[test]
fn curvature_scales_inversely() {
    let torus = Grid2D::flat_torus(48);
    let general = MetricField::general(
        &torus,
        torus.sample(|x, y| 1.0 + 0.2 * x.sin() * y.cos()),
        torus.sample(|x, y| 0.1 * (x + y).sin()),
        torus.sample(|x, _| 1.0 + 0.1 * x.cos()),
    )
    .unwrap();
    let conformal = MetricField::conformal(&torus, torus.sample(|x, y| 0.1 * x.sin() + 0.05 * y.cos())).unwrap();
    let cyl = Grid2D::cylinder(128, 16, -10.0, 10.0).unwrap();
    let warped = neck_metric(&cyl);
    for lambda in [0.25, 1.0, 4.0, 100.0] {
        for (grid, g) in [(&torus, &general), (&torus, &conformal), (&cyl, &warped)] {
            let r = curvature_scaling_residual(grid, g, lambda).unwrap();
            assert!(r <= 1e-10, "{} λ = {lambda}: {r:e}", g.tag());
        }
    }
}

#[test]
fn cigar_curvature_drops_by_lambda() {
    let grid = Grid2D::plane(257, 12.0).unwrap();
    let (g, exact) = cigar_oracle(&grid, 1e-2).unwrap().value;
    let o = grid.idx(grid.origin.0, grid.origin.1);
    assert_eq!(exact.scalar[o], 4.0);
    let r = reduced_scalar_curvature(&g, &grid).unwrap();
    let scaled = reduced_scalar_curvature(&rescale_metric(&g, 4.0).unwrap(), &grid).unwrap();
    assert!((scaled[o] - r[o] / 4.0).abs() < 1e-12);
    // The grid value at the tip carries the O(h²) stencil error.
    assert!((scaled[o] - 1.0).abs() < 1e-2, "{}", scaled[o]);
}

#[test]
fn lengths_scale_with_the_square_root() {
    let grid = Grid2D::cylinder(32, 32, -3.0, 3.0).unwrap();
    let flat = MetricField::flat(&grid);
    let c = Cycle::ThetaCircle { i: 7 };
    let l1 = loop_length(&grid, &c, &rescale_metric(&flat, 1.0).unwrap()).unwrap();
    let l4 = loop_length(&grid, &c, &rescale_metric(&flat, 4.0).unwrap()).unwrap();
    assert!((l1 - 2.0 * PI).abs() < 1e-13);
    assert!((l4 - 4.0 * PI).abs() < 1e-13);
}

#[test]
fn schedules_parse_and_validate() {
    let s = RescalingSchedule::parse("explicit:0.1@4, 0.2@16").unwrap();
    assert_eq!(s.times, vec![0.1, 0.2]);
    assert_eq!(s.lambdas, vec![4.0, 16.0]);
    let s = RescalingSchedule::parse("geometric:2:0,0.1,0.2,0.3").unwrap();
    assert_eq!(s.lambdas, vec![1.0, 2.0, 4.0, 8.0]);
    let s = RescalingSchedule::parse("curvature:0.1,0.3").unwrap();
    assert_eq!(s.policy, SchedulePolicy::ByCurvature);
    for bad in ["", "explicit:0.2@1,0.1@2", "explicit:0.1@0", "curvature:", "spiral:1", "explicit:0.1"] {
        assert!(matches!(RescalingSchedule::parse(bad), Err(Error::InvalidSchedule(_))), "{bad}");
    }
}

#[test]
fn empty_trajectory_cannot_be_rescaled() {
    let grid = Grid2D::flat_torus(8);
    let s = RescalingSchedule::explicit(vec![(0.0, 2.0)]).unwrap();
    assert!(matches!(rescale_trajectory(&grid, &[], &s), Err(Error::EmptyTrajectory)));
}

fn neck_snapshots() -> (Grid2D, Vec<FlowState>) {
    let grid = Grid2D::cylinder(128, 16, -10.0, 10.0).unwrap();
    let sys = FlowSystem::new(grid.clone());
    let state = FlowState::new(neck_metric(&grid));
    let cfg = RunConfig {
        horizon: 0.3,
        integrator: IntegratorSpec::default(),
        monitors: MonitorSet::default(),
        snapshot_every: 20,
    };
    let traj = integrate(&sys, state, &cfg).unwrap();
    (grid, traj.snapshots)
}

#[test]
fn rescaled_family_records_offsets() {
    let (grid, snaps) = neck_snapshots();
    let s = RescalingSchedule::explicit(vec![(0.05, 2.0), (0.1, 4.0)]).unwrap();
    let fam = rescale_trajectory(&grid, &snaps, &s).unwrap();
    let spacing = snaps[1].t - snaps[0].t;
    for m in &fam {
        assert!(m.offset.abs() <= 0.5 * spacing + 1e-12);
        assert_eq!(m.rescaled_t, m.lambda * m.offset);
    }
    let by_r = rescale_trajectory(&grid, &snaps, &RescalingSchedule::by_curvature(vec![0.0, 0.2]).unwrap()).unwrap();
    for m in &by_r {
        // λ = sup|R| normalizes the rescaled curvature to 1.
        assert!((m.sup_r - 1.0).abs() < 1e-12, "{}", m.sup_r);
    }
}

#[test]
fn rescaled_lengths_diverge_on_the_neck() {
    let (grid, snaps) = neck_snapshots();
    let times: Vec<f64> = (0..6).map(|k| 0.05 * k as f64).collect();
    let s = RescalingSchedule::geometric(2.0, times).unwrap();
    let rep = length_scaling_check(&grid, &snaps, &s, &Cycle::ThetaCircle { i: 64 }).unwrap();
    assert!(rep.sqrt_law_holds, "{rep:?}");
    assert!(rep.diverges);
    assert!(rep.length_lower_bound >= 2.0 * PI * (1.0 - 1e-6));
    // The linear-in-λ reading is off whenever λ ≠ 1.
    assert_eq!(rep.entries[0].linear_law_deviation, 0.0);
    assert!(rep.entries[1..].iter().all(|e| e.linear_law_deviation > 0.1));
}

#[test]
fn compactly_supported_form_has_zero_profile_outside() {
    let grid = Grid2D::cylinder(201, 8, -10.0, 10.0).unwrap();
    let g = MetricField::flat(&grid);
    let bump = grid.sample(|x, _| if x.abs() < 1.0 { (1.0 - x * x).powi(2) } else { 0.0 });
    let phi = OneFormField::new(vec![0.0; grid.len()], bump);
    for sigma in [1.0, 3.0] {
        let spec = DecayMonitorSpec { sigma, center: (100, 0), radii: vec![0.0, 1.0, 2.0, 4.0, 6.0] };
        let p = decay_monitor(&grid, &g, DecayField::Form(&phi), &spec).unwrap();
        assert!(p.values[0] > 0.0);
        assert!(p.values[1..].iter().all(|v| *v == 0.0), "{p:?}");
    }
}

#[test]
fn cigar_curvature_decays_at_order_one() {
    let grid = Grid2D::plane(201, 12.0).unwrap();
    let (g, exact) = cigar_oracle(&grid, 1e-2).unwrap().value;
    let spec = DecayMonitorSpec { sigma: 1.0, center: grid.origin, radii: vec![0.5, 1.0, 1.5, 2.0, 2.5] };
    let p = decay_monitor(&grid, &g, DecayField::Scalar(&exact.scalar), &spec).unwrap();
    assert!(p.decreasing_tail, "{p:?}");
    assert!(p.values.last().unwrap() < &p.values[0]);
}

#[test]
fn gaussian_data_decays_at_high_order() {
    let grid = Grid2D::cylinder(401, 8, -20.0, 20.0).unwrap();
    let g = MetricField::flat(&grid);
    let phi = OneFormField::new(vec![0.0; grid.len()], grid.sample(|x, _| (-x * x).exp()));
    let radii: Vec<f64> = (0..16).map(|k| k as f64).collect();
    let mut tails = Vec::new();
    for sigma in [1.0, 3.0] {
        let spec = DecayMonitorSpec { sigma, center: (200, 0), radii: radii.clone() };
        let p = decay_monitor(&grid, &g, DecayField::Form(&phi), &spec).unwrap();
        assert!(p.decreasing_tail);
        tails.push(*p.values.last().unwrap());
    }
    assert!(tails[1] < 1e-80, "{tails:?}");
    let start = DecayMonitorSpec { sigma: 3.0, center: (200, 0), radii: radii.clone() };
    let p0 = decay_monitor(&grid, &g, DecayField::Form(&phi), &start).unwrap();
    assert!(p0.preserved_by(&p0));
}

#[test]
fn radius_inside_the_buffer_is_rejected() {
    let grid = Grid2D::cylinder(101, 8, -10.0, 10.0).unwrap();
    let g = MetricField::flat(&grid);
    let phi = OneFormField::zeros(grid.len());
    let spec = DecayMonitorSpec { sigma: 1.0, center: (50, 0), radii: vec![1.0, 9.5] };
    assert!(matches!(
        decay_monitor(&grid, &g, DecayField::Form(&phi), &spec),
        Err(Error::RadiusBeyondBuffer { .. })
    ));
}
