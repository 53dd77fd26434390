use ricciform::flows::{
    cfl_dt, form_heat_step, gauge_diffusion_step, integrate, ricci_flow_step, scalar_heat_step,
    FlowState, FlowSystem, IntegratorSpec, RunConfig, RunStatus, Scheme, TimeStep,
};
use ricciform::functionals::{labels, MonitorSet};
use ricciform::geometry::{closedness_residual, exterior_derivative, MetricField, OneFormField, ScalarField};
use ricciform::oracles::{cigar_oracle, flat_spectral_form_oracle, flat_spectral_oracle, TrigMode, TrigSeries};
use ricciform::{Error, Grid2D};

fn spec(dt_max: f64) -> IntegratorSpec {
    IntegratorSpec { dt_max, ..IntegratorSpec::default() }
}

fn run(sys: &FlowSystem, state: FlowState, horizon: f64, integrator: IntegratorSpec) -> ricciform::flows::Trajectory {
    let cfg = RunConfig { horizon, integrator, monitors: MonitorSet::default(), snapshot_every: 0 };
    integrate(sys, state, &cfg).unwrap()
}

fn sin_x_dx(grid: &Grid2D) -> OneFormField {
    OneFormField::closed(grid.sample(|x, _| x.sin()), vec![0.0; grid.len()])
}

fn dtheta(grid: &Grid2D) -> OneFormField {
    OneFormField::closed(vec![0.0; grid.len()], vec![1.0; grid.len()])
}

fn neck(nx: usize, nt: usize) -> (FlowSystem, MetricField) {
    let grid = Grid2D::cylinder(nx, nt, -10.0, 10.0).unwrap();
    let h = vec![1.0; grid.len()];
    let f = grid.sample(|x, _| 2.0 - (-x * x).exp());
    let g = MetricField::warped(&grid, h, f).unwrap();
    (FlowSystem::new(grid), g)
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

#[test]
fn flat_torus_cfl_is_a_fifth_of_h_squared() {
    let grid = Grid2D::flat_torus(64);
    let h = grid.hx();
    let sys = FlowSystem::new(grid.clone());
    let state = FlowState::new(MetricField::flat(&grid));
    match cfl_dt(&sys, &state, &spec(f64::INFINITY)).unwrap() {
        TimeStep::Dt(dt) => assert!((dt - 0.2 * h * h).abs() < 1e-15, "{dt}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn curvature_shrinks_the_step() {
    let grid = Grid2D::plane(64, 12.0).unwrap();
    let (g, _) = cigar_oracle(&grid, 1e-2).unwrap().value;
    let sys = FlowSystem::new(grid.clone());
    let TimeStep::Dt(curved) = cfl_dt(&sys, &FlowState::new(g), &spec(f64::INFINITY)).unwrap() else {
        panic!()
    };
    let flat = 0.2 * grid.hx() * grid.hx();
    assert!(curved < flat, "{curved} vs {flat}");
}

#[test]
fn flat_metric_does_not_move() {
    let grid = Grid2D::flat_torus(16);
    let sys = FlowSystem::new(grid.clone());
    let s0 = FlowState::new(MetricField::flat(&grid));
    let s1 = ricci_flow_step(&sys, &s0, 1e-3, Scheme::Rk4).unwrap();
    assert_eq!(s0.metric, s1.metric);
    assert_eq!(s1.step, 1);
}

#[test]
fn gauss_bonnet_holds_on_the_conformal_torus() {
    let grid = Grid2D::flat_torus(64);
    let u = grid.sample(|x, _| 0.1 * x.sin());
    let sys = FlowSystem::new(grid.clone());
    let state = FlowState::new(MetricField::conformal(&grid, u).unwrap());
    let traj = run(&sys, state, 0.2, spec(1.0));
    assert_eq!(traj.status, RunStatus::Completed);
    assert!(traj.records.len() > 10);
    for r in &traj.records {
        assert!(r.get(labels::INT_R).unwrap().abs() < 1e-6, "{r:?}");
    }
}

#[test]
fn conformal_flow_stays_conformal_and_matches_general_path() {
    let grid = Grid2D::flat_torus(32);
    let u = grid.sample(|x, y| 0.1 * x.sin() * y.cos());
    let g = MetricField::conformal(&grid, u).unwrap();
    let sys = FlowSystem::new(grid.clone());
    let gen = FlowSystem::new(grid.clone()).with_ricci_path(ricciform::flows::RicciPath::General);
    let a = ricci_flow_step(&sys, &FlowState::new(g.clone()), 1e-3, Scheme::Rk2).unwrap();
    let b = ricci_flow_step(&gen, &gen.prepare(FlowState::new(g)), 1e-3, Scheme::Rk2).unwrap();
    assert_eq!(a.metric.tag(), "conformal");
    assert_eq!(b.metric.tag(), "general");
    // Both paths solve the same equation; they differ by the discretization
    // error of the general curvature formula times dt.
    assert!(max_abs_diff(&a.metric.gxx, &b.metric.gxx) < 1e-5);
}

#[test]
fn harmonic_form_is_stationary_on_the_flat_torus() {
    let grid = Grid2D::flat_torus(32);
    let sys = FlowSystem::new(grid.clone()).static_metric();
    let s0 = FlowState::new(MetricField::flat(&grid)).with_form("phi", dtheta(&grid));
    let s1 = form_heat_step(&sys, &s0, 1e-3, Scheme::Rk2).unwrap();
    assert_eq!(s0.forms, s1.forms);
}

#[test]
fn form_heat_matches_the_spectral_solution() {
    // The collocated dδ operator has symbol −sin²(h)/h² on sin x, so at
    // t = 1 the relative error is ≈ h²/3 ≈ 8e−4 at n = 128.
    let errs: Vec<f64> = [64usize, 128]
        .iter()
        .map(|&n| {
            let grid = Grid2D::flat_torus(n);
            let g = MetricField::flat(&grid);
            let sys = FlowSystem::new(grid.clone()).static_metric();
            let state = FlowState::new(g.clone()).with_form("phi", sin_x_dx(&grid));
            let traj = run(&sys, state, 1.0, spec(2e-4));
            assert_eq!(traj.status, RunStatus::Completed);
            assert_eq!(traj.last_t(), 1.0);
            let s = TrigSeries(vec![TrigMode::new(1, 0, 0.0, 1.0)]);
            let z = TrigSeries(vec![]);
            let exact = flat_spectral_form_oracle((&s, &z), 1.0, &grid, &g).unwrap().value;
            let phi = traj.final_state.form("phi").unwrap();
            max_abs_diff(&phi.x, &exact.x) / (-1.0f64).exp()
        })
        .collect();
    assert!(errs[1] < 1e-3, "{errs:?}");
    let order = (errs[0] / errs[1]).log2();
    assert!(order > 1.9, "order {order}");
}

#[test]
fn gauge_vanishes_for_harmonic_data() {
    let grid = Grid2D::flat_torus(32);
    let sys = FlowSystem::new(grid.clone()).static_metric();
    let s0 = FlowState::new(MetricField::flat(&grid)).with_form("phi", dtheta(&grid)).with_gauge("phi").unwrap();
    let mut s = s0;
    for _ in 0..10 {
        s = gauge_diffusion_step(&sys, &s, 1e-3, Scheme::Rk2).unwrap();
    }
    assert!(s.gauge.unwrap().f.values.iter().all(|v| *v == 0.0));
}

#[test]
fn gauge_representative_tracks_the_direct_flow() {
    let grid = Grid2D::flat_torus(128);
    let sys = FlowSystem::new(grid.clone()).static_metric();
    let state = FlowState::new(MetricField::flat(&grid))
        .with_form("phi", sin_x_dx(&grid))
        .with_gauge("phi")
        .unwrap();
    let traj = run(&sys, state, 1.0, spec(2e-4));
    let end = &traj.final_state;
    let rep = end.gauge_representative(&grid).unwrap();
    let phi = end.form("phi").unwrap();
    let dev = max_abs_diff(&phi.x, &rep.x).max(max_abs_diff(&phi.y, &rep.y));
    assert!(dev <= 1e-6, "{dev}");
}

#[test]
fn gauge_step_without_gauge_is_an_error() {
    let grid = Grid2D::flat_torus(8);
    let sys = FlowSystem::new(grid.clone());
    let s = FlowState::new(MetricField::flat(&grid));
    assert!(matches!(gauge_diffusion_step(&sys, &s, 1e-3, Scheme::Rk2), Err(Error::IncompleteTrajectory(_))));
    assert!(matches!(scalar_heat_step(&sys, &s, 1e-3, Scheme::Rk2), Err(Error::IncompleteTrajectory(_))));
}

#[test]
fn constant_scalar_is_stationary() {
    let grid = Grid2D::flat_torus(16);
    let sys = FlowSystem::new(grid.clone()).static_metric();
    let s0 = FlowState::new(MetricField::flat(&grid)).with_subsolution(vec![3.0; grid.len()], 0.0);
    let s1 = scalar_heat_step(&sys, &s0, 1e-3, Scheme::Rk4).unwrap();
    assert_eq!(s0.subsolution, s1.subsolution);
}

#[test]
fn scalar_heat_matches_the_spectral_solution() {
    let grid = Grid2D::flat_torus(128);
    let g = MetricField::flat(&grid);
    let sys = FlowSystem::new(grid.clone()).static_metric();
    let state = FlowState::new(g.clone()).with_subsolution(grid.sample(|x, _| 1.0 + x.cos()), 0.0);
    let traj = run(&sys, state, 1.0, spec(1.0));
    let s = TrigSeries(vec![TrigMode::constant(1.0), TrigMode::new(1, 0, 1.0, 0.0)]);
    let exact = flat_spectral_oracle(&s, 1.0, &grid, &g).unwrap();
    let u = &traj.final_state.subsolution.unwrap().u.values;
    let err = max_abs_diff(u, &exact.value);
    assert!(err < 1e-4 + exact.error_bound, "{err}");
}

#[test]
fn sink_decays_a_constant_exponentially() {
    let grid = Grid2D::flat_torus(16);
    let sys = FlowSystem::new(grid.clone()).static_metric();
    let state = FlowState::new(MetricField::flat(&grid)).with_subsolution(vec![1.0; grid.len()], 0.5);
    let traj = run(&sys, state, 1.0, spec(1e-3));
    let u = &traj.final_state.subsolution.unwrap().u.values;
    assert!((u[0] - (-0.5f64).exp()).abs() < 1e-6);
}

#[test]
fn bump_on_the_cylinder_stays_nonnegative() {
    let (sys, g) = neck(128, 16);
    let grid = sys.grid.clone();
    let bump = grid.sample(|x, _| if x.abs() < 2.0 { (1.0 - (x / 2.0).powi(2)).powi(3) } else { 0.0 });
    let state = FlowState::new(g).with_subsolution(bump, 0.0);
    let cfg = RunConfig { horizon: 0.5, integrator: spec(1.0), monitors: MonitorSet::default(), snapshot_every: 0 };
    let traj = integrate(&sys, state, &cfg).unwrap();
    for r in &traj.records {
        assert!(r.get(labels::MIN_U).unwrap() >= -1e-10, "{r:?}");
    }
}

#[test]
fn zero_budget_gives_an_empty_trajectory() {
    let grid = Grid2D::flat_torus(8);
    let sys = FlowSystem::new(grid.clone());
    let integrator = IntegratorSpec { max_steps: 0, ..IntegratorSpec::default() };
    let traj = run(&sys, FlowState::new(MetricField::flat(&grid)), 1.0, integrator);
    assert_eq!(traj.status, RunStatus::BudgetExhausted);
    assert!(traj.records.is_empty());
    assert!(traj.snapshots.is_empty());
}

#[test]
fn small_budget_stops_early() {
    let grid = Grid2D::flat_torus(16);
    let sys = FlowSystem::new(grid.clone());
    let integrator = IntegratorSpec { max_steps: 5, dt_max: 1e-3, ..IntegratorSpec::default() };
    let traj = run(&sys, FlowState::new(MetricField::flat(&grid)), 1.0, integrator);
    assert_eq!(traj.status, RunStatus::BudgetExhausted);
    assert_eq!(traj.steps.len(), 5);
    assert_eq!(traj.records.len(), 6);
}

#[test]
fn flat_torus_run_completes_with_the_metric_unchanged() {
    let grid = Grid2D::flat_torus(16);
    let sys = FlowSystem::new(grid.clone());
    let g = MetricField::flat(&grid);
    let traj = run(&sys, FlowState::new(g.clone()), 1.0, spec(0.05));
    assert_eq!(traj.status, RunStatus::Completed);
    assert_eq!(traj.last_t(), 1.0);
    assert_eq!(traj.final_state.metric, g);
}

#[test]
fn underflowing_step_is_a_detected_blow_up() {
    let grid = Grid2D::flat_torus(16);
    let sys = FlowSystem::new(grid.clone());
    let integrator = IntegratorSpec { dt_min: 10.0, ..IntegratorSpec::default() };
    let traj = run(&sys, FlowState::new(MetricField::flat(&grid)), 1.0, integrator);
    assert_eq!(traj.status, RunStatus::BlowUpDetected);
    assert_eq!(traj.last_t(), 0.0);
    assert_eq!(traj.records.len(), 1);
}

#[test]
fn losing_positive_definiteness_is_reported() {
    let grid = Grid2D::flat_torus(32);
    let u = grid.sample(|x, _| 0.5 * x.sin());
    let sys = FlowSystem::new(grid.clone()).with_ricci_path(ricciform::flows::RicciPath::General);
    let s = sys.prepare(FlowState::new(MetricField::conformal(&grid, u).unwrap()));
    let err = ricci_flow_step(&sys, &s, 50.0, Scheme::Rk2).unwrap_err();
    assert!(matches!(err, Error::DegenerateMetric { .. }), "{err}");
}

#[test]
fn neck_keeps_dtheta_closed_and_sup_norm_monotone() {
    let (sys, g) = neck(256, 16);
    let grid = sys.grid.clone();
    let state = FlowState::new(g).with_form("phi", dtheta(&grid));
    let cfg = RunConfig { horizon: 0.2, integrator: spec(1.0), monitors: MonitorSet::default(), snapshot_every: 0 };
    let traj = integrate(&sys, state, &cfg).unwrap();
    assert_eq!(traj.status, RunStatus::Completed);
    let phi = traj.final_state.form("phi").unwrap();
    assert!(closedness_residual(&grid, phi) < 1e-12);
    let sup: Vec<f64> = traj.records.iter().map(|r| r.get(&labels::sup("phi")).unwrap()).collect();
    for w in sup.windows(2) {
        assert!(w[1] <= w[0] * (1.0 + 1e-8), "{w:?}");
    }
}

#[test]
fn cigar_step_shrinks_monotonically() {
    let grid = Grid2D::plane(48, 4.0).unwrap();
    let (g, _) = cigar_oracle(&grid, 1.0).unwrap().value;
    let sys = FlowSystem::new(grid.clone());
    let traj = run(&sys, FlowState::new(g), 0.05, spec(1.0));
    let body = &traj.steps[..traj.steps.len() - 1];
    assert!(body.len() > 10);
    for w in body.windows(2) {
        assert!(w[1] <= w[0], "{w:?}");
    }
}

#[test]
fn runs_are_deterministic_and_thread_count_independent() {
    let go = || {
        let grid = Grid2D::flat_torus(32);
        let u = grid.sample(|x, y| 0.05 * x.sin() + 0.02 * y.cos());
        let sys = FlowSystem::new(grid.clone());
        let f = exterior_derivative(&ScalarField::generic(grid.sample(|x, _| 0.3 * x.sin())), &grid);
        let phi = OneFormField::closed(f.x, f.y.iter().map(|v| v + 1.0).collect());
        let state = FlowState::new(MetricField::conformal(&grid, u).unwrap())
            .with_form("phi", phi)
            .with_gauge("phi")
            .unwrap()
            .with_subsolution(grid.sample(|x, _| 1.0 + x.cos()), 0.0);
        run(&sys, state, 0.05, spec(1.0)).records
    };
    let a = go();
    let b = go();
    assert_eq!(a, b);
    let c = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(go);
    let d = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap().install(go);
    assert_eq!(a, c);
    assert_eq!(a, d);
}
