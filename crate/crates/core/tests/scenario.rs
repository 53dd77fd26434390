use std::f64::consts::PI;
use std::fs;
use std::path::Path;

use proptest::prelude::*;
use ricciform::flows::{RicciPath, Scheme};
use ricciform::geometry::HodgeMethod;
use ricciform::scenario::*;
use ricciform::Error;

const FLAT: &str = "\
# static flat torus carrying sin(x)dx
name = flat
grid.nx = 16
grid.ny = 16
metric.evolve = false
form.phi = sin-x-dx
integrator.dt_max = 0.01
time.t_end = 0.1
monitors.energy = true
";

fn errors(text: &str) -> Vec<String> {
    match parse_scenario(text) {
        Err(Error::Scenario(e)) => e,
        other => panic!("expected scenario errors, got {other:?}"),
    }
}

fn run_into(dir: &Path, text: &str) -> Summary {
    let spec = parse_scenario(text).unwrap();
    let s = build(&spec).unwrap();
    let traj = ricciform::flows::integrate(&s.system, s.initial, &s.config).unwrap();
    write_outputs(dir, &spec, &s.config.monitors, &traj).unwrap()
}

#[test]
fn empty_file_is_the_default_flat_torus() {
    let spec = parse_scenario("# nothing\n\n").unwrap();
    assert_eq!(spec, ScenarioSpec::new(Family::FlatTorus));
    assert_eq!(spec.grid.nx, 64);
    assert_eq!(spec.metric, MetricPreset::Flat);
    assert_eq!(spec.integrator.scheme, Scheme::Rk2);
    assert_eq!(spec.integrator.cfl, 0.2);
    assert_eq!(spec.t_end, 1.0);
}

#[test]
fn neck_with_b_above_a_is_rejected() {
    let e = errors("geometry.family = warped-cylinder\nmetric.preset = neck\nmetric.a = 1\nmetric.b = 2\n");
    assert!(e.iter().any(|m| m.contains("f not positive")), "{e:?}");
}

#[test]
fn unknown_key_names_the_nearest_valid_one() {
    let e = errors("ricci_mode = general\n");
    assert_eq!(e.len(), 1);
    assert!(e[0].contains("ricci_mode") && e[0].contains("metric.ricci_path"), "{e:?}");
    let e = errors("grid.nz = 32\n");
    assert!(e[0].contains("'grid.nx'") || e[0].contains("'grid.ny'"), "{e:?}");
}

#[test]
fn all_errors_are_reported_at_once() {
    let text = "\
grid.nx = 4
time.t_end = -1
integrator.cfl = 0.9
metric.preset = neck
no equals sign
grid.nx = 32
";
    let e = errors(text);
    assert!(e.len() >= 5, "{e:?}");
    assert!(e.iter().any(|m| m.starts_with("line 5")), "{e:?}");
    assert!(e.iter().any(|m| m.contains("duplicate key 'grid.nx'")), "{e:?}");
    assert!(e.iter().any(|m| m.contains("does not apply to family flat-torus")), "{e:?}");
    assert!(e.iter().any(|m| m.contains("time.t_end")), "{e:?}");
    assert!(e.iter().any(|m| m.contains("integrator.cfl")), "{e:?}");
}

#[test]
fn preset_parameters_must_match_the_preset() {
    let e = errors("metric.amplitude = 0.1\n");
    assert!(e[0].contains("does not apply"), "{e:?}");
    let e = errors("geometry.family = warped-cylinder\ngrid.half_width = 3\n");
    assert!(e[0].contains("does not apply"), "{e:?}");
}

#[test]
fn probes_need_declared_closed_forms_on_cylinders() {
    let e = errors("probe.a.form = phi\n");
    assert!(e.iter().any(|m| m.contains("undeclared form 'phi'")), "{e:?}");
    let e = errors("geometry.family = conformal-plane\ngrid.nx = 16\ngrid.ny = 16\nform.phi = dtheta\nprobe.a.form = phi\n");
    assert!(e.iter().any(|m| m.contains("periodic")), "{e:?}");
    let e = errors("geometry.family = warped-cylinder\nform.phi = zero\nprobe.a.form = phi\n");
    assert!(e.iter().any(|m| m.contains("infinite order")), "{e:?}");
    let ok = "geometry.family = warped-cylinder\ngrid.nx = 32\ngrid.ny = 8\nform.phi = dtheta\nprobe.a.form = phi\nprobe.a.x = 0.5\n";
    let spec = parse_scenario(ok).unwrap();
    assert_eq!(spec.probes[0], ProbeSpec { label: "a".into(), form: "phi".into(), x: 0.5 });
}

#[test]
fn canonical_text_round_trips() {
    let text = "\
geometry.family = warped-cylinder
grid.nx = 64
grid.ny = 16
metric.preset = neck
metric.a = 2
metric.b = 1
form.phi = dtheta
form.psi = dtheta-plus-exact
form.psi.coeff = 0.3
gauge.form = psi
probe.alpha.form = phi
subsolution.preset = bump
subsolution.sink = 0.5
integrator.scheme = rk4
monitors.buffer = report-only
";
    let spec = parse_scenario(text).unwrap();
    assert_eq!(spec.forms[1].preset, FormPreset::DthetaPlusExact { coeff: 0.3 });
    let again = parse_scenario(&spec.to_text()).unwrap();
    assert_eq!(again, spec);
    assert_eq!(again.to_text(), spec.to_text());
}

#[test]
fn flat_torus_outputs_match_the_golden_file() {
    let dir = tempfile::tempdir().unwrap();
    let summary = run_into(dir.path(), FLAT);
    assert_eq!(summary.status, "completed");
    assert_eq!(summary.last_t, 0.1);
    assert!(summary.all_pass, "{summary:#?}");
    assert!(summary.verdicts.iter().any(|v| v.theorem == "energy-identity[phi]"));
    let csv = fs::read_to_string(dir.path().join(MONITORS_CSV)).unwrap();
    let header = csv.lines().next().unwrap();
    assert!(header.starts_with("t,dt,sup_R,min_R,vol,"), "{header}");
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/flat_torus_monitors.csv");
    if std::env::var_os("RICCIFORM_BLESS").is_some() {
        fs::write(&golden, &csv).unwrap();
    }
    assert_eq!(csv, fs::read_to_string(golden).unwrap());

    // Monotone columns on the static flat torus are constant.
    let run = RunDir::open(dir.path()).unwrap();
    for r in &run.records {
        assert_eq!(r.get("sup_R"), Some(0.0));
        assert!((r.get("vol").unwrap() - 4.0 * PI * PI).abs() < 1e-12);
    }
}

#[test]
fn identical_runs_write_identical_csv() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let text = "geometry.family = conformal-torus\ngrid.nx = 24\ngrid.ny = 24\nform.phi = sin-x-dx\ntime.t_end = 0.05\n";
    run_into(a.path(), text);
    run_into(b.path(), text);
    let read = |d: &Path| fs::read(d.join(MONITORS_CSV)).unwrap();
    assert_eq!(read(a.path()), read(b.path()));
}

#[test]
fn blown_up_run_reports_its_last_valid_time() {
    let dir = tempfile::tempdir().unwrap();
    let text = "geometry.family = warped-cylinder\ngrid.nx = 64\ngrid.ny = 8\nmetric.preset = neck\nmetric.a = 1.02\nintegrator.dt_min = 1e-2\n";
    let summary = run_into(dir.path(), text);
    assert_eq!(summary.status, "blow-up-detected");
    assert_eq!(summary.last_t, 0.0);
    assert!(summary.detail.contains("fell below"), "{}", summary.detail);
    let back = RunDir::open(dir.path()).unwrap();
    assert_eq!(back.summary, summary);
}

#[test]
fn snapshots_restore_the_state() {
    let dir = tempfile::tempdir().unwrap();
    let text = "\
geometry.family = warped-cylinder
grid.nx = 32
grid.ny = 8
form.phi = dtheta-plus-exact
gauge.form = phi
subsolution.preset = one-plus-cos
subsolution.sink = 0.25
time.t_end = 0.05
output.snapshots = 5
monitors.buffer = off
";
    let spec = parse_scenario(text).unwrap();
    let s = build(&spec).unwrap();
    let traj = ricciform::flows::integrate(&s.system, s.initial, &s.config).unwrap();
    write_outputs(dir.path(), &spec, &s.config.monitors, &traj).unwrap();
    let run = RunDir::open(dir.path()).unwrap();
    let (grid, states) = run.load_snapshots().unwrap();
    assert_eq!(grid, traj.grid);
    assert_eq!(states.len(), traj.snapshots.len());
    let last = states.last().unwrap();
    assert_eq!(last.t, traj.final_state.t);
    assert_eq!(last.metric, traj.final_state.metric);
    assert_eq!(last.forms[0].form.x, traj.final_state.forms[0].form.x);
    assert_eq!(last.gauge.as_ref().unwrap().f, traj.final_state.gauge.as_ref().unwrap().f);
    assert_eq!(last.subsolution, traj.final_state.subsolution);
    let (header, _) = load_snapshot(&run.snapshot_headers().unwrap()[0]).unwrap();
    assert_eq!(header.axis_order, "row-major x-then-theta");
    assert_eq!(header.component_order, ["phi_x".to_string(), "phi_theta".to_string()]);
}

#[test]
fn run_dir_without_summary_is_malformed() {
    let dir = tempfile::tempdir().unwrap();
    let err = RunDir::open(dir.path()).unwrap_err();
    assert!(matches!(err, Error::RunDir { .. }));
    assert!(err.to_string().contains("summary.json"), "{err}");
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![-1e3..1e3f64, Just(0.25), Just(1e-300), Just(-0.0)]
}

fn arb_spec() -> impl Strategy<Value = ScenarioSpec> {
    let family = prop::sample::select(Family::ALL.to_vec());
    (
        family,
        8usize..40,
        8usize..40,
        0.01f64..0.5,
        prop::collection::vec((0usize..4, finite()), 0..3),
        (0usize..4, 0.1f64..10.0, finite()),
        (any::<bool>(), any::<bool>(), any::<bool>(), any::<bool>(), 0usize..4),
        (1e-6f64..1e3, 1usize..10, 0usize..5),
        "[a-z][a-z0-9_-]{0,10}",
    )
        .prop_map(|(family, nx, ny, cfl, forms, sub, flags, times, name)| {
            let mut s = ScenarioSpec::new(family);
            s.name = name;
            s.grid.nx = nx;
            s.grid.ny = ny;
            s.integrator.cfl = cfl;
            s.integrator.scheme = if flags.0 { Scheme::Rk4 } else { Scheme::Rk2 };
            s.evolve_metric = flags.1;
            s.ricci_path = if flags.2 { RicciPath::General } else { RicciPath::Reduced };
            s.hodge = if flags.3 { HodgeMethod::Bochner } else { HodgeMethod::DDelta };
            s.monitors.buffer = [BufferMode::Auto, BufferMode::On, BufferMode::ReportOnly, BufferMode::Off][flags.4];
            s.monitors.energy = flags.0 ^ flags.1;
            s.forms = forms
                .into_iter()
                .enumerate()
                .map(|(k, (p, c))| FormSpec {
                    label: format!("f{k}"),
                    preset: match p {
                        0 => FormPreset::Dtheta,
                        1 => FormPreset::SinXDx,
                        2 => FormPreset::DthetaPlusExact { coeff: c },
                        _ => FormPreset::Zero,
                    },
                })
                .collect();
            if let Some(f) = s.forms.first() {
                s.gauge = Some(f.label.clone());
            }
            s.subsolution = match sub.0 {
                0 => SubsolutionPreset::None,
                1 => SubsolutionPreset::OnePlusCos,
                2 => SubsolutionPreset::Bump { center: sub.2, width: sub.1, height: sub.1 / 3.0 },
                _ => SubsolutionPreset::Constant { value: sub.1 },
            };
            s.sink = sub.1 / 7.0;
            s.t_end = times.0;
            s.integrator.cadence = times.1;
            s.snapshots = times.2;
            s.metric = match family {
                Family::FlatTorus if flags.2 => MetricPreset::Sheared { epsilon: cfl },
                Family::ConformalTorus if flags.3 => MetricPreset::Product { amplitude: cfl },
                Family::WarpedCylinder => MetricPreset::Neck { a: 1.0 + sub.1, b: sub.1, h: cfl + 0.5 },
                _ => s.metric,
            };
            s
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn parse_inverts_serialize(spec in arb_spec()) {
        let text = spec.to_text();
        let back = parse_scenario(&text).map_err(|e| TestCaseError::fail(format!("{e}\n{text}")))?;
        prop_assert_eq!(back, spec);
    }
}
