use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use ricciform::blowup::{
    decay_monitor, length_scaling_check, rescale_trajectory, DecayField, DecayMonitorSpec, LengthScalingReport,
    RescalingSchedule,
};
use ricciform::functionals::{distance_from, min_circumference, Cycle};
use ricciform::geometry::curvature;
use ricciform::scenario::{build, parse_scenario, write_outputs, RunDir, Summary};
use ricciform::verify::{exit_code, resolve, Lab};
use ricciform::Error;

/// Used by `run` when `--out` is not given.
const OUT_ENV: &str = "RICCIFORM_OUT";

#[derive(Parser)]
#[command(name = "ricciform", version, about = "Ricci flow coupled to heat flows on 2-D model geometries")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a scenario and write monitors.csv, summary.json and snapshots
    Run {
        scenario: PathBuf,
        /// Output directory [default: $RICCIFORM_OUT]
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run acceptance suites: a suite name, a criterion number or `all`
    Verify { suite: String },
    /// Rescale a stored run and write rescale.json and decay.csv
    Rescale {
        run_dir: PathBuf,
        /// curvature:t1,t2,.. | explicit:t1@l1,.. | geometric:base:t1,t2,..
        #[arg(long)]
        schedule: String,
        /// Decay order used for the curvature profiles
        #[arg(long, default_value_t = 2.0)]
        sigma: f64,
    },
    /// Print the theorem verdicts of a run directory
    Report { run_dir: PathBuf },
}

/// Failure with its exit code: 2 for bad input, 3 for runtime errors.
struct Fail(u8, String);

fn usage(e: impl std::fmt::Display) -> Fail {
    Fail(2, e.to_string())
}

fn runtime(e: Error) -> Fail {
    match e {
        Error::Scenario(_) | Error::RunDir { .. } | Error::UnknownSuite(_) | Error::InvalidSchedule(_) => {
            usage(e)
        }
        e => Fail(3, e.to_string()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { scenario, out } => run(&scenario, out),
        Command::Verify { suite } => verify(&suite),
        Command::Rescale { run_dir, schedule, sigma } => rescale(&run_dir, &schedule, sigma),
        Command::Report { run_dir } => report(&run_dir),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(Fail(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code)
        }
    }
}

fn run(scenario: &Path, out: Option<PathBuf>) -> Result<u8, Fail> {
    let out = out
        .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
        .ok_or_else(|| usage(format!("no output directory: pass --out or set {OUT_ENV}")))?;
    let text = fs::read_to_string(scenario).map_err(|e| usage(format!("cannot read {}: {e}", scenario.display())))?;
    let spec = parse_scenario(&text).map_err(runtime)?;
    let s = build(&spec).map_err(runtime)?;
    let traj = ricciform::flows::integrate(&s.system, s.initial, &s.config).map_err(runtime)?;
    let summary = write_outputs(&out, &spec, &s.config.monitors, &traj).map_err(|e| Fail(3, e.to_string()))?;
    print_summary(&summary);
    println!("outputs in {}", out.display());
    Ok(0)
}

fn verify(suite: &str) -> Result<u8, Fail> {
    let names = resolve(suite).map_err(runtime)?;
    let lab = Lab::new();
    let results = lab.run_suites(&names, |r| println!("{r}")).map_err(|e| Fail(3, e.to_string()))?;
    Ok(exit_code(&results) as u8)
}

fn print_summary(s: &Summary) {
    println!("scenario {} ({})", s.name, &s.scenario_hash[..12]);
    println!("status   {} at t = {} after {} steps, {} records", s.status, s.last_t, s.steps, s.records);
    if !s.detail.is_empty() {
        println!("detail   {}", s.detail);
    }
    for v in &s.verdicts {
        let mark = if v.verdict.pass { "PASS" } else { "FAIL" };
        let margin = v.verdict.worst_margin.map_or("n/a".into(), |m| format!("{m:.3e}"));
        let mut line = format!("{mark} {:<28} {} [{} checks, worst margin {margin}]", v.theorem, v.verdict.name, v.verdict.checked);
        if !v.verdict.note.is_empty() {
            line += &format!(" {}", v.verdict.note);
        }
        println!("{line}");
    }
    println!("overall  {}", if s.all_pass { "PASS" } else { "FAIL" });
}

fn report(run_dir: &Path) -> Result<u8, Fail> {
    let run = RunDir::open(run_dir).map_err(runtime)?;
    print_summary(&run.summary);
    if let (Some(first), Some(last)) = (run.records.first(), run.records.last()) {
        println!("monitors t = {} -> {}", first.t, last.t);
        for ((label, a), (_, b)) in first.values.iter().zip(&last.values) {
            println!("  {label:<14} {a:>14.6e} -> {b:.6e}");
        }
    }
    Ok(0)
}

#[derive(Serialize)]
struct Member {
    k: usize,
    t_k: f64,
    lambda: f64,
    snapshot_t: f64,
    offset: f64,
    rescaled_t: f64,
    sup_r: f64,
}

#[derive(Serialize)]
struct RescaleReport {
    run: String,
    schedule: RescalingSchedule,
    members: Vec<Member>,
    lengths: Option<LengthScalingReport>,
    decay_sigma: f64,
    decay_note: String,
}

fn rescale(run_dir: &Path, schedule: &str, sigma: f64) -> Result<u8, Fail> {
    let run = RunDir::open(run_dir).map_err(runtime)?;
    let schedule = RescalingSchedule::parse(schedule).map_err(runtime)?;
    let (grid, snaps) = run.load_snapshots().map_err(runtime)?;
    let family = rescale_trajectory(&grid, &snaps, &schedule).map_err(runtime)?;

    // Track the probe loop when there is one, else the shortest θ-circle.
    let lengths = if grid.y.is_periodic() {
        let i = match run.spec.probes.first() {
            Some(p) => grid.x.nearest(p.x),
            None => min_circumference(&grid, &snaps[0].metric).map_err(runtime)?.1,
        };
        Some(length_scaling_check(&grid, &snaps, &schedule, &Cycle::ThetaCircle { i }).map_err(runtime)?)
    } else {
        None
    };

    let mut csv = String::from("k,lambda,r,value\n");
    let decay_note = match distance_from(&grid, &family[0].metric, grid.origin) {
        Err(e) => format!("no decay profiles: {e}"),
        Ok(_) => {
            for m in &family {
                let reach = distance_from(&grid, &m.metric, grid.origin).map_err(runtime)?.reach;
                let radii: Vec<f64> = (0..8).map(|s| s as f64 * 0.1 * reach).collect();
                let spec = DecayMonitorSpec { sigma, center: grid.origin, radii };
                let r = curvature(&m.metric, &grid).map_err(runtime)?;
                let p = decay_monitor(&grid, &m.metric, DecayField::Scalar(r.flow_scalar()), &spec).map_err(runtime)?;
                for (r, v) in p.radii.iter().zip(&p.values) {
                    csv += &format!("{},{:?},{r:?},{v:?}\n", m.k, m.lambda);
                }
            }
            format!("sup over shells of d^sigma |R| about node {:?}", grid.origin)
        }
    };
    let report = RescaleReport {
        run: run_dir.display().to_string(),
        schedule,
        members: family
            .iter()
            .map(|m| Member {
                k: m.k,
                t_k: m.t_k,
                lambda: m.lambda,
                snapshot_t: m.snapshot_t,
                offset: m.offset,
                rescaled_t: m.rescaled_t,
                sup_r: m.sup_r,
            })
            .collect(),
        lengths,
        decay_sigma: sigma,
        decay_note,
    };
    let json = serde_json::to_string_pretty(&report).map_err(|e| Fail(3, e.to_string()))?;
    let write = |name: &str, data: &str| {
        let p = run_dir.join(name);
        fs::write(&p, data).map_err(|e| Fail(3, format!("cannot write {}: {e}", p.display())))
    };
    write("rescale.json", &json)?;
    write("decay.csv", &csv)?;
    for m in &report.members {
        println!("k = {} t = {} lambda = {} sup|R| = {:.6e}", m.k, m.t_k, m.lambda, m.sup_r);
    }
    if let Some(l) = &report.lengths {
        println!("sqrt law holds: {}, rescaled lengths diverge: {}", l.sqrt_law_holds, l.diverges);
    }
    println!("wrote rescale.json and decay.csv to {}", run_dir.display());
    Ok(0)
}
