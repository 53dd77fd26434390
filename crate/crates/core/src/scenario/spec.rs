use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::flows::{IntegratorSpec, RicciPath, Scheme};
use crate::geometry::HodgeMethod;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    FlatTorus,
    ConformalTorus,
    WarpedCylinder,
    /// Truncated plane carrying a conformal metric (the cigar lives here).
    ConformalPlane,
}

impl Family {
    pub const ALL: [Family; 4] =
        [Family::FlatTorus, Family::ConformalTorus, Family::WarpedCylinder, Family::ConformalPlane];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::FlatTorus => "flat-torus",
            Family::ConformalTorus => "conformal-torus",
            Family::WarpedCylinder => "warped-cylinder",
            Family::ConformalPlane => "conformal-plane",
        }
    }

    fn default_metric(self) -> MetricPreset {
        match self {
            Family::FlatTorus => MetricPreset::Flat,
            Family::ConformalTorus => MetricPreset::Sine { amplitude: 0.05 },
            Family::WarpedCylinder => MetricPreset::Neck { a: 2.0, b: 1.0, h: 1.0 },
            Family::ConformalPlane => MetricPreset::Cigar,
        }
    }
}

/// Initial metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MetricPreset {
    /// Identity components (flat torus, flat cylinder, flat plane).
    Flat,
    /// Pullback of the flat metric by x ↦ x + ε·sin y: flat, but with
    /// non-constant components.
    Sheared { epsilon: f64 },
    /// u = amplitude·sin x.
    Sine { amplitude: f64 },
    /// u = amplitude·sin x·cos y.
    Product { amplitude: f64 },
    /// h²dx² + f²dθ² with f = a − b·e^{−x²}.
    Neck { a: f64, b: f64, h: f64 },
    /// Conformal factor 1/(1 + r²).
    Cigar,
}

impl MetricPreset {
    pub fn name(&self) -> &'static str {
        match self {
            MetricPreset::Flat => "flat",
            MetricPreset::Sheared { .. } => "sheared",
            MetricPreset::Sine { .. } => "sine",
            MetricPreset::Product { .. } => "product",
            MetricPreset::Neck { .. } => "neck",
            MetricPreset::Cigar => "cigar",
        }
    }

    fn allowed_on(&self, family: Family) -> bool {
        use MetricPreset::*;
        matches!(
            (family, self),
            (Family::FlatTorus, Flat | Sheared { .. })
                | (Family::ConformalTorus, Sine { .. } | Product { .. })
                | (Family::WarpedCylinder, Flat | Neck { .. })
                | (Family::ConformalPlane, Flat | Cigar)
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FormPreset {
    Dtheta,
    SinXDx,
    /// dθ + c·d(sin x).
    DthetaPlusExact { coeff: f64 },
    Zero,
}

impl FormPreset {
    fn name(&self) -> &'static str {
        match self {
            FormPreset::Dtheta => "dtheta",
            FormPreset::SinXDx => "sin-x-dx",
            FormPreset::DthetaPlusExact { .. } => "dtheta-plus-exact",
            FormPreset::Zero => "zero",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FormSpec {
    pub label: String,
    pub preset: FormPreset,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SubsolutionPreset {
    None,
    /// u = 1 + cos x.
    OnePlusCos,
    /// u = height·(1 − ((x − center)/width)²)³ inside the support, 0 outside.
    Bump { center: f64, width: f64, height: f64 },
    Constant { value: f64 },
}

impl SubsolutionPreset {
    fn name(&self) -> &'static str {
        match self {
            SubsolutionPreset::None => "none",
            SubsolutionPreset::OnePlusCos => "one-plus-cos",
            SubsolutionPreset::Bump { .. } => "bump",
            SubsolutionPreset::Constant { .. } => "constant",
        }
    }
}

/// Loop probe on the θ-circle nearest `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeSpec {
    pub label: String,
    pub form: String,
    pub x: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BufferMode {
    /// Enforced on cylinders, report-only on planes, absent on tori.
    Auto,
    On,
    ReportOnly,
    Off,
}

impl BufferMode {
    fn as_str(self) -> &'static str {
        match self {
            BufferMode::Auto => "auto",
            BufferMode::On => "on",
            BufferMode::ReportOnly => "report-only",
            BufferMode::Off => "off",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub nx: usize,
    pub ny: usize,
    /// Axial range of a cylinder.
    pub x_min: f64,
    pub x_max: f64,
    /// Half side length of a plane.
    pub half_width: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonitorToggles {
    pub energy: bool,
    pub bochner_gap: bool,
    pub buffer: BufferMode,
    pub buffer_fraction: f64,
    pub buffer_threshold: f64,
}

/// A parsed and validated scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub name: String,
    pub family: Family,
    pub grid: GridSpec,
    pub metric: MetricPreset,
    pub evolve_metric: bool,
    pub ricci_path: RicciPath,
    pub hodge: HodgeMethod,
    pub forms: Vec<FormSpec>,
    /// Label of the form whose gauge function is tracked.
    pub gauge: Option<String>,
    pub subsolution: SubsolutionPreset,
    pub sink: f64,
    pub probes: Vec<ProbeSpec>,
    pub integrator: IntegratorSpec,
    pub t_end: f64,
    /// Snapshot every this many steps (0: initial and final only, not written).
    pub snapshots: usize,
    pub monitors: MonitorToggles,
}

impl ScenarioSpec {
    /// Defaults for `family`: 64² nodes, the family's usual metric, T = 1.
    pub fn new(family: Family) -> Self {
        ScenarioSpec {
            name: "scenario".into(),
            family,
            grid: GridSpec { nx: 64, ny: 64, x_min: -10.0, x_max: 10.0, half_width: 12.0 },
            metric: family.default_metric(),
            evolve_metric: true,
            ricci_path: RicciPath::Reduced,
            hodge: HodgeMethod::DDelta,
            forms: Vec::new(),
            gauge: None,
            subsolution: SubsolutionPreset::None,
            sink: 0.0,
            probes: Vec::new(),
            integrator: IntegratorSpec { dt_max: f64::INFINITY, ..IntegratorSpec::default() },
            t_end: 1.0,
            snapshots: 0,
            monitors: MonitorToggles {
                energy: false,
                bochner_gap: false,
                buffer: BufferMode::Auto,
                buffer_fraction: 0.15,
                buffer_threshold: 1e-6,
            },
        }
    }
}

// ---------------------------------------------------------------------------
// Text form

const STATIC_KEYS: &[&str] = &[
    "name",
    "geometry.family",
    "grid.nx",
    "grid.ny",
    "grid.x_min",
    "grid.x_max",
    "grid.half_width",
    "metric.preset",
    "metric.epsilon",
    "metric.amplitude",
    "metric.a",
    "metric.b",
    "metric.h",
    "metric.evolve",
    "metric.ricci_path",
    "forms.hodge",
    "gauge.form",
    "subsolution.preset",
    "subsolution.center",
    "subsolution.width",
    "subsolution.height",
    "subsolution.value",
    "subsolution.sink",
    "integrator.scheme",
    "integrator.cfl",
    "integrator.dt_max",
    "integrator.dt_min",
    "integrator.max_steps",
    "time.t_end",
    "output.cadence",
    "output.snapshots",
    "monitors.energy",
    "monitors.bochner_gap",
    "monitors.buffer",
    "monitors.buffer_fraction",
    "monitors.buffer_threshold",
];

fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

impl ScenarioSpec {
    /// Canonical text form; [`parse_scenario`] reads it back to an equal spec.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("name", self.name.clone());
        kv("geometry.family", self.family.as_str().into());
        kv("grid.nx", self.grid.nx.to_string());
        kv("grid.ny", self.grid.ny.to_string());
        match self.family {
            Family::WarpedCylinder => {
                kv("grid.x_min", fmt_f64(self.grid.x_min));
                kv("grid.x_max", fmt_f64(self.grid.x_max));
            }
            Family::ConformalPlane => kv("grid.half_width", fmt_f64(self.grid.half_width)),
            _ => {}
        }
        kv("metric.preset", self.metric.name().into());
        match self.metric {
            MetricPreset::Sheared { epsilon } => kv("metric.epsilon", fmt_f64(epsilon)),
            MetricPreset::Sine { amplitude } | MetricPreset::Product { amplitude } => {
                kv("metric.amplitude", fmt_f64(amplitude))
            }
            MetricPreset::Neck { a, b, h } => {
                kv("metric.a", fmt_f64(a));
                kv("metric.b", fmt_f64(b));
                kv("metric.h", fmt_f64(h));
            }
            MetricPreset::Flat | MetricPreset::Cigar => {}
        }
        kv("metric.evolve", self.evolve_metric.to_string());
        kv(
            "metric.ricci_path",
            match self.ricci_path {
                RicciPath::Reduced => "reduced",
                RicciPath::General => "general",
            }
            .into(),
        );
        kv(
            "forms.hodge",
            match self.hodge {
                HodgeMethod::DDelta => "d-delta",
                HodgeMethod::Bochner => "bochner",
            }
            .into(),
        );
        for f in &self.forms {
            kv(&format!("form.{}", f.label), f.preset.name().into());
            if let FormPreset::DthetaPlusExact { coeff } = f.preset {
                kv(&format!("form.{}.coeff", f.label), fmt_f64(coeff));
            }
        }
        if let Some(g) = &self.gauge {
            kv("gauge.form", g.clone());
        }
        kv("subsolution.preset", self.subsolution.name().into());
        match self.subsolution {
            SubsolutionPreset::Bump { center, width, height } => {
                kv("subsolution.center", fmt_f64(center));
                kv("subsolution.width", fmt_f64(width));
                kv("subsolution.height", fmt_f64(height));
            }
            SubsolutionPreset::Constant { value } => kv("subsolution.value", fmt_f64(value)),
            _ => {}
        }
        kv("subsolution.sink", fmt_f64(self.sink));
        for p in &self.probes {
            kv(&format!("probe.{}.form", p.label), p.form.clone());
            kv(&format!("probe.{}.x", p.label), fmt_f64(p.x));
        }
        let it = &self.integrator;
        kv("integrator.scheme", if it.scheme == Scheme::Rk2 { "rk2" } else { "rk4" }.into());
        kv("integrator.cfl", fmt_f64(it.cfl));
        kv("integrator.dt_max", fmt_f64(it.dt_max));
        kv("integrator.dt_min", fmt_f64(it.dt_min));
        kv("integrator.max_steps", it.max_steps.to_string());
        kv("time.t_end", fmt_f64(self.t_end));
        kv("output.cadence", it.cadence.to_string());
        kv("output.snapshots", self.snapshots.to_string());
        let m = &self.monitors;
        kv("monitors.energy", m.energy.to_string());
        kv("monitors.bochner_gap", m.bochner_gap.to_string());
        kv("monitors.buffer", m.buffer.as_str().into());
        kv("monitors.buffer_fraction", fmt_f64(m.buffer_fraction));
        kv("monitors.buffer_threshold", fmt_f64(m.buffer_threshold));
        s
    }
}

struct Entry {
    line: usize,
    value: String,
    used: bool,
}

/// Typed access to the raw key-value pairs, collecting every error.
struct Reader {
    entries: BTreeMap<String, Entry>,
    errors: Vec<String>,
}

impl Reader {
    fn raw(&mut self, key: &str) -> Option<(usize, String)> {
        self.entries.get_mut(key).map(|e| {
            e.used = true;
            (e.line, e.value.clone())
        })
    }

    fn parse<T>(&mut self, key: &str, default: T, what: &str, f: impl Fn(&str) -> Option<T>) -> T {
        match self.raw(key) {
            None => default,
            Some((line, v)) => f(&v).unwrap_or_else(|| {
                self.errors.push(format!("line {line}: {key} = '{v}' is not {what}"));
                default
            }),
        }
    }

    fn f64(&mut self, key: &str, default: f64) -> f64 {
        self.parse(key, default, "a number", |v| v.parse::<f64>().ok().filter(|x| !x.is_nan()))
    }

    fn usize(&mut self, key: &str, default: usize) -> usize {
        self.parse(key, default, "a nonnegative integer", |v| v.parse().ok())
    }

    fn bool(&mut self, key: &str, default: bool) -> bool {
        self.parse(key, default, "true or false", |v| v.parse().ok())
    }

    fn choice<T: Copy>(&mut self, key: &str, default: T, options: &[(&str, T)]) -> T {
        let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
        let what = format!("one of {}", names.join(", "));
        self.parse(key, default, &what, |v| options.iter().find(|(n, _)| *n == v).map(|(_, t)| *t))
    }

    fn check(&mut self, ok: bool, msg: impl FnOnce() -> String) {
        if !ok {
            self.errors.push(msg());
        }
    }
}

/// Closest valid key by Jaro–Winkler similarity, comparing against both the
/// full key and its last segment.
fn nearest_key(key: &str, valid: &[String]) -> Option<String> {
    let last = |k: &str| k.rsplit('.').next().unwrap_or(k).to_string();
    valid
        .iter()
        .map(|v| {
            let score = strsim::jaro_winkler(key, v)
                .max(strsim::jaro_winkler(&last(key), &last(v)))
                .max(strsim::jaro_winkler(key, &last(v)));
            (score, v)
        })
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, v)| v.clone())
}

fn is_label(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Parses flat `section.key = value` text. Every problem is reported, not
/// just the first.
pub fn parse_scenario(text: &str) -> Result<ScenarioSpec> {
    let mut entries = BTreeMap::new();
    let mut errors = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((k, v)) = content.split_once('=') else {
            errors.push(format!("line {line}: expected 'key = value', got '{content}'"));
            continue;
        };
        let (k, v) = (k.trim().to_string(), v.trim().to_string());
        if k.is_empty() {
            errors.push(format!("line {line}: empty key"));
            continue;
        }
        if let Some(prev) = entries.get(&k) {
            let prev: &Entry = prev;
            errors.push(format!("line {line}: duplicate key '{k}' (first set on line {})", prev.line));
            continue;
        }
        entries.insert(k, Entry { line, value: v, used: false });
    }
    let mut r = Reader { entries, errors };

    let fam_opts: Vec<(&str, Family)> = Family::ALL.iter().map(|f| (f.as_str(), *f)).collect();
    let family = r.choice("geometry.family", Family::FlatTorus, &fam_opts);
    let mut spec = ScenarioSpec::new(family);
    if let Some((_, v)) = r.raw("name") {
        spec.name = v;
    }

    let g = &mut spec.grid;
    g.nx = r.usize("grid.nx", g.nx);
    g.ny = r.usize("grid.ny", g.ny);
    for n in [("grid.nx", g.nx), ("grid.ny", g.ny)] {
        r.check(n.1 >= 8, || format!("{} = {} must be at least 8", n.0, n.1));
    }
    if family == Family::WarpedCylinder {
        g.x_min = r.f64("grid.x_min", g.x_min);
        g.x_max = r.f64("grid.x_max", g.x_max);
        let (a, b) = (g.x_min, g.x_max);
        r.check(a < b, || format!("grid.x_min = {a} must be below grid.x_max = {b}"));
    }
    if family == Family::ConformalPlane {
        g.half_width = r.f64("grid.half_width", g.half_width);
        let w = g.half_width;
        r.check(w > 0.0 && w.is_finite(), || format!("grid.half_width = {w} must be positive"));
    }

    let default_metric = family.default_metric();
    let preset_name = r.choice(
        "metric.preset",
        default_metric.name(),
        &[
            ("flat", "flat"),
            ("sheared", "sheared"),
            ("sine", "sine"),
            ("product", "product"),
            ("neck", "neck"),
            ("cigar", "cigar"),
        ],
    );
    let pick = |name: &str, r: &mut Reader| -> MetricPreset {
        match name {
            "flat" => MetricPreset::Flat,
            "sheared" => MetricPreset::Sheared { epsilon: r.f64("metric.epsilon", 0.1) },
            "sine" => MetricPreset::Sine { amplitude: r.f64("metric.amplitude", 0.05) },
            "product" => MetricPreset::Product { amplitude: r.f64("metric.amplitude", 0.05) },
            "neck" => MetricPreset::Neck {
                a: r.f64("metric.a", 2.0),
                b: r.f64("metric.b", 1.0),
                h: r.f64("metric.h", 1.0),
            },
            _ => MetricPreset::Cigar,
        }
    };
    spec.metric = pick(preset_name, &mut r);
    r.check(spec.metric.allowed_on(family), || {
        format!("metric preset {} does not apply to family {}", spec.metric.name(), family.as_str())
    });
    match spec.metric {
        MetricPreset::Neck { a, b, h } => {
            r.check(a - b > 0.0, || format!("f not positive: metric.a = {a} must exceed metric.b = {b}"));
            r.check(b > 0.0, || format!("metric.b = {b} must be positive"));
            r.check(h > 0.0, || format!("metric.h = {h} must be positive"));
        }
        MetricPreset::Sheared { epsilon } => {
            r.check(epsilon.abs() < 1.0, || format!("metric.epsilon = {epsilon} must lie in (−1, 1)"))
        }
        _ => {}
    }
    spec.evolve_metric = r.bool("metric.evolve", true);
    spec.ricci_path =
        r.choice("metric.ricci_path", RicciPath::Reduced, &[("reduced", RicciPath::Reduced), ("general", RicciPath::General)]);
    spec.hodge = r.choice("forms.hodge", HodgeMethod::DDelta, &[("d-delta", HodgeMethod::DDelta), ("bochner", HodgeMethod::Bochner)]);

    // Forms and probes keep their file order.
    let mut dynamic: Vec<(String, usize, String)> = r
        .entries
        .iter()
        .filter(|(k, _)| k.starts_with("form.") || k.starts_with("probe."))
        .map(|(k, e)| (k.clone(), e.line, e.value.clone()))
        .collect();
    dynamic.sort_by_key(|d| d.1);
    for (key, line, value) in &dynamic {
        let parts: Vec<&str> = key.split('.').collect();
        match parts.as_slice() {
            ["form", label] => {
                r.raw(key);
                if !is_label(label) {
                    r.errors.push(format!("line {line}: form label '{label}' must be alphanumeric"));
                    continue;
                }
                let preset = match value.as_str() {
                    "dtheta" => FormPreset::Dtheta,
                    "sin-x-dx" => FormPreset::SinXDx,
                    "zero" => FormPreset::Zero,
                    "dtheta-plus-exact" => {
                        FormPreset::DthetaPlusExact { coeff: r.f64(&format!("form.{label}.coeff"), 0.3) }
                    }
                    other => {
                        r.errors.push(format!(
                            "line {line}: {key} = '{other}' is not one of dtheta, sin-x-dx, dtheta-plus-exact, zero"
                        ));
                        continue;
                    }
                };
                spec.forms.push(FormSpec { label: label.to_string(), preset });
            }
            ["probe", label, "form"] => {
                r.raw(key);
                let x = r.f64(&format!("probe.{label}.x"), 0.0);
                spec.probes.push(ProbeSpec { label: label.to_string(), form: value.clone(), x });
            }
            _ => {}
        }
    }
    if let Some((line, v)) = r.raw("gauge.form") {
        r.check(spec.forms.iter().any(|f| f.label == v), || format!("line {line}: gauge.form names undeclared form '{v}'"));
        spec.gauge = Some(v);
    }

    let sub = r.choice(
        "subsolution.preset",
        "none",
        &[("none", "none"), ("one-plus-cos", "one-plus-cos"), ("bump", "bump"), ("constant", "constant")],
    );
    spec.subsolution = match sub {
        "one-plus-cos" => SubsolutionPreset::OnePlusCos,
        "bump" => SubsolutionPreset::Bump {
            center: r.f64("subsolution.center", 0.0),
            width: r.f64("subsolution.width", 2.0),
            height: r.f64("subsolution.height", 1.0),
        },
        "constant" => SubsolutionPreset::Constant { value: r.f64("subsolution.value", 1.0) },
        _ => SubsolutionPreset::None,
    };
    if let SubsolutionPreset::Bump { width, height, .. } = spec.subsolution {
        r.check(width > 0.0, || format!("subsolution.width = {width} must be positive"));
        r.check(height >= 0.0, || format!("subsolution.height = {height} must be nonnegative"));
    }
    if let SubsolutionPreset::Constant { value } = spec.subsolution {
        r.check(value >= 0.0, || format!("subsolution.value = {value} must be nonnegative"));
    }
    spec.sink = r.f64("subsolution.sink", 0.0);
    let sink = spec.sink;
    r.check(sink >= 0.0, || format!("subsolution.sink = {sink} must be nonnegative"));

    let it = &mut spec.integrator;
    it.scheme = r.choice("integrator.scheme", Scheme::Rk2, &[("rk2", Scheme::Rk2), ("rk4", Scheme::Rk4)]);
    it.cfl = r.f64("integrator.cfl", it.cfl);
    it.dt_max = r.f64("integrator.dt_max", it.dt_max);
    it.dt_min = r.f64("integrator.dt_min", it.dt_min);
    it.max_steps = r.usize("integrator.max_steps", it.max_steps);
    it.cadence = r.usize("output.cadence", it.cadence);
    let (cfl, dt_max, dt_min, cadence) = (it.cfl, it.dt_max, it.dt_min, it.cadence);
    r.check(cfl > 0.0 && cfl <= 0.5, || format!("integrator.cfl = {cfl} must lie in (0, 0.5]"));
    r.check(dt_max > 0.0, || format!("integrator.dt_max = {dt_max} must be positive"));
    r.check(dt_min > 0.0 && dt_min.is_finite(), || format!("integrator.dt_min = {dt_min} must be positive"));
    r.check(cadence >= 1, || "output.cadence must be at least 1".to_string());
    spec.t_end = r.f64("time.t_end", spec.t_end);
    let t_end = spec.t_end;
    r.check(t_end > 0.0 && t_end.is_finite(), || format!("time.t_end = {t_end} must be positive"));
    spec.snapshots = r.usize("output.snapshots", 0);

    let m = &mut spec.monitors;
    m.energy = r.bool("monitors.energy", false);
    m.bochner_gap = r.bool("monitors.bochner_gap", false);
    m.buffer = r.choice(
        "monitors.buffer",
        BufferMode::Auto,
        &[
            ("auto", BufferMode::Auto),
            ("on", BufferMode::On),
            ("report-only", BufferMode::ReportOnly),
            ("off", BufferMode::Off),
        ],
    );
    m.buffer_fraction = r.f64("monitors.buffer_fraction", m.buffer_fraction);
    m.buffer_threshold = r.f64("monitors.buffer_threshold", m.buffer_threshold);
    let (bf, bt) = (m.buffer_fraction, m.buffer_threshold);
    r.check(bf > 0.0 && bf < 0.5, || format!("monitors.buffer_fraction = {bf} must lie in (0, 0.5)"));
    r.check(bt > 0.0, || format!("monitors.buffer_threshold = {bt} must be positive"));

    // Labels must be unique; probes need declared forms and θ-circles.
    let mut seen = std::collections::BTreeSet::new();
    for f in &spec.forms {
        if !seen.insert(f.label.clone()) {
            r.errors.push(format!("form label '{}' declared twice", f.label));
        }
    }
    for p in &spec.probes {
        if !spec.forms.iter().any(|f| f.label == p.form) {
            r.errors.push(format!("probe {} refers to undeclared form '{}'", p.label, p.form));
        }
        if family == Family::ConformalPlane {
            r.errors.push(format!("probe {}: θ-circles need a periodic second axis, which a plane lacks", p.label));
        }
        if family == Family::WarpedCylinder && !(p.x >= spec.grid.x_min && p.x <= spec.grid.x_max) {
            r.errors.push(format!("probe {}: x = {} lies outside the cylinder", p.label, p.x));
        }
    }

    // Anything left over is unknown or does not apply.
    let mut valid: Vec<String> = STATIC_KEYS.iter().map(|s| s.to_string()).collect();
    for f in &spec.forms {
        valid.push(format!("form.{}", f.label));
        valid.push(format!("form.{}.coeff", f.label));
    }
    for p in &spec.probes {
        valid.push(format!("probe.{}.form", p.label));
        valid.push(format!("probe.{}.x", p.label));
    }
    let leftovers: Vec<(String, usize)> =
        r.entries.iter().filter(|(_, e)| !e.used).map(|(k, e)| (k.clone(), e.line)).collect();
    for (k, line) in leftovers {
        if STATIC_KEYS.contains(&k.as_str()) || k.starts_with("form.") || k.starts_with("probe.") && valid.contains(&k) {
            r.errors.push(format!("line {line}: key '{k}' does not apply to this scenario"));
        } else {
            let hint = nearest_key(&k, &valid).map(|n| format!(" (did you mean '{n}'?)")).unwrap_or_default();
            r.errors.push(format!("line {line}: unknown key '{k}'{hint}"));
        }
    }

    if r.errors.is_empty() {
        // Closedness of every probe base is checked by building it.
        if !spec.probes.is_empty() {
            if let Err(e) = super::build::build(&spec) {
                return Err(Error::Scenario(vec![e.to_string()]));
            }
        }
        Ok(spec)
    } else {
        Err(Error::Scenario(r.errors))
    }
}
