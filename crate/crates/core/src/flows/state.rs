use crate::geometry::{
    Grid2D, HodgeMethod, MetricField, OneFormField, Parameterization, ScalarField,
};

/// A 1-form carried along by the heat flow φₜ = Δ_dφ.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackedForm {
    pub label: String,
    pub form: OneFormField,
}

/// Gauge function for one tracked form: ∂ₜF = ΔF − δφ₀, F(0) = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeTrack {
    /// Label of the tracked form whose initial value is φ₀.
    pub form_label: String,
    pub base: OneFormField,
    pub f: ScalarField,
}

/// Scalar (sub)solution of uₜ = Δu − c·u with sink c ≥ 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Subsolution {
    pub u: ScalarField,
    pub sink: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub t: f64,
    pub step: usize,
    pub metric: MetricField,
    pub forms: Vec<TrackedForm>,
    pub gauge: Option<GaugeTrack>,
    pub subsolution: Option<Subsolution>,
}

impl FlowState {
    pub fn new(metric: MetricField) -> Self {
        FlowState { t: 0.0, step: 0, metric, forms: Vec::new(), gauge: None, subsolution: None }
    }

    pub fn with_form(mut self, label: impl Into<String>, form: OneFormField) -> Self {
        self.forms.push(TrackedForm { label: label.into(), form });
        self
    }

    /// Tracks the gauge of the form labelled `label`, which must already be
    /// present. Returns `None` when it is not.
    pub fn with_gauge(mut self, label: &str) -> Option<Self> {
        let base = self.form(label)?.clone();
        let n = base.x.len();
        self.gauge = Some(GaugeTrack {
            form_label: label.to_string(),
            base,
            f: ScalarField::new(crate::geometry::ScalarRole::Gauge, vec![0.0; n]),
        });
        Some(self)
    }

    pub fn with_subsolution(mut self, u: Vec<f64>, sink: f64) -> Self {
        self.subsolution = Some(Subsolution {
            u: ScalarField::new(crate::geometry::ScalarRole::Subsolution, u),
            sink,
        });
        self
    }

    /// Copy of everything but the metric, which is left flat-empty.
    pub(crate) fn clone_without_metric(&self) -> FlowState {
        FlowState {
            t: self.t,
            step: self.step,
            metric: MetricField {
                gxx: Vec::new(),
                gxy: Vec::new(),
                gyy: Vec::new(),
                param: Parameterization::General,
            },
            forms: self.forms.clone(),
            gauge: self.gauge.clone(),
            subsolution: self.subsolution.clone(),
        }
    }

    pub fn form(&self, label: &str) -> Option<&OneFormField> {
        self.forms.iter().find(|f| f.label == label).map(|f| &f.form)
    }

    /// φ₀ + dF(t) for the gauge-tracked class.
    pub fn gauge_representative(&self, grid: &Grid2D) -> Option<OneFormField> {
        let gauge = self.gauge.as_ref()?;
        let df = crate::geometry::exterior_derivative(&gauge.f, grid);
        Some(OneFormField::closed(
            gauge.base.x.iter().zip(&df.x).map(|(a, b)| a + b).collect(),
            gauge.base.y.iter().zip(&df.y).map(|(a, b)| a + b).collect(),
        ))
    }
}

/// Which path supplies the Ricci flow right-hand side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RicciPath {
    /// Closed-form curvature of the metric's parameterization.
    Reduced,
    /// Coordinate formula on the components; tags are dropped.
    General,
}

/// Everything about a run that does not change from step to step.
#[derive(Debug, Clone)]
pub struct FlowSystem {
    pub grid: Grid2D,
    /// Nodes whose values never change (truncated ends, outside a disk).
    pub frozen: Vec<bool>,
    pub evolve_metric: bool,
    pub ricci_path: RicciPath,
    /// Operator used to evolve forms.
    pub hodge: HodgeMethod,
}

impl FlowSystem {
    /// Periodic axes freeze nothing; truncated axes freeze their end nodes.
    pub fn new(grid: Grid2D) -> Self {
        let frozen = (0..grid.len())
            .map(|k| grid.near_edge(k / grid.ny(), k % grid.ny(), 1))
            .collect();
        FlowSystem {
            grid,
            frozen,
            evolve_metric: true,
            ricci_path: RicciPath::Reduced,
            hodge: HodgeMethod::DDelta,
        }
    }

    pub fn static_metric(mut self) -> Self {
        self.evolve_metric = false;
        self
    }

    pub fn with_hodge(mut self, method: HodgeMethod) -> Self {
        self.hodge = method;
        self
    }

    pub fn with_ricci_path(mut self, path: RicciPath) -> Self {
        self.ricci_path = path;
        self
    }

    /// Additionally freezes every node with `pred(x, y)`.
    pub fn freeze_where(mut self, pred: impl Fn(f64, f64) -> bool) -> Self {
        for i in 0..self.grid.nx() {
            for j in 0..self.grid.ny() {
                let (x, y) = self.grid.coords(i, j);
                if pred(x, y) {
                    self.frozen[self.grid.idx(i, j)] = true;
                }
            }
        }
        self
    }

    /// Prepares an initial state for this system (drops the metric tag when
    /// the general path is requested).
    pub fn prepare(&self, mut state: FlowState) -> FlowState {
        if self.ricci_path == RicciPath::General && state.metric.param != Parameterization::General {
            state.metric = state.metric.into_general();
        }
        state
    }
}
