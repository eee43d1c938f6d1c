//! Scenario documents: parsing, defaults and validation.

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::grid::{Axis, Boundary, SpatialGrid};
use crate::runner::RunError;
use crate::schrodinger::{AnalyticState, InitialState, Method, PairState, PropagatorConfig};
use crate::stats::Observable;
use crate::stochastic::{AnalyticSource, ModelParams, Sampling};
use crate::system::{AxisPotential, ClassicalSystem};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReportKind {
    DeviationLaw,
    BornRule,
    FluctuationScaling,
    ClassicalLimit,
    InformationBalance,
    Uncertainty,
    OperatorAverages,
    Locality,
    SolverCrossValidation,
    Determinism,
    Trajectories,
}

impl ReportKind {
    pub fn name(&self) -> &'static str {
        match self {
            ReportKind::DeviationLaw => "deviation-law",
            ReportKind::BornRule => "born-rule",
            ReportKind::FluctuationScaling => "fluctuation-scaling",
            ReportKind::ClassicalLimit => "classical-limit",
            ReportKind::InformationBalance => "information-balance",
            ReportKind::Uncertainty => "uncertainty",
            ReportKind::OperatorAverages => "operator-averages",
            ReportKind::Locality => "locality",
            ReportKind::SolverCrossValidation => "solver-cross-validation",
            ReportKind::Determinism => "determinism",
            ReportKind::Trajectories => "trajectories",
        }
    }

    /// Whether the report reads the scenario's main trajectory ensemble.
    pub fn uses_ensemble(&self) -> bool {
        matches!(
            self,
            ReportKind::BornRule
                | ReportKind::Uncertainty
                | ReportKind::OperatorAverages
                | ReportKind::Determinism
                | ReportKind::Trajectories
        )
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FieldSourceKind {
    #[default]
    Solver,
    Analytic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub extent: Vec<f64>,
    pub n_points: Vec<usize>,
    /// Lower edge per axis; centred on zero when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<Vec<f64>>,
    /// Periodic for free systems, hard-wall when any axis is confining.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boundary: Option<Boundary>,
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    #[serde(default = "one")]
    pub hbar: f64,
    pub masses: Vec<f64>,
    pub potential: Vec<AxisPotential>,
    #[serde(default)]
    pub coupling: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldsSpec {
    #[serde(default)]
    pub source: FieldSourceKind,
    #[serde(default)]
    pub sampling: Sampling,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeviationLawOptions {
    pub lambdas: Vec<f64>,
    pub samples: usize,
    pub mean_tolerance: f64,
    pub bins: usize,
}

impl Default for DeviationLawOptions {
    fn default() -> Self {
        Self { lambdas: vec![0.5, 1.0, 2.0], samples: 1_000_000, mean_tolerance: 0.01, bins: 60 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BornRuleOptions {
    /// Multiple of the 95% sampling band allowed for discretization.
    pub band_factor: f64,
    /// Smaller model steps rerun with the same seed; KS must not grow.
    pub refine_dt: Vec<f64>,
}

impl Default for BornRuleOptions {
    fn default() -> Self {
        Self { band_factor: 2.0, refine_dt: Vec::new() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FluctuationOptions {
    pub dts: Vec<f64>,
    pub horizon: f64,
    pub trajectories: usize,
    pub exponent: f64,
    pub tolerance: f64,
}

impl Default for FluctuationOptions {
    fn default() -> Self {
        Self { dts: vec![1e-2, 1e-3, 1e-4], horizon: 1.0, trajectories: 2000, exponent: 0.5, tolerance: 0.1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ClassicalLimitOptions {
    pub scales: Vec<f64>,
    /// One period of the first harmonic axis when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    pub sample_every: f64,
    pub final_tolerance: f64,
}

impl Default for ClassicalLimitOptions {
    fn default() -> Self {
        Self { scales: vec![1e-1, 1e-2, 1e-3], horizon: None, sample_every: 0.05, final_tolerance: 1e-2 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BalanceOptions {
    pub times: Vec<f64>,
    pub threshold: f64,
    /// Halvings of dq and dt_solver used for the refinement check.
    pub refinements: usize,
    /// Solver step the refinement ladder starts from; defaults to the propagator's.
    /// A coarser start keeps the truncation error above roundoff.
    pub refine_from_dt: Option<f64>,
    pub min_order: f64,
    /// Residuals below this are treated as roundoff, where no order can be observed.
    pub floor: f64,
    /// Further initial states checked with the same grid and system.
    pub extra_states: Vec<AnalyticState>,
}

impl Default for BalanceOptions {
    fn default() -> Self {
        Self { times: vec![0.0, 0.5], threshold: 1e-4, refinements: 1, refine_from_dt: None, min_order: 1.5, floor: 1e-9, extra_states: Vec::new() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UncertaintyOptions {
    /// Score `sigma_q sigma_p = hbar/2` within `equality_tolerance`.
    pub equality: bool,
    pub equality_tolerance: f64,
}

impl Default for UncertaintyOptions {
    fn default() -> Self {
        Self { equality: false, equality_tolerance: 0.02 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OperatorOptions {
    pub observables: Vec<String>,
    pub z_max: f64,
}

impl Default for OperatorOptions {
    fn default() -> Self {
        Self { observables: vec!["p".into(), "p2".into(), "H".into()], z_max: 3.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalityOptions {
    /// Replacement potential for the second particle.
    pub alternative: AxisPotential,
    #[serde(default = "default_separability_samples")]
    pub separability_samples: usize,
    #[serde(default = "default_decomposition_time")]
    pub decomposition_time: f64,
    #[serde(default = "default_defect_tolerance")]
    pub defect_tolerance: f64,
}

fn default_separability_samples() -> usize {
    1_000_000
}

fn default_decomposition_time() -> f64 {
    0.5
}

fn default_defect_tolerance() -> f64 {
    1e-6
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CrossValidationOptions {
    pub duration: f64,
    pub l2_tolerance: f64,
    pub norm_tolerance: f64,
    pub extra_states: Vec<AnalyticState>,
}

impl Default for CrossValidationOptions {
    fn default() -> Self {
        Self { duration: 1.0, l2_tolerance: 1e-5, norm_tolerance: 1e-8, extra_states: Vec::new() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DeterminismOptions {
    /// Thread count of the comparison run.
    pub threads: usize,
}

impl Default for DeterminismOptions {
    fn default() -> Self {
        Self { threads: 2 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrajectoryOptions {
    pub paths: usize,
    pub stride: usize,
}

impl Default for TrajectoryOptions {
    fn default() -> Self {
        Self { paths: 16, stride: 10 }
    }
}

fn default_ensemble() -> usize {
    10_000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub description: String,
    pub seed: u64,
    #[serde(default = "default_ensemble")]
    pub ensemble_size: usize,
    #[serde(default)]
    pub checkpoints: Vec<f64>,
    pub reports: Vec<ReportKind>,
    pub grid: GridSpec,
    pub system: SystemSpec,
    /// A single-particle state, or `kind = "product" | "symmetrized"` with two factors.
    pub initial: toml::Table,
    pub propagator: PropagatorConfig,
    pub model: ModelParams,
    #[serde(default)]
    pub fields: FieldsSpec,
    #[serde(default)]
    pub deviation_law: DeviationLawOptions,
    #[serde(default)]
    pub born_rule: BornRuleOptions,
    #[serde(default)]
    pub fluctuation_scaling: FluctuationOptions,
    #[serde(default)]
    pub classical_limit: ClassicalLimitOptions,
    #[serde(default)]
    pub information_balance: BalanceOptions,
    #[serde(default)]
    pub uncertainty: UncertaintyOptions,
    #[serde(default)]
    pub operator_averages: OperatorOptions,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub locality: Option<LocalityOptions>,
    #[serde(default)]
    pub solver_cross_validation: CrossValidationOptions,
    #[serde(default)]
    pub determinism: DeterminismOptions,
    #[serde(default)]
    pub trajectories: TrajectoryOptions,
}

/// A scenario with every kind resolved and every invariant checked.
#[derive(Clone, Debug)]
pub struct Resolved {
    pub scenario: Scenario,
    pub grid: SpatialGrid,
    pub system: ClassicalSystem,
    pub initial: InitialState,
    pub hbar: f64,
    pub observables: Vec<Observable>,
}

impl Scenario {
    /// TOML syntax problems are parse errors; wrong or unknown keys and kinds
    /// are validation errors.
    pub fn parse(text: &str) -> Result<Self, RunError> {
        let table: toml::Table = text.parse().map_err(|e: toml::de::Error| RunError::Parse(e.to_string()))?;
        Scenario::deserialize(toml::Value::Table(table)).map_err(|e| RunError::Validation(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).unwrap_or_default()
    }

    pub fn resolve(&self) -> Result<Resolved, RunError> {
        let invalid = |msg: String| RunError::Validation(msg);
        let wrap = |ctx: &str, e: Error| RunError::Validation(format!("{ctx}: {e}"));
        if self.name.trim().is_empty() {
            return Err(invalid("name must not be empty".into()));
        }
        let dims = self.grid.extent.len();
        if !(1..=2).contains(&dims) || self.grid.n_points.len() != dims {
            return Err(invalid("grid: extent and n_points must both list 1 or 2 axes".into()));
        }
        if self.system.masses.len() != dims || self.system.potential.len() != dims {
            return Err(invalid(format!("system: masses and potential must list {dims} entries to match the grid")));
        }
        for (d, p) in self.system.potential.iter().enumerate() {
            p.validate().map_err(|e| wrap(&format!("system.potential[{d}]"), e))?;
        }
        let boundary = self.grid.boundary.unwrap_or_else(|| {
            if self.system.potential.iter().all(|p| matches!(p, AxisPotential::Free)) {
                Boundary::Periodic
            } else {
                Boundary::HardWall
            }
        });
        let mut axes = Vec::with_capacity(dims);
        for d in 0..dims {
            let extent = self.grid.extent[d];
            let origin = match &self.grid.origin {
                Some(o) if o.len() == dims => o[d],
                Some(_) => return Err(invalid(format!("grid.origin must list {dims} entries"))),
                None => -0.5 * extent,
            };
            axes.push(Axis::new(origin, extent, self.grid.n_points[d]).map_err(|e| wrap(&format!("grid axis {d}"), e))?);
        }
        let grid = SpatialGrid::new(axes, boundary).map_err(|e| wrap("grid", e))?;
        let system = ClassicalSystem::with_coupling(self.system.masses.clone(), self.system.potential.clone(), self.system.coupling)
            .map_err(|e| wrap("system", e))?;
        system.check_grid(&grid).map_err(|e| wrap("system", e))?;
        let hbar = self.system.hbar;
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(invalid("system.hbar must be positive".into()));
        }
        let initial = resolve_initial(&self.initial, dims)?;
        match &initial {
            InitialState::Single(s) => {
                s.validate().map_err(|e| wrap("initial", e))?;
                s.check_axis(grid.axis(0), boundary).map_err(|e| wrap("initial", e))?;
            }
            InitialState::Pair(p) => {
                for (d, s) in p.factors().iter().enumerate() {
                    s.validate().map_err(|e| wrap(&format!("initial.factors[{d}]"), e))?;
                    s.check_axis(grid.axis(d), boundary).map_err(|e| wrap(&format!("initial.factors[{d}]"), e))?;
                }
            }
        }
        self.propagator.validate().map_err(|e| wrap("propagator", e))?;
        if self.propagator.method == Method::SplitStep {
            grid.require_spectral().map_err(|e| wrap("propagator (split-step)", e))?;
        }
        if self.propagator.method == Method::CrankNicolson && dims != 1 {
            return Err(invalid("propagator: crank-nicolson is available on line grids only".into()));
        }
        self.model.validate().map_err(|e| RunError::Validation(format!("model: {e}")))?;
        if self.ensemble_size < 2 {
            return Err(invalid("ensemble_size must be at least 2".into()));
        }
        if let Some(t) = self.checkpoints.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
            return Err(invalid(format!("checkpoint {t} must be finite and non-negative")));
        }
        if self.reports.is_empty() {
            return Err(invalid("reports must name at least one output".into()));
        }
        let mut seen = Vec::new();
        for r in &self.reports {
            if seen.contains(r) {
                return Err(invalid(format!("report `{}` is requested twice", r.name())));
            }
            seen.push(*r);
        }
        let uses_ensemble = self.reports.iter().any(|r| r.uses_ensemble());
        if uses_ensemble && self.checkpoints.is_empty() {
            return Err(invalid("reports on the trajectory ensemble need at least one checkpoint".into()));
        }
        if self.fields.source == FieldSourceKind::Solver && uses_ensemble {
            let ratio = self.model.dt / self.propagator.dt_solver;
            if (ratio - ratio.round()).abs() > 1e-6 || ratio.round() < 1.0 {
                return Err(invalid(format!(
                    "model.dt = {} must be a whole multiple of propagator.dt_solver = {}",
                    self.model.dt, self.propagator.dt_solver
                )));
            }
        }
        if self.fields.source == FieldSourceKind::Analytic {
            AnalyticSource::new(initial.clone(), &grid, &system, hbar).map_err(|e| wrap("fields.source = analytic", e))?;
        }
        let observables = self
            .operator_averages
            .observables
            .iter()
            .map(|s| s.parse::<Observable>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| wrap("operator_averages.observables", e))?;
        let single_line = dims == 1;
        for r in &self.reports {
            match r {
                ReportKind::DeviationLaw => {
                    let o = &self.deviation_law;
                    if o.lambdas.is_empty() || o.lambdas.iter().any(|l| *l == 0.0 || !l.is_finite()) || o.samples < 2 {
                        return Err(invalid("deviation_law: need non-zero lambdas and at least two samples".into()));
                    }
                }
                ReportKind::BornRule => {
                    if self.born_rule.refine_dt.iter().any(|d| !(*d > 0.0 && *d < self.model.dt)) {
                        return Err(invalid("born_rule.refine_dt entries must be positive and below model.dt".into()));
                    }
                }
                ReportKind::FluctuationScaling => {
                    let o = &self.fluctuation_scaling;
                    if o.dts.len() < 2 || o.dts.iter().any(|d| !(*d > 0.0)) || !(o.horizon > 0.0) || o.trajectories < 2 {
                        return Err(invalid("fluctuation_scaling: need two or more positive steps and a positive horizon".into()));
                    }
                }
                ReportKind::ClassicalLimit => {
                    let o = &self.classical_limit;
                    if o.scales.len() < 2 || o.scales.iter().any(|s| !(*s > 0.0)) || !(o.sample_every > 0.0) {
                        return Err(invalid("classical_limit: need two or more positive scales".into()));
                    }
                    if o.horizon.is_none() && !system.axis_potentials().iter().any(|p| matches!(p, AxisPotential::Harmonic { .. })) {
                        return Err(invalid("classical_limit: set a horizon when no axis is harmonic".into()));
                    }
                }
                ReportKind::InformationBalance => {
                    if self.information_balance.times.iter().any(|t| !(*t >= 0.0)) {
                        return Err(invalid("information_balance.times must be non-negative".into()));
                    }
                    if let Some(dt) = self.information_balance.refine_from_dt {
                        if !(dt > 0.0) || self.information_balance.times.iter().any(|t| (t / dt - (t / dt).round()).abs() > 1e-9) {
                            return Err(invalid(format!(
                                "information_balance.refine_from_dt = {dt} must be positive and divide every balance time"
                            )));
                        }
                    }
                    if !single_line && !self.information_balance.extra_states.is_empty() {
                        return Err(invalid("information_balance.extra_states apply to line grids only".into()));
                    }
                }
                ReportKind::Uncertainty | ReportKind::OperatorAverages => {}
                ReportKind::Locality => {
                    let Some(o) = &self.locality else {
                        return Err(invalid("locality: missing [locality] table with the alternative potential".into()));
                    };
                    o.alternative.validate().map_err(|e| wrap("locality.alternative", e))?;
                    if !matches!(&initial, InitialState::Pair(_)) || dims != 2 {
                        return Err(invalid("locality: needs a two-particle initial state on a plane grid".into()));
                    }
                    if !system.is_separable() {
                        return Err(wrap("locality", Error::Interacting("coupling must be zero".into())));
                    }
                }
                ReportKind::SolverCrossValidation => {
                    if !single_line {
                        return Err(invalid("solver_cross_validation: line grids only".into()));
                    }
                    grid.require_spectral().map_err(|e| wrap("solver_cross_validation", e))?;
                }
                ReportKind::Determinism => {
                    if self.determinism.threads == 0 {
                        return Err(invalid("determinism.threads must be positive".into()));
                    }
                }
                ReportKind::Trajectories => {
                    if self.trajectories.stride == 0 {
                        return Err(invalid("trajectories.stride must be positive".into()));
                    }
                }
            }
        }
        Ok(Resolved { scenario: self.clone(), grid, system, initial, hbar, observables })
    }
}

fn resolve_initial(table: &toml::Table, dims: usize) -> Result<InitialState, RunError> {
    let kind = table.get("kind").and_then(|k| k.as_str()).unwrap_or_default();
    let value = toml::Value::Table(table.clone());
    let state = if kind == "product" || kind == "symmetrized" {
        InitialState::Pair(PairState::deserialize(value).map_err(|e| RunError::Validation(format!("initial: {e}")))?)
    } else {
        InitialState::Single(AnalyticState::deserialize(value).map_err(|e| RunError::Validation(format!("initial: {e}")))?)
    };
    let want = if matches!(state, InitialState::Pair(_)) { 2 } else { 1 };
    if want != dims {
        return Err(RunError::Validation(format!("initial: a {want}-particle state does not fit a {dims}-dimensional grid")));
    }
    Ok(state)
}
