//! JSON run configuration: one file drives every subcommand, each reading
//! only its blocks. Unknown fields are rejected so typos fail loudly.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::manifold::{AssumptionThresholds, GridKind, Warping};
use crate::operator::{BoundaryCondition, QuadratureRule};
use crate::solver::NonlinearityForm;

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub manifold: ManifoldConfig,
    #[serde(default)]
    pub operator: OperatorConfig,
    #[serde(default)]
    pub weight: WeightConfig,
    #[serde(default)]
    pub assumptions: AssumptionThresholds,
    #[serde(default)]
    pub nonlinearity: Option<NonlinearityConfig>,
    #[serde(default)]
    pub simulation: Option<SimulationConfig>,
    #[serde(default)]
    pub lemmas: Option<LemmasConfig>,
    #[serde(default)]
    pub lifespan: Option<LifespanConfig>,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ManifoldConfig {
    pub n: usize,
    pub warping: WarpingConfig,
    pub r_max: f64,
    pub nodes: usize,
    #[serde(default)]
    pub grid: Option<GridKind>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum WarpingConfig {
    Flat,
    LogBlend { c: f64 },
    Hyperbolic,
    UserSampled { r: Vec<f64>, psi: Vec<f64> },
}

impl WarpingConfig {
    pub fn build(&self) -> Result<Warping> {
        match self {
            WarpingConfig::Flat => Ok(Warping::Flat),
            WarpingConfig::LogBlend { c } => Warping::log_blend(*c),
            WarpingConfig::Hyperbolic => Ok(Warping::Hyperbolic),
            WarpingConfig::UserSampled { r, psi } => {
                Warping::user_sampled(r.clone(), psi.clone())
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct OperatorConfig {
    pub bc: BoundaryCondition,
    pub quadrature: Option<QuadratureConfig>,
}

impl Default for OperatorConfig {
    fn default() -> Self {
        OperatorConfig { bc: BoundaryCondition::DirichletOuter, quadrature: None }
    }
}

/// Partial override of the spectrum-derived quadrature defaults.
#[derive(Debug, Clone, Copy, Default, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureConfig {
    pub s_min: Option<f64>,
    pub s_max: Option<f64>,
    pub panels: Option<usize>,
    pub rule: Option<QuadratureRule>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct WeightConfig {
    pub alpha: f64,
    /// Either a positive number or "auto" (doubling sweep at run time).
    pub shift_n: ShiftConfig,
    pub t_values: Vec<f64>,
    pub spread_tolerance: f64,
}

impl Default for WeightConfig {
    fn default() -> Self {
        WeightConfig {
            alpha: 1.0,
            shift_n: ShiftConfig::Auto,
            t_values: vec![0.25, 1.0, 4.0],
            spread_tolerance: 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShiftConfig {
    Auto,
    Value(f64),
}

impl Serialize for ShiftConfig {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            ShiftConfig::Auto => s.serialize_str("auto"),
            ShiftConfig::Value(v) => s.serialize_f64(*v),
        }
    }
}

impl<'de> Deserialize<'de> for ShiftConfig {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Number(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Number(v) => Ok(ShiftConfig::Value(v)),
            Raw::Text(s) if s == "auto" => Ok(ShiftConfig::Auto),
            Raw::Text(s) => Err(serde::de::Error::custom(format!(
                "shift_n must be a positive number or \"auto\", got \"{s}\""
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearityConfig {
    pub p: f64,
    pub form: NonlinearityForm,
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    #[serde(default = "default_radius")]
    pub radius: f64,
    /// When set, the bump is rescaled so ∫ f₀ dμ equals this value.
    #[serde(default)]
    pub normalize_mass: Option<f64>,
    #[serde(default = "default_blowup_factor")]
    pub linf_blowup_factor: f64,
    #[serde(default = "default_sample_every")]
    pub sample_every: usize,
    #[serde(default = "default_true")]
    pub enforce_preconditions: bool,
}

fn default_amplitude() -> f64 {
    1.0
}
fn default_radius() -> f64 {
    2.0
}
fn default_blowup_factor() -> f64 {
    1e8
}
fn default_sample_every() -> usize {
    10
}
fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct LemmasConfig {
    pub tolerance: f64,
    pub minwedge_points: usize,
    pub bulk: Vec<BulkCaseConfig>,
    pub ball: Vec<RadiusCaseConfig>,
    pub complement: Vec<RadiusCaseConfig>,
}

impl Default for LemmasConfig {
    fn default() -> Self {
        LemmasConfig {
            tolerance: 0.05,
            minwedge_points: 1000,
            bulk: Vec::new(),
            ball: Vec::new(),
            complement: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct BulkCaseConfig {
    pub gamma: f64,
    pub alpha: f64,
    pub t_values: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RadiusCaseConfig {
    pub gamma: f64,
    pub r_values: Vec<f64>,
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct LifespanConfig {
    pub phi0: f64,
    /// Comparison constant for the ODE oracle; defaults to the normalized
    /// (1−β)/(p−1) that makes the oracle match the closed form.
    #[serde(default)]
    pub ode_constant: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize, Serialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub p: Vec<f64>,
    pub alpha: Vec<f64>,
    pub amplitude: Vec<f64>,
    pub shift_n: Vec<f64>,
}

/// Reads and range-checks a configuration file.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    let cfg: RunConfig =
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("invalid config: {e}")))?;
    validate(&cfg)?;
    Ok(cfg)
}

fn validate(cfg: &RunConfig) -> Result<()> {
    let m = &cfg.manifold;
    if m.n == 0 {
        return Err(Error::Config("manifold.n must be at least 1".into()));
    }
    if !(m.r_max > 0.0) {
        return Err(Error::Config(format!("manifold.r_max must be positive, got {}", m.r_max)));
    }
    if m.nodes < 64 {
        return Err(Error::Config(format!("manifold.nodes must be at least 64, got {}", m.nodes)));
    }
    let w = &cfg.weight;
    if !(w.alpha > 0.0 && w.alpha < 2.0) {
        return Err(Error::Config(format!("weight.alpha must lie in (0, 2), got {}", w.alpha)));
    }
    if let ShiftConfig::Value(v) = w.shift_n {
        if !(v > 0.0) {
            return Err(Error::Config(format!("weight.shift_n must be positive, got {v}")));
        }
    }
    if !(w.spread_tolerance >= 1.0) {
        return Err(Error::Config("weight.spread_tolerance must be at least 1".into()));
    }
    if w.t_values.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::Config("weight.t_values must be positive".into()));
    }
    if let Some(nl) = &cfg.nonlinearity {
        if !(nl.p > 1.0) {
            return Err(Error::Config(format!("nonlinearity.p must exceed 1, got {}", nl.p)));
        }
    }
    if let Some(sim) = &cfg.simulation {
        if !(sim.dt > 0.0) || !(sim.t_end > 0.0) {
            return Err(Error::Config("simulation.dt and simulation.t_end must be positive".into()));
        }
        if !(sim.radius > 0.0) || sim.radius >= cfg.manifold.r_max {
            return Err(Error::Config(
                "simulation.radius must be positive and inside the domain".into(),
            ));
        }
        if !(sim.linf_blowup_factor > 1.0) {
            return Err(Error::Config("simulation.linf_blowup_factor must exceed 1".into()));
        }
    }
    if let Some(lm) = &cfg.lemmas {
        if !(lm.tolerance > 0.0) {
            return Err(Error::Config("lemmas.tolerance must be positive".into()));
        }
    }
    if let Some(ls) = &cfg.lifespan {
        if !(ls.phi0 > 0.0) {
            return Err(Error::Config(format!("lifespan.phi0 must be positive, got {}", ls.phi0)));
        }
        if let Some(c) = ls.ode_constant {
            if !(c > 0.0) {
                return Err(Error::Config("lifespan.ode_constant must be positive".into()));
            }
        }
    }
    if let Some(q) = cfg.operator.quadrature {
        if let Some(panels) = q.panels {
            if panels < 16 {
                return Err(Error::Config("operator.quadrature.panels must be at least 16".into()));
            }
        }
    }
    Ok(())
}
