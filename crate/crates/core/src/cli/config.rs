//! JSON analysis configuration.
//!
//! Every field has a default, and the fully-defaulted config is echoed into
//! the report, so a report's `config` block re-parses into the same run.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::embedding::{ApSpaceSpec, EmbeddingProblem, TrendThresholds};
use crate::error::{Error, Result};
use crate::laplace::{ExpPowerFunction, DEFAULT_TOL};
use crate::measures::{PlaneMeasure, RadialMeasure};
use crate::systems::{build_builtin, BuiltinSystem, DiagonalSystem, TailDescriptor};
use crate::weights::Weight;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    pub problem: Problem,
    /// Input weight; defaults to `t^alpha` with `alpha` from `exponents`.
    #[serde(default)]
    pub weight: Option<Weight>,
    #[serde(default)]
    pub exponents: Exponents,
    #[serde(default = "default_operations")]
    pub operations: Vec<Operation>,
    #[serde(default)]
    pub grids: Grids,
    #[serde(default)]
    pub kernel: KernelConfig,
    #[serde(default)]
    pub space: SpaceConfig,
    #[serde(default)]
    pub signal: SignalConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_operations() -> Vec<Operation> {
    vec![Operation::Admissibility]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Problem {
    System(SystemConfig),
    Measure(PlaneMeasure),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemConfig {
    Builtin { name: BuiltinSystem, modes: usize },
    Explicit {
        eigenvalues: Vec<Complex64>,
        coefficients: Vec<Complex64>,
        #[serde(default = "two")]
        state_exponent: f64,
        #[serde(default)]
        tail: Option<TailDescriptor>,
    },
}

fn two() -> f64 {
    2.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Exponents {
    #[serde(default = "two")]
    pub p: f64,
    /// Target exponent for measure problems; systems use their state exponent.
    #[serde(default)]
    pub q: Option<f64>,
    #[serde(default)]
    pub alpha: f64,
}

impl Default for Exponents {
    fn default() -> Self {
        Self {
            p: 2.0,
            q: None,
            alpha: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Operation {
    Admissibility,
    Sectorial,
    Interval,
    Strip,
    LowerBound,
    Empirical,
    DoubleSum,
    Subsets,
    OperatorNorm,
    Algebra,
    Square,
    A2m,
    Tree,
    Delta2,
    Estimate,
}

impl Operation {
    pub fn name(&self) -> &'static str {
        match self {
            Operation::Admissibility => "admissibility",
            Operation::Sectorial => "sectorial",
            Operation::Interval => "interval",
            Operation::Strip => "strip",
            Operation::LowerBound => "lower_bound",
            Operation::Empirical => "empirical",
            Operation::DoubleSum => "double_sum",
            Operation::Subsets => "subsets",
            Operation::OperatorNorm => "operator_norm",
            Operation::Algebra => "algebra",
            Operation::Square => "square",
            Operation::A2m => "a2m",
            Operation::Tree => "tree",
            Operation::Delta2 => "delta2",
            Operation::Estimate => "estimate",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grids {
    /// Dyadic levels `[lo, hi]` for the sectorial profile; default spans the atoms.
    #[serde(default)]
    pub levels: Option<(i32, i32)>,
    /// Sector half-angle; default is derived from the atoms.
    #[serde(default)]
    pub theta: Option<f64>,
    /// Interval lengths for the necessary condition; default `2^j`, `j in [-10, 30]`.
    #[serde(default)]
    pub lengths: Option<Vec<f64>>,
    /// Strip breakpoints `0 < a_0 < a_1 < ...`; default dyadic.
    #[serde(default)]
    pub strip_partition: Option<Vec<f64>>,
    /// Decay rates of the lower-bound test functions; default dyadic.
    #[serde(default)]
    pub test_rates: Option<Vec<f64>>,
    /// Carleson square centres for the square and tree checks; default: the atoms.
    #[serde(default)]
    pub centers: Option<Vec<Complex64>>,
    #[serde(default)]
    pub a2m_base_length: Option<f64>,
    #[serde(default)]
    pub a2m_levels: Option<(i32, i32)>,
    /// Points `x` for the maximal-function estimate; default `2^j`, `j in [-4, 4]`.
    #[serde(default)]
    pub points: Option<Vec<f64>>,
    /// Sweep axes.
    #[serde(default)]
    pub p: Option<Vec<f64>>,
    #[serde(default)]
    pub alpha: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    /// `"hardy"` or `"bergman:<alpha>"`.
    #[serde(default = "default_kernel")]
    pub name: String,
    #[serde(default)]
    pub truncation: Option<usize>,
    #[serde(default = "one")]
    pub norm_bound: f64,
}

fn default_kernel() -> String {
    "hardy".into()
}

fn one() -> f64 {
    1.0
}

impl Default for KernelConfig {
    fn default() -> Self {
        Self {
            name: default_kernel(),
            truncation: None,
            norm_bound: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SpaceConfig {
    #[default]
    Hardy,
    Dirichlet,
    Custom { components: Vec<RadialMeasure> },
}

impl SpaceConfig {
    pub fn build(&self, p: f64) -> Result<ApSpaceSpec> {
        match self {
            SpaceConfig::Hardy => ApSpaceSpec::hardy(p),
            SpaceConfig::Dirichlet => ApSpaceSpec::dirichlet(p),
            SpaceConfig::Custom { components } => ApSpaceSpec::new(p, components.clone()),
        }
    }
}

/// Test function `t^beta e^{-rate t}` and Besov weight for the function-level checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalConfig {
    #[serde(default)]
    pub beta: f64,
    #[serde(default = "one")]
    pub rate: f64,
    /// Constant Besov weight `rho` for the tree check.
    #[serde(default = "one")]
    pub rho: f64,
}

impl Default for SignalConfig {
    fn default() -> Self {
        Self {
            beta: 0.0,
            rate: 1.0,
            rho: 1.0,
        }
    }
}

impl SignalConfig {
    pub fn function(&self) -> Result<ExpPowerFunction> {
        ExpPowerFunction::new(self.beta, self.rate)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "default_budget")]
    pub max_cells: usize,
}

fn default_budget() -> usize {
    10_000
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { max_cells: default_budget() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_tol")]
    pub quadrature: f64,
    #[serde(default)]
    pub trend: TrendThresholds,
    /// Ignore tail descriptors and classify from the truncated data.
    #[serde(default)]
    pub trend_only: bool,
}

fn default_tol() -> f64 {
    DEFAULT_TOL
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            quadrature: DEFAULT_TOL,
            trend: TrendThresholds::default(),
            trend_only: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_report")]
    pub report: String,
    #[serde(default = "default_table")]
    pub table: String,
    #[serde(default = "default_boundary")]
    pub boundary: String,
}

fn default_report() -> String {
    "report.json".into()
}

fn default_table() -> String {
    "sweep.csv".into()
}

fn default_boundary() -> String {
    "boundary.json".into()
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            report: default_report(),
            table: default_table(),
            boundary: default_boundary(),
        }
    }
}

impl AnalysisConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| Error::InvalidInput(format!("config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidInput(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Structural checks that do not need any numerics.
    pub fn validate(&self) -> Result<()> {
        let e = self.exponents;
        if !(e.p > 1.0) || !e.p.is_finite() {
            return Err(Error::InvalidInput(format!("p must lie in (1, inf), got {}", e.p)));
        }
        if let Some(q) = e.q {
            if !(q >= 1.0) || !q.is_finite() {
                return Err(Error::InvalidInput(format!("q must lie in [1, inf), got {q}")));
            }
        }
        if !e.alpha.is_finite() {
            return Err(Error::InvalidInput("alpha must be finite".into()));
        }
        if let Some(w) = &self.weight {
            w.validate()?;
        }
        if !(self.tolerances.quadrature > 0.0) {
            return Err(Error::InvalidInput("quadrature tolerance must be positive".into()));
        }
        if let Some(theta) = self.grids.theta {
            if !(0.0..FRAC_PI_2).contains(&theta) {
                return Err(Error::InvalidInput(format!("theta must lie in [0, pi/2), got {theta}")));
            }
        }
        self.kernel.name.parse::<crate::kernels::KernelSpec>()?;
        if let Problem::Measure(mu) = &self.problem {
            mu.validate()?;
            if e.q.is_none() {
                return Err(Error::InvalidInput("measure problems need exponents.q".into()));
            }
        }
        Ok(())
    }

    pub fn system(&self) -> Result<Option<DiagonalSystem>> {
        match &self.problem {
            Problem::System(SystemConfig::Builtin { name, modes }) => build_builtin(*name, *modes).map(Some),
            Problem::System(SystemConfig::Explicit {
                eigenvalues,
                coefficients,
                state_exponent,
                tail,
            }) => DiagonalSystem::new(eigenvalues.clone(), coefficients.clone(), *state_exponent, *tail).map(Some),
            Problem::Measure(_) => Ok(None),
        }
    }

    /// Weight in force: the explicit one, else `t^alpha`.
    pub fn effective_weight(&self) -> Weight {
        self.weight.clone().unwrap_or(Weight::power(self.exponents.alpha))
    }

    /// Resolves the problem into an embedding problem.
    pub fn embedding(&self, sys: Option<&DiagonalSystem>) -> Result<EmbeddingProblem> {
        let (q, mu) = match (sys, &self.problem) {
            (Some(s), _) => {
                if let Some(q) = self.exponents.q {
                    if q != s.state_exponent() {
                        return Err(Error::InvalidInput(format!(
                            "exponents.q = {q} disagrees with the system's state exponent {}",
                            s.state_exponent()
                        )));
                    }
                }
                (s.state_exponent(), s.measure()?)
            }
            (None, Problem::Measure(mu)) => (self.exponents.q.expect("validated"), mu.clone()),
            (None, Problem::System(_)) => unreachable!("systems are built before the embedding"),
        };
        EmbeddingProblem::new(self.exponents.p, q, self.effective_weight(), mu)
    }
}

/// Sector angle strictly containing every atom of `mu`.
pub fn sector_angle_for(mu: &PlaneMeasure) -> f64 {
    let t = mu
        .atoms()
        .unwrap_or_default()
        .iter()
        .filter(|a| a.location.re > 0.0)
        .map(|a| a.location.im.abs() / a.location.re)
        .fold(0.0, f64::max);
    if t == 0.0 {
        FRAC_PI_4
    } else {
        0.5 * (t.atan() + FRAC_PI_2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = AnalysisConfig::from_json(r#"{"problem": {"system": {"builtin": {"name": "heat-neumann", "modes": 10}}}}"#)
            .unwrap();
        assert_eq!(c.exponents, Exponents::default());
        assert_eq!(c.operations, vec![Operation::Admissibility]);
        let echoed = serde_json::to_string(&c).unwrap();
        assert_eq!(AnalysisConfig::from_json(&echoed).unwrap(), c);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let bad = r#"{"problem": {"system": {"builtin": {"name": "heat-neumann", "modes": 10}}}, "colour": 1}"#;
        assert!(AnalysisConfig::from_json(bad).is_err());
        let bad = r#"{"problem": {"system": {"builtin": {"name": "heat-neumann", "modes": 10}}}, "exponents": {"pp": 2}}"#;
        assert!(AnalysisConfig::from_json(bad).is_err());
    }

    #[test]
    fn measure_problems_need_q() {
        let text = r#"{"problem": {"measure": {"atomic": {"atoms": [{"location": [1, 0], "mass": 1}]}}}}"#;
        assert!(AnalysisConfig::from_json(text).is_err());
        let text = r#"{"problem": {"measure": {"atomic": {"atoms": [{"location": [1, 0], "mass": 1}]}}}, "exponents": {"p": 2, "q": 2}}"#;
        let c = AnalysisConfig::from_json(text).unwrap();
        assert!(c.system().unwrap().is_none());
        assert_eq!(c.embedding(None).unwrap().q(), 2.0);
    }

    #[test]
    fn sector_angles() {
        let mu = PlaneMeasure::from_pairs(&[(Complex64::new(1.0, 1.0), 1.0)]).unwrap();
        assert!((sector_angle_for(&mu) - 3.0 * std::f64::consts::PI / 8.0).abs() < 1e-15);
        assert_eq!(sector_angle_for(&PlaneMeasure::empty()), FRAC_PI_4);
    }
}
