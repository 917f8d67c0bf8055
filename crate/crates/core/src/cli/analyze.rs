//! `analyze` and `sweep`.

use std::time::Instant;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::embedding::{
    a2m_sectorial_check, classify_trend, default_strip_partition, embedding_lower_bound, necessary_interval_check,
    sectorial_criterion, square_necessary_check, sufficient_strip_check, tree_sufficient_check, BesovWeight,
    EmbeddingProblem, TrendClass,
};
use crate::error::{Error, Result};
use crate::kernels::{banach_algebra_sufficient, double_sum_condition, necessary_subset_check, prop_operator_norm, KernelSpec};
use crate::maximal::{verify_estimate, Partition};
use crate::systems::{
    empirical_admissibility, threshold_curve_with, BoundaryPoint, Classification, DiagonalSystem, PreparedSystem,
    VerdictOptions,
};

use super::config::{sector_angle_for, AnalysisConfig, Operation};

pub const TOOL_NAME: &str = "carleson";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

impl ToolInfo {
    pub fn current() -> Self {
        Self {
            name: TOOL_NAME.into(),
            version: TOOL_VERSION.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperationResult {
    pub operation: Operation,
    pub result: Value,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictEntry {
    pub operation: Operation,
    pub classification: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperationTiming {
    pub operation: Operation,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub total_seconds: f64,
    pub operations: Vec<OperationTiming>,
}

/// Analysis report; `timing` is the only field that varies between identical runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub tool: ToolInfo,
    pub config: AnalysisConfig,
    pub results: Vec<OperationResult>,
    pub verdicts: Vec<VerdictEntry>,
    pub warnings: Vec<String>,
    pub timing: Timing,
}

impl Report {
    /// The report as JSON with the timing block removed.
    pub fn without_timing(&self) -> Value {
        let mut v = serde_json::to_value(self).expect("reports serialize");
        v.as_object_mut().expect("object").remove("timing");
        v
    }
}

/// A failed operation with the inputs it was run on.
#[derive(Debug, Clone, PartialEq)]
pub struct OperationFailure {
    pub operation: Option<Operation>,
    pub inputs: String,
    pub error: Error,
}

impl std::fmt::Display for OperationFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.operation {
            Some(op) => write!(f, "operation '{}' failed ({}): {}", op.name(), self.inputs, self.error),
            None => write!(f, "{}: {}", self.inputs, self.error),
        }
    }
}

impl OperationFailure {
    /// Exit code: 3 for numerical failures, 2 for everything caused by the config.
    pub fn exit_code(&self) -> i32 {
        if self.error.is_numerical() {
            3
        } else {
            2
        }
    }
}

struct Context<'a> {
    config: &'a AnalysisConfig,
    system: Option<DiagonalSystem>,
    problem: EmbeddingProblem,
    warnings: Vec<String>,
    verdicts: Vec<VerdictEntry>,
}

impl Context<'_> {
    fn system(&self, op: Operation) -> Result<&DiagonalSystem> {
        self.system
            .as_ref()
            .ok_or_else(|| Error::Unsupported(format!("'{}' needs a system problem", op.name())))
    }

    fn power_alpha(&self, op: Operation) -> Result<f64> {
        self.problem
            .weight()
            .power_alpha()
            .ok_or_else(|| Error::Unsupported(format!("'{}' needs a power weight t^alpha", op.name())))
    }

    fn theta(&self) -> f64 {
        self.config.grids.theta.unwrap_or_else(|| match &self.system {
            Some(s) => s.sector_angle(),
            None => sector_angle_for(self.problem.measure()),
        })
    }

    fn verdict_options(&self) -> VerdictOptions {
        VerdictOptions {
            thresholds: self.config.tolerances.trend,
            trend_only: self.config.tolerances.trend_only,
            ..VerdictOptions::default()
        }
    }

    fn centers(&self) -> Vec<Complex64> {
        self.config.grids.centers.clone().unwrap_or_else(|| {
            self.problem
                .measure()
                .atoms()
                .unwrap_or_default()
                .iter()
                .map(|a| a.location)
                .filter(|z| z.re > 0.0)
                .collect()
        })
    }

    fn kernel(&self) -> Result<KernelSpec> {
        self.config.kernel.name.parse()
    }

    fn verdict(&mut self, op: Operation, classification: &str, detail: String) {
        self.verdicts.push(VerdictEntry {
            operation: op,
            classification: classification.into(),
            detail,
        });
    }

    fn warn(&mut self, op: Operation, messages: impl IntoIterator<Item = String>) {
        self.warnings.extend(messages.into_iter().map(|m| format!("{}: {m}", op.name())));
    }

    fn run(&mut self, op: Operation) -> Result<Value> {
        let cfg = self.config;
        let tol = cfg.tolerances.quadrature;
        match op {
            Operation::Admissibility => {
                let alpha = self.power_alpha(op)?;
                let v = PreparedSystem::new(self.system(op)?)?.verdict(cfg.exponents.p, alpha, &self.verdict_options())?;
                let detail = format!("beta = {}, constant = {}", v.beta, v.criterion_constant);
                self.verdict(op, v.classification.as_str(), detail);
                self.warn(op, v.warnings.clone());
                Ok(json(&v))
            }
            Operation::Sectorial => {
                let levels = cfg.grids.levels.map(|(a, b)| a..=b);
                let r = sectorial_criterion(&self.problem, self.theta(), levels)?;
                let class = match classify_trend(r.sup, r.slope, r.last_slope, &cfg.tolerances.trend) {
                    TrendClass::Bounded => "bounded",
                    TrendClass::Unbounded => "unbounded",
                    TrendClass::Inconclusive => "inconclusive",
                };
                let slope = r.slope.map_or("n/a".to_string(), |s| s.to_string());
                self.verdict(op, class, format!("sup = {}, slope = {slope}", r.sup));
                self.warn(op, r.warnings.clone());
                Ok(json(&r))
            }
            Operation::Interval => {
                let lengths = cfg.grids.lengths.clone().unwrap_or_else(|| (-10..=30).map(|j| 2f64.powi(j)).collect());
                let r = necessary_interval_check(&self.problem, &lengths)?;
                Ok(json(&r))
            }
            Operation::Strip => {
                let partition = match &cfg.grids.strip_partition {
                    Some(p) => p.clone(),
                    None => default_strip_partition(self.problem.measure())?,
                };
                let r = sufficient_strip_check(&self.problem, &partition)?;
                self.warn(op, r.warnings.clone());
                Ok(json(&r))
            }
            Operation::LowerBound => {
                let r = embedding_lower_bound(&self.problem, self.theta(), cfg.grids.test_rates.as_deref())?;
                Ok(json(&r))
            }
            Operation::Empirical => {
                let alpha = self.power_alpha(op)?;
                let r = empirical_admissibility(self.system(op)?, cfg.exponents.p, alpha, None)?;
                self.warn(op, r.skipped.iter().map(|(i, e)| format!("input {i} skipped: {e}")));
                Ok(json(&r))
            }
            Operation::DoubleSum => {
                let r = double_sum_condition(self.system(op)?, &self.kernel()?, cfg.kernel.truncation)?;
                Ok(json(&r))
            }
            Operation::Subsets => {
                let r = necessary_subset_check(self.system(op)?, &self.kernel()?, None)?;
                Ok(json(&r))
            }
            Operation::OperatorNorm => {
                let r = prop_operator_norm(self.system(op)?, &self.kernel()?, cfg.kernel.truncation)?;
                Ok(json(&r))
            }
            Operation::Algebra => {
                let r = banach_algebra_sufficient(self.system(op)?, cfg.kernel.norm_bound);
                self.verdict(op, if r.holds { "holds" } else { "not_established" }, format!("l2 partial sum = {}", r.l2_partial));
                self.warn(op, r.warning.clone());
                Ok(json(&r))
            }
            Operation::Square => {
                let space = cfg.space.build(cfg.exponents.p)?;
                let r = square_necessary_check(&space, self.problem.q(), self.problem.measure(), &self.centers())?;
                if !r.skipped.is_empty() {
                    self.warn(op, [format!("{} centre(s) with a vanishing right side", r.skipped.len())]);
                }
                Ok(json(&r))
            }
            Operation::A2m => {
                let space = cfg.space.build(cfg.exponents.p)?;
                let (lo, hi) = cfg.grids.a2m_levels.unwrap_or((-10, 10));
                let (rows, sup) = a2m_sectorial_check(
                    &space,
                    self.problem.measure(),
                    self.theta(),
                    cfg.grids.a2m_base_length.unwrap_or(1.0),
                    lo..=hi,
                )?;
                Ok(serde_json::json!({ "rows": rows, "sup_ratio": sup }))
            }
            Operation::Tree => {
                let rho = BesovWeight::constant(cfg.signal.rho)?;
                let r = tree_sufficient_check(self.problem.measure(), self.problem.p(), self.problem.q(), &rho, &self.centers(), tol)?;
                Ok(json(&r))
            }
            Operation::Delta2 => {
                let space = cfg.space.build(cfg.exponents.p)?;
                Ok(serde_json::to_value(space.delta2()).expect("serializable"))
            }
            Operation::Estimate => {
                let f = cfg.signal.function()?;
                let points = cfg.grids.points.clone().unwrap_or_else(|| (-4..=4).map(|j| 2f64.powi(j)).collect());
                let partition = Partition::default_geometric();
                let checks = points
                    .iter()
                    .map(|&x| verify_estimate(&|t| f.eval(t), self.problem.weight(), cfg.exponents.p, x, &partition))
                    .collect::<Result<Vec<_>>>()?;
                let violations = checks.iter().filter(|c| !c.holds).count();
                if checks.iter().any(|c| c.theta.truncation_tail) {
                    self.warn(op, ["the partition sum was truncated while its terms were still growing".to_string()]);
                }
                self.verdict(op, if violations == 0 { "holds" } else { "violated" }, format!("{violations} violation(s)"));
                Ok(json(&checks))
            }
        }
    }
}

fn json<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("results serialize")
}

fn describe_inputs(config: &AnalysisConfig) -> String {
    let e = config.exponents;
    let q = e.q.map_or("system".to_string(), |q| q.to_string());
    let weight = match &config.weight {
        Some(w) => serde_json::to_string(w).unwrap_or_default(),
        None => format!("t^{}", e.alpha),
    };
    format!("p = {}, q = {q}, weight = {weight}", e.p)
}

fn setup(config: &AnalysisConfig) -> std::result::Result<(Option<DiagonalSystem>, EmbeddingProblem), OperationFailure> {
    let fail = |error| OperationFailure {
        operation: None,
        inputs: describe_inputs(config),
        error,
    };
    config.validate().map_err(fail)?;
    let system = config.system().map_err(fail)?;
    let problem = config.embedding(system.as_ref()).map_err(fail)?;
    Ok((system, problem))
}

/// Runs every selected operation in order.
pub fn run_analysis(config: &AnalysisConfig) -> std::result::Result<Report, OperationFailure> {
    let start = Instant::now();
    let (system, problem) = setup(config)?;
    let mut ctx = Context {
        config,
        system,
        problem,
        warnings: Vec::new(),
        verdicts: Vec::new(),
    };
    if let Some(sys) = &ctx.system {
        if sys.tail().is_none() {
            ctx.warnings
                .push(format!("system truncated at {} modes without a tail descriptor; verdicts rest on the trend", sys.len()));
        }
    }
    let mut results = Vec::new();
    let mut timings = Vec::new();
    for &op in &config.operations {
        let t0 = Instant::now();
        let result = ctx.run(op).map_err(|error| OperationFailure {
            operation: Some(op),
            inputs: describe_inputs(config),
            error,
        })?;
        timings.push(OperationTiming {
            operation: op,
            seconds: t0.elapsed().as_secs_f64(),
        });
        results.push(OperationResult { operation: op, result });
    }
    Ok(Report {
        tool: ToolInfo::current(),
        config: config.clone(),
        results,
        verdicts: ctx.verdicts,
        warnings: ctx.warnings,
        timing: Timing {
            total_seconds: start.elapsed().as_secs_f64(),
            operations: timings,
        },
    })
}

/// One CSV row of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub p: f64,
    pub alpha: f64,
    pub beta: Option<f64>,
    pub sup: Option<f64>,
    pub slope: Option<f64>,
    pub classification: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundarySummary {
    pub tool: ToolInfo,
    pub config: AnalysisConfig,
    pub boundary: Vec<BoundaryPoint>,
    pub cells: usize,
    pub counts: Vec<(String, usize)>,
    pub timing: Timing,
}

pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    pub summary: BoundarySummary,
}

/// Verdicts on the `grids.p x grids.alpha` grid; missing axes fall back to the
/// single values in `exponents`.
pub fn run_sweep(config: &AnalysisConfig) -> std::result::Result<SweepOutput, OperationFailure> {
    let start = Instant::now();
    let (system, problem) = setup(config)?;
    let fail = |error| OperationFailure {
        operation: Some(Operation::Admissibility),
        inputs: describe_inputs(config),
        error,
    };
    let system = system.ok_or_else(|| fail(Error::Unsupported("sweeps need a system problem".into())))?;
    if problem.weight().power_alpha().is_none() || config.weight.is_some() && config.grids.alpha.is_some() {
        return Err(fail(Error::Unsupported("sweeps run over power weights t^alpha; drop the explicit weight".into())));
    }
    let p_grid = config.grids.p.clone().unwrap_or(vec![config.exponents.p]);
    let alpha_grid = config
        .grids
        .alpha
        .clone()
        .unwrap_or(vec![problem.weight().power_alpha().expect("checked")]);
    let cells = p_grid.len() * alpha_grid.len();
    if cells > config.sweep.max_cells {
        return Err(fail(Error::InvalidInput(format!(
            "sweep of {cells} cells exceeds the budget of {}",
            config.sweep.max_cells
        ))));
    }
    let options = VerdictOptions {
        thresholds: config.tolerances.trend,
        trend_only: config.tolerances.trend_only,
        ..VerdictOptions::default()
    };
    let curve = threshold_curve_with(&system, &p_grid, &alpha_grid, &options).map_err(fail)?;
    let rows: Vec<SweepRow> = curve
        .cells
        .iter()
        .map(|c| SweepRow {
            p: c.p,
            alpha: c.alpha,
            beta: c.verdict.as_ref().map(|v| v.beta),
            sup: c.verdict.as_ref().map(|v| v.criterion_constant),
            slope: c.verdict.as_ref().and_then(|v| v.slope),
            classification: c.classification.as_str().into(),
        })
        .collect();
    let counts = [
        Classification::Admissible,
        Classification::NotAdmissible,
        Classification::Inconclusive,
        Classification::NotApplicable,
    ]
    .iter()
    .map(|k| (k.as_str().to_string(), curve.cells.iter().filter(|c| c.classification == *k).count()))
    .collect();
    let summary = BoundarySummary {
        tool: ToolInfo::current(),
        config: config.clone(),
        boundary: curve.boundary,
        cells,
        counts,
        timing: Timing {
            total_seconds: start.elapsed().as_secs_f64(),
            operations: Vec::new(),
        },
    };
    Ok(SweepOutput { rows, summary })
}

/// RFC-4180 CSV with shortest round-trip floats.
pub fn sweep_csv(rows: &[SweepRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(|e| Error::InvalidInput(format!("csv: {e}")))?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidInput(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}
