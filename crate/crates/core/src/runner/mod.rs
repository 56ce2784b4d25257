//! Configuration-driven experiment runner behind the `opquant` binary.
//!
//! A run reads one JSON [`ExperimentConfig`], validates every parameter
//! up front, evaluates the experiment and returns a [`RunReport`]. Failed
//! inequalities are collected into `violations` rather than aborting, so one
//! report characterises every failure.

mod vectors;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::construction::{
    check_dense_intersection, construction_suite, run_invariance_case, CaseReport, ConstructionError,
    DenseIntersectionReport, Part, SuiteConfig, SuiteReport,
};
use crate::operators::Operator;
use crate::quantities::{limit_estimate, Dims, Method, Quantity, QuantityEstimate, SearchParams, DEFAULT_RESTARTS};
use crate::seqspace::{Exponent, LinearFunctional, SpaceConfig, Subspace, TailVector};

pub use vectors::{emit_test_vectors, test_vectors, TestVectors};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Process exit codes.
pub const EXIT_OK: u8 = 0;
pub const EXIT_VIOLATION: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Quantities,
    ConstructionSuite,
    InvarianceCase,
    LemmaCheck,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub space: SpaceConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operator: Option<Operator>,
    pub experiment: Experiment,
    #[serde(default)]
    pub parameters: Parameters,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<String>,
}

/// Experiment parameters; every field is optional and has a documented
/// default for the experiments that use it.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Parameters {
    /// Quantity to estimate; all four when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quantity: Option<Quantity>,
    /// `(N, k, K)` triples, nondecreasing in each entry.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Vec<[usize; 3]>>,
    /// Defaults to subset_oracle for diagonals and svd_oracle otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restarts: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilons: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cs: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub systems: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub combinations: Option<usize>,
    /// Proof part(s) for invariance_case; all four when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub part: Option<Part>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Subspace>,
    /// Functional representers for lemma_check.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub functionals: Option<Vec<TailVector>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

pub const DEFAULT_EPSILON: f64 = 0.1;
pub const DEFAULT_DELTA: f64 = 0.05;
pub const DEFAULT_SAMPLES: usize = 100;
pub const DEFAULT_TOLERANCE: f64 = 1e-8;

/// A configuration problem, located by its field path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            path: path.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() || self.path == "." {
            f.write_str(&self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

/// Parses and validates a JSON configuration.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let config: ExperimentConfig =
        serde_path_to_error::deserialize(de).map_err(|e| ConfigError::new(e.path().to_string(), e.inner().to_string()))?;
    validate(&config)?;
    Ok(config)
}

fn in_unit_interval(path: &str, x: f64) -> Result<(), ConfigError> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(ConfigError::new(path, "must lie in (0,1)"))
    }
}

fn positive(path: &str, x: f64) -> Result<(), ConfigError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(ConfigError::new(path, "must be positive"))
    }
}

fn require_l2(config: &ExperimentConfig, what: &str) -> Result<(), ConfigError> {
    if config.space.p == Exponent::Two {
        Ok(())
    } else {
        Err(ConfigError::new("space.p", format!("{what} requires p = 2")))
    }
}

/// Checks every parameter range and the experiment-specific requirements.
pub fn validate(config: &ExperimentConfig) -> Result<(), ConfigError> {
    let p = &config.parameters;
    if let Some(e) = p.epsilon {
        in_unit_interval("parameters.epsilon", e)?;
    }
    for (i, &e) in p.epsilons.iter().flatten().enumerate() {
        in_unit_interval(&format!("parameters.epsilons[{i}]"), e)?;
    }
    if let Some(d) = p.delta {
        positive("parameters.delta", d)?;
    }
    if let Some(c) = p.c {
        positive("parameters.c", c)?;
    }
    for (i, &c) in p.cs.iter().flatten().enumerate() {
        positive(&format!("parameters.cs[{i}]"), c)?;
    }
    if let Some(tol) = p.tolerance {
        positive("parameters.tolerance", tol)?;
    }
    for (name, value) in [("restarts", p.restarts), ("samples", p.samples), ("systems", p.systems), ("combinations", p.combinations)] {
        if value == Some(0) {
            return Err(ConfigError::new(format!("parameters.{name}"), "must be at least 1"));
        }
    }
    if matches!(p.epsilons.as_deref(), Some([])) {
        return Err(ConfigError::new("parameters.epsilons", "must not be empty"));
    }
    if matches!(p.cs.as_deref(), Some([])) {
        return Err(ConfigError::new("parameters.cs", "must not be empty"));
    }
    if let Some(schedule) = &p.schedule {
        if schedule.is_empty() {
            return Err(ConfigError::new("parameters.schedule", "must not be empty"));
        }
        for (i, &[n, k, big_k]) in schedule.iter().enumerate() {
            let path = format!("parameters.schedule[{i}]");
            if k < 1 {
                return Err(ConfigError::new(path, "1 ≤ k required"));
            }
            if k > big_k {
                return Err(ConfigError::new(path, "k ≤ K required"));
            }
            if big_k > n {
                return Err(ConfigError::new(path, "K ≤ N required"));
            }
            if i > 0 {
                let [pn, pk, pbig] = schedule[i - 1];
                if n < pn || k < pk || big_k < pbig {
                    return Err(ConfigError::new(path, "schedule must be nondecreasing in N, k and K"));
                }
            }
        }
    }
    if let Some(w) = &p.witness {
        if !w.has_tail() {
            return Err(ConfigError::new("parameters.witness", "must contain a vector with a nonzero tail"));
        }
    }

    match config.experiment {
        Experiment::Quantities => {
            let op = config
                .operator
                .as_ref()
                .ok_or_else(|| ConfigError::new("operator", "required for the quantities experiment"))?;
            if p.schedule.is_none() {
                return Err(ConfigError::new("parameters.schedule", "required for the quantities experiment"));
            }
            match resolve_method(config, op) {
                Method::SubsetOracle if op.diagonal_values(1).is_none() => {
                    return Err(ConfigError::new("parameters.method", "subset_oracle requires a diagonal operator"));
                }
                Method::SvdOracle | Method::GrassmannSearch if config.space.p != Exponent::Two => {
                    return Err(ConfigError::new("parameters.method", "requires p = 2 (use subset_oracle on a diagonal)"));
                }
                _ => {}
            }
        }
        Experiment::InvarianceCase => {
            require_l2(config, "invariance_case")?;
            if config.operator.is_none() {
                return Err(ConfigError::new("operator", "required for the invariance_case experiment"));
            }
        }
        Experiment::ConstructionSuite => require_l2(config, "construction_suite")?,
        Experiment::LemmaCheck => require_l2(config, "lemma_check")?,
    }
    Ok(())
}

fn resolve_method(config: &ExperimentConfig, op: &Operator) -> Method {
    config.parameters.method.unwrap_or(if op.diagonal_values(1).is_some() {
        Method::SubsetOracle
    } else {
        Method::SvdOracle
    })
}

/// The default window for invariance cases: v_i = e_{2i−1} plus a ratio-1/2
/// tail living on the odd indices from 9 on, for i = 1, 2, 3.
pub fn default_witness() -> Subspace {
    let basis = (1..=3)
        .map(|i| {
            let mut prefix = vec![0.0; 8];
            prefix[2 * i - 2] = 1.0;
            TailVector::new(prefix, vec![1.0 / i as f64, 0.0], 0.5).expect("finite coordinates")
        })
        .collect();
    Subspace::new(basis, SpaceConfig::L2).expect("independent window")
}

/// Default lemma functionals: two independent representers with ratio 0.6 tails.
pub fn default_functionals() -> Vec<TailVector> {
    vec![
        TailVector::new(vec![1.0], vec![1.0], 0.6).expect("finite coordinates"),
        TailVector::new(vec![0.0, 1.0], vec![1.0, -1.0], 0.6).expect("finite coordinates"),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ResultEntry {
    Estimate(QuantityEstimate),
    Limit {
        quantity: Quantity,
        extrapolated: f64,
        converged: bool,
    },
    Case(CaseReport),
    Suite(SuiteReport),
    Lemma(DenseIntersectionReport),
}

/// A named inequality (or evaluation) failure. `slack` is the signed margin
/// of the failed inequality when one exists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportViolation {
    pub name: String,
    pub slack: Option<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub version: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub results: Vec<ResultEntry>,
    pub violations: Vec<ReportViolation>,
}

impl RunReport {
    pub fn exit_code(&self) -> u8 {
        if self.violations.is_empty() {
            EXIT_OK
        } else {
            EXIT_VIOLATION
        }
    }

    /// Stable pretty-printed JSON, newline terminated.
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serialises");
        text.push('\n');
        text
    }
}

/// Seed precedence: explicit override, then the config's `parameters.seed`,
/// then 0.
pub fn effective_seed(config: &ExperimentConfig, seed_override: Option<u64>) -> u64 {
    seed_override.or(config.parameters.seed).unwrap_or(0)
}

fn error_violation(name: &str, err: impl fmt::Display) -> ReportViolation {
    ReportViolation {
        name: format!("error:{name}"),
        slack: None,
        detail: err.to_string(),
    }
}

/// Runs a validated configuration.
///
/// Inequality failures and evaluation errors of individual items end up in
/// `violations`; only problems attributable to the configuration itself
/// (such as a witness that yields a non-positive constant c) are returned as
/// a [`ConfigError`].
pub fn run(config: &ExperimentConfig, seed_override: Option<u64>) -> Result<RunReport, ConfigError> {
    validate(config)?;
    let seed = effective_seed(config, seed_override);
    let mut results = Vec::new();
    let mut violations = Vec::new();
    let p = &config.parameters;
    match config.experiment {
        Experiment::Quantities => run_quantities(config, seed, &mut results, &mut violations),
        Experiment::ConstructionSuite => {
            let defaults = SuiteConfig::default();
            let suite = SuiteConfig {
                epsilons: p.epsilons.clone().or(p.epsilon.map(|e| vec![e])).unwrap_or(defaults.epsilons),
                cs: p.cs.clone().or(p.c.map(|c| vec![c])).unwrap_or(defaults.cs),
                systems: p.systems.unwrap_or(defaults.systems),
                combinations: p.combinations.unwrap_or(defaults.combinations),
                seed,
            };
            match construction_suite(&suite, config.operator.as_ref()) {
                Ok(report) => {
                    for v in &report.violations {
                        violations.push(ReportViolation {
                            name: v.check.clone(),
                            slack: None,
                            detail: format!("system {} (ε = {:?}, c = {:?}): {}", v.system, v.epsilon, v.c, v.detail),
                        });
                    }
                    results.push(ResultEntry::Suite(report));
                }
                Err(e) => violations.push(error_violation("construction_suite", e)),
            }
        }
        Experiment::InvarianceCase => {
            let op = config.operator.as_ref().expect("validated");
            let witness = p.witness.clone().unwrap_or_else(default_witness);
            let epsilon = p.epsilon.unwrap_or(DEFAULT_EPSILON);
            let delta = p.delta.unwrap_or(DEFAULT_DELTA);
            let parts: Vec<Part> = p.part.map(|x| vec![x]).unwrap_or(Part::ALL.to_vec());
            for part in parts {
                match run_invariance_case(op, part, &witness, epsilon, delta, seed) {
                    Ok(report) => {
                        if !report.passed {
                            violations.push(ReportViolation {
                                name: format!("invariance_case({})", part_name(part)),
                                slack: Some(report.min_slack),
                                detail: format!("concluding bound for {} fails on L", report.quantity),
                            });
                        }
                        results.push(ResultEntry::Case(report));
                    }
                    Err(ConstructionError::InvalidWitness(msg)) => {
                        return Err(ConfigError::new("parameters.witness", msg));
                    }
                    Err(ConstructionError::InvalidParameter(msg)) => return Err(ConfigError::new("parameters", msg)),
                    Err(e) => violations.push(error_violation("invariance_case", e)),
                }
            }
        }
        Experiment::LemmaCheck => {
            let reps = p.functionals.clone().unwrap_or_else(default_functionals);
            let functionals: Vec<LinearFunctional> =
                reps.into_iter().map(|r| LinearFunctional::new(r, config.space)).collect();
            let tol = p.tolerance.unwrap_or(DEFAULT_TOLERANCE);
            match check_dense_intersection(&functionals, p.samples.unwrap_or(DEFAULT_SAMPLES), tol, seed) {
                Ok(report) => {
                    if !report.passed {
                        violations.push(ReportViolation {
                            name: "dense_intersection".into(),
                            slack: Some(tol - report.max_distance),
                            detail: format!(
                                "max distance {:e}, max kernel residual {:e}",
                                report.max_distance, report.max_kernel_residual
                            ),
                        });
                    }
                    results.push(ResultEntry::Lemma(report));
                }
                Err(e) => return Err(ConfigError::new("parameters.functionals", e.to_string())),
            }
        }
    }
    Ok(RunReport {
        version: VERSION.to_string(),
        seed,
        config: config.clone(),
        results,
        violations,
    })
}

fn part_name(part: Part) -> &'static str {
    match part {
        Part::A => "a",
        Part::B => "b",
        Part::C => "c",
        Part::D => "d",
    }
}

fn run_quantities(config: &ExperimentConfig, seed: u64, results: &mut Vec<ResultEntry>, violations: &mut Vec<ReportViolation>) {
    let op = config.operator.as_ref().expect("validated");
    let p = &config.parameters;
    let schedule: Vec<Dims> = p
        .schedule
        .as_ref()
        .expect("validated")
        .iter()
        .map(|&[n, k, big_k]| Dims::new(n, k, big_k))
        .collect();
    let method = resolve_method(config, op);
    let params = SearchParams {
        restarts: p.restarts.unwrap_or(DEFAULT_RESTARTS),
        seed,
    };
    let quantities = p
        .quantity
        .map(|q| vec![q])
        .unwrap_or(vec![Quantity::Gamma, Quantity::Delta, Quantity::Tau, Quantity::Nabla]);
    for quantity in quantities {
        match limit_estimate(op, config.space, quantity, &schedule, method, params) {
            Ok(limit) => {
                for e in &limit.estimates {
                    let (lo, hi) = e.bracket;
                    let slack = (e.value - lo).min(hi - e.value);
                    if slack < 0.0 {
                        violations.push(ReportViolation {
                            name: "bracket".into(),
                            slack: Some(slack),
                            detail: format!("{} at (N, k, K) = ({}, {}, {})", quantity, e.n, e.k, e.big_k),
                        });
                    }
                }
                results.extend(limit.estimates.into_iter().map(ResultEntry::Estimate));
                results.push(ResultEntry::Limit {
                    quantity,
                    extrapolated: limit.extrapolated,
                    converged: limit.converged,
                });
            }
            Err(e) => violations.push(error_violation("quantities", e)),
        }
    }
}
