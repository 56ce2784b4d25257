use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{default_witness, effective_seed, validate, ConfigError, ExperimentConfig, DEFAULT_EPSILON, VERSION};
use crate::construction::{build_biorthogonal, build_core_approximants, random_combination, verify_near_isometry, Source};
use crate::operators::Operator;
use crate::quantities::svd_oracle;
use crate::seqspace::{norm, Exponent, Subspace, TailVector};

const RATIO_SAMPLES: usize = 10;
const DEFAULT_N: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SingularValues {
    #[serde(rename = "N")]
    pub n: usize,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemVector {
    pub window: Subspace,
    pub vectors: Vec<TailVector>,
    pub representers: Vec<TailVector>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetVector {
    pub epsilon: f64,
    pub c: f64,
    #[serde(rename = "T_norm")]
    pub t_norm: f64,
    pub allowances: Vec<f64>,
    pub realised: Vec<f64>,
    pub truncations: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioVector {
    pub coeffs: Vec<f64>,
    /// ‖Tz‖/‖z‖
    pub ratio_z: f64,
    /// ‖TAz‖/‖Az‖
    pub ratio_az: f64,
    /// ‖z − Az‖
    pub distance: f64,
}

/// Regression bundle: inputs and the values the library computes for them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestVectors {
    pub version: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub singular_values: Vec<SingularValues>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub biorthogonal: Option<SystemVector>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub budgets: Option<BudgetVector>,
    pub ratios: Vec<RatioVector>,
}

impl TestVectors {
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("bundle serialises");
        text.push('\n');
        text
    }
}

/// Computes the bundle for a configuration: singular values of `T_N` for
/// every N in the schedule (8 when there is none) and, in ℓ², the
/// biorthogonal system of the witness window, its approximant budgets and
/// the transfer ratios of seeded combinations.
pub fn test_vectors(config: &ExperimentConfig, seed_override: Option<u64>) -> Result<TestVectors, ConfigError> {
    validate(config)?;
    let seed = effective_seed(config, seed_override);
    let op = config.operator.clone().unwrap_or_else(Operator::identity);
    let p = &config.parameters;
    let mut sizes: Vec<usize> = p
        .schedule
        .as_ref()
        .map(|s| s.iter().map(|t| t[0]).collect())
        .unwrap_or_else(|| vec![DEFAULT_N]);
    sizes.dedup();
    let singular_values = sizes
        .into_iter()
        .map(|n| SingularValues {
            n,
            values: svd_oracle(&op.truncate(n)),
        })
        .collect();

    let mut bundle = TestVectors {
        version: VERSION.to_string(),
        seed,
        config: config.clone(),
        singular_values,
        biorthogonal: None,
        budgets: None,
        ratios: vec![],
    };
    if config.space.p != Exponent::Two {
        return Ok(bundle);
    }
    let fail = |e: crate::construction::ConstructionError| ConfigError::new("parameters.witness", e.to_string());
    let window = p.witness.clone().unwrap_or_else(default_witness);
    let system = build_biorthogonal(&Source::Window(window.clone()), window.dim(), config.space, seed).map_err(fail)?;
    let epsilon = p.epsilon.unwrap_or(DEFAULT_EPSILON);
    let c = p.c.unwrap_or(1.0);
    let ca = build_core_approximants(&system, &op, epsilon, c).map_err(fail)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..RATIO_SAMPLES {
        let coeffs = random_combination(&mut rng, system.len());
        let (z, az) = ca.combine(&coeffs).map_err(fail)?;
        let apply = |v: &TailVector| op.apply(v).map(|w| norm(&w, config.space)).map_err(|e| fail(e.into()));
        let distance = verify_near_isometry(&ca, &coeffs).map_err(fail)?.distance;
        bundle.ratios.push(RatioVector {
            ratio_z: apply(&z)? / norm(&z, config.space),
            ratio_az: apply(&az)? / norm(&az, config.space),
            distance,
            coeffs,
        });
    }
    bundle.biorthogonal = Some(SystemVector {
        window,
        vectors: system.vectors.clone(),
        representers: system.functionals.iter().map(|f| f.representer().clone()).collect(),
    });
    bundle.budgets = Some(BudgetVector {
        epsilon,
        c,
        t_norm: ca.t_norm,
        allowances: ca.allowances.clone(),
        realised: ca.budgets.clone(),
        truncations: ca.truncations.clone(),
    });
    Ok(bundle)
}

/// Writes [`test_vectors`] to `out` as pretty JSON.
pub fn emit_test_vectors(config: &ExperimentConfig, seed_override: Option<u64>, out: &Path) -> Result<TestVectors, ConfigError> {
    let bundle = test_vectors(config, seed_override)?;
    std::fs::write(out, bundle.to_json()).map_err(|e| ConfigError::new(out.display().to_string(), e.to_string()))?;
    Ok(bundle)
}
