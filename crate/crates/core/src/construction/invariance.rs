use std::collections::BTreeMap;

use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{build_biorthogonal, build_core_approximants, check_epsilon, ConstructionError, CoreApproximation, Source, CHECK_TOL};
use crate::operators::{restricted_min_modulus, restricted_norm, Operator};
use crate::quantities::Quantity;
use crate::seqspace::{linear_combine, SpaceConfig, Subspace, TailVector};

/// Number of seeded random sub-bases tested in parts (c) and (d), on top of
/// every coordinate pattern.
pub const RANDOM_SUB_BASES: usize = 100;

/// One of the four instantiations of the construction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Part {
    /// Γ: a window with small restricted norm transfers to E.
    A,
    /// τ: a window with large minimum modulus transfers to E.
    B,
    /// Δ: every subspace of L keeps a large restricted norm.
    C,
    /// ∇: every subspace of L keeps a small minimum modulus.
    D,
}

impl Part {
    pub const ALL: [Part; 4] = [Part::A, Part::B, Part::C, Part::D];

    pub fn quantity(self) -> Quantity {
        match self {
            Part::A => Quantity::Gamma,
            Part::B => Quantity::Tau,
            Part::C => Quantity::Delta,
            Part::D => Quantity::Nabla,
        }
    }
}

impl std::str::FromStr for Part {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "a" | "A" => Ok(Part::A),
            "b" | "B" => Ok(Part::B),
            "c" | "C" => Ok(Part::C),
            "d" | "D" => Ok(Part::D),
            other => Err(format!("unknown part {other:?}; expected a, b, c or d")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseReport {
    pub part: Part,
    pub quantity: Quantity,
    pub c: f64,
    pub delta: f64,
    pub epsilon: f64,
    #[serde(rename = "witness_M")]
    pub witness_m: Subspace,
    #[serde(rename = "constructed_L")]
    pub constructed_l: Subspace,
    pub measured: BTreeMap<String, f64>,
    /// Smallest slack over all checked inequalities (negative means violated).
    pub min_slack: f64,
    pub passed: bool,
}

/// Runs one part of the construction on the window `witness`.
///
/// The constant c is derived from the window so that the part's hypothesis
/// holds on it: (a) c = ‖T|_M‖(1+δ); (b) c = inf_{S_M}‖Tm‖(1−δ);
/// (c) c = inf_{S_M}‖Tm‖(1−δ), so every subspace of M has norm above c;
/// (d) c = ‖T|_M‖(1+δ), so every subspace of M has minimum modulus below c.
/// The concluding bound is then checked on the constructed L ⊂ E — for (c)
/// and (d) on every coordinate sub-basis of L and `RANDOM_SUB_BASES` random
/// ones, each paired with its image under A.
pub fn run_invariance_case(
    op: &Operator,
    part: Part,
    witness: &Subspace,
    epsilon: f64,
    delta: f64,
    seed: u64,
) -> Result<CaseReport, ConstructionError> {
    check_epsilon(epsilon)?;
    if delta.is_nan() || delta <= 0.0 {
        return Err(ConstructionError::InvalidParameter(format!("delta must be positive, got {delta}")));
    }
    if !witness.has_tail() {
        return Err(ConstructionError::InvalidWitness(
            "every basis vector is finitely supported; the window already lies in E".into(),
        ));
    }
    let space = SpaceConfig::L2;
    let mut measured = BTreeMap::new();
    let c = match part {
        Part::A | Part::D => {
            let value = restricted_norm(op, witness)?;
            measured.insert("restricted_norm_M".to_string(), value);
            value * (1.0 + delta)
        }
        Part::B | Part::C => {
            let value = restricted_min_modulus(op, witness)?;
            measured.insert("restricted_min_modulus_M".to_string(), value);
            value * (1.0 - delta)
        }
    };
    if c.is_nan() || c <= 0.0 {
        return Err(ConstructionError::InvalidWitness(format!(
            "derived constant c = {c} is not positive"
        )));
    }
    measured.insert("c".into(), c);
    let system = build_biorthogonal(&Source::Window(witness.clone()), witness.dim(), space, seed)?;
    let ca = build_core_approximants(&system, op, epsilon, c)?;
    let l = Subspace::new(ca.z.clone(), space)?;
    let up = (1.0 + epsilon) / (1.0 - epsilon) * c;
    let down = (1.0 - epsilon) / (1.0 + epsilon) * c;
    let min_slack = match part {
        Part::A => {
            let value = restricted_norm(op, &l)?;
            measured.insert("restricted_norm_L".into(), value);
            measured.insert("threshold".into(), up);
            up - value
        }
        Part::B => {
            let value = restricted_min_modulus(op, &l)?;
            measured.insert("restricted_min_modulus_L".into(), value);
            measured.insert("threshold".into(), down);
            value - down
        }
        Part::C | Part::D => sub_basis_sweep(op, part, &ca, c, up, down, seed, &mut measured)?,
    };
    measured.insert("min_slack".into(), min_slack);
    Ok(CaseReport {
        part,
        quantity: part.quantity(),
        c,
        delta,
        epsilon,
        witness_m: witness.clone(),
        constructed_l: l,
        measured,
        min_slack,
        passed: min_slack >= -CHECK_TOL,
    })
}

#[allow(clippy::too_many_arguments)]
fn sub_basis_sweep(
    op: &Operator,
    part: Part,
    ca: &CoreApproximation,
    c: f64,
    up: f64,
    down: f64,
    seed: u64,
    measured: &mut BTreeMap<String, f64>,
) -> Result<f64, ConstructionError> {
    let dim = ca.z.len();
    let mut patterns: Vec<Vec<Vec<f64>>> = Vec::new();
    for size in 1..=dim {
        for set in (0..dim).combinations(size) {
            patterns.push(
                set.iter()
                    .map(|&i| (0..dim).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                    .collect(),
            );
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0000_0000_0001);
    for _ in 0..RANDOM_SUB_BASES {
        let d = rng.random_range(1..=dim);
        patterns.push((0..d).map(|_| (0..dim).map(|_| rng.sample(StandardNormal)).collect()).collect());
    }

    let mut tested = 0usize;
    let mut hypothesis_held = 0usize;
    let mut extreme = match part {
        Part::C => f64::INFINITY,
        _ => f64::NEG_INFINITY,
    };
    let mut min_slack = f64::INFINITY;
    for pattern in &patterns {
        let Some((v, av)) = sub_bases(ca, pattern)? else {
            continue;
        };
        tested += 1;
        match part {
            Part::C => {
                // hypothesis ‖T|_{AV}‖ > c; conclusion ‖T|_V‖ ≥ (1−ε)/(1+ε)·c
                if restricted_norm(op, &av)? > c {
                    hypothesis_held += 1;
                    let value = restricted_norm(op, &v)?;
                    extreme = extreme.min(value);
                    min_slack = min_slack.min(value - down);
                }
            }
            _ => {
                if restricted_min_modulus(op, &av)? < c {
                    hypothesis_held += 1;
                    let value = restricted_min_modulus(op, &v)?;
                    extreme = extreme.max(value);
                    min_slack = min_slack.min(up - value);
                }
            }
        }
    }
    measured.insert("sub_bases_tested".into(), tested as f64);
    measured.insert("sub_bases_with_hypothesis".into(), hypothesis_held as f64);
    match part {
        Part::C => {
            measured.insert("min_restricted_norm_V".into(), extreme);
            measured.insert("threshold".into(), down);
        }
        _ => {
            measured.insert("max_min_modulus_V".into(), extreme);
            measured.insert("threshold".into(), up);
        }
    }
    if hypothesis_held == 0 {
        // nothing was checked; report as a failure rather than vacuous success
        return Ok(f64::NEG_INFINITY);
    }
    Ok(min_slack)
}

/// V = span{Σ_j s_j z_j : s ∈ pattern} and AV = span{Σ_j s_j m_j}.
fn sub_bases(ca: &CoreApproximation, pattern: &[Vec<f64>]) -> Result<Option<(Subspace, Subspace)>, ConstructionError> {
    let combine = |vectors: &[TailVector]| -> Result<Vec<TailVector>, ConstructionError> {
        pattern.iter().map(|s| Ok(linear_combine(s, vectors)?)).collect()
    };
    let v = combine(&ca.z)?;
    let av = combine(&ca.system.vectors)?;
    match (Subspace::new(v, SpaceConfig::L2), Subspace::new(av, SpaceConfig::L2)) {
        (Ok(v), Ok(av)) => Ok(Some((v, av))),
        _ => Ok(None),
    }
}
