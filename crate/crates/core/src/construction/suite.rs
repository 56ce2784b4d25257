use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{
    build_biorthogonal, build_core_approximants, check_coefficient_bound, verify_near_isometry, verify_transfer_bounds,
    ConstructionError, Source, BIORTHOGONAL_TOL,
};
use crate::linalg;
use crate::operators::{EventuallyPeriodic, Operator};
use crate::seqspace::{gram, SpaceConfig, Subspace, TailVector, GRAM_RANK_TOL};

/// A random window of dimension `dim` in ℓ²: prefixes of length 1–10 and,
/// for roughly 60% of the basis vectors (always at least one), a tail of
/// period 1–3 with a ratio shared across the window.
pub fn random_window<R: Rng>(rng: &mut R, dim: usize) -> Subspace {
    loop {
        let magnitude: f64 = rng.random_range(0.3..0.8);
        let ratio = if rng.random_bool(0.5) { magnitude } else { -magnitude };
        let forced = rng.random_range(0..dim);
        let basis: Vec<TailVector> = (0..dim)
            .map(|i| {
                let prefix: Vec<f64> = (0..rng.random_range(1..=10)).map(|_| rng.sample(StandardNormal)).collect();
                if i == forced || rng.random_bool(0.6) {
                    let coeffs: Vec<f64> = (0..rng.random_range(1..=3)).map(|_| rng.sample(StandardNormal)).collect();
                    TailVector::new(prefix, coeffs, ratio).expect("finite coordinates")
                } else {
                    TailVector::finite(prefix)
                }
            })
            .collect();
        if basis.iter().any(TailVector::has_tail) {
            if let Ok(window) = Subspace::new(basis, SpaceConfig::L2) {
                return window;
            }
        }
    }
}

/// A nonzero coefficient vector of random length 1..=max_len with entries
/// uniform in [−1, 1].
pub fn random_combination<R: Rng>(rng: &mut R, max_len: usize) -> Vec<f64> {
    loop {
        let len = rng.random_range(1..=max_len);
        let coeffs: Vec<f64> = (0..len).map(|_| rng.random_range(-1.0..=1.0)).collect();
        if coeffs.iter().any(|&a| a != 0.0) {
            return coeffs;
        }
    }
}

fn suite_operator(index: usize) -> Operator {
    let ep = |prefix: Vec<f64>, periodic: Vec<f64>| EventuallyPeriodic::new(prefix, periodic).expect("valid weights");
    match index % 4 {
        0 => Operator::Diagonal(ep(vec![], vec![2.0, 1.0])),
        1 => Operator::WeightedShift(ep(vec![0.5], vec![1.0, 2.0, 0.5])),
        2 => Operator::Diagonal(ep(vec![3.0, -1.0, 0.5], vec![1.0, -1.5])),
        _ => Operator::FiniteRankPlus {
            block: DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, -0.5, 0.2, 0.3, 0.0, 0.4, -1.0]),
            diagonal: ep(vec![], vec![0.5, 1.0]),
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    pub epsilons: Vec<f64>,
    pub cs: Vec<f64>,
    /// Seeded windows per (ε, c) pair.
    pub systems: usize,
    /// Random combinations checked per system and per check.
    pub combinations: usize,
    pub seed: u64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            epsilons: vec![0.5, 0.1, 0.01],
            cs: vec![0.5, 1.0, 2.0],
            systems: 10,
            combinations: 1000,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub check: String,
    pub system: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub config: SuiteConfig,
    pub systems_built: usize,
    pub checks: usize,
    /// Largest realised ‖z_n − m_n‖ relative to its allowance.
    pub worst_budget_use: f64,
    pub violations: Vec<Violation>,
    pub passed: bool,
}

/// Builds seeded windows and replays the whole construction on each: the
/// biorthogonality relations and the coefficient bound for the system, then
/// for every (ε, c) the approximant budgets and kernel conditions, the
/// near-isometry chain and the two transfer inequalities on random
/// combinations. Every failed check is recorded as a [`Violation`].
///
/// Without an explicit `operator` the systems cycle through a fixed family:
/// an alternating diagonal, a weighted shift, an eventually periodic
/// diagonal and a finite-rank perturbation of a diagonal.
pub fn construction_suite(config: &SuiteConfig, operator: Option<&Operator>) -> Result<SuiteReport, ConstructionError> {
    let space = SpaceConfig::L2;
    let mut violations = Vec::new();
    let mut checks = 0usize;
    let mut worst_budget_use = 0.0f64;
    for s in 0..config.systems {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(s as u64);
        let dim = rng.random_range(2..=8);
        let window = random_window(&mut rng, dim);
        let op = operator.cloned().unwrap_or_else(|| suite_operator(s));
        let system = build_biorthogonal(&Source::Window(window), dim, space, config.seed.wrapping_add(s as u64))?;
        let flag = |violations: &mut Vec<Violation>, check: &str, eps: Option<f64>, c: Option<f64>, detail: String| {
            violations.push(Violation {
                check: check.into(),
                system: s,
                epsilon: eps,
                c,
                detail,
            })
        };

        checks += 1;
        let (off, unit) = system.defects();
        if off > BIORTHOGONAL_TOL || unit > BIORTHOGONAL_TOL {
            flag(&mut violations, "biorthogonality", None, None, format!("pairing defect {off:e}, unit defect {unit:e}"));
        }
        for _ in 0..config.combinations {
            checks += 1;
            let coeffs = random_combination(&mut rng, dim);
            let bound = check_coefficient_bound(&system, &coeffs)?;
            if !bound.holds {
                flag(&mut violations, "coefficient_bound", None, None, format!("{coeffs:?}: margins {:?}", bound.margins));
            }
        }

        for &eps in &config.epsilons {
            for &c in &config.cs {
                let ca = build_core_approximants(&system, &op, eps, c)?;
                checks += 1;
                for (n, (b, a)) in ca.budgets.iter().zip(&ca.allowances).enumerate() {
                    worst_budget_use = worst_budget_use.max(b / a);
                    if b > a {
                        flag(&mut violations, "budget", Some(eps), Some(c), format!("n = {}: {b:e} > {a:e}", n + 1));
                    }
                }
                let defect = ca.kernel_defect();
                if defect > BIORTHOGONAL_TOL {
                    flag(&mut violations, "kernel", Some(eps), Some(c), format!("max |x'_i(z_n)| = {defect:e}"));
                }
                if !ca.z.iter().all(TailVector::is_finitely_supported)
                    || !linalg::is_positive_definite(&gram(&ca.z), GRAM_RANK_TOL)
                {
                    flag(&mut violations, "core_span", Some(eps), Some(c), "approximants not independent in E".into());
                }
                let mut combo_rng = ChaCha8Rng::seed_from_u64(config.seed ^ (eps.to_bits().rotate_left(17) ^ c.to_bits()));
                combo_rng.set_stream(s as u64);
                for _ in 0..config.combinations {
                    let coeffs = random_combination(&mut combo_rng, dim);
                    checks += 2;
                    let iso = verify_near_isometry(&ca, &coeffs)?;
                    if !(iso.distortion_holds && iso.sandwich_holds) {
                        flag(&mut violations, "near_isometry", Some(eps), Some(c), format!("{coeffs:?}: {iso:?}"));
                    }
                    let tr = verify_transfer_bounds(&ca, &op, &coeffs)?;
                    if !(tr.lower_holds && tr.upper_holds) {
                        flag(&mut violations, "transfer", Some(eps), Some(c), format!("{coeffs:?}: {tr:?}"));
                    }
                }
            }
        }
    }
    Ok(SuiteReport {
        config: config.clone(),
        systems_built: config.systems,
        checks,
        worst_budget_use,
        passed: violations.is_empty(),
        violations,
    })
}
