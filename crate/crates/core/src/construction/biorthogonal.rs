use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{ConstructionError, BIORTHOGONAL_TOL, CHECK_TOL};
use crate::linalg;
use crate::seqspace::{
    gram, linear_combine, norm, norming_functional, pairing, LinearFunctional, SpaceConfig, Subspace, TailVector,
    GRAM_RANK_TOL,
};

/// Relative norm below which a kernel projection counts as degenerate.
const DEGENERATE_PROJECTION: f64 = 1e-8;
const RANDOM_ATTEMPTS: usize = 16;

/// Where the vectors m_n are drawn from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Window(Subspace),
    /// The whole space, explored through e_1, e_2, ….
    Ambient,
}

impl Source {
    fn candidates(&self, count: usize) -> Vec<TailVector> {
        match self {
            Source::Window(m) => m.basis().to_vec(),
            Source::Ambient => (1..=count).map(TailVector::unit).collect(),
        }
    }
}

/// Unit vectors m_n with norming functionals x'_n such that x'_i(m_n) = 0
/// for i < n and x'_n(m_n) = 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiorthogonalSystem {
    pub vectors: Vec<TailVector>,
    pub functionals: Vec<LinearFunctional>,
    pub source: Source,
    pub space: SpaceConfig,
}

impl BiorthogonalSystem {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// The functionals x'_1..x'_{n−1} whose kernels contain m_n (1-based n).
    pub fn kernel_stack(&self, n: usize) -> &[LinearFunctional] {
        &self.functionals[..n - 1]
    }

    /// Largest violation of the triangular and normalisation relations:
    /// `(max |x'_i(m_n)| for i < n, max deviation of ‖m_n‖, ‖x'_n‖, x'_n(m_n) from 1)`.
    pub fn defects(&self) -> (f64, f64) {
        let mut off = 0.0f64;
        let mut unit = 0.0f64;
        for (n, m) in self.vectors.iter().enumerate() {
            for f in &self.functionals[..n] {
                off = off.max(pairing(f, m).abs());
            }
            let f = &self.functionals[n];
            unit = unit
                .max((norm(m, self.space) - 1.0).abs())
                .max((f.dual_norm() - 1.0).abs())
                .max((pairing(f, m) - 1.0).abs());
        }
        (off, unit)
    }

    /// Whether both relations hold within `BIORTHOGONAL_TOL` and the vectors
    /// are linearly independent.
    pub fn is_valid(&self) -> bool {
        let (off, unit) = self.defects();
        off <= BIORTHOGONAL_TOL
            && unit <= BIORTHOGONAL_TOL
            && linalg::is_positive_definite(&gram(&self.vectors), GRAM_RANK_TOL)
    }
}

/// Removes from `v` its components along m_1..m_{n−1} as seen by
/// x'_1..x'_{n−1}. Since x'_j(m_i) = 0 for j < i, one forward sweep clears
/// every pairing in exact arithmetic; the second sweep mops up rounding.
fn eliminate(v: &TailVector, vectors: &[TailVector], functionals: &[LinearFunctional]) -> Result<TailVector, ConstructionError> {
    let mut w = v.clone();
    for _ in 0..2 {
        for (m, f) in vectors.iter().zip(functionals) {
            let a = pairing(f, &w);
            if a != 0.0 {
                w = linear_combine(&[1.0, -a], &[w, m.clone()])?;
            }
        }
    }
    Ok(w)
}

/// Builds `count` biorthogonal pairs from `source`.
///
/// Candidates are the basis vectors of the window in order; each is pushed
/// into the kernels of the functionals chosen so far and normalised. A
/// candidate whose projection is shorter than 1e-8 of its norm is skipped;
/// when the basis runs out, seeded random combinations of it are tried.
pub fn build_biorthogonal(
    source: &Source,
    count: usize,
    space: SpaceConfig,
    seed: u64,
) -> Result<BiorthogonalSystem, ConstructionError> {
    let pool = source.candidates(count);
    let mut vectors: Vec<TailVector> = Vec::with_capacity(count);
    let mut functionals: Vec<LinearFunctional> = Vec::with_capacity(count);
    let mut next = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while vectors.len() < count {
        let candidate = if next < pool.len() {
            next += 1;
            Some(pool[next - 1].clone())
        } else {
            None
        };
        let projected = match candidate {
            Some(v) => admissible(&v, &vectors, &functionals, space)?,
            None => {
                let mut found = None;
                for _ in 0..RANDOM_ATTEMPTS {
                    let coeffs: Vec<f64> = (0..pool.len()).map(|_| StandardNormal.sample(&mut rng)).collect();
                    let v = linear_combine(&coeffs, &pool)?;
                    if let Some(w) = admissible(&v, &vectors, &functionals, space)? {
                        found = Some(w);
                        break;
                    }
                }
                match found {
                    Some(w) => Some(w),
                    None => {
                        return Err(ConstructionError::ExhaustedSubspace {
                            requested: count,
                            found: vectors.len(),
                        })
                    }
                }
            }
        };
        if let Some(w) = projected {
            let m = w.scaled(1.0 / norm(&w, space));
            let f = norming_functional(&m, space)?;
            vectors.push(m);
            functionals.push(f);
        }
    }
    Ok(BiorthogonalSystem {
        vectors,
        functionals,
        source: source.clone(),
        space,
    })
}

fn admissible(
    v: &TailVector,
    vectors: &[TailVector],
    functionals: &[LinearFunctional],
    space: SpaceConfig,
) -> Result<Option<TailVector>, ConstructionError> {
    let size = norm(v, space);
    if size == 0.0 {
        return Ok(None);
    }
    let w = eliminate(v, vectors, functionals)?;
    Ok((norm(&w, space) > DEGENERATE_PROJECTION * size).then_some(w))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientBound {
    pub holds: bool,
    /// `2^{i−1}‖w‖ − |a_i|` for each coefficient.
    pub margins: Vec<f64>,
}

/// Checks |a_i| ≤ 2^{i−1}‖w‖ for w = Σ a_i m_i.
pub fn check_coefficient_bound(system: &BiorthogonalSystem, coeffs: &[f64]) -> Result<CoefficientBound, ConstructionError> {
    if coeffs.len() > system.len() {
        return Err(ConstructionError::InvalidParameter(format!(
            "{} coefficients for a system of length {}",
            coeffs.len(),
            system.len()
        )));
    }
    if coeffs.is_empty() {
        return Ok(CoefficientBound {
            holds: true,
            margins: vec![],
        });
    }
    let w = linear_combine(coeffs, &system.vectors[..coeffs.len()])?;
    let w_norm = norm(&w, system.space);
    let margins: Vec<f64> = coeffs
        .iter()
        .enumerate()
        .map(|(i, a)| 2f64.powi(i as i32) * w_norm - a.abs())
        .collect();
    Ok(CoefficientBound {
        holds: margins.iter().all(|&m| m >= -CHECK_TOL),
        margins,
    })
}
