use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::vector::{inner_product, linear_combine, norm};
use super::{gram, Exponent, SeqError, SpaceConfig, TailVector, GRAM_RANK_TOL};
use crate::linalg;

/// A bounded functional on ℓ^p represented by a vector of the dual ℓ^q.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearFunctional {
    representer: TailVector,
    dual_norm: f64,
}

impl LinearFunctional {
    /// Wraps `representer` as a functional on `space`, caching its ℓ^q norm.
    pub fn new(representer: TailVector, space: SpaceConfig) -> Self {
        let dual_norm = norm(&representer, space.dual());
        LinearFunctional {
            representer,
            dual_norm,
        }
    }

    pub fn representer(&self) -> &TailVector {
        &self.representer
    }

    pub fn dual_norm(&self) -> f64 {
        self.dual_norm
    }

    pub fn apply(&self, v: &TailVector) -> f64 {
        pairing(self, v)
    }
}

/// Dual pairing ⟨f, v⟩ = Σ_j f_j v_j.
pub fn pairing(f: &LinearFunctional, v: &TailVector) -> f64 {
    inner_product(&f.representer, v)
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// A functional of dual norm one attaining `f(v) = ‖v‖`.
///
/// For p = 2 this is `v / ‖v‖`. For p = 1 it is the sign pattern of `v`,
/// and for p = ∞ the signed coordinate functional at the first index where
/// `|v_j|` is maximal; both need `v` finitely supported.
pub fn norming_functional(v: &TailVector, space: SpaceConfig) -> Result<LinearFunctional, SeqError> {
    if v.is_zero() {
        return Err(SeqError::ZeroVector);
    }
    let representer = match space.p {
        Exponent::Two => v.scaled(1.0 / norm(v, space)),
        Exponent::One | Exponent::Infinity if v.has_tail() => {
            return Err(SeqError::UnsupportedTail(space.p));
        }
        Exponent::One => TailVector::finite(v.prefix().iter().map(|&x| sign(x)).collect()),
        Exponent::Infinity => {
            let (idx, value) = v
                .prefix()
                .iter()
                .enumerate()
                .fold((0, 0.0f64), |best, (i, &x)| if x.abs() > best.1.abs() { (i, x) } else { best });
            TailVector::unit(idx + 1).scaled(sign(value))
        }
    };
    Ok(LinearFunctional::new(representer, space))
}

/// Orthogonal projection of `v` onto the common kernel of `functionals`
/// (p = 2 only): `v` minus its projection onto the span of the representers.
pub fn project_into_kernels(
    v: &TailVector,
    functionals: &[LinearFunctional],
    space: SpaceConfig,
) -> Result<TailVector, SeqError> {
    space.require_hilbert()?;
    if functionals.is_empty() {
        return Ok(v.clone());
    }
    let reps: Vec<TailVector> = functionals.iter().map(|f| f.representer.clone()).collect();
    let g = gram(&reps);
    if !linalg::is_positive_definite(&g, GRAM_RANK_TOL) {
        return Err(SeqError::DegenerateFunctionals);
    }
    let mut w = v.clone();
    // one refinement pass removes the rounding left by the first solve
    for _ in 0..2 {
        let rhs = DVector::from_iterator(reps.len(), reps.iter().map(|f| inner_product(f, &w)));
        if rhs.iter().all(|&x| x == 0.0) {
            break;
        }
        let alpha = linalg::solve_spd(&g, &rhs).ok_or(SeqError::DegenerateFunctionals)?;
        let mut coeffs = vec![1.0];
        coeffs.extend(alpha.iter().map(|a| -a));
        let mut vectors = vec![w];
        vectors.extend(reps.iter().cloned());
        w = linear_combine(&coeffs, &vectors)?;
    }
    Ok(w)
}
