use serde::{Deserialize, Serialize};

use super::{check_epsilon, BiorthogonalSystem, ConstructionError, CHECK_TOL};
use crate::operators::Operator;
use crate::seqspace::{linear_combine, norm, pairing, SeqError, TailVector};

/// Truncation indices are searched up to this bound.
const MAX_TRUNCATION: usize = 1 << 40;
const MAX_HALVINGS: usize = 60;

/// Finitely supported stand-ins z_n for the vectors m_n of a biorthogonal
/// system, together with the data defining A : z_i ↦ m_i.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoreApproximation {
    pub z: Vec<TailVector>,
    pub epsilon: f64,
    pub c: f64,
    #[serde(rename = "T_norm")]
    pub t_norm: f64,
    /// The system supplying A z_i = m_i and the functionals x'_i.
    pub system: BiorthogonalSystem,
    /// Realised distances ‖z_n − m_n‖.
    pub budgets: Vec<f64>,
    /// Allowed distances 2^{1−2n} ε min{1, c/‖T‖}.
    pub allowances: Vec<f64>,
    /// Truncation index used for each z_n.
    pub truncations: Vec<usize>,
}

impl CoreApproximation {
    /// `min{1, c/‖T‖}`, read as 1 for the zero operator.
    pub fn scale(&self) -> f64 {
        scale(self.c, self.t_norm)
    }

    /// Largest `|x'_i(z_n)|` over i < n.
    pub fn kernel_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for (n, z) in self.z.iter().enumerate() {
            for f in &self.system.functionals[..n] {
                worst = worst.max(pairing(f, z).abs());
            }
        }
        worst
    }

    /// `Σ a_i z_i` and `A(Σ a_i z_i) = Σ a_i m_i`.
    pub fn combine(&self, coeffs: &[f64]) -> Result<(TailVector, TailVector), ConstructionError> {
        if coeffs.is_empty() || coeffs.len() > self.z.len() {
            return Err(ConstructionError::InvalidParameter(format!(
                "{} coefficients for {} approximants",
                coeffs.len(),
                self.z.len()
            )));
        }
        let n = coeffs.len();
        Ok((
            linear_combine(coeffs, &self.z[..n])?,
            linear_combine(coeffs, &self.system.vectors[..n])?,
        ))
    }
}

fn scale(c: f64, t_norm: f64) -> f64 {
    if t_norm == 0.0 {
        1.0
    } else {
        (c / t_norm).min(1.0)
    }
}

/// The allowed distance 2^{1−2n} ε min{1, c/‖T‖} for the (1-based) n-th vector.
pub fn budget(n: usize, epsilon: f64, c: f64, t_norm: f64) -> f64 {
    2f64.powi(1 - 2 * n as i32) * epsilon * scale(c, t_norm)
}

/// Smallest J with `tail_norm_from(J) ≤ target`.
fn truncation_index(m: &TailVector, target: f64, ca_space: crate::seqspace::SpaceConfig) -> Option<usize> {
    let fits = |j: usize| m.tail_norm_from(j, ca_space) <= target;
    if fits(0) {
        return Some(0);
    }
    let mut hi = m.prefix().len().max(1);
    while !fits(hi) {
        hi *= 2;
        if hi > MAX_TRUNCATION {
            return None;
        }
    }
    let mut lo = hi / 2;
    // invariant: !fits(lo) (or lo == 0), fits(hi)
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if fits(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

/// Builds z_1, z_2, … in E (finitely supported sequences) with
/// ‖z_n − m_n‖ ≤ 2^{1−2n} ε min{1, c/‖T‖} and x'_i(z_n) = 0 for i < n.
///
/// Each m_n is truncated where its discarded part is at most half the budget;
/// the truncation is then pushed back into the kernels of x'_1..x'_{n−1}
/// using the already finite z_1..z_{n−1}, which keeps it in E. The realised
/// distance is measured exactly, and the truncation target is halved until it
/// fits.
pub fn build_core_approximants(
    system: &BiorthogonalSystem,
    op: &Operator,
    epsilon: f64,
    c: f64,
) -> Result<CoreApproximation, ConstructionError> {
    check_epsilon(epsilon)?;
    if c.is_nan() || c <= 0.0 {
        return Err(ConstructionError::InvalidParameter(format!("c must be positive, got {c}")));
    }
    let space = system.space;
    let t_norm = op.norm(space);
    let mut z: Vec<TailVector> = Vec::with_capacity(system.len());
    let mut budgets = Vec::with_capacity(system.len());
    let mut allowances = Vec::with_capacity(system.len());
    let mut truncations = Vec::with_capacity(system.len());
    for (idx, m) in system.vectors.iter().enumerate() {
        let n = idx + 1;
        let allowed = budget(n, epsilon, c, t_norm);
        if m.is_finitely_supported() {
            z.push(m.clone());
            budgets.push(0.0);
            allowances.push(allowed);
            truncations.push(m.prefix().len());
            continue;
        }
        let mut target = allowed / 2.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let j = truncation_index(m, target, space).ok_or(ConstructionError::BudgetInfeasible(n))?;
            let candidate = correct(&m.head(j), &z, &system.functionals[..idx])?;
            let distance = norm(&candidate.sub(m)?, space);
            if distance <= allowed {
                accepted = Some((candidate, distance, j));
                break;
            }
            target /= 2.0;
        }
        let (candidate, distance, j) = accepted.ok_or(ConstructionError::BudgetInfeasible(n))?;
        z.push(candidate);
        budgets.push(distance);
        allowances.push(allowed);
        truncations.push(j);
    }
    Ok(CoreApproximation {
        z,
        epsilon,
        c,
        t_norm,
        system: system.clone(),
        budgets,
        allowances,
        truncations,
    })
}

/// Forces x'_i(v) = 0 for every given functional by subtracting multiples of
/// z_i. Since x'_j(z_i) = 0 for j < i, sweeping i upward never disturbs the
/// functionals already cleared.
fn correct(v: &TailVector, z: &[TailVector], functionals: &[crate::seqspace::LinearFunctional]) -> Result<TailVector, SeqError> {
    let mut w = v.clone();
    for _ in 0..2 {
        for (zi, f) in z.iter().zip(functionals) {
            let a = pairing(f, &w);
            if a != 0.0 {
                w = linear_combine(&[1.0, -a / pairing(f, zi)], &[w, zi.clone()])?;
            }
        }
    }
    Ok(w)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NearIsometryCheck {
    pub distortion_holds: bool,
    pub sandwich_holds: bool,
    /// ‖z − Az‖
    pub distance: f64,
    pub z_norm: f64,
    pub az_norm: f64,
}

/// For z = Σ a_i z_i checks ‖z − Az‖ < ε min{1, c/‖T‖} ‖Az‖ and
/// (1 − ε)‖Az‖ ≤ ‖z‖ ≤ (1 + ε)‖Az‖, each up to `CHECK_TOL`.
/// All-zero coefficients satisfy both trivially.
pub fn verify_near_isometry(ca: &CoreApproximation, coeffs: &[f64]) -> Result<NearIsometryCheck, ConstructionError> {
    let space = ca.system.space;
    let (z, az) = ca.combine(coeffs)?;
    let distance = norm(&z.sub(&az)?, space);
    let z_norm = norm(&z, space);
    let az_norm = norm(&az, space);
    let eps = ca.epsilon;
    Ok(NearIsometryCheck {
        distortion_holds: distance <= eps * ca.scale() * az_norm + CHECK_TOL,
        sandwich_holds: (1.0 - eps) * az_norm <= z_norm + CHECK_TOL && z_norm <= (1.0 + eps) * az_norm + CHECK_TOL,
        distance,
        z_norm,
        az_norm,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferCheck {
    pub lower_holds: bool,
    pub upper_holds: bool,
    /// ‖Tz‖ / ‖z‖
    pub ratio_z: f64,
    /// ‖TAz‖ / ‖Az‖
    pub ratio_az: f64,
    /// (ratio_az − εc)/(1 + ε)
    pub lower: f64,
    /// (ratio_az + εc)/(1 − ε)
    pub upper: f64,
}

/// Checks that ‖Tz‖/‖z‖ lies strictly between (‖TAz‖/‖Az‖ ∓ εc)/(1 ± ε),
/// up to `CHECK_TOL`.
pub fn verify_transfer_bounds(ca: &CoreApproximation, op: &Operator, coeffs: &[f64]) -> Result<TransferCheck, ConstructionError> {
    let space = ca.system.space;
    let (z, az) = ca.combine(coeffs)?;
    let (z_norm, az_norm) = (norm(&z, space), norm(&az, space));
    if z_norm == 0.0 || az_norm == 0.0 {
        return Err(SeqError::ZeroVector.into());
    }
    let ratio_z = norm(&op.apply(&z)?, space) / z_norm;
    let ratio_az = norm(&op.apply(&az)?, space) / az_norm;
    let ec = ca.epsilon * ca.c;
    let lower = (ratio_az - ec) / (1.0 + ca.epsilon);
    let upper = (ratio_az + ec) / (1.0 - ca.epsilon);
    Ok(TransferCheck {
        lower_holds: ratio_z > lower - CHECK_TOL,
        upper_holds: ratio_z < upper + CHECK_TOL,
        ratio_z,
        ratio_az,
        lower,
        upper,
    })
}
