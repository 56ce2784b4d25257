//! Quantitative replay of the density-invariance construction.
//!
//! Starting from a window M of the ambient space, [`build_biorthogonal`]
//! chooses unit vectors m_n ∈ M and norming functionals x'_n with
//! x'_i(m_n) = 0 for i < n. [`build_core_approximants`] then replaces each
//! m_n by a finitely supported z_n within a geometrically shrinking budget
//! while keeping the same kernel conditions, which makes z_i ↦ m_i a near
//! isometry whose distortion is checked by [`verify_near_isometry`] and
//! [`verify_transfer_bounds`]. [`run_invariance_case`] strings the pieces
//! together for each of the four quantities.

mod approximants;
mod biorthogonal;
mod invariance;
mod lemma;
mod suite;

use thiserror::Error;

use crate::operators::OperatorError;
use crate::seqspace::SeqError;

pub use approximants::{
    budget, build_core_approximants, verify_near_isometry, verify_transfer_bounds, CoreApproximation, NearIsometryCheck,
    TransferCheck,
};
pub use biorthogonal::{build_biorthogonal, check_coefficient_bound, BiorthogonalSystem, CoefficientBound, Source};
pub use invariance::{run_invariance_case, CaseReport, Part, RANDOM_SUB_BASES};
pub use lemma::{approximate_in_core, check_dense_intersection, CoreApproximant, DenseIntersectionReport};
pub use suite::{construction_suite, random_combination, random_window, SuiteConfig, SuiteReport, Violation};

/// Slack allowed on every verified inequality.
pub const CHECK_TOL: f64 = 1e-9;

/// Tolerance for the exact biorthogonality relations.
pub const BIORTHOGONAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConstructionError {
    #[error(transparent)]
    Seq(#[from] SeqError),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error("window exhausted: only {found} of {requested} biorthogonal vectors exist")]
    ExhaustedSubspace { requested: usize, found: usize },
    #[error("no finite truncation of m_{0} meets its budget")]
    BudgetInfeasible(usize),
    #[error("invalid witness: {0}")]
    InvalidWitness(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

fn check_epsilon(epsilon: f64) -> Result<(), ConstructionError> {
    if epsilon > 0.0 && epsilon < 1.0 {
        Ok(())
    } else {
        Err(ConstructionError::InvalidParameter(format!("epsilon must lie in (0, 1), got {epsilon}")))
    }
}
