use serde::{Deserialize, Serialize};

use super::{estimate, Dims, Method, Quantity, QuantityError, QuantityEstimate, SearchParams};
use crate::operators::Operator;
use crate::seqspace::SpaceConfig;

/// Largest pairwise gap among the trailing values that still counts as
/// converged.
pub const CONVERGENCE_TOL: f64 = 1e-6;

const WINDOW: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitEstimate {
    pub estimates: Vec<QuantityEstimate>,
    pub extrapolated: f64,
    pub converged: bool,
}

/// Evaluates `quantity` along a schedule of growing windows.
///
/// The schedule must be nonempty and nondecreasing in each of N, k and K.
/// `converged` holds when the last three values (or all of them, for
/// shorter schedules) differ pairwise by less than `CONVERGENCE_TOL`.
pub fn limit_estimate(
    op: &Operator,
    space: SpaceConfig,
    quantity: Quantity,
    schedule: &[Dims],
    method: Method,
    params: SearchParams,
) -> Result<LimitEstimate, QuantityError> {
    if schedule.is_empty() {
        return Err(QuantityError::BadSchedule("schedule is empty".into()));
    }
    for (i, w) in schedule.windows(2).enumerate() {
        let (a, b) = (w[0], w[1]);
        if b.n < a.n || b.k < a.k || b.big_k < a.big_k {
            return Err(QuantityError::BadSchedule(format!(
                "entry {} decreases: ({}, {}, {}) after ({}, {}, {})",
                i + 1,
                b.n,
                b.k,
                b.big_k,
                a.n,
                a.k,
                a.big_k
            )));
        }
    }
    let estimates = schedule
        .iter()
        .map(|&dims| estimate(quantity, op, space, dims, method, params))
        .collect::<Result<Vec<_>, _>>()?;
    let tail = &estimates[estimates.len().saturating_sub(WINDOW)..];
    let (lo, hi) = tail
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), e| (lo.min(e.value), hi.max(e.value)));
    Ok(LimitEstimate {
        extrapolated: estimates.last().unwrap().value,
        converged: hi - lo < CONVERGENCE_TOL,
        estimates,
    })
}
