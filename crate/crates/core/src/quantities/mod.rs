//! Finite-(k, K, N) analogues of the operational quantities Γ, Δ, τ, ∇.
//!
//! Every quantity is evaluated on the N×N compression `T_N` of an operator:
//!
//! * Γ_k: inf over k-dimensional M of ‖T_N|_M‖
//! * τ_k: sup over k-dimensional M of inf_{m ∈ S_M} ‖T_N m‖
//! * Δ_{k,K}: sup over K-dimensional M of Γ_k(T_N|_M)
//! * ∇_{k,K}: inf over K-dimensional M of τ_k(T_N|_M)
//!
//! Three evaluation methods are offered. `svd_oracle` reads the value off the
//! singular values of `T_N` (p = 2). `subset_oracle` searches coordinate
//! subspaces exhaustively and is exact for diagonal operators in every ℓ^p.
//! `grassmann_search` is a seeded local search and yields a one-sided bound.

mod limit;
mod oracle;
mod search;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::operators::{Operator, OperatorError};
use crate::seqspace::{SeqError, SpaceConfig};

pub use limit::{limit_estimate, LimitEstimate, CONVERGENCE_TOL};
pub use oracle::{subset_delta, subset_gamma, subset_nabla, subset_tau, svd_oracle, SubsetOptimum, SUBSET_LIMIT};
pub use search::{grassmann_search, Objective, SearchOutcome};

pub const DEFAULT_RESTARTS: usize = 64;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuantityError {
    #[error("bad dimensions: need 1 ≤ k ≤ K ≤ N, got N = {n}, k = {k}, K = {big_k}")]
    BadDimensions { n: usize, k: usize, big_k: usize },
    #[error("unsupported method: {0}")]
    UnsupportedMethod(String),
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Seq(#[from] SeqError),
    #[error("subset oracle would visit {0} index sets (limit {SUBSET_LIMIT})")]
    TooManySubsets(u128),
    #[error("cross-validation failed: {0}")]
    CrossValidation(String),
    #[error("bad schedule: {0}")]
    BadSchedule(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Quantity {
    #[serde(alias = "G")]
    Gamma,
    #[serde(alias = "D")]
    Delta,
    #[serde(alias = "T")]
    Tau,
    #[serde(alias = "N")]
    Nabla,
}

impl Quantity {
    /// Whether the quantity is an infimum over its outer family.
    pub fn is_infimum(self) -> bool {
        matches!(self, Quantity::Gamma | Quantity::Nabla)
    }

    /// Whether the quantity has an independent outer dimension K.
    pub fn is_nested(self) -> bool {
        matches!(self, Quantity::Delta | Quantity::Nabla)
    }
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Quantity::Gamma => "Gamma",
            Quantity::Delta => "Delta",
            Quantity::Tau => "Tau",
            Quantity::Nabla => "Nabla",
        })
    }
}

impl std::str::FromStr for Quantity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "G" | "Gamma" | "gamma" => Ok(Quantity::Gamma),
            "D" | "Delta" | "delta" => Ok(Quantity::Delta),
            "T" | "Tau" | "tau" => Ok(Quantity::Tau),
            "N" | "Nabla" | "nabla" => Ok(Quantity::Nabla),
            other => Err(format!("unknown quantity {other:?}; expected one of G, D, T, N")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    SvdOracle,
    SubsetOracle,
    GrassmannSearch,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::SvdOracle => "svd_oracle",
            Method::SubsetOracle => "subset_oracle",
            Method::GrassmannSearch => "grassmann_search",
        })
    }
}

/// Restart count and seed for `grassmann_search`; ignored by the oracles.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchParams {
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SearchParams {
    fn default() -> Self {
        SearchParams {
            restarts: DEFAULT_RESTARTS,
            seed: 0,
        }
    }
}

/// Truncation dimension N, inner dimension k and outer dimension K.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub n: usize,
    pub k: usize,
    pub big_k: usize,
}

impl Dims {
    pub fn new(n: usize, k: usize, big_k: usize) -> Self {
        Dims { n, k, big_k }
    }

    fn validate(self) -> Result<(), QuantityError> {
        if self.k == 0 || self.k > self.big_k || self.big_k > self.n {
            return Err(QuantityError::BadDimensions {
                n: self.n,
                k: self.k,
                big_k: self.big_k,
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantityEstimate {
    pub quantity: Quantity,
    pub value: f64,
    pub k: usize,
    #[serde(rename = "K")]
    pub big_k: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub method: Method,
    /// Certified interval `(lower, upper)` containing the exact finite value.
    pub bracket: (f64, f64),
    pub seed: Option<u64>,
    /// Coordinate indices (1-based) attaining a subset-oracle optimum.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<usize>>,
}

/// Γ_k on the N-truncation.
pub fn gamma_k(
    op: &Operator,
    space: SpaceConfig,
    n: usize,
    k: usize,
    method: Method,
    params: SearchParams,
) -> Result<QuantityEstimate, QuantityError> {
    estimate(Quantity::Gamma, op, space, Dims::new(n, k, k), method, params)
}

/// τ_k on the N-truncation.
pub fn tau_k(
    op: &Operator,
    space: SpaceConfig,
    n: usize,
    k: usize,
    method: Method,
    params: SearchParams,
) -> Result<QuantityEstimate, QuantityError> {
    estimate(Quantity::Tau, op, space, Dims::new(n, k, k), method, params)
}

/// Δ_{k,K} on the N-truncation.
pub fn delta_k_big_k(
    op: &Operator,
    space: SpaceConfig,
    dims: Dims,
    method: Method,
    params: SearchParams,
) -> Result<QuantityEstimate, QuantityError> {
    estimate(Quantity::Delta, op, space, dims, method, params)
}

/// ∇_{k,K} on the N-truncation.
pub fn nabla_k_big_k(
    op: &Operator,
    space: SpaceConfig,
    dims: Dims,
    method: Method,
    params: SearchParams,
) -> Result<QuantityEstimate, QuantityError> {
    estimate(Quantity::Nabla, op, space, dims, method, params)
}

/// Index (0-based, into singular values sorted descending) of the singular
/// value of `T_N` that equals the finite quantity.
fn svd_index(quantity: Quantity, dims: Dims) -> usize {
    let Dims { n, k, big_k } = dims;
    match quantity {
        Quantity::Gamma => n - k,
        Quantity::Tau => k - 1,
        Quantity::Delta => big_k - k,
        Quantity::Nabla => n - big_k + k - 1,
    }
}

/// Evaluates one finite quantity. For Γ and τ the outer dimension is forced
/// to equal k.
pub fn estimate(
    quantity: Quantity,
    op: &Operator,
    space: SpaceConfig,
    dims: Dims,
    method: Method,
    params: SearchParams,
) -> Result<QuantityEstimate, QuantityError> {
    let dims = if quantity.is_nested() {
        dims
    } else {
        Dims { big_k: dims.k, ..dims }
    };
    dims.validate()?;
    let mut out = QuantityEstimate {
        quantity,
        value: 0.0,
        k: dims.k,
        big_k: dims.big_k,
        n: dims.n,
        method,
        bracket: (0.0, 0.0),
        seed: None,
        witness: None,
    };
    match method {
        Method::SvdOracle => {
            space.require_hilbert()?;
            let sigma = svd_oracle(&op.truncate(dims.n));
            let value = sigma[svd_index(quantity, dims)];
            if quantity.is_nested() {
                cross_validate(quantity, op, dims, value)?;
            }
            out.value = value;
            out.bracket = (value, value);
        }
        Method::SubsetOracle => {
            let values = abs_diagonal(op, dims.n)?;
            let best = subset_value(quantity, &values, dims)?;
            out.value = best.value;
            out.bracket = (best.value, best.value);
            out.witness = Some(best.indices);
        }
        Method::GrassmannSearch => {
            space.require_hilbert()?;
            let a = op.truncate(dims.n);
            let value = search_value(quantity, &a, dims, params);
            out.value = value;
            out.bracket = if quantity.is_infimum() {
                (0.0, value)
            } else {
                (value, svd_oracle(&a)[0].max(value))
            };
            out.seed = Some(params.seed);
        }
    }
    Ok(out)
}

fn abs_diagonal(op: &Operator, n: usize) -> Result<Vec<f64>, QuantityError> {
    op.diagonal_values(n)
        .map(|d| d.into_iter().map(f64::abs).collect())
        .ok_or_else(|| QuantityError::UnsupportedMethod("subset_oracle requires a diagonal operator".into()))
}

fn subset_value(quantity: Quantity, values: &[f64], dims: Dims) -> Result<SubsetOptimum, QuantityError> {
    match quantity {
        Quantity::Gamma => subset_gamma(values, dims.k),
        Quantity::Tau => subset_tau(values, dims.k),
        Quantity::Delta => subset_delta(values, dims.k, dims.big_k),
        Quantity::Nabla => subset_nabla(values, dims.k, dims.big_k),
    }
}

fn search_value(quantity: Quantity, a: &nalgebra::DMatrix<f64>, dims: Dims, params: SearchParams) -> f64 {
    use search::{best_frame, Keep};
    let Dims { k, big_k, .. } = dims;
    let (r, s) = (params.restarts, params.seed);
    let (value, _, _) = match quantity {
        Quantity::Gamma => best_frame(a, k, Keep::Low, false, r, s, |x| x[0]),
        Quantity::Tau => best_frame(a, k, Keep::High, true, r, s, |x| x[x.len() - 1]),
        Quantity::Delta => best_frame(a, big_k, Keep::High, true, r, s, move |x| x[big_k - k]),
        Quantity::Nabla => best_frame(a, big_k, Keep::Low, false, r, s, move |x| x[k - 1]),
    };
    value
}

/// The singular-value formulas for Δ and ∇ are only reported once an
/// independent evaluation agrees: the exhaustive subset search for
/// diagonals, otherwise the one-sided bound from a short Grassmann search.
fn cross_validate(quantity: Quantity, op: &Operator, dims: Dims, value: f64) -> Result<(), QuantityError> {
    if let Ok(values) = abs_diagonal(op, dims.n) {
        let exact = subset_value(quantity, &values, dims)?.value;
        if (exact - value).abs() > 1e-12 * exact.abs().max(value.abs()) {
            return Err(QuantityError::CrossValidation(format!(
                "{quantity}: singular-value formula gives {value}, subset search gives {exact}"
            )));
        }
        return Ok(());
    }
    let a = op.truncate(dims.n);
    let bound = search_value(quantity, &a, dims, SearchParams { restarts: 8, seed: 0 });
    let slack = 1e-9 * value.abs().max(1.0);
    let consistent = if quantity.is_infimum() {
        bound >= value - slack
    } else {
        bound <= value + slack
    };
    if !consistent {
        return Err(QuantityError::CrossValidation(format!(
            "{quantity}: singular-value formula gives {value}, search bound {bound} lies on the wrong side"
        )));
    }
    Ok(())
}
