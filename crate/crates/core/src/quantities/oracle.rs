//! Exact oracles: singular values of the N-truncation, and exhaustive
//! coordinate-subset search for diagonal operators.

use itertools::Itertools;
use nalgebra::DMatrix;

use super::QuantityError;
use crate::linalg;

/// Largest number of index sets an exhaustive subset search may visit.
pub const SUBSET_LIMIT: u128 = 50_000_000;

/// Singular values σ_1 ≥ … ≥ σ_N of a dense matrix.
pub fn svd_oracle(a: &DMatrix<f64>) -> Vec<f64> {
    linalg::singular_values(a)
}

/// An optimum of a subset search and the lexicographically smallest
/// (1-based) index set attaining it.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsetOptimum {
    pub value: f64,
    pub indices: Vec<usize>,
}

pub(crate) fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

fn check_budget(n: usize, k: usize) -> Result<(), QuantityError> {
    let count = binomial(n, k);
    if count > SUBSET_LIMIT {
        return Err(QuantityError::TooManySubsets(count));
    }
    Ok(())
}

/// Walks every `size`-element index set in lexicographic order and keeps the
/// first one whose score is strictly better than all before it.
fn search<F>(values: &[f64], size: usize, maximize: bool, score: F) -> Result<SubsetOptimum, QuantityError>
where
    F: Fn(&mut Vec<f64>) -> f64,
{
    check_budget(values.len(), size)?;
    let mut best: Option<SubsetOptimum> = None;
    let mut scratch = Vec::with_capacity(size);
    for set in (0..values.len()).combinations(size) {
        scratch.clear();
        scratch.extend(set.iter().map(|&i| values[i]));
        let value = score(&mut scratch);
        let better = match &best {
            None => true,
            Some(b) if maximize => value > b.value,
            Some(b) => value < b.value,
        };
        if better {
            best = Some(SubsetOptimum {
                value,
                indices: set.iter().map(|i| i + 1).collect(),
            });
        }
    }
    Ok(best.expect("at least one index set"))
}

fn sort_ascending(v: &mut [f64]) {
    v.sort_by(|a, b| a.total_cmp(b));
}

/// min over k-sets S of max_{j∈S} a_j.
pub fn subset_gamma(abs_values: &[f64], k: usize) -> Result<SubsetOptimum, QuantityError> {
    search(abs_values, k, false, |s| s.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

/// max over k-sets S of min_{j∈S} a_j.
pub fn subset_tau(abs_values: &[f64], k: usize) -> Result<SubsetOptimum, QuantityError> {
    search(abs_values, k, true, |s| s.iter().copied().fold(f64::INFINITY, f64::min))
}

/// max over K-sets S of [min over k-subsets of S of the subset maximum],
/// the inner value being the k-th smallest entry of S.
pub fn subset_delta(abs_values: &[f64], k: usize, big_k: usize) -> Result<SubsetOptimum, QuantityError> {
    search(abs_values, big_k, true, |s| {
        sort_ascending(s);
        s[k - 1]
    })
}

/// min over K-sets S of [max over k-subsets of S of the subset minimum],
/// the inner value being the k-th largest entry of S.
pub fn subset_nabla(abs_values: &[f64], k: usize, big_k: usize) -> Result<SubsetOptimum, QuantityError> {
    search(abs_values, big_k, false, |s| {
        sort_ascending(s);
        s[s.len() - k]
    })
}
