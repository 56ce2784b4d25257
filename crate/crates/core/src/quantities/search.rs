//! Seeded random-restart search over the Grassmannian of d-dimensional
//! subspaces of R^N.
//!
//! Each restart starts from a random orthonormal frame and alternates two
//! steps until the objective stops moving: find the extremal eigenvector of
//! AᵀA compressed to the orthogonal complement of the frame, then enlarge the
//! frame by that vector (and the residual of the worst Ritz vector) and trim
//! back to d dimensions by Rayleigh-Ritz, discarding the worst direction.
//! By eigenvalue interlacing the trim never makes the objective worse.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::QuantityError;
use crate::linalg;
use crate::operators::Operator;
use crate::seqspace::{SpaceConfig, Subspace, TailVector};

const MAX_ITERATIONS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    /// Minimize ‖T_N|_M‖ over d-dimensional M.
    MinRestrictedNorm,
    /// Maximize inf_{m ∈ S_M} ‖T_N m‖ over d-dimensional M.
    MaxMinModulus,
}

/// Which end of the Ritz spectrum a frame keeps when it is trimmed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Keep {
    Low,
    High,
}

#[derive(Debug, Clone)]
pub struct SearchOutcome {
    pub value: f64,
    pub basis: Subspace,
    /// Index of the restart that produced the reported optimum.
    pub restart: usize,
}

/// Random orthonormal d-frame in R^n for one restart.
fn random_frame(n: usize, d: usize, seed: u64, restart: usize) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    loop {
        let cols: Vec<DVector<f64>> = (0..d)
            .map(|_| DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng)))
            .collect();
        let q = linalg::orthonormal_columns(&cols, 1e-8);
        if q.len() == d {
            return linalg::from_columns(&q, n);
        }
    }
}

fn ritz(b: &DMatrix<f64>, q: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let h = q.transpose() * b * q;
    let (values, vectors) = linalg::symmetric_eigen_ascending(&h);
    (values, q * vectors)
}

fn worst_value(values: &[f64], keep: Keep) -> f64 {
    match keep {
        Keep::Low => *values.last().unwrap(),
        Keep::High => values[0],
    }
}

/// Alternating refinement of a frame for the Gram operator `b = AᵀA`.
/// With `Keep::Low` the largest Ritz value is driven down; with
/// `Keep::High` the smallest is driven up.
pub(crate) fn refine(b: &DMatrix<f64>, start: DMatrix<f64>, keep: Keep) -> DMatrix<f64> {
    let n = b.nrows();
    let d = start.ncols();
    let mut q = start;
    if d >= n {
        return q;
    }
    let (mut values, mut x) = ritz(b, &q);
    let scale = b.norm().max(f64::MIN_POSITIVE);
    for _ in 0..MAX_ITERATIONS {
        // complement of the current frame
        let mut cols: Vec<DVector<f64>> = (0..d).map(|j| x.column(j).into_owned()).collect();
        cols.extend((0..n).map(|i| DVector::from_fn(n, |r, _| if r == i { 1.0 } else { 0.0 })));
        let full = linalg::orthonormal_columns(&cols, 1e-10);
        let z = linalg::from_columns(&full[d..], n);
        let (cvals, cvecs) = linalg::symmetric_eigen_ascending(&(z.transpose() * b * &z));
        let pick = match keep {
            Keep::Low => 0,
            Keep::High => cvals.len() - 1,
        };
        let v = &z * cvecs.column(pick);

        let worst_idx = match keep {
            Keep::Low => d - 1,
            Keep::High => 0,
        };
        let w = x.column(worst_idx).into_owned();
        let residual = b * &w - &w * values[worst_idx];

        let mut ext: Vec<DVector<f64>> = (0..d).map(|j| x.column(j).into_owned()).collect();
        ext.push(v);
        ext.push(residual);
        let e = linalg::from_columns(&linalg::orthonormal_columns(&ext, 1e-10), n);
        let (evals, evecs) = ritz(b, &e);
        let m = evals.len();
        let range = match keep {
            Keep::Low => 0..d,
            Keep::High => (m - d)..m,
        };
        let candidate = linalg::from_columns(&range.map(|j| evecs.column(j).into_owned()).collect::<Vec<_>>(), n);
        let (new_values, new_x) = ritz(b, &candidate);
        let before = worst_value(&values, keep);
        let after = worst_value(&new_values, keep);
        let gain = match keep {
            Keep::Low => before - after,
            Keep::High => after - before,
        };
        if gain < 0.0 {
            break;
        }
        q = candidate;
        values = new_values;
        x = new_x;
        if gain <= 1e-15 * scale {
            break;
        }
    }
    q
}

/// Runs `restarts` seeded refinements of `dim`-frames for `a` and returns the
/// frame whose `score` (a function of the singular values of `a Q`, sorted
/// descending) is best. Ties go to the lowest restart index.
pub(crate) fn best_frame<F>(
    a: &DMatrix<f64>,
    dim: usize,
    keep: Keep,
    maximize: bool,
    restarts: usize,
    seed: u64,
    score: F,
) -> (f64, DMatrix<f64>, usize)
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let n = a.ncols();
    let b = a.transpose() * a;
    let runs: Vec<(f64, DMatrix<f64>)> = (0..restarts.max(1))
        .into_par_iter()
        .map(|r| {
            let q = refine(&b, random_frame(n, dim, seed, r), keep);
            let sigma = linalg::singular_values(&(a * &q));
            (score(&sigma), q)
        })
        .collect();
    let mut best = 0;
    for (i, (value, _)) in runs.iter().enumerate() {
        let current = runs[best].0;
        if (maximize && *value > current) || (!maximize && *value < current) {
            best = i;
        }
    }
    let (value, q) = runs.into_iter().nth(best).unwrap();
    (value, q, best)
}

/// Seeded search for the k-dimensional extremum of a restricted norm or
/// minimum modulus of the N-truncation `T_N`.
///
/// The returned basis is orthonormal and, viewed as finitely supported
/// vectors, attains the returned value for the dense operator `T_N`.
pub fn grassmann_search(
    objective: Objective,
    op: &Operator,
    space: SpaceConfig,
    n: usize,
    k: usize,
    restarts: usize,
    seed: u64,
) -> Result<SearchOutcome, QuantityError> {
    space.require_hilbert().map_err(QuantityError::Seq)?;
    if k == 0 || k > n {
        return Err(QuantityError::BadDimensions { n, k, big_k: k });
    }
    let a = op.truncate(n);
    let (value, q, restart) = match objective {
        Objective::MinRestrictedNorm => best_frame(&a, k, Keep::Low, false, restarts, seed, |s| s[0]),
        Objective::MaxMinModulus => best_frame(&a, k, Keep::High, true, restarts, seed, |s| s[s.len() - 1]),
    };
    Ok(SearchOutcome {
        value,
        basis: frame_to_subspace(&q)?,
        restart,
    })
}

pub(crate) fn frame_to_subspace(q: &DMatrix<f64>) -> Result<Subspace, QuantityError> {
    let basis = (0..q.ncols())
        .map(|j| TailVector::finite(q.column(j).iter().copied().collect()))
        .collect();
    Ok(Subspace::new(basis, SpaceConfig::L2)?)
}
