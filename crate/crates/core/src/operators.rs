//! Structured bounded operators on ℓ^p that map tail vectors to tail vectors.
//!
//! Restricted norms and moduli on a window M are generalized eigenvalue
//! problems for the pencil (Gram of T b_i, Gram of b_i), which is exact for
//! the window because every Gram entry is evaluated in closed form.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg;
use crate::seqspace::{
    gram, linear_combine, norm, Exponent, SeqError, SpaceConfig, Subspace, TailVector, GRAM_RANK_TOL,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OperatorError {
    #[error(transparent)]
    Seq(#[from] SeqError),
    #[error("invalid operator: {0}")]
    Invalid(String),
    #[error("restricted Gram matrix is not positive definite")]
    DegenerateBasis,
}

/// An eventually periodic scalar sequence: `prefix` on indices `1..=J`,
/// then `periodic[(j - J - 1) mod P]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EventuallyPeriodic {
    prefix: Vec<f64>,
    periodic: Vec<f64>,
}

impl EventuallyPeriodic {
    pub fn new(prefix: Vec<f64>, periodic: Vec<f64>) -> Result<Self, OperatorError> {
        if periodic.is_empty() {
            return Err(OperatorError::Invalid("periodic part must be nonempty".into()));
        }
        if prefix.iter().chain(&periodic).any(|x| !x.is_finite()) {
            return Err(OperatorError::Invalid("values must be finite".into()));
        }
        Ok(EventuallyPeriodic { prefix, periodic })
    }

    pub fn constant(value: f64) -> Self {
        EventuallyPeriodic {
            prefix: Vec::new(),
            periodic: vec![value],
        }
    }

    pub fn prefix(&self) -> &[f64] {
        &self.prefix
    }

    pub fn periodic(&self) -> &[f64] {
        &self.periodic
    }

    /// Value at 1-based index `j`.
    pub fn at(&self, j: usize) -> f64 {
        let len = self.prefix.len();
        if j <= len {
            self.prefix[j - 1]
        } else {
            self.periodic[(j - len - 1) % self.periodic.len()]
        }
    }

    pub fn sup_abs(&self) -> f64 {
        self.prefix.iter().chain(&self.periodic).fold(0.0, |m, x| m.max(x.abs()))
    }

    /// sup_{j > from} |value_j|.
    fn sup_abs_after(&self, from: usize) -> f64 {
        let end = from.max(self.prefix.len()) + self.periodic.len();
        ((from + 1)..=end).fold(0.0, |m, j| m.max(self.at(j).abs()))
    }

    /// Coordinatewise product with `v`, exact.
    fn multiply(&self, v: &TailVector) -> Result<TailVector, SeqError> {
        let start = v.prefix().len().max(self.prefix.len());
        let period = crate::seqspace::lcm_periods(v.period(), self.periodic.len());
        let aligned = v.aligned(start, period);
        let prefix = aligned.prefix.iter().enumerate().map(|(i, x)| self.at(i + 1) * x).collect();
        let coeffs = aligned
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| self.at(start + 1 + k) * c)
            .collect();
        TailVector::new(prefix, coeffs, v.tail_ratio())
    }
}

/// A bounded operator on ℓ^p with a closed-form action on tail vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "OperatorRepr", into = "OperatorRepr")]
pub enum Operator {
    /// Multiplication by an eventually periodic sequence.
    Diagonal(EventuallyPeriodic),
    /// e_j ↦ w_j e_{j+1}.
    WeightedShift(EventuallyPeriodic),
    /// A square block acting on indices `1..=B`, plus a diagonal.
    FiniteRankPlus {
        block: DMatrix<f64>,
        diagonal: EventuallyPeriodic,
    },
    /// A square matrix acting on the first N coordinates (zero elsewhere).
    Dense(DMatrix<f64>),
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
enum OperatorKind {
    Diagonal,
    Shift,
    FiniteRankPlus,
    Dense,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OperatorRepr {
    kind: OperatorKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    prefix: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    periodic: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    block: Vec<Vec<f64>>,
}

fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>, OperatorError> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(OperatorError::Invalid("block must be a square matrix".into()));
    }
    if rows.iter().flatten().any(|x| !x.is_finite()) {
        return Err(OperatorError::Invalid("block entries must be finite".into()));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn rows_of(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

impl TryFrom<OperatorRepr> for Operator {
    type Error = OperatorError;

    fn try_from(raw: OperatorRepr) -> Result<Self, Self::Error> {
        match raw.kind {
            OperatorKind::Diagonal => Ok(Operator::Diagonal(EventuallyPeriodic::new(raw.prefix, raw.periodic)?)),
            OperatorKind::Shift => Ok(Operator::WeightedShift(EventuallyPeriodic::new(raw.prefix, raw.periodic)?)),
            OperatorKind::FiniteRankPlus => Ok(Operator::FiniteRankPlus {
                block: matrix_from_rows(&raw.block)?,
                diagonal: EventuallyPeriodic::new(raw.prefix, raw.periodic)?,
            }),
            OperatorKind::Dense => {
                if raw.block.is_empty() {
                    return Err(OperatorError::Invalid("dense operator needs a nonempty block".into()));
                }
                Ok(Operator::Dense(matrix_from_rows(&raw.block)?))
            }
        }
    }
}

impl From<Operator> for OperatorRepr {
    fn from(op: Operator) -> Self {
        let (kind, seq, block) = match op {
            Operator::Diagonal(d) => (OperatorKind::Diagonal, Some(d), Vec::new()),
            Operator::WeightedShift(w) => (OperatorKind::Shift, Some(w), Vec::new()),
            Operator::FiniteRankPlus { block, diagonal } => (OperatorKind::FiniteRankPlus, Some(diagonal), rows_of(&block)),
            Operator::Dense(m) => (OperatorKind::Dense, None, rows_of(&m)),
        };
        let (prefix, periodic) = seq.map(|s| (s.prefix, s.periodic)).unwrap_or_default();
        OperatorRepr {
            kind,
            prefix,
            periodic,
            block,
        }
    }
}

/// Lower and upper bounds on an operator norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormBracket {
    pub lower: f64,
    pub upper: f64,
}

impl Operator {
    pub fn identity() -> Self {
        Operator::Diagonal(EventuallyPeriodic::constant(1.0))
    }

    pub fn zero() -> Self {
        Operator::Diagonal(EventuallyPeriodic::constant(0.0))
    }

    pub fn diagonal(prefix: Vec<f64>, periodic: Vec<f64>) -> Result<Self, OperatorError> {
        Ok(Operator::Diagonal(EventuallyPeriodic::new(prefix, periodic)?))
    }

    pub fn weighted_shift(prefix: Vec<f64>, periodic: Vec<f64>) -> Result<Self, OperatorError> {
        Ok(Operator::WeightedShift(EventuallyPeriodic::new(prefix, periodic)?))
    }

    pub fn dense(matrix: DMatrix<f64>) -> Result<Self, OperatorError> {
        if !matrix.is_square() || matrix.nrows() == 0 {
            return Err(OperatorError::Invalid("dense operator must be a nonempty square matrix".into()));
        }
        Ok(Operator::Dense(matrix))
    }

    pub fn finite_rank_plus(block: DMatrix<f64>, diagonal: EventuallyPeriodic) -> Result<Self, OperatorError> {
        if !block.is_square() {
            return Err(OperatorError::Invalid("block must be a square matrix".into()));
        }
        Ok(Operator::FiniteRankPlus { block, diagonal })
    }

    /// Diagonal entries `|d_1|, …, |d_n|` when the operator is diagonal.
    pub fn diagonal_values(&self, n: usize) -> Option<Vec<f64>> {
        match self {
            Operator::Diagonal(d) => Some((1..=n).map(|j| d.at(j)).collect()),
            _ => None,
        }
    }

    /// Exact image `T v`.
    pub fn apply(&self, v: &TailVector) -> Result<TailVector, OperatorError> {
        match self {
            Operator::Diagonal(d) => Ok(d.multiply(v)?),
            Operator::WeightedShift(w) => {
                let scaled = w.multiply(v)?;
                let mut prefix = vec![0.0];
                prefix.extend_from_slice(scaled.prefix());
                Ok(TailVector::new(prefix, scaled.tail_coeffs().to_vec(), scaled.tail_ratio())?)
            }
            Operator::FiniteRankPlus { block, diagonal } => {
                let head = DVector::from_vec(v.coords(block.ncols()));
                let image = TailVector::finite((block * head).iter().copied().collect());
                Ok(linear_combine(&[1.0, 1.0], &[diagonal.multiply(v)?, image])?)
            }
            Operator::Dense(a) => {
                let head = DVector::from_vec(v.coords(a.ncols()));
                Ok(TailVector::finite((a * head).iter().copied().collect()))
            }
        }
    }

    /// The N×N compression with entries ⟨T e_j, e_i⟩.
    pub fn truncate(&self, n: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(n, n);
        match self {
            Operator::Diagonal(d) => {
                for j in 0..n {
                    m[(j, j)] = d.at(j + 1);
                }
            }
            Operator::WeightedShift(w) => {
                for j in 0..n.saturating_sub(1) {
                    m[(j + 1, j)] = w.at(j + 1);
                }
            }
            Operator::FiniteRankPlus { block, diagonal } => {
                for j in 0..n {
                    m[(j, j)] = diagonal.at(j + 1);
                }
                let b = block.nrows().min(n);
                for i in 0..b {
                    for j in 0..b {
                        m[(i, j)] += block[(i, j)];
                    }
                }
            }
            Operator::Dense(a) => {
                let b = a.nrows().min(n);
                m.view_mut((0, 0), (b, b)).copy_from(&a.view((0, 0), (b, b)));
            }
        }
        m
    }

    /// Operator norm on ℓ^p with its bracket.
    ///
    /// Diagonals and weighted shifts have norm `sup |value|` for every p. A
    /// finite-rank-plus-diagonal operator is the direct sum of the head block
    /// `block + diag(d_1..d_B)` and the diagonal on indices past B, so its
    /// norm is the larger of the two pieces and the bracket collapses.
    pub fn norm_bracket(&self, space: SpaceConfig) -> NormBracket {
        let exact = match self {
            Operator::Diagonal(d) | Operator::WeightedShift(d) => d.sup_abs(),
            Operator::FiniteRankPlus { block, diagonal } => {
                let b = block.nrows();
                let mut head = block.clone();
                for j in 0..b {
                    head[(j, j)] += diagonal.at(j + 1);
                }
                matrix_norm(&head, space.p).max(diagonal.sup_abs_after(b))
            }
            Operator::Dense(a) => matrix_norm(a, space.p),
        };
        NormBracket {
            lower: exact,
            upper: exact,
        }
    }

    /// Operator norm on ℓ^p (the certified upper end of the bracket).
    pub fn norm(&self, space: SpaceConfig) -> f64 {
        self.norm_bracket(space).upper
    }
}

fn matrix_norm(a: &DMatrix<f64>, p: Exponent) -> f64 {
    match p {
        Exponent::One => linalg::max_column_sum(a),
        Exponent::Infinity => linalg::max_row_sum(a),
        Exponent::Two => linalg::singular_values(a).first().copied().unwrap_or(0.0),
    }
}

/// The data of T|_M: the window and both Gram matrices.
#[derive(Debug, Clone)]
pub struct RestrictedOperatorData {
    pub subspace: Subspace,
    pub gram_m: DMatrix<f64>,
    pub gram_tm: DMatrix<f64>,
}

impl RestrictedOperatorData {
    pub fn new(op: &Operator, subspace: &Subspace) -> Result<Self, OperatorError> {
        subspace.ambient().require_hilbert()?;
        let images = subspace
            .basis()
            .iter()
            .map(|b| op.apply(b))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(RestrictedOperatorData {
            subspace: subspace.clone(),
            gram_m: subspace.gram(),
            gram_tm: gram(&images),
        })
    }

    /// Squared singular values of T|_M, ascending.
    pub fn squared_singular_values(&self) -> Result<Vec<f64>, OperatorError> {
        linalg::generalized_eigenvalues(&self.gram_tm, &self.gram_m, GRAM_RANK_TOL).ok_or(OperatorError::DegenerateBasis)
    }

    /// Singular values of T|_M, descending.
    pub fn singular_values(&self) -> Result<Vec<f64>, OperatorError> {
        Ok(self.squared_singular_values()?.into_iter().rev().map(|l| l.max(0.0).sqrt()).collect())
    }
}

/// ‖T|_M‖ (p = 2).
pub fn restricted_norm(op: &Operator, subspace: &Subspace) -> Result<f64, OperatorError> {
    let sv = RestrictedOperatorData::new(op, subspace)?.singular_values()?;
    Ok(sv[0])
}

/// inf over unit m ∈ M of ‖T m‖ (p = 2).
pub fn restricted_min_modulus(op: &Operator, subspace: &Subspace) -> Result<f64, OperatorError> {
    let sv = RestrictedOperatorData::new(op, subspace)?.singular_values()?;
    Ok(*sv.last().unwrap())
}

/// ‖T v‖_p / ‖v‖_p.
pub fn ratio(op: &Operator, v: &TailVector, space: SpaceConfig) -> Result<f64, OperatorError> {
    Ok(norm(&op.apply(v)?, space) / norm(v, space))
}
