use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::vector::inner_product;
use super::{SeqError, SpaceConfig, TailVector, GRAM_RANK_TOL};
use crate::linalg;

/// A finite-dimensional window: the span of a linearly independent, ordered
/// list of vectors in the ambient space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SubspaceRepr", into = "SubspaceRepr")]
pub struct Subspace {
    basis: Vec<TailVector>,
    ambient: SpaceConfig,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SubspaceRepr {
    basis: Vec<TailVector>,
    #[serde(default)]
    ambient: SpaceConfig,
}

impl TryFrom<SubspaceRepr> for Subspace {
    type Error = SeqError;

    fn try_from(raw: SubspaceRepr) -> Result<Self, Self::Error> {
        Subspace::new(raw.basis, raw.ambient)
    }
}

impl From<Subspace> for SubspaceRepr {
    fn from(s: Subspace) -> Self {
        SubspaceRepr {
            basis: s.basis,
            ambient: s.ambient,
        }
    }
}

impl Subspace {
    /// Fails with `DegenerateBasis` when the basis is empty or its Gram
    /// matrix has smallest eigenvalue at most 1e-10 times its largest.
    /// Linear independence does not depend on p, so the ℓ² Gram matrix is
    /// used for every ambient exponent.
    pub fn new(basis: Vec<TailVector>, ambient: SpaceConfig) -> Result<Self, SeqError> {
        if basis.is_empty() || !linalg::is_positive_definite(&gram(&basis), GRAM_RANK_TOL) {
            return Err(SeqError::DegenerateBasis);
        }
        Ok(Subspace { basis, ambient })
    }

    /// span{e_j : j ∈ indices}, 1-based.
    pub fn coordinate(indices: &[usize], ambient: SpaceConfig) -> Result<Self, SeqError> {
        Subspace::new(indices.iter().map(|&j| TailVector::unit(j)).collect(), ambient)
    }

    pub fn basis(&self) -> &[TailVector] {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn ambient(&self) -> SpaceConfig {
        self.ambient
    }

    pub fn gram(&self) -> DMatrix<f64> {
        gram(&self.basis)
    }

    /// Whether some basis vector has a nonzero tail.
    pub fn has_tail(&self) -> bool {
        self.basis.iter().any(TailVector::has_tail)
    }
}

/// Gram matrix `G_ij = ⟨b_i, b_j⟩`.
pub fn gram(basis: &[TailVector]) -> DMatrix<f64> {
    let n = basis.len();
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let value = inner_product(&basis[i], &basis[j]);
            g[(i, j)] = value;
            g[(j, i)] = value;
        }
    }
    g
}
