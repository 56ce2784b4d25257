//! Finite-dimensional operational quantities (Γ, Δ, τ, ∇) of bounded
//! operators on ℓ^p sequence spaces, and an executable replay of the
//! density-invariance construction built on biorthogonal systems.

pub mod linalg;
pub mod construction;
pub mod operators;
pub mod quantities;
pub mod runner;
pub mod seqspace;

#[cfg(test)]
mod properties;
