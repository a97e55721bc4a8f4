//! Finite-volume discretization of the Dirichlet form
//! `h(u) = ∫ c_{δ₁,δ₁'}|∇_{x₁}u|² + c_{δ₂,δ₂'}|∇_{x₂}u|²` on uniform grids.
//!
//! Every grid face gets the harmonic mean of its coefficient along the connecting
//! segment. A face whose segment crosses `x₁ = 0` where `∫c⁻¹` diverges (δ₁ ≥ 1/2
//! for n = 1) gets conductance exactly zero, which decouples the two half-spaces.

mod grid;
mod operator;

pub use grid::Grid;
pub use operator::{face_conductance, Boundary, DivergenceFormOperator};
