//! Numerical laboratory for Grušin-type degenerate elliptic operators.
//!
//! The crate is organised bottom-up:
//!
//! - [`coefficients`]: the exponent tuple, derived dimensions and the degenerate
//!   coefficient representatives `c(x) = |x|^{2δ}(1+|x|²)^{δ'-δ}`.
//! - [`geometry`]: closed-form quasi-distance, shortest-path distance fields under
//!   the control metric, ball volumes and doubling exponents.
//! - [`discretization`]: uniform grids and the finite-volume Dirichlet form with
//!   harmonic face averaging.
//! - [`evolution`]: the heat semigroup `e^{-tH}`, kernel slices and the kernel
//!   estimates checked against them.
//! - [`wave`]: the leapfrog cosine propagator, finite propagation speed and
//!   Davies–Gaffney bounds.
//! - [`multipliers`]: Fourier multiplier symbols, Nash and Hardy inequalities and
//!   Löwner-order operator inequalities.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coefficients;
pub mod discretization;
pub mod error;
pub mod evolution;
pub mod fit;
pub mod geometry;
pub mod linalg;
pub mod multipliers;
pub mod quadrature;
pub mod wave;

pub use coefficients::{CoefficientField, DerivedExponents, GrusinParameters};
pub use discretization::{Boundary, DivergenceFormOperator, Grid};
pub use error::{Error, Result};
pub use evolution::{EvolutionMethod, KernelSlice, MethodKind, Semigroup};
pub use geometry::{BallVolumeTable, DistanceField, Point, VolumeMethod};
pub use multipliers::MultiplierSpec;
