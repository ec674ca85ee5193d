// Tensor contractions read clearest with explicit index loops, and the
// estimator entry points mirror their documented parameter lists.
#![allow(clippy::needless_range_loop, clippy::too_many_arguments)]

//! kklab: a numerical laboratory for bundle metrics of Kaluza-Klein type.
//!
//! The crate computes, on coordinate charts, the geometric ingredients of
//! the scalar-curvature decomposition of a bundle metric (curvatures,
//! connection field strengths, second fundamental forms, the reduction
//! Jacobian), assembles reduced Hamiltonian coefficient fields, and checks
//! the group-averaged kernel relation by Feynman-Kac Monte Carlo.
//!
//! Modules:
//! - [`chart`]: pointwise tensor calculus on a chart (Christoffel symbols,
//!   curvature, Laplace-Beltrami) by central finite differences.
//! - [`lie`]: compact-group data in a chart: structure constants, invariant
//!   frames, adjoint action, Haar quadrature, orbit scalar curvature.
//! - [`kk`]: bundle metric assembly and every term of the curvature
//!   decomposition, including both Jacobian routes.
//! - [`quantum`]: coefficient fields of the reduced (scalar and
//!   matrix-valued) Hamiltonians.
//! - [`mc`]: stochastic integration, Feynman-Kac kernel estimates and the
//!   group-averaged reduction check.
//! - [`catalog`]: named example geometries and bundles.
//! - [`scenario`]: config-driven runs and report emission for the CLI.

pub mod catalog;
pub mod chart;
pub mod error;
pub mod fd;
pub mod kk;
pub mod lie;
pub mod mc;
pub mod quantum;
pub mod scenario;
pub mod tensor;

pub use chart::{Axis, ChartedMetric, CurvaturePack, SignConvention};
pub use error::{KkError, Result};
pub use fd::{FdOrder, FdScheme};
pub use kk::{DecompositionReport, KKBundle};
pub use lie::{GroupChart, HaarQuadrature, LieGroup, LieStructure};
pub use mc::{KernelEstimate, ReductionCheck, SdeSpec};
pub use quantum::{HamiltonianCoeffs, PhysicalParams, Representation};
