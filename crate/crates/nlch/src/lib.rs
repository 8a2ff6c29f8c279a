//! Solver for a nonlocal Cahn-Hilliard-type phase separation system.
//!
//! The system couples a chemical potential `mu` and an order parameter
//! `rho` through
//!
//! ```text
//! (1 + 2 g(rho)) d/dt mu + mu g'(rho) d/dt rho - lap mu = 0
//! d/dt rho + xi + pi(rho) + B[rho] = mu g'(rho),   xi in beta(rho)
//! ```
//!
//! on a box with zero-flux boundary conditions for `mu`, where `beta`
//! is a maximal monotone graph (the singular part of a double-well
//! potential), `pi` a Lipschitz perturbation, `g` a concave coupling
//! function, and `B` a causal nonlocal operator (spatial or temporal
//! convolution against a weakly singular kernel).
//!
//! The solver follows the constructive splitting: the order-parameter
//! equation is solved by Picard iteration of its integral form at a
//! Yosida regularization level `eps`, driven along a decreasing `eps`
//! schedule; the chemical-potential equation is a uniformly parabolic
//! linear problem integrated implicitly with an M-matrix-preserving
//! step; an outer fixed-point loop couples the two maps. The a priori
//! bounds of the underlying theory (energy bound, nonnegativity,
//! causality, Lipschitz certification) are enforced as runtime checks.
//!
//! Everything is generic over the scalar type via [`Real`]; the crate
//! root exposes `f64` aliases for the common case. Value types are
//! immutable after construction and the solver entry points are pure,
//! so independent solves run concurrently without shared state (the
//! convergence study fans out over threads).

// `!(x > y)` in validation deliberately rejects NaN alongside
// out-of-range values; `x <= y` would accept NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// stencil and solver kernels index several slices by one cell or axis
// variable; enumerate chains over a single slice would obscure that
#![allow(clippy::needless_range_loop)]

pub mod coupled;
pub mod domain;
pub mod error;
pub mod kernel;
pub mod mu;
pub mod nonlocal;
pub mod potential;
pub mod rho;
pub mod scalar;

pub mod cli;
pub mod config;
pub mod report;
pub mod snapshot;

pub use coupled::{SolverParams, SystemConfig, SystemSolution};
pub use domain::{Domain, Field, Lp, Trajectory};
pub use error::{Error, Result};
pub use kernel::{AdmissibilityReport, KernelKind, KernelSpec};
pub use nonlocal::{NonlocalOp, OpForm};
pub use potential::{truncate, CouplingG, GraphKind, LipschitzPi, MonotoneGraph};
pub use scalar::Real;

/// `f64` instantiations of the core types.
pub type Domain64 = Domain<f64>;
pub type Field64 = Field<f64>;
pub type Trajectory64 = Trajectory<f64>;
pub type KernelSpec64 = KernelSpec<f64>;
pub type NonlocalOp64 = NonlocalOp<f64>;
pub type MonotoneGraph64 = MonotoneGraph<f64>;
pub type CouplingG64 = CouplingG<f64>;
pub type LipschitzPi64 = LipschitzPi<f64>;
pub type SystemConfig64 = SystemConfig<f64>;
pub type SystemSolution64 = SystemSolution<f64>;
pub type SolverParams64 = SolverParams<f64>;
