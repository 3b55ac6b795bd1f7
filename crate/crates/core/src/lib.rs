//! Numerical laboratory for plurisubharmonic potentials on `C^d`.
//!
//! * [`expr`] symbolic potentials and Wirtinger calculus
//! * [`geometry`] complex gradients, Levi forms, real Hessians, strict
//!   plurisubharmonicity certificates, radial profiles
//! * [`symmetry`] compact linear group actions, Haar averaging, orbit
//!   dimensions, critical-locus confinement
//! * [`flow`] Euclidean and Kähler gradient flows with convergence reports
//! * [`moment`] moment maps on `C^2`, reduced maps on `P^1`, topological
//!   degree, gradient fibers
//! * [`report`] configuration, experiment orchestration, report artifacts

pub mod error;
pub mod expr;
pub mod flow;
pub mod geometry;
pub mod moment;
pub mod par;
pub mod point;
pub mod report;
pub mod rng;
pub mod solve;
pub mod symmetry;

pub use error::{Error, Result};
pub use expr::{parse_expression, Expr, PotentialField};
