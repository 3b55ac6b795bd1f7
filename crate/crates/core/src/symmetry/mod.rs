//! Compact linear group actions on `C^d`: Haar averaging, orbit dimensions,
//! fixed sets and the confinement of critical points of invariant fields.

mod action;
mod average;
mod confine;
mod orbit;
mod quadrature;

pub use action::{ActionKind, ActionSpec, CMatrix, GroupAction, GroupElement, ACTION_TOLERANCE};
pub use average::{haar_average, AveragedField};
pub use confine::{
    critical_confinement_experiment, ConfinementReport, CriticalCluster, COUNTEREXAMPLE,
    HYPOTHESIS_NOT_MET, INVARIANCE_LIMIT, NO_COUNTEREXAMPLE,
};
pub use orbit::{
    equivariance_check, fixed_set_distance, invariance_residual, orbit_dimension, InvarianceReport,
    OrbitInfo, RANK_FLOOR, RANK_TOLERANCE,
};
pub use quadrature::{gauss_legendre, QuadratureNode, QuadratureRule};
