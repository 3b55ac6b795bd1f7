//! Moment maps of circle-invariant potentials on `C^2`, the reduced map on
//! `P^1`, its topological degree, and gradient fibers.

mod degree;
mod fiber;
mod field;
mod projective;

pub use degree::{
    area_degree, compute_degree, count_preimages, moment_degree, reduced_map, DegreeCertificate,
    DegreeOptions, Preimage, TargetCount, JACOBIAN_FLOOR, PREIMAGE_CLUSTER,
};
pub use fiber::{
    gradient_fiber, FiberCluster, FiberReport, FIBER_RESIDUAL, ISOLATION_RATIO, PHASE_TOLERANCE,
    PROBE_COUNT, PROBE_SCALE,
};
pub use field::{
    homotopy_positivity, induced_map, moment_map, sample_level_set, solve_ray, verify_hamiltonian,
    HomotopyCertificate, LevelPoint, LevelSet, MomentMapField, HAMILTONIAN_LIMIT, INVARIANCE_LIMIT,
    LEVEL_TOLERANCE,
};
pub use projective::{signed_spherical_area, Icosphere, QuotientPoint};
