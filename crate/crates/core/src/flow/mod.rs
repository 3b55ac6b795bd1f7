//! Gradient flows of potentials in the Euclidean metric and in the Kähler
//! metric of the Levi form, with monotonicity, arc length and Łojasiewicz
//! accounting.

mod integrate;
mod lojasiewicz;

pub use integrate::{
    integrate_flow, velocity, FlowConfig, FlowSample, FlowTrajectory, Metric, Termination,
    Velocity, KAHLER_MIN_EIGENVALUE,
};
pub use lojasiewicz::{
    convergence_report, estimate_lojasiewicz, ConvergenceReport, LojasiewiczEstimate, RATIO_WINDOW,
    TAIL_MIN,
};
