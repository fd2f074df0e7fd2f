//! Long-time statistics of a stroboscopically monitored qubit.
//!
//! A qubit hops between two sites and is coupled to a detector qubit at a
//! fixed period `T`. Each measurement either clicks or not, and the qubit
//! state is updated by one of two Kraus matrices. Post-measurement states are
//! attracted to a great circle of the Bloch sphere (the GC), parametrized by
//! a single angle `θ ∈ [−π, π)`. This crate computes the time-averaged angle
//! distribution on the GC with Monte-Carlo trajectories and with a
//! discretized master equation, and characterizes it with localization,
//! fractality and ergodicity indicators.

pub mod distribution;
pub mod ergodicity;
pub mod error;
pub mod indicators;
pub mod maps;
pub mod master;
pub mod oracles;
pub mod special;
pub mod sweep;
pub mod trajectory;

pub use distribution::DiscretizedDistribution;
pub use ergodicity::{analyze_ergodicity, ErgodicityReport, InvariantSubset};
pub use error::{Error, Result};
pub use indicators::{compute_indicators, IndicatorRecord};
pub use maps::{
    apply_kraus, born_probabilities, eigenangles, gc_probability, kraus_matrices, theta_inverse, theta_map,
    theta_map_derivative, BlochState, KrausPair, Outcome, SetupParams,
};
pub use master::{build_markov, power_iterate, SolveReport, SparseMarkov};
pub use special::{classify, AnalyticADF, SpecialCaseTag, SpecialKind};
pub use sweep::{run_cross_section, run_grid, run_point, GridPointResult, Mode, SweepConfig};
pub use trajectory::{simulate, TrajectoryConfig, TrajectoryResult};
