//! Numerical study of coherence stored in the ground state and a local
//! energy minimum of a pseudo-spin cluster.
//!
//! The pipeline: [`cluster`] assembles the Ising Hamiltonian with transverse
//! tunneling, [`spectrum`] diagonalizes it and labels dressed eigenstates,
//! [`perturbation`] provides independent perturbative estimates,
//! [`transition`] evaluates golden-rule elements and the size-scaling bound,
//! [`dynamics`] runs noisy trajectories, and [`sweep`] drives parameter
//! grids. [`io`] reads run configurations and writes CSV.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cluster;
pub mod dynamics;
pub mod error;
pub mod io;
pub mod perturbation;
pub mod spectrum;
mod stats;
pub mod sweep;
pub mod transition;

pub use cluster::{
    apply_sigma_x, apply_sigma_z, build_hamiltonian, classical_energy, hamming_distance, ClusterParams,
    HamiltonianMatrix, SpinConfig, MAX_SPINS,
};
pub use dynamics::{
    evolve_superposition, rate_vs_prediction, Calibration, CoherenceTrace, RateComparison, TrajectoryConfig, Verdict,
};
pub use error::{Error, ErrorCategory, Result};
pub use perturbation::{multiphoton_path_sum, rs_amplitude_first_order, scaling_exponent, PathSumResult};
pub use spectrum::{
    diagonalize, dress, find_local_minima, overlap_decay, typical_level_spacing, DressedState, EigenSystem,
    LandscapeReport, LocalMinimum, OverlapDecay,
};
pub use stats::{linear_fit, LinearFit};
pub use sweep::{fit_size_scaling, run_sweep, Channels, Family, ScalingFit, SweepColumn, SweepGrid, SweepRow};
pub use transition::{
    check_bound, lifetime_extension, matrix_element, BoundVerdict, CouplingSpec, NoiseModel, RateReport,
};

/// Crate version written into every CSV header.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
