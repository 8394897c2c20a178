//! Robust fundamental lemma toolkit.
//!
//! Quantitative persistency of excitation for input signals, certified lower
//! bounds on the smallest singular value of input/state data matrices,
//! least-squares identification, and a receding-horizon tracking controller
//! built on identified one-step predictors.
//!
//! Singular values are indexed in ascending order: `σ₁` is the smallest.

pub mod dpc;
pub mod error;
pub mod excitation;
pub mod experiments;
pub mod io;
pub mod linalg;
mod optim;
pub mod plot;
pub mod rng;
pub mod robustness;
pub mod signals;
pub mod simulate;
pub mod sysid;

pub use dpc::{predict_one_step, receding_horizon, solve_horizon, ClosedLoopRun, DpcConfig, HorizonController, HorizonSolution};
pub use error::{Error, Result};
pub use excitation::{design_input, gaussian_input, pe_check, scale_input, ExcitationReport};
pub use linalg::{Matrix, SingularSpectrum, Vector};
pub use robustness::{
    build_m, certified_delta, certify, estimate_rho0, interlacing_gap, required_pe_level, sigma_theta, theta_z,
    ExtendedDirection, LtiSystem, Rho0Estimate, Rho0Options, RobustnessCertificate,
};
pub use signals::{hankel, stack_state_input, Signal};
pub use simulate::{simulate, NoiseModel, TrajectoryDataset};
pub use sysid::{error_bound, ls_estimate, ErrorBound, PredictorModel};
