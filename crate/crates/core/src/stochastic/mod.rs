//! Sign process, actual velocity, trajectory stepping, deviation sampling and
//! the information-balance residual.

pub mod action;
pub mod balance;
pub mod deviation;
pub mod ensemble;
pub mod initial;
pub mod params;
pub mod sign;
pub mod source;
pub mod velocity;

pub use action::{compute_da_step, compute_ds_step};
pub use balance::{
    information_balance_residual, predicted_single_sign_residual, sign_averaged_balance_residual,
    spatial_balance_residual, BalanceFrames, BalanceResidual,
};
pub use deviation::{sample_deviation, sample_deviations, DeviationSample};
pub use ensemble::{evolve_ensemble, Checkpoint, EnsembleConfig, PathRecord, TrajectoryEnsemble};
pub use initial::{sample_initial_positions, Sampling};
pub use params::ModelParams;
pub use sign::{step_sign, SignProcess};
pub use source::{state_matches_potential, AnalyticSource, FieldSource, RecordedSource, SolverSource};
pub use velocity::{actual_velocity, step_trajectory, ActualVelocity, TrajectoryState, VelocityField};
