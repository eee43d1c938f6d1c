//! Estimators and verdicts for ensemble statistics.

pub mod expectation;
pub mod fit;
pub mod ks;
pub mod moments;
pub mod momentum;
pub mod uncertainty;
pub mod verdict;

pub use expectation::{expectation_compare, operator_average, z_score, ExpectationComparison, Observable};
pub use fit::{fit_scaling, PowerLawFit};
pub use ks::{ks_band, ks_distance, ks_distance_with, ks_two_sample, ks_two_sample_band, BandLevel, CellDensity};
pub use momentum::{momentum_samples, MomentumSamples};
pub use uncertainty::{fisher_bound, uncertainty_product, FisherBound, UncertaintyReport};
pub use verdict::Verdict;
