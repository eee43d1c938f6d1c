//! Stochastic trajectory model driven by a sign-fluctuating information
//! balance, with the field generators, classical references and statistical
//! verdicts needed to check it.

pub mod classical;
pub mod diff;
pub mod error;
pub mod field;
pub mod grid;
pub mod interp;
pub mod locality;
pub mod rng;
pub mod runner;
pub mod schrodinger;
pub mod stats;
pub mod stochastic;
pub mod system;

pub use error::{Error, Result};
pub use field::{polar_decompose, synthesize_wavefunction, FieldOps, PolarFields, WaveFunction};
pub use grid::{Axis, Boundary, SpatialGrid};
pub use system::{AxisPotential, ClassicalSystem};
