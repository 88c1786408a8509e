//! Distributed quantum sensing of spatial fields in correlated noise.
//!
//! The crate builds decoherence-free subspaces (DFSs) for a line of
//! multi-level sensors, constructs entangled and separable sensing states,
//! evaluates quantum and classical Fisher information, and simulates the
//! parity-readout estimation statistics with seeded Monte Carlo sampling.
//!
//! Modules, roughly in dependency order:
//!
//! - [`fields`]: sensor layouts, field components and the noise matrix
//! - [`statespace`]: multi-level product basis, states and signal generators
//! - [`dfs`]: DFS enumeration, spectral ranges and optimal states
//! - [`channels`]: dephasing, amplitude damping and depolarizing maps
//! - [`metrology`]: Fisher information, SLD and the parity model
//! - [`estimation`]: shot sampling, the phase MLE and Monte Carlo campaigns
//! - [`optimize`]: CFI maximization over separable protocols
//! - [`tomography`]: simulated Pauli tomography and MLE reconstruction
//! - [`calib`]: dressed sensitivities, echo schedules and AC-Stark calibration
//! - [`scenario`]: configuration, presets and the runs behind the CLI

// Guards written as `!(x > 0.0)` also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calib;
pub mod channels;
pub mod constants;
pub mod dfs;
pub mod error;
pub mod estimation;
pub mod fields;
pub mod linalg;
pub mod metrology;
pub mod optimize;
pub mod scenario;
pub mod statespace;
pub mod tomography;

pub use error::{Error, Result};
pub use fields::{FieldComponent, NoiseMatrix, SensorLayout};
pub use statespace::{BasisState, DensityMatrix, DiagonalGenerator, PureState, SensorLevels};
