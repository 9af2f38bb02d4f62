//! Neural-network quantum states for many-body Bell operators.
//!
//! A restricted Boltzmann machine is trained by stochastic reconfiguration to minimize
//! the expectation of a Bell operator; exact diagonalization and brute-force classical
//! bounds serve as oracles.

pub mod basis;
pub mod bell;
pub mod ed;
pub mod error;
pub mod estimator;
pub mod linalg;
pub mod pauli;
pub mod rbm;
pub mod sampler;
pub mod scalar;
pub mod sr;

pub use basis::Basis;
pub use bell::{BellInequality, Measurement, MeasurementAssignment};
pub use error::{Error, Result};
pub use estimator::EstimateRecord;
pub use pauli::{Axis, PauliString, SpinConfig};
pub use rbm::{Checkpoint, SchemeKind, TyingScheme};
pub use sampler::{MoveKind, SamplerConfig};
pub use scalar::{Real, C};
pub use sr::{LearnCurve, SolverKind, SrConfig};

/// Double-precision RBM parameters.
pub type Rbm = rbm::RbmParams<f64>;
/// Double-precision weighted Pauli sum.
pub type Operator = pauli::WeightedPauliSum<f64>;
/// Double-precision hidden-unit cache.
pub type Lookup = rbm::LookupState<f64>;
/// Double-precision exact-diagonalization result.
pub type EdResult = ed::EdResult<f64>;
