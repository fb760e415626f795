//! Unified Pauli-measurement framework: measurement schemes (l1 sampling,
//! LDF grouping, uniform and locally-biased classical shadows, derandomized
//! shadows), their estimators and variances, nonlinear shadow estimators
//! (purity, PT-moments) and a dense density-matrix simulator used both for
//! data generation and as a brute-force oracle.

pub mod error;
pub mod estimators;
pub mod experiments;
pub mod io;
pub mod pauli;
pub mod schemes;
pub mod shadows;
pub mod sim;
mod sum;

pub use error::{Error, Result};
pub use estimators::{Aggregator, EstimateReport, ShotRecord};
pub use pauli::{Letter, PauliString, Phase, PhasedPauli, WeightedPauliSum};
pub use schemes::{BasisDistribution, MeasurementPlan, Scheme};
pub use shadows::{ShadowSet, Snapshot};
pub use sim::{DensityMatrix, SubsystemMask};
