//! Entanglement-forged VQE with tomography, CI-vector purification, quantum
//! subspace expansion and Dyall PT2, on a dense statevector simulator.
//!
//! The simulator core ([`pauli`], [`simcore`]) is generic over the float type;
//! the aliases below fix it to `f64`, which every chemistry layer uses.

pub mod analysis;
pub mod config;
pub mod det;
pub mod error;
pub mod fixtures;
pub mod forging;
pub mod hamio;
pub mod oracle;
pub mod pauli;
pub mod pipeline;
pub mod pt2;
pub mod purify;
pub mod rng;
pub mod scalar;
pub mod simcore;
pub mod subspace;
pub mod tomography;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Statevector = simcore::Statevector<f64>;
pub type Circuit = simcore::Circuit<f64>;
pub type Gate = simcore::Gate<f64>;
pub type QubitOperator = pauli::QubitOperator<f64>;

pub use det::{CIVector, DeterminantSpace, SectorHamiltonian};
pub use forging::{ForgedAnsatz, Preparation};
pub use hamio::{ActiveSpaceHamiltonian, SpinFactorizedHamiltonian};
pub use tomography::{BlochVector, DensityMatrix};
