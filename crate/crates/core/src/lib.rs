//! Numerical toolkit for the spin-1 Gross-Pitaevskii equation
//! `i Q_t + Q_xx + 2 Q Q^dagger Q = 0` with symmetric 2x2 potential `Q`.

pub mod asymptotics;
pub mod error;
pub mod evolver;
pub mod field;
pub mod harness;
pub mod linalg;
pub mod pcf;
pub mod scattering;
pub mod soliton;
pub mod spectral;

pub use error::{Error, Result};
