//! Exact laws of discrete-time renewal processes stopped by an independent,
//! possibly defective, absorbing time, the lattice walks they drive, and the
//! Monte Carlo machinery used to check them.

pub mod distributions;
pub mod error;
pub mod gf_series;
pub mod lattice_walk;
pub mod montecarlo;
pub mod ness;
pub mod quadrature;
pub mod renewal;
pub mod stopped;

pub use distributions::{ExtendedTime, WaitingLaw};
pub use error::{Error, Result};
pub use gf_series::CoeffSeries;
