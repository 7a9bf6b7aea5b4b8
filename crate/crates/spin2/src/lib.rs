//! Partition functions of two-state spin systems with mixed-sign rational
//! parameters: an exact oracle, gadget realization, the sign-oracle min-cut
//! reduction, zero-free region tools, a truncated-log FPTAS and a Holant
//! MCMC estimator.

pub mod error;
pub mod num;
pub mod expbound;
pub mod graphcore;
pub mod exact;
pub mod gadgets;
pub mod ising;
pub mod hardness;
pub mod zerofree;
pub mod fptas;
pub mod holant;

pub use error::{Result, SpinError};
pub use graphcore::Multigraph;
pub use num::{CRat, Rat, SpinParams};
