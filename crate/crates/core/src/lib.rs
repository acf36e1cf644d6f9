//! Plug-in estimation of entropy and power sums of discrete distributions:
//! exact bias through Bernstein polynomials, closed-form risk bounds, moduli
//! of smoothness, and exact-enumeration / Monte Carlo risk engines.

pub mod bernstein;
pub mod bounds;
pub mod error;
pub mod estimators;
pub mod model;
pub mod moduli;
pub mod risklab;
pub mod special;

pub use error::{Error, Result};
