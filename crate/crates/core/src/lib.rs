//! Volatility estimation and evaluation.
//!
//! Historical sample-variance and GARCH(2,1) forecasts are formed on a
//! monthly schedule of trailing windows and scored against the realized
//! volatility of the following month. Option-implied variance comes from
//! Black-Scholes inversion or from the strike integral of out-of-the-money
//! prices.

pub mod error;
pub mod evaluate;
pub mod garch;
pub mod historical;
pub mod implied;
pub mod ingest;
mod optim;
pub mod pipeline;
pub mod report;
pub mod schedule;
pub mod stats;
pub mod synthetic;
pub mod types;

pub use error::{Error, ErrorClass, Result};
