//! Optimal proportional reinsurance and investment for an insurer whose claims
//! arrive as a Cox process driven by a diffusion stochastic factor.
//!
//! The crate is organised around the objects of the control problem:
//!
//! - [`models`]: coefficient functions, claim-size laws and their
//!   exponentially weighted moments, and hypothesis validation.
//! - [`paths`]: seeded Euler simulation of the factor, the intensity, the
//!   risky asset and marked claim arrivals.
//! - [`premium`]: reinsurance premium principles and their `u`-derivatives.
//! - [`reinsurance`]: the retention problem `sup_u Ψ^u`, region
//!   classification, bisection on the first-order condition and the explicit
//!   exponential-claim expressions.
//! - [`investment`]: Monte Carlo Feynman–Kac estimation of `g` and the optimal
//!   amount invested in the risky asset.
//! - [`valuation`]: wealth simulation under feedback strategies, the value
//!   function and the variance decomposition of reinsured losses.

pub mod error;
pub mod investment;
pub mod models;
pub mod paths;
pub mod premium;
pub mod quad;
pub mod reinsurance;
pub mod rng;
pub mod scenario;
pub mod stats;
pub mod valuation;

pub use error::{Error, Result};
pub use scenario::Scenario;
