//! Nonorthogonal spectrum sharing between seller and buyer mobile network
//! operators: Poisson network sampling, expected-rate analysis, operator
//! economics and a constrained stochastic successive convex approximation
//! optimizer for joint power control and sub-band leasing.

pub mod channel;
pub mod cssca;
pub mod economics;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod rng;
pub mod subsolver;
pub mod quadrature;
pub mod rate_analysis;
pub mod units;

pub use channel::{NetworkSample, SellerPowerVector, SharingMatrix};
pub use error::{Error, Result};
pub use geometry::{Mno, NetworkConfig};
