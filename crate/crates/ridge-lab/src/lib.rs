//! Ridge regression with random design: exact spectral functionals, a
//! bounded synthetic design family, and a seeded Monte Carlo harness that
//! certifies the finite-sample risk bounds this crate implements.

pub mod error;
pub mod rng;

pub mod linalg;

pub mod model;

pub mod functionals;

pub mod synth;

pub mod harness;

pub mod config;
pub mod output;
pub mod cli;

pub use error::{Error, Result};
