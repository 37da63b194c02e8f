//! Estimating the number of hidden states of a nonparametric hidden Markov
//! model from the spectrum of a kernel pair operator.

pub mod error;
pub mod estimator;
pub mod harness;
pub mod io;
pub mod kernels;
pub mod operator;
pub mod quadrature;
pub mod sim;
pub mod special;
pub mod spectral;

pub use error::{Error, Result};
