pub mod adversarial;
pub mod bspline;
pub mod cli;
pub mod domain;
pub mod dyadic;
pub mod error;
pub mod functions;
pub mod indexkit;
pub mod multiscale;
pub mod polylag;
pub mod quadrature;
pub mod recovery;
pub mod selftest;
pub mod smoothness;

pub use error::{Error, Result};
