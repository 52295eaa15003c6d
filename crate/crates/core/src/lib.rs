mod banded;
pub mod error;
pub mod export;
pub mod field;
pub mod geometry;
pub mod limit_study;
pub mod mode_solver;
pub mod ode_oracle;
pub mod resonance;
pub mod specfun;

pub use error::{Error, Result};
