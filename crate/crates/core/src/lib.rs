pub mod asymptotics;
pub mod error;
pub mod fixtures;
pub mod fredholm;
pub mod ode;
pub mod quadrature;
pub mod solver;
pub mod specfn;
pub mod tau;
pub mod verify;

pub use error::{Error, Result};
