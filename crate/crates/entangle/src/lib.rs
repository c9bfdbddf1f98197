pub mod bath;
pub mod driver;
pub mod equilibrium;
pub mod error;
pub mod quad;
pub mod gaussian;
pub mod markov;
pub mod ode;
pub mod qle;
pub mod specfun;

pub use error::{Error, Result};
