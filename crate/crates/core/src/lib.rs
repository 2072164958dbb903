pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod experiment;
pub mod model;
pub mod optimizer;
pub mod payoff;
pub mod success;

pub use error::{Error, Result};
