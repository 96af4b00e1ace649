pub mod adversary;
pub mod analysis;
pub mod config;
pub mod effort;
pub mod error;
pub mod idset;
pub mod overlay;
pub mod protocol;
pub mod rng;
pub mod rules;
pub mod runner;
pub mod sim;

pub use error::{Error, Result};
