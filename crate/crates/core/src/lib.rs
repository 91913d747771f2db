pub mod analysis;
pub mod control;
pub mod document;
pub mod embedded_model;
pub mod error;
pub mod harness;
pub mod noise_estimator;
pub mod plant;
pub mod statespace;

pub use error::{EmcError, Result};
