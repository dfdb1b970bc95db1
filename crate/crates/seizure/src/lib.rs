//! Seizure detection with binary hyperdimensional prototypes: feature
//! extraction, EDF/CSV input, dataset construction, cross-validation and
//! the experiment command line.

pub mod cli;
pub mod config;
pub mod error;
pub mod dataio;
pub mod features;
pub mod harness;
pub mod pipeline;

pub use error::{Error, Result};
