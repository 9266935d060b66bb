//! File formats, configuration and experiment drivers around `isocap-core`.

pub mod config;
pub mod error;
pub mod experiments;
pub mod io;
pub mod ledger;
pub mod stats;
pub mod verify;

pub use error::{LabError, Result};
