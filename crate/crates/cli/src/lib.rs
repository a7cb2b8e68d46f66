//! Drivers for figure reproduction, validation and parameter sweeps.

pub mod commands;
pub mod comparison;
pub mod config;
pub mod svg;
pub mod validate;

pub use comparison::{ComparisonRow, CSV_HEADER};
pub use config::{Overrides, RunConfig};
