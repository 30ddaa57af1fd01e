//! Front end for the `blowups` library: configuration, rendering, figure
//! regeneration, invariant suites and the command line.

pub mod cli;
pub mod config;
pub mod figures;
pub mod render;
pub mod verify;

pub use cli::run;
