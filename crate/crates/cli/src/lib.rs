//! Command-line front end: configuration, file formats and the `plan`,
//! `gen` and `eval` commands.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
