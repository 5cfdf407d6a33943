//! Library surface of the command-line front end, split from the binary so
//! integration tests can run commands in-process.

pub mod commands;
pub mod config;
