//! Runner, transports, benchmarks and command-line front end for the
//! three-party link-prediction protocols.

pub mod bench;
pub mod config;
pub mod data;
pub mod run;
pub mod store;
pub mod tcp;
