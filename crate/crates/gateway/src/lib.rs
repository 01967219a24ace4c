//! Command-line front end and HTTP session server for the navigation
//! environment.

pub mod agent;
pub mod cli;
pub mod config;
pub mod play;
pub mod protocol;
pub mod server;
pub mod transcript;
