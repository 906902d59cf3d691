//! Everything around the planner core that touches the outside world:
//! robot-description parsing, point-cloud file formats, synthetic scene
//! generation, result emission and the benchmark harness.
//!
//! The `surfplan` binary is a thin dispatcher over [`commands`].

pub mod cloud_io;
pub mod commands;
pub mod config;
pub mod report;
pub mod robot;
pub mod scene;
