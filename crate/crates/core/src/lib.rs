//! Traffic scheduling and cycle-level simulation for mesh-connected tiled
//! DNN accelerators.

pub mod error;
pub mod hwconfig;
pub mod metrics;
pub mod model;
pub mod routing;
pub mod schedule;
pub mod sim;
pub mod traffic;
pub mod workload_file;

pub use error::{Error, Result};
