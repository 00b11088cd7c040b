pub mod config;
pub mod error;
pub mod grid;
pub mod phys;
pub mod scoring;
pub mod stability;
pub mod sweep;
pub mod topology;

pub use error::{Error, Result};
