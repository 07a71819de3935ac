pub mod commands;
pub mod config;
pub mod error;
pub mod exec;
pub mod idx;
pub mod pgm;
pub mod selftest;
pub mod weights;

pub use error::{Error, Result};
