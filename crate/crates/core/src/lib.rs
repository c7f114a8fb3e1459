//! Point-cloud classification from orthogonal depth views, with a harness
//! for the training and evaluation protocols that surround it.
//!
//! The pipeline is: [`geometry`] builds and corrupts clouds, [`augment`]
//! perturbs them during training, [`projection`] renders depth stacks,
//! [`models`] classifies, and [`protocol`] trains, selects, votes and
//! reports. [`cli`] exposes each stage as a command.

pub mod augment;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod models;
pub mod projection;
pub mod protocol;
pub mod rng;

pub use error::{Error, Result};
