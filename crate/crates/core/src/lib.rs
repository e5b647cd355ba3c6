//! Diffusion LMS over networks whose nodes exchange data through noisy links.
//!
//! The crate has four layers:
//! [`network`] describes the graph and its statistics, [`rules`] builds
//! combination matrices, [`sim`] runs seeded Monte-Carlo experiments and
//! [`theory`] evaluates the closed-form steady-state predictions.
//! [`cli`] wires them into the `diffnet` command.

pub mod cli;
pub mod error;
pub mod format;
pub mod linalg;
pub mod network;
pub mod rules;
pub mod sim;
pub mod theory;

pub use error::{Error, Result};
