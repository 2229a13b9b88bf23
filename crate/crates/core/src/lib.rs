//! Anytime-valid weighted likelihood-ratio confidence sequences.

pub mod bandit;
pub mod baselines;
pub mod confidence;
pub mod config;
pub mod error;
pub mod estimators;
pub mod kernel;
pub mod linalg;
pub mod loss;
pub mod models;
pub mod oracles;
pub mod output;
pub mod selftest;
pub mod solver;
pub mod ucb;

pub use error::{Error, Result};
pub use linalg::{Matrix, Vector};
