use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("graph is not connected after {attempts} attempts")]
    Disconnected { attempts: usize },

    #[error("mean recursion is unstable: rho(B) = {rho_b:.6}")]
    MeanUnstable { rho_b: f64 },

    #[error("mean-square recursion is unstable: rho(F) = {rho_f:.6}")]
    MeanSquareUnstable { rho_f: f64 },

    #[error("series did not converge after {terms} terms (partial sum {partial})")]
    SeriesNotConverged { terms: usize, partial: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
