use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("degenerate energy shell: |p| = 0")]
    DegenerateShell,
    #[error("no scattering: total rate vanishes on this shell")]
    NoScattering,
    #[error("configuration error: {0}")]
    Configuration(String),
    #[error("numerical error: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
