use thiserror::Error;

#[derive(Debug, Error)]
pub enum HispError {
    #[error("numeric domain error: {0}")]
    NumericDomain(String),

    #[error("observation ({range:.3} m, {bearing:.5} rad) lies outside the sensor region")]
    OutOfBounds { range: f64, bearing: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("instance too large for exact enumeration: {0}")]
    InstanceTooLarge(String),

    #[error("degenerate association table: {0}")]
    DegenerateTable(String),

    #[error("duplicate observation id {0}")]
    DuplicateObservation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, HispError>;
