use thiserror::Error;

/// Errors raised while validating model parameters or evaluating an operation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("reward probability p must lie strictly inside (0, 1), got {0}")]
    InvalidProbability(f64),

    #[error("{name} must be at least {min}, got {value}")]
    CountTooSmall {
        name: &'static str,
        min: u64,
        value: u64,
    },

    #[error("{name} = {value} is outside the allowed range {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("index k = {k} is outside 0..={max}")]
    IndexOutOfRange { k: u64, max: u64 },

    #[error("resolved cost bound is negative ({0})")]
    NegativeBound(f64),

    #[error("episode exceeded the guard cap of {0} observations")]
    RunawayEpisode(u64),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
