use alloc::string::String;

/// Errors raised by the samplers, constants, statistics and oracles.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid dimension {0}: must be at least {1}")]
    InvalidDimension(usize, usize),
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("invalid input: {0}")]
    InvalidInput(&'static str),
    #[error("{what} is undefined at {value}")]
    Domain { what: &'static str, value: f64 },
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("degenerate variance {0}: the limit law requires a positive variance")]
    DegenerateVariance(f64),
    #[error("unsupported: {0}")]
    Unsupported(&'static str),
    #[error("integer overflow computing {0}")]
    Overflow(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn check_param(
    name: &'static str,
    value: f64,
    ok: bool,
    reason: &'static str,
) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason,
        })
    }
}
