use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Direction of arrival at or beyond endfire, where the ULA phase
    /// increment stops being invertible.
    #[error("direction {0} rad lies outside the array sector (-pi/2, pi/2)")]
    OutOfSector(f64),

    #[error("no reliable baseline carries signal")]
    NoSignal,

    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),

    /// Bearing geometry does not pin down a position. Carries the singular
    /// Fisher information matrix as `[xx, xy, yy]`.
    #[error("ill-conditioned bearing geometry (fim = {fim:?})")]
    IllConditioned { fim: [f64; 3] },
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
