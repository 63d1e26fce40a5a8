use thiserror::Error;

/// Errors raised by model construction, simulation and stability analysis.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("platoon layout has {actual} vehicles but the ring holds {expected}")]
    SizeMismatch { expected: usize, actual: usize },

    #[error("communication delay {t_d} s is not an integer multiple of the time step {dt} s")]
    DelayNotAligned { t_d: f64, dt: f64 },

    #[error("could not draw an ordered initial state: vehicle {vehicle} overlaps its predecessor after {retries} draws")]
    InitialOrdering { vehicle: usize, retries: usize },

    #[error(
        "collision at t = {time} s: vehicle {behind} reached vehicle {ahead} (headway {headway} m)"
    )]
    Collision {
        behind: usize,
        ahead: usize,
        time: f64,
        headway: f64,
    },

    #[error("non-finite acceleration for vehicle {vehicle} at step {step}")]
    NonFinite { vehicle: usize, step: usize },

    #[error("eigenvalue solver did not converge on a {dim}x{dim} block")]
    EigenSolver { dim: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
