use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("state space has {states} states, above the enumeration cap of {cap}")]
    StateSpaceTooLarge { states: u128, cap: u128 },

    #[error("mean-field drift is singular at the boundary for rho = {rho} < 1")]
    SingularDrift { rho: f64 },

    #[error("trajectory left the simplex by {violation:e} at t = {time}; reduce the step size")]
    StepSize { time: f64, violation: f64 },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("linear system is singular")]
    Singular,

    #[error("target blocking {target} is not reachable for a in [{lo}, {hi}]")]
    UnreachableTarget { target: f64, lo: f64, hi: f64 },

    #[error("numerical check failed: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            name,
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad input, false for numerical failures.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidArgument { .. }
                | Error::StateSpaceTooLarge { .. }
                | Error::UnreachableTarget { .. }
        )
    }
}
