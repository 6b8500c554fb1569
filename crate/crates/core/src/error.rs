use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("coherent precoding requires the cooperative skipping scheme")]
    CoherentWithoutCoop,

    #[error("interference cancellation is undefined for the best-connected scheme")]
    IcOnBestConnected,

    #[error("coherent scheme is simulation-only")]
    CoherentNotAnalytic,

    #[error("negative distance {0} km")]
    NegativeDistance(f64),

    #[error("too few base stations in the simulation window: found {found}, need 3")]
    TooFewPoints { found: usize },

    #[error("numerical integration did not converge: {what}")]
    NonConvergence { what: String },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    /// True for failures of the numerical machinery rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NonConvergence { .. })
    }
}
