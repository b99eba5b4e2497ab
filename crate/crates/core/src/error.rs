use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid walk: {0}")]
    InvalidWalk(String),

    #[error("could not parse walk token {token:?}: {reason}")]
    WalkSyntax { token: String, reason: String },

    #[error("{what} = {value} exceeds the configured cap of {cap}")]
    CapExceeded {
        what: &'static str,
        value: u128,
        cap: u128,
    },

    #[error("invalid chain spec: {0}")]
    InvalidSpec(String),

    #[error("angles violate the tuning relation at junction {junction} (residual {residual:e})")]
    Detuned { junction: usize, residual: f64 },

    #[error("parameter out of domain: {0}")]
    Domain(String),

    #[error("state has dimension {got}, operator has dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("eigensolver did not converge after {restarts} restarts (best residual {residual:e})")]
    NonConvergence { restarts: usize, residual: f64 },

    #[error("could not find tuned angles: {0}")]
    AngleGeneration(String),

    #[error("Schmidt grouping ambiguity: {0}")]
    GroupingAmbiguity(String),

    #[error("degenerate fit input: {0}")]
    DegenerateFit(String),

    #[error("plan error: {0}")]
    Plan(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    TomlDe(#[from] toml::de::Error),

    #[error(transparent)]
    TomlSer(#[from] toml::ser::Error),
}

impl Error {
    /// True for errors caused by bad input (as opposed to a numerical or I/O failure).
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidWalk(_)
                | Error::WalkSyntax { .. }
                | Error::CapExceeded { .. }
                | Error::InvalidSpec(_)
                | Error::Detuned { .. }
                | Error::Domain(_)
                | Error::DimensionMismatch { .. }
                | Error::DegenerateFit(_)
                | Error::Plan(_)
                | Error::TomlDe(_)
        )
    }
}
