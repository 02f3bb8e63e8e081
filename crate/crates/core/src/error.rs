use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("config error: {0}")]
    Config(String),
    #[error("invalid datum: {0}")]
    InvalidDatum(String),
    #[error("valuation indeterminate below precision {prec}")]
    Indeterminate { prec: i64 },
    #[error("precision exhausted: {0}")]
    Precision(String),
    #[error("not a unit: {0}")]
    NotUnit(String),
    #[error("incompatible operands: {0}")]
    Incompatible(String),
    #[error("enumeration budget of {budget} candidates exceeded")]
    Budget { budget: u64 },
    #[error("window overflow: {0}")]
    WindowOverflow(String),
    #[error("no stabilization: {0}")]
    Stabilization(String),
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error("identity violated: {0}")]
    Identity(String),
}

impl Error {
    /// Process exit code for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidDatum(_) => 2,
            Error::Indeterminate { .. }
            | Error::Precision(_)
            | Error::NotUnit(_)
            | Error::Incompatible(_)
            | Error::Budget { .. }
            | Error::WindowOverflow(_)
            | Error::Stabilization(_) => 3,
            Error::Invariant(_) | Error::Identity(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
