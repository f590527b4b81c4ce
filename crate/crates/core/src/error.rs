use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("could not place UE {ue} at the minimum distance after {attempts} attempts")]
    DegenerateGeometry { ue: usize, attempts: usize },

    #[error("Ψ for UE {ue} is numerically singular (condition number {condition:.3e})")]
    SingularCovariance { ue: usize, condition: f64 },

    #[error("bit budget {b_tot} cannot give every one of {antennas} antennas at least one bit")]
    BudgetTooSmall { b_tot: i64, antennas: usize },

    #[error("UE {0} has zero MR gain, the SINR program is degenerate")]
    DegenerateUe(usize),

    #[error("geometric program is infeasible: {0}")]
    Infeasible(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("campaign failed: {0}")]
    Campaign(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
