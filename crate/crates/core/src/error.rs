use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid design: {0}")]
    InvalidDesign(String),

    #[error("assignment does not match design: {0}")]
    InvalidAssignment(String),

    #[error("{count} assignments exceed the enumeration cap of {cap}")]
    CapExceeded { count: String, cap: u64 },

    #[error("assignment count {0} does not fit in 64 bits")]
    Overflow(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("need N > J for residual degrees of freedom (N = {n}, J = {arms})")]
    DegreesOfFreedom { n: usize, arms: usize },

    #[error("residual sum of squares is zero; F is undefined")]
    ZeroResidual,

    #[error("group {group} has zero sample variance")]
    ZeroGroupVariance { group: usize },

    #[error("group {group} has {size} unit(s); at least 2 are required")]
    GroupTooSmall { group: usize, size: usize },

    #[error("statistic requires exactly {expected} treatment arms, found {found}")]
    WrongArity { expected: usize, found: usize },

    #[error("total sample variance is zero")]
    ZeroTotalVariance,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("column means differ by {max_diff:e}; the weak null does not hold")]
    NotNeymanNull { max_diff: f64 },

    #[error("potential outcomes under arm {group} have zero variance")]
    ZeroVariance { group: usize },

    #[error("Jacobi iteration did not converge within {sweeps} sweeps")]
    EigenFailure { sweeps: usize },

    #[error("numerical check failed: {0}")]
    Numerical(String),

    #[error("unknown statistic `{0}`")]
    UnknownStatistic(String),

    #[error("unknown example `{0}`")]
    UnknownExample(String),

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("replicate {index}: {source}")]
    Replicate { index: usize, source: Box<Error> },
}

impl Error {
    /// True for errors caused by the data violating a statistic's or
    /// formula's preconditions, as opposed to malformed inputs or
    /// configuration.
    pub fn is_statistical(&self) -> bool {
        if let Error::Replicate { source, .. } = self {
            return source.is_statistical();
        }
        matches!(
            self,
            Error::DegreesOfFreedom { .. }
                | Error::ZeroResidual
                | Error::ZeroGroupVariance { .. }
                | Error::GroupTooSmall { .. }
                | Error::WrongArity { .. }
                | Error::ZeroTotalVariance
                | Error::NotNeymanNull { .. }
                | Error::ZeroVariance { .. }
                | Error::CapExceeded { .. }
                | Error::EigenFailure { .. }
                | Error::Numerical(_)
        )
    }
}
