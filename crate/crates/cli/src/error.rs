use thiserror::Error;

pub const EXIT_INPUT: i32 = 2;
pub const EXIT_STATISTICAL: i32 = 3;
pub const EXIT_CONFIG: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    /// Malformed input file; `row` is 1-based and counts the header.
    #[error("{}{message}", row.map(|r| format!("row {r}: ")).unwrap_or_default())]
    Parse { row: Option<usize>, message: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] randex::Error),
}

impl CliError {
    pub fn parse(row: impl Into<Option<usize>>, message: impl Into<String>) -> Self {
        CliError::Parse { row: row.into(), message: message.into() }
    }

    pub fn exit_code(&self) -> i32 {
        use randex::Error as E;
        match self {
            CliError::Parse { .. } | CliError::Io { .. } => EXIT_INPUT,
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Core(e) if e.is_statistical() => EXIT_STATISTICAL,
            CliError::Core(
                E::UnknownScenario(_) | E::UnknownExample(_) | E::UnknownStatistic(_) | E::InvalidConfig(_),
            ) => EXIT_CONFIG,
            CliError::Core(_) => EXIT_INPUT,
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
