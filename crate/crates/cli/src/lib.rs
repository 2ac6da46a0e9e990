//! Command-line driver: TOML run configs, the `simulate`, `sweep`, `gates`
//! and `catalog` commands, and their CSV/SVG/manifest artifacts.

pub mod commands;
pub mod config;
pub mod output;

pub use config::RunConfig;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] qtransport::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    /// 2 config error, 3 constraint violation, 4 capacity guard, 1 other.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Core(qtransport::Error::Constraint(_)) => 3,
            CliError::Core(qtransport::Error::Capacity { .. }) => 4,
            CliError::Core(
                qtransport::Error::Syntax { .. } | qtransport::Error::Arity { .. } | qtransport::Error::InvalidArgument(_),
            ) => 2,
            _ => 1,
        }
    }
}
