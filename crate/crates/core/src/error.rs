use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("invalid genome: {0}")]
    InvalidGenome(String),

    #[error("config error in `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("population has {genomes} genomes but the world holds {agents} agents")]
    PopulationMismatch { genomes: usize, agents: usize },

    #[error("no statistics to summarize")]
    EmptyStats,

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
