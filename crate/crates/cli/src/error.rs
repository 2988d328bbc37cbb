use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),

    #[error("starvation at iteration {iteration}: {responded} of {required} workers responded")]
    Starvation {
        iteration: usize,
        responded: usize,
        required: usize,
    },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("verification failed: {0}")]
    Verify(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(pbgd_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Verify(_) | CliError::Io { .. } => 1,
            CliError::Config(_) => 2,
            CliError::Starvation { .. } => 3,
            CliError::Numerical(_) => 4,
            CliError::Core(e) => match e.root() {
                pbgd_core::Error::Starvation { .. } => 3,
                pbgd_core::Error::Numerical { .. } => 4,
                pbgd_core::Error::Io { .. } => 1,
                _ => 2,
            },
        }
    }

    pub fn io(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CliError {
        let path = path.into();
        move |source| CliError::Io { path, source }
    }
}

impl From<pbgd_core::Error> for CliError {
    fn from(e: pbgd_core::Error) -> Self {
        use pbgd_core::Error as E;
        match e {
            E::AtIteration { iteration, source } => match *source {
                E::Starvation { responded, required } => CliError::Starvation {
                    iteration,
                    responded,
                    required,
                },
                other => CliError::Core(E::AtIteration {
                    iteration,
                    source: Box::new(other),
                }),
            },
            E::Numerical { .. } => CliError::Numerical(e.to_string()),
            other => CliError::Core(other),
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
