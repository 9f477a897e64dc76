use std::fmt;
use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Solver(#[from] dgpml::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        use dgpml::Error as E;
        match self {
            Self::Config(_) | Self::Solver(E::Config(_)) => 2,
            Self::Solver(E::Mesh(_)) => 3,
            Self::Solver(E::Instability { .. } | E::NonFiniteInput { .. }) => 4,
            Self::Io { .. } | Self::Solver(E::Io(_)) => 5,
            Self::Solver(E::Shape(_)) => 1,
        }
    }
}

/// Where a command was when it failed; named in the `FAILED` marker.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Mesh,
    Setup,
    Run,
    Output,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Config => "config",
            Stage::Mesh => "mesh",
            Stage::Setup => "setup",
            Stage::Run => "run",
            Stage::Output => "output",
        })
    }
}

#[derive(Debug)]
pub struct Failure {
    pub stage: Stage,
    pub error: CliError,
}

pub trait AtStage<T> {
    fn at(self, stage: Stage) -> Result<T, Failure>;
}

impl<T, E: Into<CliError>> AtStage<T> for Result<T, E> {
    fn at(self, stage: Stage) -> Result<T, Failure> {
        self.map_err(|e| Failure {
            stage,
            error: e.into(),
        })
    }
}
