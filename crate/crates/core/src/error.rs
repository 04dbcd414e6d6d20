use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid config value for `{key}`: {reason}")]
    Config { key: String, reason: String },

    #[error("unknown config key `{0}`")]
    UnknownKey(String),

    #[error("archive is empty")]
    EmptyArchive,

    #[error("training set is empty")]
    EmptyTrainingSet,

    #[error("descriptor is not finite: ({0}, {1})")]
    NonFiniteDescriptor(f64, f64),

    #[error("creature has no modules")]
    EmptyCreature,

    #[error("terrain must have {expected} heights, got {got}")]
    TerrainLength { expected: usize, got: usize },

    #[error("invalid genome hex: {0}")]
    GenomeHex(String),

    #[error("cppn is not a valid feed-forward graph: {0}")]
    InvalidCppn(String),

    #[error("layer shape mismatch: {0}")]
    Shape(String),

    #[error("{what} not found at {path}")]
    Missing { what: &'static str, path: PathBuf },

    #[error("malformed {what} at {path}: {reason}")]
    Parse {
        what: &'static str,
        path: PathBuf,
        reason: String,
    },

    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn config(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            key: key.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
