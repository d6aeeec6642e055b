use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Input to the vee map was not skew-symmetric.
    #[error("malformed rotation algebra: matrix asymmetry {0:.3e} exceeds tolerance")]
    NotSkew(f64),
    /// A rotation or unit vector drifted too far from its manifold to be repaired.
    #[error("state left its manifold: {0}")]
    OffManifold(String),
    #[error("simulation diverged at t = {t:.4} s: {reason}")]
    Divergence { t: f64, reason: String },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
