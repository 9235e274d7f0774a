use std::fmt;
use std::path::Path;

/// A command failure and the exit status it maps to.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags or configuration; exit status 1.
    Usage(String),
    /// Unreadable or malformed input; exit status 2.
    Data(String),
    /// Non-finite values or failed gradient checks; exit status 3.
    Numerical(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::Numerical(_) => 3,
        }
    }

    pub fn data(err: impl Into<macbig::Error>) -> Self {
        Failure::from(err.into())
    }

    /// Wraps an I/O error with the path it concerns.
    pub fn io(path: &Path) -> impl FnOnce(std::io::Error) -> Failure + '_ {
        move |e| Failure::Data(format!("{}: {e}", path.display()))
    }
}

impl From<macbig::Error> for Failure {
    fn from(err: macbig::Error) -> Self {
        match err {
            macbig::Error::NonFiniteLoss(_) => Failure::Numerical(err.to_string()),
            _ => Failure::Data(err.to_string()),
        }
    }
}

impl From<macbig::model::CheckpointError> for Failure {
    fn from(err: macbig::model::CheckpointError) -> Self {
        Failure::Data(format!("{} ({})", err, err.code()))
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::Numerical(m) => f.write_str(m),
        }
    }
}

impl std::error::Error for Failure {}
