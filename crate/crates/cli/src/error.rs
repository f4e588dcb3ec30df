use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),

    #[error("input error: {0}")]
    Input(String),

    #[error("verification failed: {0}")]
    Verify(String),

    #[error(transparent)]
    Model(#[from] twostage_core::Error),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 0 success, 2 usage, 3 input, 4 verification failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Input(_) | CliError::Model(_) | CliError::Io(_) => 3,
            CliError::Verify(_) => 4,
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(std::io::Error::other(e))
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub(crate) fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

pub(crate) fn input(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(usage("x").exit_code(), 2);
        assert_eq!(input("x").exit_code(), 3);
        assert_eq!(CliError::from(twostage_core::Error::Degenerate("x".into())).exit_code(), 3);
        assert_eq!(CliError::from(std::io::Error::other("x")).exit_code(), 3);
        assert_eq!(CliError::Verify("x".into()).exit_code(), 4);
    }
}
