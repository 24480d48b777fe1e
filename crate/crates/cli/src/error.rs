use thiserror::Error;
use wssus_core::Error as CoreError;

/// Exit status for configuration and validation failures.
pub const EXIT_CONFIG: i32 = 2;
/// Exit status for numerical failures.
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] CoreError),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error("config: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(CoreError::NotHermitian(_) | CoreError::Numerical(_)) => EXIT_NUMERICAL,
            _ => EXIT_CONFIG,
        }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::Config("x".into()).exit_code(), EXIT_CONFIG);
        assert_eq!(CliError::from(CoreError::NotSeparable(0.1)).exit_code(), EXIT_CONFIG);
        assert_eq!(
            CliError::from(CoreError::GridMismatch {
                left: "a".into(),
                right: "b".into()
            })
            .exit_code(),
            EXIT_CONFIG
        );
        assert_eq!(CliError::from(CoreError::Numerical("x".into())).exit_code(), EXIT_NUMERICAL);
        assert_eq!(CliError::from(CoreError::NotHermitian(1.0)).exit_code(), EXIT_NUMERICAL);
    }
}
