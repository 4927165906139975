use std::path::PathBuf;

use dicke_core::DickeError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error in `{field}`{}: {reason}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    Config {
        field: String,
        reason: String,
        line: Option<usize>,
    },

    #[error("cannot parse {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Model(DickeError),

    #[error("verification failed: {0}")]
    Verification(String),
}

impl CliError {
    pub fn config(field: &str, reason: impl Into<String>) -> Self {
        CliError::Config {
            field: field.to_string(),
            reason: reason.into(),
            line: None,
        }
    }

    /// Attach the line where a config error's key is set in `source`.
    pub fn locate(self, source: &str) -> Self {
        match self {
            CliError::Config { field, reason, line: None } => {
                let line = source.lines().position(|l| {
                    l.trim_start()
                        .strip_prefix(field.as_str())
                        .is_some_and(|rest| rest.trim_start().starts_with('='))
                });
                CliError::Config {
                    field,
                    reason,
                    line: line.map(|i| i + 1),
                }
            }
            other => other,
        }
    }

    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }

    /// 2 for bad input, 3 for numerical aborts, 4 for failed verification.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } | CliError::Parse { .. } | CliError::Io { .. } => 2,
            CliError::Model(e) => match e {
                DickeError::InvalidParameter { .. }
                | DickeError::Superluminal { .. }
                | DickeError::ZeroCoupling
                | DickeError::TooLarge { .. }
                | DickeError::InvalidState(_)
                | DickeError::NotPermutationSymmetric { .. }
                | DickeError::TimeGrid(_) => 2,
                _ => 3,
            },
            CliError::Verification(_) => 4,
        }
    }
}

impl From<DickeError> for CliError {
    fn from(e: DickeError) -> Self {
        CliError::Model(e)
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_errors_point_at_their_line() {
        let src = "solver = \"hp\"\n  n_detectors= 5\nn_detectors_extra = 1\n";
        let e = CliError::config("n_detectors", "too many").locate(src);
        assert_eq!(e.to_string(), "config error in `n_detectors` (line 2): too many");
        let missing = CliError::config("lambda", "missing").locate(src);
        assert_eq!(missing.to_string(), "config error in `lambda`: missing");
        assert_eq!(missing.exit_code(), 2);
    }

    #[test]
    fn exit_codes_by_kind() {
        assert_eq!(CliError::from(DickeError::ZeroCoupling).exit_code(), 2);
        assert_eq!(CliError::from(DickeError::Truncation { population: 1.0, time: 0.0 }).exit_code(), 3);
        assert_eq!(CliError::Verification("x".into()).exit_code(), 4);
    }
}
