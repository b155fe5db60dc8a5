use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] fluctuon::Error),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    /// Process exit status: 2 config, 3 I/O, 4 accuracy, 5 non-convergence.
    pub fn exit_code(&self) -> u8 {
        use fluctuon::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Core(e) => match e {
                E::Domain(_) | E::InvalidInput(_) | E::Parse { .. } => 2,
                E::Io { .. } => 3,
                E::Accuracy { .. } => 4,
                E::NonConvergence { .. } => 5,
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_are_distinct_per_class() {
        let accuracy = fluctuon::Error::Accuracy {
            what: "q".into(),
            best_estimate: 0.0,
            error_estimate: 1.0,
        };
        let stuck = fluctuon::Error::NonConvergence {
            what: "nm".into(),
            iterations: 3,
        };
        let io = CliError::Io {
            path: "x".into(),
            source: std::io::Error::other("gone"),
        };
        let codes = [
            CliError::config("bad").exit_code(),
            io.exit_code(),
            CliError::from(accuracy).exit_code(),
            CliError::from(stuck).exit_code(),
        ];
        assert_eq!(codes, [2, 3, 4, 5]);
        assert_eq!(
            CliError::from(fluctuon::Error::Domain("d".into())).exit_code(),
            2
        );
    }
}
