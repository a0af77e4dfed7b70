use std::fmt;

/// Failure carrying the process exit code it maps to.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_SAMPLER: i32 = 4;
pub const EXIT_IO: i32 = 1;

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError {
            code: EXIT_CONFIG,
            message: msg.into(),
        }
    }

    pub fn data(msg: impl Into<String>) -> Self {
        CliError {
            code: EXIT_DATA,
            message: msg.into(),
        }
    }

    pub fn sampler(msg: impl Into<String>) -> Self {
        CliError {
            code: EXIT_SAMPLER,
            message: msg.into(),
        }
    }

    pub fn io(msg: impl Into<String>) -> Self {
        CliError {
            code: EXIT_IO,
            message: msg.into(),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<ballpit::Error> for CliError {
    fn from(e: ballpit::Error) -> Self {
        use ballpit::Error as E;
        let code = match &e {
            E::InvalidConfig(_) | E::InvalidPrior(_) | E::NoConjugateForm { .. } => EXIT_CONFIG,
            E::InvalidData(_) => EXIT_DATA,
            E::SupportExhausted(_)
            | E::NonFiniteGradient(_)
            | E::OutOfSupport(_)
            | E::InsufficientData(_)
            | E::NoConvergence { .. }
            | E::Ball { .. } => EXIT_SAMPLER,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
