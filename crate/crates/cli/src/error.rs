//! CLI error taxonomy mapped onto exit codes: configuration problems exit
//! with 2, numerical failures with 3, anything else with 1.

use std::fmt;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(targdes::Error),
    Io(std::io::Error),
}

impl CliError {
    /// Core errors split by provenance: shape/parameter problems are
    /// configuration mistakes, factorization and weight blow-ups are
    /// numerical failures.
    pub fn from_core(err: targdes::Error) -> CliError {
        use targdes::Error::*;
        match err {
            BesselDomain { .. } | Factorization { .. } | NegativeVariance { .. }
            | UnboundedWeight | PerfectDesign { .. } => CliError::Numerical(err),
            InvalidGrid(_) | InvalidField(_) | InvalidParam(_) | InvalidDesign(_)
            | DesignTooLarge { .. } | GridExhausted { .. } => {
                CliError::Config(err.to_string())
            }
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Numerical(err) => write!(f, "numerical failure: {err}"),
            CliError::Io(err) => write!(f, "io error: {err}"),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> CliError {
        CliError::Io(err)
    }
}
