use std::process::ExitCode;

use graph_ok::graph_builders::BuildError;
use graph_ok::graph_classes::ClassError;
use graph_ok::graph_core::{CalculusError, GraphError};
use graph_ok::mbo_solver::MboError;
use graph_ok::potential_theory::PotentialError;
use graph_ok::spectral_engine::SpectralError;
use thiserror::Error;

/// Failures, split by the exit code they map to.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl CliError {
    pub fn config(msg: impl std::fmt::Display) -> Self {
        CliError::Config(msg.to_string())
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config(_) => ExitCode::from(1),
            CliError::Numerical(_) => ExitCode::from(2),
        }
    }
}

macro_rules! map_error {
    ($variant:ident: $($t:ty),+) => {
        $(impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::$variant(e.to_string())
            }
        })+
    };
}

map_error!(Config: BuildError, GraphError, CalculusError, std::io::Error, toml::de::Error, serde_json::Error);
map_error!(Numerical: SpectralError, PotentialError, ClassError);

impl From<MboError> for CliError {
    fn from(e: MboError) -> Self {
        match e {
            MboError::Spectral(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}
