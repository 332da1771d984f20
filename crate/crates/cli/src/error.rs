use thiserror::Error;
use varcheck_core::changeset::ChangesetError;
use varcheck_core::dataset::DatasetError;
use varcheck_core::evalcore::EvalError;
use varcheck_core::ledger::LedgerError;
use varcheck_core::modelgw::GatewayError;
use varcheck_core::oracle::OracleError;
use varcheck_core::stability::StabilityError;
use varcheck_core::varmodel::VarModelError;

/// A failed command, grouped by the exit code it maps to.
#[derive(Debug, Error)]
pub enum CliError {
    /// Arguments that parse but make no sense together.
    #[error("{0}")]
    Usage(String),
    /// Unreadable, malformed or inconsistent input data.
    #[error("{0}")]
    Data(String),
    /// A missing compiler, API key or unreachable endpoint.
    #[error("{0}")]
    Environment(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Usage(_) => 1,
            Self::Data(_) => 2,
            Self::Environment(_) => 3,
        }
    }

    pub fn data(context: impl std::fmt::Display, err: impl std::fmt::Display) -> Self {
        Self::Data(format!("{context}: {err}"))
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        if e.is_environment() {
            Self::Environment(e.to_string())
        } else {
            Self::Data(e.to_string())
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Oracle(o) => o.into(),
            EvalError::BadParameters(msg) => Self::Usage(msg),
            other => Self::Data(other.to_string()),
        }
    }
}

impl From<ChangesetError> for CliError {
    fn from(e: ChangesetError) -> Self {
        match e {
            ChangesetError::Oracle(o) => o.into(),
            ChangesetError::NotEnoughSites { .. } => Self::Usage(e.to_string()),
            other => Self::Data(other.to_string()),
        }
    }
}

impl From<GatewayError> for CliError {
    fn from(e: GatewayError) -> Self {
        match e {
            GatewayError::MissingApiKey(_) => Self::Environment(e.to_string()),
            GatewayError::BadConfig(_) => Self::Usage(e.to_string()),
            GatewayError::EmptyPayload => Self::Data(e.to_string()),
        }
    }
}

impl From<VarModelError> for CliError {
    fn from(e: VarModelError) -> Self {
        match e {
            VarModelError::CapTooLarge(_) => Self::Usage(e.to_string()),
            other => Self::Data(other.to_string()),
        }
    }
}

impl From<LedgerError> for CliError {
    fn from(e: LedgerError) -> Self {
        Self::Data(e.to_string())
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        Self::Data(format!("dataset: {e}"))
    }
}

impl From<StabilityError> for CliError {
    fn from(e: StabilityError) -> Self {
        Self::Data(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        Self::Data(format!("i/o: {e}"))
    }
}
