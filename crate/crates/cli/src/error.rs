use std::fmt;

/// Command failures split by exit code: configuration problems exit 2,
/// everything that goes wrong after a valid configuration exits 1.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "configuration error: {msg}"),
            CliError::Runtime(msg) => write!(f, "run failed: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<gnnlab_graph::GraphError> for CliError {
    fn from(e: gnnlab_graph::GraphError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<gnnlab_samplers::SamplerError> for CliError {
    fn from(e: gnnlab_samplers::SamplerError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<gnnlab_engine::EngineError> for CliError {
    fn from(e: gnnlab_engine::EngineError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<gnnlab_trainer::TrainError> for CliError {
    fn from(e: gnnlab_trainer::TrainError) -> Self {
        match e {
            gnnlab_trainer::TrainError::BadConfig(msg) => CliError::Config(msg),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<gnnlab_limits::LimitsError> for CliError {
    fn from(e: gnnlab_limits::LimitsError) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}
