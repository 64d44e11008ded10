use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags or config file; nothing has been written.
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Run(#[from] planar_orbits::Error),

    #[error("invariant failed: {0}")]
    Invariant(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            _ => 1,
        }
    }
}
