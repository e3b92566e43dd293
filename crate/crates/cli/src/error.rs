use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("budget exceeded: {0}")]
    Budget(String),
    #[error("verification failed: {0}")]
    Verification(String),
    #[error("output error: {0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Output(_) => 1,
            CliError::Budget(_) => 2,
            CliError::Verification(_) => 3,
        }
    }

    /// Maps a core error raised by `op` to the exit-code class it belongs to.
    pub fn from_core(op: &str, e: itm_core::Error) -> Self {
        use itm_core::Error as E;
        let msg = format!("{op}: {e}");
        match e {
            E::BudgetExceeded { .. } | E::NotFiniteType | E::CycleNotFound { .. } => CliError::Budget(msg),
            E::InvalidMap { .. } | E::InvalidArc(_) | E::InvalidInput(_) | E::InconsistentRelations(_) => {
                CliError::Config(msg)
            }
            E::OrderViolation { .. } | E::AtomicMeasure | E::NotInvariant { .. } | E::HitDiscontinuity { .. } => {
                CliError::Verification(msg)
            }
        }
    }
}
