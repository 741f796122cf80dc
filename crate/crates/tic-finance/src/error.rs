use tic_games::GameError;

#[derive(Debug, thiserror::Error)]
pub enum FinanceError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("Peano-Baker series not converged after {terms} terms (last term norm {norm:e})")]
    SeriesNotConverged { terms: usize, norm: f64 },
    #[error("matrix family fails the commutation check (commutator norm {norm:e})")]
    NotCommuting { norm: f64 },
    #[error("fundamental matrix is singular at s = {s}")]
    SingularFundamental { s: f64 },
    #[error("domain error: {0}")]
    Domain(String),
    #[error("nonpositive diagonal iterate in sweep {sweep} at s = {s}")]
    PositivityLost { sweep: usize, s: f64 },
    #[error("fixed point not converged after {sweeps} sweeps (last update {update:e})")]
    NoConvergence { sweeps: usize, update: f64 },
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
