use tic_fbsde::FbsdeError;
use tic_grid::GridError;
use tic_nonlinear::NonlinearError;

#[derive(Debug, thiserror::Error)]
pub enum GameError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("best response iteration did not settle (last change {residual:e}, controls {alpha:?})")]
    NoNashConvergence { alpha: Vec<f64>, residual: f64 },
    #[error(transparent)]
    Nonlinear(#[from] NonlinearError),
    #[error(transparent)]
    Fbsde(#[from] FbsdeError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
