use tic_grid::GridError;
use tic_linear::LinearError;

use crate::picard::PicardReport;

#[derive(Debug, thiserror::Error)]
pub enum NonlinearError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("Newton iteration failed at (t-index {it}, s-index {is}); residual trace {trace:?}")]
    NewtonDivergence { it: usize, is: usize, trace: Vec<f64> },
    #[error("non-finite value at (t-index {it}, s-index {is})")]
    NanDetected { it: usize, is: usize },
    #[error("Picard iteration did not converge in {} iterations (last update {:e})", .report.iterations, .report.final_update_norm)]
    NoConvergence { report: Box<PicardReport> },
    #[error("blow-up detected in stage {stage} near s = {s}: {reason}")]
    BlowUp { stage: usize, s: f64, reason: String, log: Vec<crate::continuation::StageLog> },
    #[error(transparent)]
    Linear(#[from] LinearError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
