use tic_grid::GridError;

#[derive(Debug, thiserror::Error)]
pub enum LinearError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("singular banded system (zero pivot in row {row})")]
    SingularMatrix { row: usize },
    #[error("singular slice system at (t-index {it}, s-index {is})")]
    SingularSlice { it: usize, is: usize },
    #[error("non-finite value at (t-index {it}, s-index {is})")]
    NanDetected { it: usize, is: usize },
    #[error("zero perturbation: both perturbation norms vanish")]
    ZeroPerturbation,
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
