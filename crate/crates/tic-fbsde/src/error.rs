use tic_grid::GridError;

#[derive(Debug, thiserror::Error)]
pub enum FbsdeError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("point {y:?} at s = {s} lies outside the spatial box")]
    OutOfBox { s: f64, y: Vec<f64> },
    #[error("{censored} of {n} paths left the spatial box (limit 20%)")]
    TooManyCensored { censored: usize, n: usize },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
