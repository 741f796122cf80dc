//! Nonlocal fully nonlinear parabolic systems
//!
//! ```text
//! u_s(t,s,y) = F(t, s, y, J u(t,s,y), J u(s,s,y)),      u(t, s0, y) = g(t, y)
//! ```
//!
//! where `J` is the second-order jet. Solvers march in `s` with implicit Euler and a damped
//! Newton solve per t-slice. The fixed-point iteration on the diagonal, stage-wise continuation
//! with blow-up detection and a sampled check of the structural conditions are included.

mod appropriate;
mod continuation;
mod error;
mod march;
mod newton;
mod nonlinearity;
mod picard;
pub mod problems;

pub use appropriate::{check_appropriate, AppropriateReport, MAX_SAMPLES};
pub use continuation::{continue_solution, strip_norm, write_stages, ContinuationOptions, ContinuationReport, StageLog};
pub use error::NonlinearError;
pub use march::{causal_march, classical_march, freeze_diagonal_solve, initial_field, NonlinearSolveReport};
pub use newton::{BoundaryClosure, SolverOptions};
pub use nonlinearity::{fd_gradient, JetFn, JetGradFn, Nonlinearity, NonlinearitySpec, Reflected, JET_FD_STEP};
pub use picard::{picard_fixed_point, PicardMode, PicardOptions, PicardReport, MIN_DAMPING};
