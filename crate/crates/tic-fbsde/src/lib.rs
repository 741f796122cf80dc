//! Monte Carlo checks of the nonlocal Feynman–Kac representation.
//!
//! For a backward solution `u` of `u_s + F = 0`, the fields `Y = u(t,s,X(s))`,
//! `Z = sigma^T u_y`, `Gamma = sigma^T (sigma^T u_y)_y`, `A = D(sigma^T u_y)` along simulated
//! state paths satisfy a flow of second-order forward–backward SDEs. The residuals of that
//! flow are estimated by Monte Carlo with reproducible path ensembles.

mod error;
mod fields;
mod paths;
mod residual;

pub use error::FbsdeError;
pub use fields::{FkBundle, FkFields};
pub use paths::{brownian_increments, pairwise_sum, simulate_paths, DiffusionFn, DriftFn, McConfig, PathEnsemble, StateSde};
pub use residual::{
    bsde_residual, fk_fields, write_residual_csv, z_dynamics_residual, BreakdownRow, ResidualStats, MAX_CENSORED_FRACTION,
};
