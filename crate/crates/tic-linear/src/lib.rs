//! Nonlocal linear second-order parabolic systems
//!
//! ```text
//! u_s(t,s,y) = sum A^{aI}_b d_I u^b(t,s,y) + sum B^{aI}_b d_I u^b(s,s,y) + f(t,s,y)
//! ```
//!
//! on a triangular two-time grid, solved by marching in `s` with one banded solve per
//! t-slice. Also provides the augmented `(u, u_t)` system, sampled ellipticity checks and a
//! discrete Schauder stability ratio.

mod augmented;
pub mod banded;
mod ellipticity;
mod error;
mod march;
pub mod problems;
mod spec;
mod stability;
mod system;

pub use augmented::solve_augmented;
pub use ellipticity::{check_ellipticity, quadratic_form, EllipticityReport, Probe, ELLIPTICITY_SLACK};
pub use error::LinearError;
pub use march::{
    march_levels, march_linear, march_nodal, DiagonalTreatment, LinearSolveReport, MarchOptions, StencilTable,
};
pub use spec::{coef_sum, laplacian, zeroth_order, CoefFn, DatumFn, LinearSystemSpec, SourceFn};
pub use stability::stability_ratio;
pub use system::{n_derivs, NodalSystem, SpecSystem};
