//! Discrete setting shared by every solver in the workspace.
//!
//! The unknowns live on a triangular set of time pairs `(t, s)` crossed with a
//! tensor spatial grid. Both time variables use the same node set
//! `t_k = k T / N`, so the diagonal `s = t` falls exactly on nodes and the
//! nonlocal coupling never needs interpolation.

mod error;
mod field;
mod grid;
pub mod jet;
mod norm;
pub mod stencil;

pub use error::GridError;
pub use field::{extract_diagonal, time_reflect, DiagonalField, FlowField};
pub use grid::{Orientation, SpatialGrid, TriTimeGrid};
pub use norm::{field_holder_norm, t_derivative_field, weighted_holder_norm, NormForm, SlicePlane, WeightSpec};
