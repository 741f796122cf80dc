//! Ready-made specs with known solutions.

use std::sync::Arc;

use crate::spec::{laplacian, zeroth_order, CoefFn};
use crate::LinearSystemSpec;

/// `u_s = u_yy + u(s,s,y) + f` with exact solution `u = (1 + t) s sin(y)`, Dirichlet closure
/// from the exact solution and analytic t-derivatives.
pub fn manufactured_nonlocal() -> LinearSystemSpec {
    let zero: CoefFn = Arc::new(|_, _, _, _, _, _| 0.0);
    LinearSystemSpec::new(1, 1, laplacian(1.0))
        .with_diagonal(zeroth_order(1.0))
        .with_source(Arc::new(|_, t, s, y| {
            let sy = y[0].sin();
            (1.0 + t) * sy + (1.0 + t) * s * sy - (1.0 + s) * s * sy
        }))
        .with_exact(Arc::new(|_, t, s, y| (1.0 + t) * s * y[0].sin()))
        .with_t_derivatives(
            Some(zero.clone()),
            Some(zero),
            Some(Arc::new(|_, _, s, y| (1.0 + s) * y[0].sin())),
            Some(Arc::new(|_, _, _| 0.0)),
        )
}

/// Heat equation `u_s = u_yy`, `u(t,0,y) = sin(y)`, exact `e^{-s} sin(y)` used at the boundary.
pub fn heat_sine() -> LinearSystemSpec {
    LinearSystemSpec::new(1, 1, laplacian(1.0))
        .with_datum(Arc::new(|_, _, y| y[0].sin()))
        .with_exact(Arc::new(|_, _, s, y| (-s).exp() * y[0].sin()))
}
