//! Reference problems with known or easily referenced solutions.

use std::sync::Arc;

use tic_linear::{DatumFn, SourceFn};

use crate::{BoundaryClosure, NonlinearitySpec, SolverOptions};

/// A nonlinearity with its datum and, when known, the exact solution.
#[derive(Clone)]
pub struct Problem {
    pub f: NonlinearitySpec,
    pub g: DatumFn,
    pub exact: Option<SourceFn>,
}

impl Problem {
    /// Dirichlet closure from the exact solution, Neumann otherwise.
    pub fn solver_options(&self) -> SolverOptions {
        let boundary = match &self.exact {
            Some(u) => BoundaryClosure::Dirichlet(u.clone()),
            None => BoundaryClosure::Neumann,
        };
        SolverOptions::default().with_boundary(boundary)
    }
}

/// `u_s = u_yy + u(s,s,y)^2 + f` with exact solution `u = s e^{-t} cos(y)`.
pub fn manufactured_nonlinear() -> Problem {
    let f = NonlinearitySpec::new(
        1,
        1,
        Arc::new(|_, t, s, y, z, zb| {
            let c = y[0].cos();
            let diag = s * (-s).exp() * c;
            z[2] + zb[0] * zb[0] + (1.0 + s) * (-t).exp() * c - diag * diag
        }),
    )
    .with_derivatives(
        Arc::new(|_, _, _, _, _, _, out| {
            out.copy_from_slice(&[0.0, 0.0, 1.0]);
        }),
        Some(Arc::new(|_, _, _, _, _, zb, out| {
            out.copy_from_slice(&[2.0 * zb[0], 0.0, 0.0]);
        })),
    );
    Problem {
        f,
        g: Arc::new(|_, _, _| 0.0),
        exact: Some(Arc::new(|_, t, s, y| s * (-t).exp() * y[0].cos())),
    }
}

/// Viscous Burgers-type `u_s = u_yy + u u_y` with `g = tanh(-y / 2)`.
pub fn burgers() -> Problem {
    let f = NonlinearitySpec::new(1, 1, Arc::new(|_, _, _, _, z, _| z[2] + z[0] * z[1]))
        .diagonal_free()
        .with_derivatives(
            Arc::new(|_, _, _, _, z, _, out| {
                out.copy_from_slice(&[z[1], z[0], 1.0]);
            }),
            None,
        );
    Problem { f, g: Arc::new(|_, _, y| (-0.5 * y[0]).tanh()), exact: None }
}

/// `u_s = u_yy + u^2` with constant datum `c`; the spatially constant solution `c / (1 - c s)`
/// blows up at `s = 1 / c`.
pub fn quadratic_blowup(c: f64) -> Problem {
    let f = NonlinearitySpec::new(1, 1, Arc::new(|_, _, _, _, z, _| z[2] + z[0] * z[0])).diagonal_free();
    Problem { f, g: Arc::new(move |_, _, _| c), exact: None }
}
