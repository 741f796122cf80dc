use tic_grid::{field_holder_norm, FlowField, TriTimeGrid, WeightSpec};

use crate::march::{march_linear, MarchOptions};
use crate::spec::{DatumFn, SourceFn};
use crate::{LinearError, LinearSystemSpec};

/// Discrete Schauder ratio `|u(df, dg)|_{2+a} / (|df|_a + |dg|_{2+a})`.
///
/// By linearity the numerator is the solve of the perturbation alone, with Neumann closure.
/// Norms are the plain field norms including the t-derivative; `dg` is extended constantly in `s`.
pub fn stability_ratio(
    spec: &LinearSystemSpec,
    grid: &TriTimeGrid,
    df: SourceFn,
    dg: DatumFn,
    norm: &WeightSpec,
) -> Result<f64, LinearError> {
    let m = spec.m;
    let alpha = norm.alpha();
    let f_field = FlowField::from_fn(grid, m, |t, s, y, o| {
        for (a, v) in o.iter_mut().enumerate() {
            *v = df(a, t, s, y);
        }
    });
    let g_field = FlowField::from_fn(grid, m, |t, _, y, o| {
        for (a, v) in o.iter_mut().enumerate() {
            *v = dg(a, t, y);
        }
    });
    let nf = field_holder_norm(&f_field, alpha, norm, true);
    let ng = field_holder_norm(&g_field, 2.0 + alpha, norm, true);
    if !(nf + ng > 0.0) {
        return Err(LinearError::ZeroPerturbation);
    }
    let pert = spec.with_data(df, dg);
    let rep = march_linear(&pert, grid, &MarchOptions::default())?;
    let nu = field_holder_norm(&rep.solution, 2.0 + alpha, norm, true);
    Ok(nu / (nf + ng))
}
