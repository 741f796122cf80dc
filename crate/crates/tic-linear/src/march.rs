use std::io::Write;

use rayon::prelude::*;
use tic_grid::stencil::{Deriv, Stencil};
use tic_grid::{t_derivative_field, FlowField, Orientation, SpatialGrid, TriTimeGrid};

use crate::banded::{solve_rows, RowBuilder};
use crate::system::{n_derivs, NodalSystem, SpecSystem};
use crate::{LinearError, LinearSystemSpec};

/// Precomputed stencils for every node and derivative slot, plus boundary closure rows.
#[derive(Debug, Clone)]
pub struct StencilTable {
    nd: usize,
    stencils: Vec<Stencil>,
    boundary: Vec<Option<Stencil>>,
}

impl StencilTable {
    pub fn new(space: &SpatialGrid) -> Self {
        let derivs = Deriv::all(space.dim());
        let nd = derivs.len();
        let mut stencils = Vec::with_capacity(space.len() * nd);
        let mut boundary = Vec::with_capacity(space.len());
        for node in 0..space.len() {
            for &dv in &derivs {
                let mut st = Stencil::new();
                space.stencil(node, dv, &mut st);
                stencils.push(st);
            }
            boundary.push(space.boundary_axis(node).map(|ax| {
                let mut st = Stencil::new();
                space.first_stencil(node, ax, &mut st);
                st
            }));
        }
        Self { nd, stencils, boundary }
    }

    pub fn n_derivs(&self) -> usize {
        self.nd
    }

    pub fn stencil(&self, node: usize, k: usize) -> &Stencil {
        &self.stencils[node * self.nd + k]
    }

    /// Normal-derivative stencil at a boundary node, `None` in the interior.
    pub fn boundary(&self, node: usize) -> Option<&Stencil> {
        self.boundary[node].as_ref()
    }

    /// Derivative slot `k` at `node` of component `comp` in a slice interleaved with `stride` entries per node.
    pub fn apply(&self, values: &[f64], stride: usize, comp: usize, node: usize, k: usize) -> f64 {
        self.stencil(node, k).iter().map(|&(n, w)| w * values[n * stride + comp]).sum()
    }
}

/// Index of the initial s-line and the sequence of `(from, to)` s-levels.
pub fn march_levels(grid: &TriTimeGrid) -> (usize, Vec<(usize, usize)>) {
    let n = grid.steps();
    match grid.orientation() {
        Orientation::Forward => (0, (0..n).map(|k| (k, k + 1)).collect()),
        Orientation::Backward => (n, (0..n).rev().map(|k| (k + 1, k)).collect()),
    }
}

/// How the diagonal terms `B d u(s,s,y)` enter a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DiagonalTreatment {
    /// The diagonal slice of the new level is solved first with `A + B` implicit; every other
    /// slice then uses that freshly computed diagonal.
    #[default]
    Current,
    /// The diagonal of the previous level is used explicitly.
    Lagged,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarchOptions {
    /// Weight of the new level in the theta-scheme; `1` is implicit Euler.
    pub theta: f64,
    pub diagonal: DiagonalTreatment,
}

impl Default for MarchOptions {
    fn default() -> Self {
        Self { theta: 1.0, diagonal: DiagonalTreatment::Current }
    }
}

#[derive(Debug, Clone)]
pub struct LinearSolveReport {
    pub solution: FlowField,
    pub t_derivative: FlowField,
    /// Largest residual of the assembled slice systems.
    pub residual_max: f64,
    pub steps: usize,
    /// Whether coefficient, source or datum t-derivatives were replaced by finite differences.
    pub coefficient_t_fd: bool,
}

impl LinearSolveReport {
    /// Flat `key,value` diagnostics.
    pub fn write_diagnostics<W: Write>(&self, w: W) -> Result<(), LinearError> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["key", "value"])?;
        wr.write_record(["residual_max", &format!("{:.16e}", self.residual_max)])?;
        wr.write_record(["steps", &self.steps.to_string()])?;
        wr.write_record(["coefficient_t_fd", &self.coefficient_t_fd.to_string()])?;
        wr.write_record(["max_abs_solution", &format!("{:.16e}", self.solution.max_abs())])?;
        wr.flush()?;
        Ok(())
    }
}

pub(crate) fn validate(spec: &LinearSystemSpec, grid: &TriTimeGrid) -> Result<(), LinearError> {
    if spec.m == 0 {
        return Err(LinearError::InvalidParameter("system size m must be positive".into()));
    }
    if spec.d != grid.space().dim() {
        return Err(LinearError::InvalidParameter(format!(
            "spec dimension {} differs from grid dimension {}",
            spec.d,
            grid.space().dim()
        )));
    }
    Ok(())
}

/// Solves the system by marching in `s`; returns the field and the largest slice residual.
pub fn march_nodal<S: NodalSystem + ?Sized>(
    sys: &S,
    grid: &TriTimeGrid,
    opts: &MarchOptions,
) -> Result<(FlowField, f64), LinearError> {
    if !(0.0..=1.0).contains(&opts.theta) {
        return Err(LinearError::InvalidParameter(format!("theta = {} outside [0, 1]", opts.theta)));
    }
    let m = sys.m();
    let nn = grid.space().len();
    let table = StencilTable::new(grid.space());
    let mut field = FlowField::zeros(grid, m);
    let (k0, levels) = march_levels(grid);
    for it in 0..=grid.steps() {
        if grid.contains(it, k0) {
            let sl = field.slice_mut(it, k0);
            for node in 0..nn {
                sys.datum(it, node, &mut sl[node * m..(node + 1) * m]);
            }
        }
    }
    let mut residual: f64 = 0.0;
    for (k_old, k_new) in levels {
        let step = StepContext { sys, grid, table: &table, opts, k_old, k_new };
        let others: Vec<usize> =
            (0..=grid.steps()).filter(|&it| it != k_new && grid.contains(it, k_new)).collect();
        let diag_first = opts.diagonal == DiagonalTreatment::Current;
        let mut todo = others;
        if diag_first {
            let (x, r) = step.solve_slice(&field, k_new, None, sys.has_diagonal())?;
            residual = residual.max(r);
            field.slice_mut(k_new, k_new).copy_from_slice(&x);
        } else {
            todo.push(k_new);
        }
        let diag_new: Option<Vec<f64>> = diag_first.then(|| field.slice(k_new, k_new).to_vec());
        let results: Vec<Result<(usize, Vec<f64>, f64), LinearError>> = todo
            .par_iter()
            .map(|&it| step.solve_slice(&field, it, diag_new.as_deref(), false).map(|(x, r)| (it, x, r)))
            .collect();
        for res in results {
            let (it, x, r) = res?;
            residual = residual.max(r);
            field.slice_mut(it, k_new).copy_from_slice(&x);
        }
    }
    Ok((field, residual))
}

struct StepContext<'a, S: ?Sized> {
    sys: &'a S,
    grid: &'a TriTimeGrid,
    table: &'a StencilTable,
    opts: &'a MarchOptions,
    k_old: usize,
    k_new: usize,
}

impl<S: NodalSystem + ?Sized> StepContext<'_, S> {
    fn solve_slice(
        &self,
        field: &FlowField,
        it: usize,
        diag_new: Option<&[f64]>,
        implicit_diag: bool,
    ) -> Result<(Vec<f64>, f64), LinearError> {
        let sys = self.sys;
        let table = self.table;
        let m = sys.m();
        let nn = self.grid.space().len();
        let nd = n_derivs(self.grid.space().dim());
        let dt = self.grid.dt();
        let theta = self.opts.theta;
        let (k_old, k_new) = (self.k_old, self.k_new);
        let u_old = field.slice(it, k_old);
        let d_old = field.slice(k_old, k_old);
        let lagged = self.opts.diagonal == DiagonalTreatment::Lagged;

        let mut rows = RowBuilder::new(nn * m);
        let mut rhs = vec![0.0; nn * m];
        let mut local = vec![0.0; m * nd * m];
        let mut diag = vec![0.0; m * nd * m];
        let mut local_old = vec![0.0; m * nd * m];
        let mut diag_old = vec![0.0; m * nd * m];
        let mut src = vec![0.0; m];
        let mut src_old = vec![0.0; m];
        for node in 0..nn {
            if let Some(normal) = table.boundary(node) {
                if sys.dirichlet(it, k_new, node, &mut src) {
                    for a in 0..m {
                        rows.add(node * m + a, node * m + a, 1.0);
                        rhs[node * m + a] = src[a];
                    }
                } else {
                    for a in 0..m {
                        for &(n2, w) in normal {
                            rows.add(node * m + a, n2 * m + a, w);
                        }
                    }
                }
                continue;
            }
            sys.coefficients(it, k_new, node, &mut local, &mut diag);
            sys.source(it, k_new, node, &mut src);
            if theta < 1.0 {
                sys.coefficients(it, k_old, node, &mut local_old, &mut diag_old);
                sys.source(it, k_old, node, &mut src_old);
            }
            for a in 0..m {
                let r = node * m + a;
                rows.add(r, r, 1.0);
                let mut acc = u_old[r] + dt * theta * src[a];
                for k in 0..nd {
                    for b in 0..m {
                        let ix = (a * nd + k) * m + b;
                        let c = local[ix] + if implicit_diag { diag[ix] } else { 0.0 };
                        if c != 0.0 {
                            for &(n2, w) in table.stencil(node, k) {
                                rows.add(r, n2 * m + b, -theta * dt * c * w);
                            }
                        }
                        let cd = diag[ix];
                        if !implicit_diag && cd != 0.0 {
                            let dv = match (lagged, diag_new) {
                                (false, Some(dn)) => table.apply(dn, m, b, node, k),
                                _ => table.apply(d_old, m, b, node, k),
                            };
                            acc += theta * dt * cd * dv;
                        }
                        if theta < 1.0 {
                            let (lo, dd) = (local_old[ix], diag_old[ix]);
                            if lo != 0.0 {
                                acc += (1.0 - theta) * dt * lo * table.apply(u_old, m, b, node, k);
                            }
                            if dd != 0.0 {
                                acc += (1.0 - theta) * dt * dd * table.apply(d_old, m, b, node, k);
                            }
                        }
                    }
                }
                if theta < 1.0 {
                    acc += (1.0 - theta) * dt * src_old[a];
                }
                rhs[r] = acc;
            }
        }
        if rhs.iter().any(|v| !v.is_finite()) {
            return Err(LinearError::NanDetected { it, is: k_new });
        }
        let (x, res) = solve_rows(&rows, &rhs).map_err(|e| match e {
            LinearError::SingularMatrix { .. } => LinearError::SingularSlice { it, is: k_new },
            other => other,
        })?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(LinearError::NanDetected { it, is: k_new });
        }
        Ok((x, res))
    }
}

/// Marches `spec` on `grid` and reports the solution with a finite-difference t-derivative.
pub fn march_linear(
    spec: &LinearSystemSpec,
    grid: &TriTimeGrid,
    opts: &MarchOptions,
) -> Result<LinearSolveReport, LinearError> {
    validate(spec, grid)?;
    let sys = SpecSystem::new(spec, grid);
    let (solution, residual_max) = march_nodal(&sys, grid, opts)?;
    let t_derivative = t_derivative_field(&solution);
    Ok(LinearSolveReport { solution, t_derivative, residual_max, steps: grid.steps(), coefficient_t_fd: false })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::spec::{laplacian, zeroth_order};

    #[test]
    fn zero_data_gives_zero_field() {
        let g = TriTimeGrid::new(1.0, 8, &[(-1.0, 1.0)], 17, Orientation::Forward).unwrap();
        let spec = LinearSystemSpec::new(2, 1, laplacian(1.0)).with_diagonal(zeroth_order(0.7));
        let rep = march_linear(&spec, &g, &MarchOptions::default()).unwrap();
        assert!(rep.solution.values().iter().all(|&v| v == 0.0));
        assert_eq!(rep.residual_max, 0.0);
    }

    #[test]
    fn levels_cover_both_orientations() {
        let g = TriTimeGrid::new(1.0, 3, &[(0.0, 1.0)], 5, Orientation::Backward).unwrap();
        assert_eq!(march_levels(&g), (3, vec![(3, 2), (2, 1), (1, 0)]));
        assert_eq!(march_levels(&g.reflected()), (0, vec![(0, 1), (1, 2), (2, 3)]));
    }

    #[test]
    fn constant_datum_with_zero_operator_is_preserved() {
        let g = TriTimeGrid::new(1.0, 6, &[(-1.0, 1.0)], 9, Orientation::Forward).unwrap();
        let spec = LinearSystemSpec::new(1, 1, laplacian(1.0)).with_datum(Arc::new(|_, t, _| 1.0 + t));
        let rep = march_linear(&spec, &g, &MarchOptions::default()).unwrap();
        for (it, is) in g.pairs() {
            for node in 0..9 {
                assert!((rep.solution.get(it, is, node, 0) - (1.0 + g.time(it))).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn crank_nicolson_beats_euler_on_decay() {
        // u_s = -u, u(t,0)=1: exact e^{-s}.
        let g = TriTimeGrid::new(1.0, 16, &[(-1.0, 1.0)], 5, Orientation::Forward).unwrap();
        let spec = LinearSystemSpec::new(1, 1, zeroth_order(-1.0)).with_datum(Arc::new(|_, _, _| 1.0));
        let err = |theta: f64| {
            let rep = march_linear(&spec, &g, &MarchOptions { theta, ..Default::default() }).unwrap();
            (rep.solution.get(16, 16, 2, 0) - (-1.0f64).exp()).abs()
        };
        let (e1, e_half) = (err(1.0), err(0.5));
        assert!(e1 < 2e-2 && e_half < 1e-3 && e_half < e1 / 10.0, "{e1} {e_half}");
    }
}
