//! Causal marching in `s` and the frozen-diagonal solve.

use rayon::prelude::*;
use tic_grid::{DiagonalField, FlowField, TriTimeGrid};
use tic_linear::{march_levels, DatumFn};

use crate::newton::{DiagJets, SliceContext, SolverOptions};
use crate::{NonlinearError, Nonlinearity};

#[derive(Debug, Clone)]
pub struct NonlinearSolveReport {
    pub solution: FlowField,
    pub newton_iterations_max: usize,
    pub newton_iterations_total: usize,
}

pub(crate) fn validate(f: &dyn Nonlinearity, grid: &TriTimeGrid) -> Result<(), NonlinearError> {
    if f.m() == 0 {
        return Err(NonlinearError::InvalidParameter("system size m must be positive".into()));
    }
    if f.d() != grid.space().dim() {
        return Err(NonlinearError::InvalidParameter(format!(
            "nonlinearity dimension {} differs from grid dimension {}",
            f.d(),
            grid.space().dim()
        )));
    }
    if grid.space().nodes_per_axis() < 4 {
        return Err(NonlinearError::InvalidParameter("at least four nodes per axis are required".into()));
    }
    Ok(())
}

/// Field holding `g(t, y)` on the initial s-line and zero elsewhere.
pub fn initial_field(g: &DatumFn, grid: &TriTimeGrid, m: usize) -> FlowField {
    let mut field = FlowField::zeros(grid, m);
    let (k0, _) = march_levels(grid);
    let space = grid.space();
    for it in 0..=grid.steps() {
        if !grid.contains(it, k0) {
            continue;
        }
        let t = grid.time(it);
        let sl = field.slice_mut(it, k0);
        for node in 0..space.len() {
            let y = space.coords_vec(node);
            for a in 0..m {
                sl[node * m + a] = g(a, t, &y);
            }
        }
    }
    field
}

#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct NewtonStats {
    pub max: usize,
    pub total: usize,
}

impl NewtonStats {
    fn add(&mut self, iters: usize) {
        self.max = self.max.max(iters);
        self.total += iters;
    }
}

/// Advances `field` through `levels`, each `(k_old, k_new)`.
///
/// Without `frozen` the diagonal slice of every new level is solved first with
/// `D = J w`; the remaining slices then use its jets and are solved in parallel.
pub(crate) fn march_levels_nonlinear(
    ctx: &SliceContext,
    grid: &TriTimeGrid,
    field: &mut FlowField,
    levels: &[(usize, usize)],
    frozen: Option<&DiagonalField>,
) -> Result<NewtonStats, NonlinearError> {
    let dt = grid.dt();
    let mut stats = NewtonStats::default();
    for &(k_old, k_new) in levels {
        let s = grid.time(k_new);
        let mut todo: Vec<usize> = (0..=grid.steps()).filter(|&it| it != k_new && grid.contains(it, k_new)).collect();
        let diag_jets: Vec<f64> = match frozen {
            Some(df) => {
                todo.push(k_new);
                df.at(k_new).to_vec()
            }
            None => {
                let prev = field.slice(k_new, k_old).to_vec();
                let (w, iters) = ctx.solve(k_new, k_new, s, s, dt, &prev, DiagJets::SelfConsistent)?;
                stats.add(iters);
                field.slice_mut(k_new, k_new).copy_from_slice(&w);
                ctx.jets(&w)
            }
        };
        let results: Vec<Result<(usize, Vec<f64>, usize), NonlinearError>> = todo
            .par_iter()
            .map(|&it| {
                let prev = field.slice(it, k_old);
                ctx.solve(it, k_new, grid.time(it), s, dt, prev, DiagJets::Fixed(&diag_jets))
                    .map(|(w, iters)| (it, w, iters))
            })
            .collect();
        for res in results {
            let (it, w, iters) = res?;
            stats.add(iters);
            field.slice_mut(it, k_new).copy_from_slice(&w);
        }
    }
    Ok(stats)
}

/// Solves `u_s = F(t, s, y, J u, J u(s,s,.))`, `u = g` on the initial line, marching in `s`.
pub fn causal_march(
    f: &dyn Nonlinearity,
    g: &DatumFn,
    grid: &TriTimeGrid,
    opts: &SolverOptions,
) -> Result<NonlinearSolveReport, NonlinearError> {
    validate(f, grid)?;
    let ctx = SliceContext::new(f, grid.space(), opts);
    let mut field = initial_field(g, grid, f.m());
    let (_, levels) = march_levels(grid);
    let stats = march_levels_nonlinear(&ctx, grid, &mut field, &levels, None)?;
    Ok(NonlinearSolveReport {
        solution: field,
        newton_iterations_max: stats.max,
        newton_iterations_total: stats.total,
    })
}

/// Solves the local problem `w_s = F(t, s, y, J w, D(s, y))` with the diagonal jets `D` frozen.
pub fn freeze_diagonal_solve(
    f: &dyn Nonlinearity,
    g: &DatumFn,
    diag: &DiagonalField,
    grid: &TriTimeGrid,
    opts: &SolverOptions,
) -> Result<NonlinearSolveReport, NonlinearError> {
    validate(f, grid)?;
    if diag.m() != f.m() || diag.grid().steps() != grid.steps() || diag.grid().space().len() != grid.space().len() {
        return Err(NonlinearError::InvalidParameter("diagonal field does not match the grid".into()));
    }
    let ctx = SliceContext::new(f, grid.space(), opts);
    let mut field = initial_field(g, grid, f.m());
    let (_, levels) = march_levels(grid);
    let stats = march_levels_nonlinear(&ctx, grid, &mut field, &levels, Some(diag))?;
    Ok(NonlinearSolveReport {
        solution: field,
        newton_iterations_max: stats.max,
        newton_iterations_total: stats.total,
    })
}

/// Classical single-time march `w_s = F(s, s, y, J w, J w)` with implicit Euler.
/// Returns `w` at every s-level in marching order, starting with the datum at the initial line.
pub fn classical_march(
    f: &dyn Nonlinearity,
    g: &DatumFn,
    grid: &TriTimeGrid,
    opts: &SolverOptions,
) -> Result<Vec<Vec<f64>>, NonlinearError> {
    validate(f, grid)?;
    let ctx = SliceContext::new(f, grid.space(), opts);
    let m = f.m();
    let space = grid.space();
    let (k0, levels) = march_levels(grid);
    let t0 = grid.time(k0);
    let mut w: Vec<f64> = (0..space.len() * m)
        .map(|i| g(i % m, t0, &space.coords_vec(i / m)))
        .collect();
    let mut out = vec![w.clone()];
    for (_, k_new) in levels {
        let s = grid.time(k_new);
        w = ctx.solve(k_new, k_new, s, s, grid.dt(), &w, DiagJets::SelfConsistent)?.0;
        out.push(w.clone());
    }
    Ok(out)
}
