//! Fixed-point iteration on the diagonal.
//!
//! `Direct` maps `u` to the solution of the local problem with the diagonal of `u` frozen.
//! `Linearized` maps `u` to the solution `U` of the linear nonlocal system
//! `U_s = L0 U + F(u) - L0 u`, where `L0` is the jet derivative of `F` at the initial data.

use std::io::Write;

use tic_grid::jet::JetLayout;
use tic_grid::stencil::Deriv;
use tic_grid::{extract_diagonal, field_holder_norm, FlowField, TriTimeGrid, WeightSpec};
use tic_linear::{march_levels, march_nodal, n_derivs, DatumFn, MarchOptions, NodalSystem};

use crate::march::{freeze_diagonal_solve, initial_field, validate};
use crate::newton::{deriv_slot, BoundaryClosure, SliceContext, SolverOptions};
use crate::{NonlinearError, Nonlinearity};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PicardMode {
    #[default]
    Direct,
    Linearized,
}

#[derive(Debug, Clone)]
pub struct PicardOptions {
    pub mode: PicardMode,
    /// Stop once the update norm is at most `tol`.
    pub tol: f64,
    pub max_iter: usize,
    /// Initial relaxation weight; halved (down to 1/64) whenever the update norm fails to decrease.
    pub damping: f64,
    /// Update norms above this value are treated as divergence.
    pub norm_cap: f64,
    pub norm: WeightSpec,
}

impl PicardOptions {
    pub fn new(d: usize) -> Self {
        Self {
            mode: PicardMode::Direct,
            tol: 1e-8,
            max_iter: 50,
            damping: 1.0,
            norm_cap: 1e6,
            norm: WeightSpec::default_for(d),
        }
    }
}

pub const MIN_DAMPING: f64 = 1.0 / 64.0;

#[derive(Debug, Clone)]
pub struct PicardReport {
    /// Number of map evaluations.
    pub iterations: usize,
    pub converged: bool,
    /// `|Phi(u_k) - u_k|` in the discrete `(2 + alpha)` field norm, one per map evaluation.
    pub update_norms: Vec<f64>,
    /// Ratios of consecutive update norms.
    pub contraction_factors: Vec<f64>,
    /// Relaxation weight used after each evaluation.
    pub damping: Vec<f64>,
    pub final_update_norm: f64,
    /// Last iterate.
    pub solution: FlowField,
}

impl PicardReport {
    /// `iter,update_norm,contraction_factor`, one row per map evaluation; the first factor is empty.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), NonlinearError> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["iter", "update_norm", "contraction_factor"])?;
        for (k, un) in self.update_norms.iter().enumerate() {
            let cf = if k == 0 { String::new() } else { format!("{:.16e}", self.contraction_factors[k - 1]) };
            wr.write_record([(k + 1).to_string(), format!("{un:.16e}"), cf])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn worst_contraction(&self) -> f64 {
        self.contraction_factors.iter().copied().fold(0.0, f64::max)
    }
}

/// Runs the fixed-point iteration from `u_0(t, s, y) = g(t, y)`.
pub fn picard_fixed_point(
    f: &dyn Nonlinearity,
    g: &DatumFn,
    grid: &TriTimeGrid,
    solver: &SolverOptions,
    opts: &PicardOptions,
) -> Result<PicardReport, NonlinearError> {
    validate(f, grid)?;
    if !(opts.damping > 0.0 && opts.damping <= 1.0) {
        return Err(NonlinearError::InvalidParameter(format!("damping {} outside (0, 1]", opts.damping)));
    }
    if opts.max_iter == 0 {
        return Err(NonlinearError::InvalidParameter("max_iter must be positive".into()));
    }
    let m = f.m();
    let init = initial_field(g, grid, m);
    let mut u = FlowField::zeros(grid, m);
    {
        // u_0(t, s, y) = g(t, y): copy the initial line along s.
        let (k0, _) = march_levels(grid);
        for (it, is) in grid.pairs() {
            if grid.contains(it, k0) {
                u.slice_mut(it, is).copy_from_slice(init.slice(it, k0));
            }
        }
    }
    let linear = match opts.mode {
        PicardMode::Linearized => Some(LinearizedParts::new(f, g, grid)),
        PicardMode::Direct => None,
    };
    let order = 2.0 + opts.norm.alpha();
    let mut omega = opts.damping;
    let mut update_norms = Vec::new();
    let mut damping = Vec::new();
    let mut converged = false;
    for _ in 0..opts.max_iter {
        let w = match &linear {
            None => freeze_diagonal_solve(f, g, &extract_diagonal(&u), grid, solver)?.solution,
            Some(parts) => parts.apply(f, &u, grid, solver)?,
        };
        let diff = w.axpy(-1.0, &u);
        let un = field_holder_norm(&diff, order, &opts.norm, true);
        if !un.is_finite() || un > opts.norm_cap {
            let report = finish(update_norms, damping, u, false);
            return Err(NonlinearError::NoConvergence { report: Box::new(report) });
        }
        if let Some(&last) = update_norms.last() {
            if un >= last {
                omega = (omega * 0.5).max(MIN_DAMPING);
            }
        }
        update_norms.push(un);
        damping.push(omega);
        u = if omega == 1.0 { w } else { u.axpy(omega, &diff) };
        if un <= opts.tol {
            converged = true;
            break;
        }
    }
    let report = finish(update_norms, damping, u, converged);
    if !converged {
        return Err(NonlinearError::NoConvergence { report: Box::new(report) });
    }
    Ok(report)
}

fn finish(update_norms: Vec<f64>, damping: Vec<f64>, solution: FlowField, converged: bool) -> PicardReport {
    let contraction_factors = update_norms
        .windows(2)
        .map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 })
        .collect();
    PicardReport {
        iterations: update_norms.len(),
        converged,
        final_update_norm: update_norms.last().copied().unwrap_or(f64::NAN),
        update_norms,
        contraction_factors,
        damping,
        solution,
    }
}

/// `L0` at every `(it, node)`, in jet form, and the datum.
struct LinearizedParts {
    lay: JetLayout,
    /// `[(it * nn + node) * m + a][e]` flattened: `dF^a / d local[e]`.
    l_local: Vec<f64>,
    l_diag: Vec<f64>,
    datum: FlowField,
}

impl LinearizedParts {
    fn new(f: &dyn Nonlinearity, g: &DatumFn, grid: &TriTimeGrid) -> Self {
        let space = grid.space();
        let (m, nn) = (f.m(), space.len());
        let lay = JetLayout::new(m, space.dim());
        let len = lay.len();
        let datum = initial_field(g, grid, m);
        let (k0, _) = march_levels(grid);
        let s0 = grid.time(k0);
        let opts = SolverOptions::default();
        let ctx = SliceContext::new(f, space, &opts);
        let diag_jets = ctx.jets(datum.slice(k0, k0));
        let mut l_local = vec![0.0; (grid.steps() + 1) * nn * m * len];
        let mut l_diag = vec![0.0; (grid.steps() + 1) * nn * m * len];
        for it in 0..=grid.steps() {
            if !grid.contains(it, k0) {
                continue;
            }
            let t = grid.time(it);
            let jets = ctx.jets(datum.slice(it, k0));
            for node in 0..nn {
                let y = space.coords_vec(node);
                let z = &jets[node * len..(node + 1) * len];
                let zb = &diag_jets[node * len..(node + 1) * len];
                for a in 0..m {
                    let o = ((it * nn + node) * m + a) * len;
                    f.d_local(a, t, s0, &y, z, zb, &mut l_local[o..o + len]);
                    f.d_diag(a, t, s0, &y, z, zb, &mut l_diag[o..o + len]);
                }
            }
        }
        Self { lay, l_local, l_diag, datum }
    }

    fn apply(
        &self,
        f: &dyn Nonlinearity,
        u: &FlowField,
        grid: &TriTimeGrid,
        solver: &SolverOptions,
    ) -> Result<FlowField, NonlinearError> {
        let ctx = SliceContext::new(f, grid.space(), solver);
        let jets: Vec<Vec<f64>> = grid.pairs().iter().map(|&(it, is)| ctx.jets(u.slice(it, is))).collect();
        let sys = LinearizedSystem { parts: self, f, u, grid, ctx: &ctx, jets, nd: n_derivs(grid.space().dim()) };
        let (field, _) = march_nodal(&sys, grid, &MarchOptions::default())?;
        Ok(field)
    }
}

struct LinearizedSystem<'a> {
    parts: &'a LinearizedParts,
    f: &'a dyn Nonlinearity,
    u: &'a FlowField,
    grid: &'a TriTimeGrid,
    ctx: &'a SliceContext<'a>,
    /// Jets of `u` per pair in [`TriTimeGrid::pairs`] order.
    jets: Vec<Vec<f64>>,
    nd: usize,
}

impl LinearizedSystem<'_> {
    fn jet(&self, it: usize, is: usize, node: usize) -> &[f64] {
        let len = self.parts.lay.len();
        let p = self.grid.pair_index(it, is).expect("admissible pair");
        &self.jets[p][node * len..(node + 1) * len]
    }
    fn l0(&self, it: usize, node: usize, a: usize) -> (&[f64], &[f64]) {
        let len = self.parts.lay.len();
        let o = ((it * self.grid.space().len() + node) * self.m() + a) * len;
        (&self.parts.l_local[o..o + len], &self.parts.l_diag[o..o + len])
    }
}

impl NodalSystem for LinearizedSystem<'_> {
    fn m(&self) -> usize {
        self.parts.lay.m
    }
    fn has_diagonal(&self) -> bool {
        self.f.depends_on_diagonal()
    }
    fn coefficients(&self, it: usize, _is: usize, node: usize, local: &mut [f64], diag: &mut [f64]) {
        let (m, nd, lay) = (self.m(), self.nd, self.parts.lay);
        let derivs = Deriv::all(lay.d);
        for a in 0..m {
            let (ll, ld) = self.l0(it, node, a);
            for (k, &dv) in derivs.iter().enumerate() {
                debug_assert_eq!(deriv_slot(dv, lay.d), k);
                for b in 0..m {
                    let e = lay.index(b, dv);
                    local[(a * nd + k) * m + b] = ll[e];
                    diag[(a * nd + k) * m + b] = ld[e];
                }
            }
        }
    }
    fn source(&self, it: usize, is: usize, node: usize, out: &mut [f64]) {
        let (t, s) = (self.grid.time(it), self.grid.time(is));
        let y = &self.ctx.coords[node];
        let z = self.jet(it, is, node);
        let zb = self.jet(is, is, node);
        for (a, o) in out.iter_mut().enumerate() {
            let (ll, ld) = self.l0(it, node, a);
            let lin: f64 = ll.iter().zip(z).map(|(c, v)| c * v).sum::<f64>()
                + ld.iter().zip(zb).map(|(c, v)| c * v).sum::<f64>();
            *o = self.f.eval(a, t, s, y, z, zb) - lin;
        }
    }
    fn datum(&self, it: usize, node: usize, out: &mut [f64]) {
        let (k0, _) = march_levels(self.grid);
        let m = self.m();
        out.copy_from_slice(&self.parts.datum.slice(it, k0)[node * m..(node + 1) * m]);
    }
    fn dirichlet(&self, it: usize, is: usize, node: usize, out: &mut [f64]) -> bool {
        match &self.ctx.opts.boundary {
            BoundaryClosure::Neumann => false,
            BoundaryClosure::Dirichlet(g) => {
                let (t, s) = (self.grid.time(it), self.grid.time(is));
                for (a, o) in out.iter_mut().enumerate() {
                    *o = g(a, t, s, &self.ctx.coords[node]);
                }
                true
            }
            BoundaryClosure::Geometric => {
                let sl = self.u.slice(it, is);
                for (a, o) in out.iter_mut().enumerate() {
                    *o = self.ctx.geometric_value(sl, node, a);
                }
                true
            }
        }
    }
}
