//! Solving the equilibrium HJB system and reading off the equilibrium strategy.

use std::io::Write;

use rayon::prelude::*;
use tic_grid::jet::{jet_at, JetLayout};
use tic_grid::{FlowField, Orientation, SpatialGrid, TriTimeGrid};
use tic_nonlinear::{causal_march, Nonlinearity, SolverOptions};

use crate::assemble::{assemble_equilibrium_h, split_jet};
use crate::game::{minimax_solve, GameSpec};
use crate::GameError;

/// How spatial derivatives of `u(s, s, .)` are taken when evaluating the strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StrategyJets {
    /// The second-order stencils of the solver.
    Grid,
    /// Sixth-order central stencils where three neighbours exist on every axis,
    /// the solver stencils elsewhere.
    #[default]
    HighOrder,
}

#[derive(Debug, Clone, Default)]
pub struct EquilibriumOptions {
    pub solver: SolverOptions,
    pub strategy_jets: StrategyJets,
}

/// Backward solution of `u_s + H(t, s, y, J u, J u(s,s,.)) = 0`, `u(t, T, y) = g(t, y)`,
/// with the equilibrium strategy on the diagonal.
#[derive(Debug, Clone)]
pub struct EquilibriumOutput {
    pub u: FlowField,
    /// `alpha` at `[(is * nodes + node) * n_controls + c]`.
    pub strategy: Vec<f64>,
    pub n_controls: usize,
    /// Largest `|u_s(s,s,y) + H^a(s, s, y, ...)|` over `s < T` and interior nodes.
    pub hjb_residual_max: f64,
    pub newton_iterations_max: usize,
    pub newton_iterations_total: usize,
}

impl EquilibriumOutput {
    pub fn grid(&self) -> &TriTimeGrid {
        self.u.grid()
    }

    /// Equilibrium value `V(s, y) = u(s, s, y)` at s-index `is`.
    pub fn value(&self, is: usize, node: usize) -> Vec<f64> {
        let m = self.u.m();
        (0..m).map(|a| self.u.get(is, is, node, a)).collect()
    }

    pub fn strategy(&self, is: usize, node: usize) -> &[f64] {
        let o = (is * self.grid().space().len() + node) * self.n_controls;
        &self.strategy[o..o + self.n_controls]
    }

    /// Rows `s, y_1..y_d, alpha_1..alpha_n`.
    pub fn write_strategy_csv<W: Write>(&self, w: W) -> Result<(), GameError> {
        self.write_rows(w, "alpha", self.n_controls, |is, node| self.strategy(is, node).to_vec())
    }

    /// Rows `s, y_1..y_d, V1..Vm`.
    pub fn write_value_csv<W: Write>(&self, w: W) -> Result<(), GameError> {
        self.write_rows(w, "V", self.u.m(), |is, node| self.value(is, node))
    }

    fn write_rows<W: Write>(
        &self,
        w: W,
        prefix: &str,
        width: usize,
        row: impl Fn(usize, usize) -> Vec<f64>,
    ) -> Result<(), GameError> {
        let grid = self.grid();
        let space = grid.space();
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["s".to_string()];
        header.extend((1..=space.dim()).map(|i| format!("y{i}")));
        header.extend((1..=width).map(|c| format!("{prefix}{c}")));
        out.write_record(&header)?;
        for is in 0..=grid.steps() {
            for node in 0..space.len() {
                let mut rec = vec![format!("{:.16e}", grid.time(is))];
                rec.extend(space.coords_vec(node).iter().map(|v| format!("{v:.16e}")));
                rec.extend(row(is, node).iter().map(|v| format!("{v:.16e}")));
                out.write_record(&rec)?;
            }
        }
        out.flush()?;
        Ok(())
    }
}

/// Solves the equilibrium HJB system of `game` on a backward grid.
pub fn solve_equilibrium(
    game: &GameSpec,
    grid: &TriTimeGrid,
    opts: &EquilibriumOptions,
) -> Result<EquilibriumOutput, GameError> {
    if grid.orientation() != Orientation::Backward {
        return Err(GameError::InvalidParameter("the equilibrium system is solved on a backward grid".into()));
    }
    if grid.space().dim() != game.d {
        return Err(GameError::InvalidParameter("grid dimension differs from the state dimension".into()));
    }
    let h = assemble_equilibrium_h(game)?;
    let report = causal_march(&h, &game.g, grid, &opts.solver)?;
    let u = report.solution;
    let strategy = strategy_on_diagonal(game, &u, opts.strategy_jets)?;
    let hjb_residual_max = hjb_residual(&h, &u);
    Ok(EquilibriumOutput {
        u,
        strategy,
        n_controls: game.n_controls(),
        hjb_residual_max,
        newton_iterations_max: report.newton_iterations_max,
        newton_iterations_total: report.newton_iterations_total,
    })
}

const D1_6: [f64; 7] = [-1.0, 9.0, -45.0, 0.0, 45.0, -9.0, 1.0];
const D2_6: [f64; 7] = [2.0, -27.0, 270.0, -490.0, 270.0, -27.0, 2.0];

/// Jet of an interleaved slice at `node` with sixth-order central stencils, or `None` when
/// some axis has fewer than three neighbours on a side.
pub fn high_order_jet(space: &SpatialGrid, values: &[f64], m: usize, node: usize) -> Option<Vec<f64>> {
    let d = space.dim();
    let lay = JetLayout::new(m, d);
    let mut nb = vec![[0usize; 7]; d];
    for (i, row) in nb.iter_mut().enumerate() {
        for (r, slot) in row.iter_mut().enumerate() {
            *slot = space.shift(node, i, r as isize - 3)?;
        }
    }
    let mut out = vec![0.0; lay.len()];
    for b in 0..m {
        out[lay.value(b)] = values[node * m + b];
        for i in 0..d {
            let h = space.spacing(i);
            let g: f64 = (0..7).map(|r| D1_6[r] * values[nb[i][r] * m + b]).sum();
            out[lay.grad(b, i)] = g / (60.0 * h);
            let q: f64 = (0..7).map(|r| D2_6[r] * values[nb[i][r] * m + b]).sum();
            out[lay.hess(b, i, i)] = q / (180.0 * h * h);
            for j in i + 1..d {
                let hj = space.spacing(j);
                let mut v = 0.0;
                for r in 0..7 {
                    if D1_6[r] == 0.0 {
                        continue;
                    }
                    for c in 0..7 {
                        if D1_6[c] == 0.0 {
                            continue;
                        }
                        let n = space.shift(nb[i][r], j, c as isize - 3)?;
                        v += D1_6[r] * D1_6[c] * values[n * m + b];
                    }
                }
                v /= 3600.0 * h * hj;
                out[lay.hess(b, i, j)] = v;
                out[lay.hess(b, j, i)] = v;
            }
        }
    }
    Some(out)
}

fn strategy_on_diagonal(game: &GameSpec, u: &FlowField, jets: StrategyJets) -> Result<Vec<f64>, GameError> {
    let grid = u.grid();
    let space = grid.space();
    let (m, d, nc) = (game.m, game.d, game.n_controls());
    let len = JetLayout::new(m, d).len();
    let rows: Result<Vec<Vec<f64>>, GameError> = (0..=grid.steps())
        .into_par_iter()
        .map(|is| {
            let s = grid.time(is);
            let sl = u.slice(is, is);
            let mut row = Vec::with_capacity(space.len() * nc);
            let mut jet = vec![0.0; len];
            for node in 0..space.len() {
                let hi = match jets {
                    StrategyJets::HighOrder => high_order_jet(space, sl, m, node),
                    StrategyJets::Grid => None,
                };
                match hi {
                    Some(j) => jet.copy_from_slice(&j),
                    None => jet_at(space, sl, m, node, &mut jet),
                }
                let y = space.coords_vec(node);
                let (uu, p, q) = split_jet(&jet, m, d);
                row.extend(minimax_solve(game, s, s, &y, uu, p, q)?);
            }
            Ok(row)
        })
        .collect();
    Ok(rows?.concat())
}

/// `max |u_s(s,s,y) + F^a(s, s, y, J u(s,s,y), J u(s,s,y))|` with a one-sided difference in `s`.
fn hjb_residual(f: &dyn Nonlinearity, u: &FlowField) -> f64 {
    let grid = u.grid();
    let space = grid.space();
    let (m, n, dt) = (u.m(), grid.steps(), grid.dt());
    let len = JetLayout::new(m, space.dim()).len();
    (0..n)
        .into_par_iter()
        .map(|is| {
            let s = grid.time(is);
            let sl = u.slice(is, is);
            let mut jet = vec![0.0; len];
            let mut worst = 0.0f64;
            for node in (0..space.len()).filter(|&nd| space.is_interior(nd, 1)) {
                jet_at(space, sl, m, node, &mut jet);
                let y = space.coords_vec(node);
                for a in 0..m {
                    let u0 = sl[node * m + a];
                    let u1 = u.get(is, is + 1, node, a);
                    let u_s = if is + 2 <= n {
                        (-3.0 * u0 + 4.0 * u1 - u.get(is, is + 2, node, a)) / (2.0 * dt)
                    } else {
                        (u1 - u0) / dt
                    };
                    worst = worst.max((u_s + f.eval(a, s, s, &y, &jet, &jet)).abs());
                }
            }
            worst
        })
        .reduce(|| 0.0, f64::max)
}
