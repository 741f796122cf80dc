//! Damped Newton solve of one implicit Euler slice
//! `w - prev - dt F(t, s, y, J w, D) = 0`.

use std::fmt;

use tic_grid::jet::JetLayout;
use tic_grid::stencil::Deriv;
use tic_grid::SpatialGrid;
use tic_linear::banded::{BandedLu, RowBuilder};
use tic_linear::{SourceFn, StencilTable};

use crate::{NonlinearError, Nonlinearity};

/// How boundary nodes are closed.
#[derive(Clone, Default)]
pub enum BoundaryClosure {
    /// Zero normal derivative with the one-sided first-derivative stencil.
    #[default]
    Neumann,
    /// Prescribed values `(a, t, s, y)`.
    Dirichlet(SourceFn),
    /// `u_b = u_1^2 / u_2` along the normal, exact for functions exponential in `y`.
    /// Falls back to linear extrapolation when `u_1 / u_2` is not positive.
    Geometric,
}

impl fmt::Debug for BoundaryClosure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Neumann => f.write_str("Neumann"),
            Self::Dirichlet(_) => f.write_str("Dirichlet"),
            Self::Geometric => f.write_str("Geometric"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Newton stops once `|R|_inf <= tol (1 + |w|_inf)`.
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub boundary: BoundaryClosure,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { newton_tol: 1e-10, newton_max_iter: 25, boundary: BoundaryClosure::Neumann }
    }
}

impl SolverOptions {
    pub fn with_boundary(mut self, boundary: BoundaryClosure) -> Self {
        self.boundary = boundary;
        self
    }
}

/// Source of the diagonal jet `J u(s, s, .)` in a slice solve.
#[derive(Clone, Copy)]
pub(crate) enum DiagJets<'a> {
    /// Jets of every node, concatenated.
    Fixed(&'a [f64]),
    /// The slice is the diagonal: `D = J w`.
    SelfConsistent,
}

/// Grid data shared by all slice solves.
pub(crate) struct SliceContext<'a> {
    pub f: &'a dyn Nonlinearity,
    pub space: &'a SpatialGrid,
    pub table: StencilTable,
    pub coords: Vec<Vec<f64>>,
    pub lay: JetLayout,
    /// Derivative slot of every jet entry.
    pub slot: Vec<usize>,
    pub opts: &'a SolverOptions,
}

/// Slot of `dv` in [`Deriv::all`].
pub(crate) fn deriv_slot(dv: Deriv, d: usize) -> usize {
    match dv {
        Deriv::Value => 0,
        Deriv::D1(i) => 1 + i,
        Deriv::D2(i, j) => 1 + d + i * d + j,
    }
}

impl<'a> SliceContext<'a> {
    pub fn new(f: &'a dyn Nonlinearity, space: &'a SpatialGrid, opts: &'a SolverOptions) -> Self {
        let d = space.dim();
        let lay = JetLayout::new(f.m(), d);
        let slot = (0..lay.len()).map(|e| deriv_slot(lay.entry(e).1, d)).collect();
        Self {
            f,
            space,
            table: StencilTable::new(space),
            coords: (0..space.len()).map(|n| space.coords_vec(n)).collect(),
            lay,
            slot,
            opts,
        }
    }

    pub fn m(&self) -> usize {
        self.lay.m
    }

    /// Jets of a slice at every node, concatenated.
    pub fn jets(&self, w: &[f64]) -> Vec<f64> {
        let len = self.lay.len();
        let m = self.m();
        let mut out = vec![0.0; len * self.space.len()];
        for node in 0..self.space.len() {
            for e in 0..len {
                let b = self.lay.entry(e).0;
                out[node * len + e] = self.table.apply(w, m, b, node, self.slot[e]);
            }
        }
        out
    }

    /// The two interior nodes along the normal of a boundary node.
    fn normal_neighbours(&self, node: usize) -> (usize, usize) {
        let ax = self.space.boundary_axis(node).expect("boundary node");
        let dir = if self.space.axis_index(node, ax) == 0 { 1 } else { -1 };
        let n1 = self.space.shift(node, ax, dir).expect("grid has at least three nodes per axis");
        let n2 = self.space.shift(node, ax, 2 * dir).expect("grid has at least three nodes per axis");
        (n1, n2)
    }

    /// Value prescribed by the geometric closure from the interior neighbours.
    pub fn geometric_value(&self, w: &[f64], node: usize, a: usize) -> f64 {
        let m = self.m();
        let (n1, n2) = self.normal_neighbours(node);
        let (u1, u2) = (w[n1 * m + a], w[n2 * m + a]);
        if u2 != 0.0 && u1 / u2 > 0.0 {
            u1 * u1 / u2
        } else {
            2.0 * u1 - u2
        }
    }

    fn residual(&self, t: f64, s: f64, dt: f64, w: &[f64], prev: &[f64], diag: DiagJets, out: &mut [f64]) {
        let m = self.m();
        let len = self.lay.len();
        let jw = self.jets(w);
        for node in 0..self.space.len() {
            let y = &self.coords[node];
            if self.table.boundary(node).is_some() {
                for a in 0..m {
                    let r = node * m + a;
                    out[r] = match &self.opts.boundary {
                        BoundaryClosure::Neumann => self.table.boundary(node).unwrap().iter().map(|&(n2, c)| c * w[n2 * m + a]).sum(),
                        BoundaryClosure::Dirichlet(g) => w[r] - g(a, t, s, y),
                        BoundaryClosure::Geometric => w[r] - self.geometric_value(w, node, a),
                    };
                }
                continue;
            }
            let z = &jw[node * len..(node + 1) * len];
            let zb = match diag {
                DiagJets::Fixed(dj) => &dj[node * len..(node + 1) * len],
                DiagJets::SelfConsistent => z,
            };
            for a in 0..m {
                let r = node * m + a;
                out[r] = w[r] - prev[r] - dt * self.f.eval(a, t, s, y, z, zb);
            }
        }
    }

    fn jacobian(&self, t: f64, s: f64, dt: f64, w: &[f64], diag: DiagJets) -> Result<BandedLu, ()> {
        let m = self.m();
        let len = self.lay.len();
        let nn = self.space.len();
        let jw = self.jets(w);
        let mut rows = RowBuilder::new(nn * m);
        let mut dl = vec![0.0; len];
        let mut dd = vec![0.0; len];
        for node in 0..nn {
            let y = &self.coords[node];
            if let Some(normal) = self.table.boundary(node) {
                for a in 0..m {
                    let r = node * m + a;
                    match &self.opts.boundary {
                        BoundaryClosure::Neumann => {
                            for &(n2, c) in normal {
                                rows.add(r, n2 * m + a, c);
                            }
                        }
                        BoundaryClosure::Dirichlet(_) => rows.add(r, r, 1.0),
                        BoundaryClosure::Geometric => {
                            let (n1, n2) = self.normal_neighbours(node);
                            let (u1, u2) = (w[n1 * m + a], w[n2 * m + a]);
                            rows.add(r, r, 1.0);
                            if u2 != 0.0 && u1 / u2 > 0.0 {
                                rows.add(r, n1 * m + a, -2.0 * u1 / u2);
                                rows.add(r, n2 * m + a, u1 * u1 / (u2 * u2));
                            } else {
                                rows.add(r, n1 * m + a, -2.0);
                                rows.add(r, n2 * m + a, 1.0);
                            }
                        }
                    }
                }
                continue;
            }
            let z = &jw[node * len..(node + 1) * len];
            let self_diag = matches!(diag, DiagJets::SelfConsistent);
            let zb = match diag {
                DiagJets::Fixed(dj) => &dj[node * len..(node + 1) * len],
                DiagJets::SelfConsistent => z,
            };
            for a in 0..m {
                let r = node * m + a;
                rows.add(r, r, 1.0);
                self.f.d_local(a, t, s, y, z, zb, &mut dl);
                if self_diag {
                    self.f.d_diag(a, t, s, y, z, zb, &mut dd);
                    for e in 0..len {
                        dl[e] += dd[e];
                    }
                }
                for e in 0..len {
                    if dl[e] != 0.0 {
                        let b = self.lay.entry(e).0;
                        for &(n2, c) in self.table.stencil(node, self.slot[e]) {
                            rows.add(r, n2 * m + b, -dt * dl[e] * c);
                        }
                    }
                }
            }
        }
        rows.to_banded().factor().map_err(|_| ())
    }

    /// Solves one slice starting from `prev`. Returns the slice and the Newton iteration count.
    #[allow(clippy::too_many_arguments)]
    pub fn solve(
        &self,
        it: usize,
        is: usize,
        t: f64,
        s: f64,
        dt: f64,
        prev: &[f64],
        diag: DiagJets,
    ) -> Result<(Vec<f64>, usize), NonlinearError> {
        let n = prev.len();
        let tol = self.opts.newton_tol;
        let mut w = prev.to_vec();
        let mut r = vec![0.0; n];
        let mut r_try = vec![0.0; n];
        self.residual(t, s, dt, &w, prev, diag, &mut r);
        let mut rn = max_abs(&r);
        let mut trace = Vec::new();
        let mut polished = false;
        for iter in 0..=self.opts.newton_max_iter {
            trace.push(rn);
            if !rn.is_finite() || w.iter().any(|v| !v.is_finite()) {
                return Err(NonlinearError::NanDetected { it, is });
            }
            let scale = 1.0 + max_abs(&w);
            if rn <= tol * scale && (polished || rn <= 1e-15 * scale) {
                return Ok((w, iter));
            }
            if iter == self.opts.newton_max_iter {
                break;
            }
            let lu = self.jacobian(t, s, dt, &w, diag).map_err(|_| NonlinearError::NewtonDivergence {
                it,
                is,
                trace: trace.clone(),
            })?;
            let mut delta: Vec<f64> = r.iter().map(|v| -v).collect();
            lu.solve(&mut delta);
            if rn <= tol * scale {
                // One extra step from a converged iterate removes the remaining tolerance-level error.
                polished = true;
            }
            let mut lambda = 1.0;
            let mut accepted = false;
            let mut w_try = w.clone();
            while lambda >= 1.0 / 4096.0 {
                for i in 0..n {
                    w_try[i] = w[i] + lambda * delta[i];
                }
                self.residual(t, s, dt, &w_try, prev, diag, &mut r_try);
                let rt = max_abs(&r_try);
                if rt.is_finite() && (rt <= (1.0 - 1e-4 * lambda) * rn || (polished && rt <= tol * scale)) {
                    accepted = true;
                    rn = rt;
                    break;
                }
                lambda *= 0.5;
            }
            if !accepted {
                if polished {
                    return Ok((w, iter));
                }
                return Err(NonlinearError::NewtonDivergence { it, is, trace });
            }
            std::mem::swap(&mut w, &mut w_try);
            std::mem::swap(&mut r, &mut r_try);
        }
        Err(NonlinearError::NewtonDivergence { it, is, trace })
    }
}

pub(crate) fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, x| if x.is_nan() { f64::NAN } else { m.max(x.abs()) })
}
