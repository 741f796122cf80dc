//! The random fields `Y = u(X)`, `Z = sigma^T u_y`, `Gamma = sigma^T (sigma^T u_y)_y` and
//! `A = D(sigma^T u_y)` sampled at off-grid points.
//!
//! Node quantities come from the grid stencils; points between nodes use piecewise-linear
//! interpolation on the triangulated `(t, s)` grid times multilinear interpolation in `y`.
//! Triangles are cut along lines parallel to `t = s`, so a diagonal point only touches
//! diagonal nodes.

use std::fmt;
use std::sync::Arc;

use tic_grid::jet::{jet_at, JetLayout};
use tic_grid::stencil::{Deriv, Stencil};
use tic_grid::{extract_diagonal, DiagonalField, FlowField, Orientation, SpatialGrid};
use tic_linear::DatumFn;
use tic_nonlinear::Nonlinearity;

use crate::{FbsdeError, StateSde};

/// Rounds values within `1e-9` of an integer, so grid points hit their node exactly.
fn snap(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() < 1e-9 { r } else { x }
}

/// A backward solution `u` of `u_s + F = 0` with its state equation and generator.
#[derive(Clone)]
pub struct FkBundle {
    pub u: FlowField,
    pub sde: StateSde,
    pub f: Arc<dyn Nonlinearity>,
    /// Terminal datum `g(t, y)`; the terminal slice of `u` is used when absent.
    pub g: Option<DatumFn>,
    diag: DiagonalField,
}

impl fmt::Debug for FkBundle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FkBundle").field("sde", &self.sde).field("m", &self.u.m()).finish()
    }
}

/// Fields at one `(t, s, x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FkFields {
    /// `Y^a = u^a(t, s, x)`.
    pub y: Vec<f64>,
    /// Jet of `u(t, s, .)` at `x` in [`JetLayout`] order; the first `m` entries are `Y`.
    pub jet: Vec<f64>,
    /// `Z^a_l` at `[a * k + l]`.
    pub z: Vec<f64>,
    /// `Gamma^a_{jl}` at `[(a * k + j) * k + l]`.
    pub gamma: Vec<f64>,
    /// `A^a_j` at `[a * k + j]`.
    pub a: Vec<f64>,
}

impl FkBundle {
    pub fn new(u: FlowField, sde: StateSde, f: Arc<dyn Nonlinearity>, g: Option<DatumFn>) -> Result<Self, FbsdeError> {
        let grid = u.grid();
        if grid.orientation() != Orientation::Backward {
            return Err(FbsdeError::InvalidParameter("the solution must live on a backward grid".into()));
        }
        if sde.d != grid.space().dim() || f.d() != sde.d || f.m() != u.m() {
            return Err(FbsdeError::InvalidParameter("dimensions of u, the state equation and F differ".into()));
        }
        let diag = extract_diagonal(&u);
        Ok(Self { u, sde, f, g, diag })
    }

    pub fn m(&self) -> usize {
        self.u.m()
    }
    pub fn layout(&self) -> JetLayout {
        JetLayout::new(self.u.m(), self.sde.d)
    }
    pub fn diagonal(&self) -> &DiagonalField {
        &self.diag
    }
    fn space(&self) -> &SpatialGrid {
        self.u.grid().space()
    }

    /// Jet of `u` at grid pair `(it, is)` and `node`; diagonal pairs read the diagonal field.
    pub fn node_jet(&self, it: usize, is: usize, node: usize) -> Vec<f64> {
        if it == is {
            return self.diag.jet(is, node).to_vec();
        }
        let mut out = vec![0.0; self.layout().len()];
        jet_at(self.space(), self.u.slice(it, is), self.u.m(), node, &mut out);
        out
    }

    /// `phi = sigma^T u_y` at a node, `[a * k + l]`.
    fn phi(&self, it: usize, is: usize, node: usize) -> Vec<f64> {
        let (m, d, k) = (self.u.m(), self.sde.d, self.sde.k);
        let space = self.space();
        let s = self.u.grid().time(is);
        let y = space.coords_vec(node);
        let mut sig = vec![0.0; d * k];
        (self.sde.sigma)(s, &y, &mut sig);
        let vals = self.u.slice(it, is);
        let mut out = vec![0.0; m * k];
        let mut st = Stencil::new();
        for i in 0..d {
            space.stencil(node, Deriv::D1(i), &mut st);
            for a in 0..m {
                let ui: f64 = st.iter().map(|&(n, w)| w * vals[n * m + a]).sum();
                for l in 0..k {
                    out[a * k + l] += sig[i * k + l] * ui;
                }
            }
        }
        out
    }

    /// Node quantities `[jet | phi | phi_y | phi_yy | phi_s]`.
    fn node_quantities(&self, it: usize, is: usize, node: usize, full: bool) -> Vec<f64> {
        let (m, d, k) = (self.u.m(), self.sde.d, self.sde.k);
        let mk = m * k;
        let mut q = self.node_jet(it, is, node);
        let phi = self.phi(it, is, node);
        q.extend_from_slice(&phi);
        if !full {
            return q;
        }
        let space = self.space();
        let mut st = Stencil::new();
        let mut apply = |dv: Deriv| {
            space.stencil(node, dv, &mut st);
            let mut acc = vec![0.0; mk];
            for &(n, w) in st.iter() {
                let p = if n == node { phi.clone() } else { self.phi(it, is, n) };
                for c in 0..mk {
                    acc[c] += w * p[c];
                }
            }
            acc
        };
        let mut phi_y = vec![0.0; mk * d];
        for i in 0..d {
            let v = apply(Deriv::D1(i));
            for c in 0..mk {
                phi_y[c * d + i] = v[c];
            }
        }
        let mut phi_yy = vec![0.0; mk * d * d];
        for i in 0..d {
            for j in i..d {
                let v = apply(Deriv::D2(i, j));
                for c in 0..mk {
                    phi_yy[(c * d + i) * d + j] = v[c];
                    phi_yy[(c * d + j) * d + i] = v[c];
                }
            }
        }
        q.extend_from_slice(&phi_y);
        q.extend_from_slice(&phi_yy);
        q.extend_from_slice(&self.phi_s(it, is, node));
        q
    }

    /// Finite difference of `phi` in `s` at fixed `t`.
    fn phi_s(&self, it: usize, is: usize, node: usize) -> Vec<f64> {
        let grid = self.u.grid();
        let dt = grid.dt();
        let ok = |j: isize| j >= 0 && grid.contains(it, j as usize);
        let j = is as isize;
        let p = |j: isize| self.phi(it, j as usize, node);
        let comb = |terms: &[(isize, f64)]| {
            let mut out = vec![0.0; self.u.m() * self.sde.k];
            for &(jj, w) in terms {
                for (o, v) in out.iter_mut().zip(p(jj)) {
                    *o += w * v / dt;
                }
            }
            out
        };
        if ok(j - 1) && ok(j + 1) {
            comb(&[(j + 1, 0.5), (j - 1, -0.5)])
        } else if ok(j + 1) && ok(j + 2) {
            comb(&[(j, -1.5), (j + 1, 2.0), (j + 2, -0.5)])
        } else if ok(j - 1) && ok(j - 2) {
            comb(&[(j, 1.5), (j - 1, -2.0), (j - 2, 0.5)])
        } else if ok(j + 1) {
            comb(&[(j + 1, 1.0), (j, -1.0)])
        } else if ok(j - 1) {
            comb(&[(j, 1.0), (j - 1, -1.0)])
        } else {
            vec![0.0; self.u.m() * self.sde.k]
        }
    }

    /// Grid pairs and weights of the `(t, s)` interpolant.
    fn time_weights(&self, t: f64, s: f64) -> Result<Vec<(usize, usize, f64)>, FbsdeError> {
        let grid = self.u.grid();
        let n = grid.steps();
        let tf = grid.t_final();
        let tol = 1e-9 * (1.0 + tf);
        if !(t >= -tol && s <= tf + tol && t <= s + tol) {
            return Err(FbsdeError::InvalidParameter(format!("(t, s) = ({t}, {s}) outside the backward triangle")));
        }
        let dt = grid.dt();
        let locate = |v: f64| {
            let x = snap((v / dt).clamp(0.0, n as f64));
            let i = (x.floor() as usize).min(n - 1);
            (i, (x - i as f64).clamp(0.0, 1.0))
        };
        let (i, mut fa) = locate(t);
        let (j, fc) = locate(s);
        if i == j && fa > fc {
            fa = fc;
        }
        let raw = if fc >= fa {
            [(i, j, 1.0 - fc), (i, j + 1, fc - fa), (i + 1, j + 1, fa)]
        } else {
            [(i, j, 1.0 - fa), (i + 1, j, fa - fc), (i + 1, j + 1, fc)]
        };
        Ok(raw.into_iter().filter(|&(_, _, w)| w != 0.0).collect())
    }

    fn interpolate(&self, t: f64, s: f64, x: &[f64], full: bool) -> Result<Vec<f64>, FbsdeError> {
        let space = self.space();
        let (mut idx, mut frac) = space.locate(x).ok_or_else(|| FbsdeError::OutOfBox { s, y: x.to_vec() })?;
        for ax in 0..space.dim() {
            let f = snap(frac[ax]);
            if f == 1.0 && idx[ax] + 2 < space.nodes_per_axis() {
                idx[ax] += 1;
                frac[ax] = 0.0;
            } else {
                frac[ax] = f;
            }
        }
        let d = space.dim();
        let mut acc: Vec<f64> = Vec::new();
        for (it, is, wt) in self.time_weights(t, s)? {
            for corner in 0..(1usize << d) {
                let mut w = wt;
                let mut id = idx.clone();
                for ax in 0..d {
                    if corner >> ax & 1 == 1 {
                        id[ax] += 1;
                        w *= frac[ax];
                    } else {
                        w *= 1.0 - frac[ax];
                    }
                }
                if w == 0.0 {
                    continue;
                }
                let q = self.node_quantities(it, is, space.node_from_indices(&id), full);
                if acc.is_empty() {
                    acc = vec![0.0; q.len()];
                }
                for (a, v) in acc.iter_mut().zip(&q) {
                    *a += w * v;
                }
            }
        }
        Ok(acc)
    }

    /// Jet of `u(t, s, .)` at `x`.
    pub fn jet(&self, t: f64, s: f64, x: &[f64]) -> Result<Vec<f64>, FbsdeError> {
        let mut q = self.interpolate(t, s, x, false)?;
        q.truncate(self.layout().len());
        Ok(q)
    }

    /// `(jet, Z)` at `(t, s, x)` without the derivative fields.
    pub fn jet_and_z(&self, t: f64, s: f64, x: &[f64]) -> Result<(Vec<f64>, Vec<f64>), FbsdeError> {
        let q = self.interpolate(t, s, x, false)?;
        let len = self.layout().len();
        Ok((q[..len].to_vec(), q[len..].to_vec()))
    }

    /// All four fields at `(t, s, x)`.
    pub fn fields_at(&self, t: f64, s: f64, x: &[f64]) -> Result<FkFields, FbsdeError> {
        let (m, d, k) = (self.u.m(), self.sde.d, self.sde.k);
        let mk = m * k;
        let q = self.interpolate(t, s, x, true)?;
        let len = self.layout().len();
        let (jet, rest) = q.split_at(len);
        let (phi, rest) = rest.split_at(mk);
        let (phi_y, rest) = rest.split_at(mk * d);
        let (phi_yy, phi_s) = rest.split_at(mk * d * d);
        let mut sig = vec![0.0; d * k];
        let mut b = vec![0.0; d];
        (self.sde.sigma)(s, x, &mut sig);
        (self.sde.b)(s, x, &mut b);
        let mut gamma = vec![0.0; mk * k];
        let mut a_f = vec![0.0; mk];
        for c in 0..mk {
            for l in 0..k {
                gamma[c * k + l] = (0..d).map(|i| sig[i * k + l] * phi_y[c * d + i]).sum();
            }
            let mut v = phi_s[c];
            for i in 0..d {
                v += b[i] * phi_y[c * d + i];
                for i2 in 0..d {
                    let ss: f64 = (0..k).map(|l| sig[i * k + l] * sig[i2 * k + l]).sum();
                    v += 0.5 * ss * phi_yy[(c * d + i) * d + i2];
                }
            }
            a_f[c] = v;
        }
        Ok(FkFields { y: jet[..m].to_vec(), jet: jet.to_vec(), z: phi.to_vec(), gamma, a: a_f })
    }

    /// Generator `F - (1/2) tr(sigma sigma^T u_yy) - b . u_y` at `(t, s, x)` from given jets.
    pub fn driver(&self, t: f64, s: f64, x: &[f64], local: &[f64], diag: &[f64]) -> Vec<f64> {
        let (m, d, k) = (self.u.m(), self.sde.d, self.sde.k);
        let lay = self.layout();
        let mut sig = vec![0.0; d * k];
        let mut b = vec![0.0; d];
        (self.sde.sigma)(s, x, &mut sig);
        (self.sde.b)(s, x, &mut b);
        (0..m)
            .map(|a| {
                let mut v = self.f.eval(a, t, s, x, local, diag);
                for i in 0..d {
                    v -= b[i] * local[lay.grad(a, i)];
                    for i2 in 0..d {
                        let ss: f64 = (0..k).map(|l| sig[i * k + l] * sig[i2 * k + l]).sum();
                        v -= 0.5 * ss * local[lay.hess(a, i, i2)];
                    }
                }
                v
            })
            .collect()
    }

    /// Terminal value `g(t, x)`.
    pub fn terminal(&self, t: f64, x: &[f64]) -> Result<Vec<f64>, FbsdeError> {
        match &self.g {
            Some(g) => Ok((0..self.u.m()).map(|a| g(a, t, x)).collect()),
            None => {
                let mut j = self.jet(t, self.u.grid().t_final(), x)?;
                j.truncate(self.u.m());
                Ok(j)
            }
        }
    }
}
