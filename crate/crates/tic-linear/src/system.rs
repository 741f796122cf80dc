use tic_grid::stencil::Deriv;
use tic_grid::TriTimeGrid;

use crate::LinearSystemSpec;

/// A linear nonlocal system sampled at grid indices.
///
/// Coefficient buffers use the layout `[(a * nd + k) * m + b]` with `k` indexing
/// [`Deriv::all`]; `nd = 1 + d + d * d`.
pub trait NodalSystem: Sync {
    fn m(&self) -> usize;
    fn has_diagonal(&self) -> bool;
    /// Coefficients of `d_k u^b(t,s,y)` (`local`) and `d_k u^b(s,s,y)` (`diag`) at `(it, is, node)`.
    fn coefficients(&self, it: usize, is: usize, node: usize, local: &mut [f64], diag: &mut [f64]);
    fn source(&self, it: usize, is: usize, node: usize, out: &mut [f64]);
    /// Initial-line datum of slice `it`.
    fn datum(&self, it: usize, node: usize, out: &mut [f64]);
    /// Dirichlet values at a boundary node; `false` selects homogeneous Neumann rows.
    fn dirichlet(&self, it: usize, is: usize, node: usize, out: &mut [f64]) -> bool;
}

/// Number of derivative slots for dimension `d`.
pub fn n_derivs(d: usize) -> usize {
    1 + d + d * d
}

/// [`LinearSystemSpec`] evaluated on a grid.
pub struct SpecSystem<'a> {
    spec: &'a LinearSystemSpec,
    times: Vec<f64>,
    coords: Vec<Vec<f64>>,
    derivs: Vec<Deriv>,
}

impl<'a> SpecSystem<'a> {
    pub fn new(spec: &'a LinearSystemSpec, grid: &TriTimeGrid) -> Self {
        let space = grid.space();
        Self {
            spec,
            times: grid.times(),
            coords: (0..space.len()).map(|n| space.coords_vec(n)).collect(),
            derivs: Deriv::all(space.dim()),
        }
    }

    pub fn time(&self, k: usize) -> f64 {
        self.times[k]
    }
    pub fn coords(&self, node: usize) -> &[f64] {
        &self.coords[node]
    }
    pub fn derivs(&self) -> &[Deriv] {
        &self.derivs
    }
    pub fn spec(&self) -> &LinearSystemSpec {
        self.spec
    }

    /// Fills `out` with a coefficient evaluator at explicit times.
    pub fn fill(
        &self,
        c: &dyn Fn(usize, Deriv, usize, f64, f64, &[f64]) -> f64,
        t: f64,
        s: f64,
        node: usize,
        out: &mut [f64],
    ) {
        let m = self.spec.m;
        let nd = self.derivs.len();
        let y = &self.coords[node];
        for a in 0..m {
            for (k, &dv) in self.derivs.iter().enumerate() {
                for b in 0..m {
                    out[(a * nd + k) * m + b] = c(a, dv, b, t, s, y);
                }
            }
        }
    }
}

impl NodalSystem for SpecSystem<'_> {
    fn m(&self) -> usize {
        self.spec.m
    }
    fn has_diagonal(&self) -> bool {
        self.spec.b.is_some()
    }
    fn coefficients(&self, it: usize, is: usize, node: usize, local: &mut [f64], diag: &mut [f64]) {
        let (t, s) = (self.times[it], self.times[is]);
        self.fill(&*self.spec.a, t, s, node, local);
        match &self.spec.b {
            Some(b) => self.fill(&**b, t, s, node, diag),
            None => diag.iter_mut().for_each(|v| *v = 0.0),
        }
    }
    fn source(&self, it: usize, is: usize, node: usize, out: &mut [f64]) {
        let (t, s) = (self.times[it], self.times[is]);
        for (a, o) in out.iter_mut().enumerate() {
            *o = (self.spec.f)(a, t, s, &self.coords[node]);
        }
    }
    fn datum(&self, it: usize, node: usize, out: &mut [f64]) {
        for (a, o) in out.iter_mut().enumerate() {
            *o = (self.spec.g)(a, self.times[it], &self.coords[node]);
        }
    }
    fn dirichlet(&self, it: usize, is: usize, node: usize, out: &mut [f64]) -> bool {
        match &self.spec.exact {
            Some(u) => {
                for (a, o) in out.iter_mut().enumerate() {
                    *o = u(a, self.times[it], self.times[is], &self.coords[node]);
                }
                true
            }
            None => false,
        }
    }
}
