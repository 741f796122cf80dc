//! Flat layout of a second-order jet `(u, u_y, u_yy)` of an `m`-vector field in `d` dimensions.
//!
//! Entries are stored as `[values (m) | gradients (m*d) | Hessians (m*d*d)]`.
//! Hessians keep all `d*d` entries, so derivatives taken entrywise pair naturally
//! with ordered [`Deriv::D2`] stencils.

use crate::stencil::{Deriv, Stencil};
use crate::SpatialGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JetLayout {
    pub m: usize,
    pub d: usize,
}

impl JetLayout {
    pub fn new(m: usize, d: usize) -> Self {
        Self { m, d }
    }
    pub fn len(&self) -> usize {
        self.m * (1 + self.d + self.d * self.d)
    }
    pub fn is_empty(&self) -> bool {
        self.m == 0
    }
    pub fn value(&self, b: usize) -> usize {
        b
    }
    pub fn grad(&self, b: usize, i: usize) -> usize {
        self.m + b * self.d + i
    }
    pub fn hess(&self, b: usize, i: usize, j: usize) -> usize {
        self.m + self.m * self.d + (b * self.d + i) * self.d + j
    }

    /// Component and derivative addressed by flat entry `e`.
    pub fn entry(&self, e: usize) -> (usize, Deriv) {
        let (m, d) = (self.m, self.d);
        if e < m {
            (e, Deriv::Value)
        } else if e < m + m * d {
            let r = e - m;
            (r / d, Deriv::D1(r % d))
        } else {
            let r = e - m - m * d;
            let b = r / (d * d);
            let q = r % (d * d);
            (b, Deriv::D2(q / d, q % d))
        }
    }

    /// Flat index of component `b` and derivative `deriv`.
    pub fn index(&self, b: usize, deriv: Deriv) -> usize {
        match deriv {
            Deriv::Value => self.value(b),
            Deriv::D1(i) => self.grad(b, i),
            Deriv::D2(i, j) => self.hess(b, i, j),
        }
    }
}

/// Jet of an interleaved slice (`values[node * m + b]`) at `node`.
/// Mixed Hessian entries are computed once and mirrored, so the result is exactly symmetric.
pub fn jet_at(space: &SpatialGrid, values: &[f64], m: usize, node: usize, out: &mut [f64]) {
    let d = space.dim();
    let lay = JetLayout::new(m, d);
    let mut st = Stencil::with_capacity(16);
    for b in 0..m {
        out[lay.value(b)] = values[node * m + b];
    }
    for i in 0..d {
        space.stencil(node, Deriv::D1(i), &mut st);
        for b in 0..m {
            out[lay.grad(b, i)] = st.iter().map(|&(n, w)| w * values[n * m + b]).sum();
        }
    }
    for i in 0..d {
        for j in i..d {
            space.stencil(node, Deriv::D2(i, j), &mut st);
            for b in 0..m {
                let v: f64 = st.iter().map(|&(n, w)| w * values[n * m + b]).sum();
                out[lay.hess(b, i, j)] = v;
                out[lay.hess(b, j, i)] = v;
            }
        }
    }
}

/// Jets at every node of a slice, concatenated.
pub fn slice_jets(space: &SpatialGrid, values: &[f64], m: usize) -> Vec<f64> {
    let len = JetLayout::new(m, space.dim()).len();
    let mut out = vec![0.0; len * space.len()];
    for node in 0..space.len() {
        jet_at(space, values, m, node, &mut out[node * len..(node + 1) * len]);
    }
    out
}
