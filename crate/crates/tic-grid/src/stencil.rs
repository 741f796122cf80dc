//! Second-order finite-difference stencils on a [`SpatialGrid`].
//!
//! Interior nodes use central differences. Boundary nodes use second-order
//! one-sided formulas; the one-sided second derivative uses four points.

use crate::SpatialGrid;

/// A spatial derivative of order at most two.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Deriv {
    Value,
    D1(usize),
    D2(usize, usize),
}

impl Deriv {
    pub fn order(self) -> usize {
        match self {
            Deriv::Value => 0,
            Deriv::D1(_) => 1,
            Deriv::D2(_, _) => 2,
        }
    }

    /// `Value`, every `D1(i)` and every ordered `D2(i, j)` for dimension `d`.
    pub fn all(d: usize) -> Vec<Deriv> {
        let mut v = vec![Deriv::Value];
        v.extend((0..d).map(Deriv::D1));
        for i in 0..d {
            for j in 0..d {
                v.push(Deriv::D2(i, j));
            }
        }
        v
    }
}

/// Sparse weights `(node, weight)`; at most 16 entries for the stencils used here.
pub type Stencil = Vec<(usize, f64)>;

fn first_1d(k: usize, m: usize, h: f64) -> [(isize, f64); 3] {
    let c = 1.0 / (2.0 * h);
    if k == 0 {
        [(0, -3.0 * c), (1, 4.0 * c), (2, -c)]
    } else if k == m - 1 {
        [(0, 3.0 * c), (-1, -4.0 * c), (-2, c)]
    } else {
        [(-1, -c), (0, 0.0), (1, c)]
    }
}

fn second_1d(k: usize, m: usize, h: f64) -> [(isize, f64); 4] {
    let c = 1.0 / (h * h);
    if k == 0 {
        [(0, 2.0 * c), (1, -5.0 * c), (2, 4.0 * c), (3, -c)]
    } else if k == m - 1 {
        [(0, 2.0 * c), (-1, -5.0 * c), (-2, 4.0 * c), (-3, -c)]
    } else {
        [(-1, c), (0, -2.0 * c), (1, c), (0, 0.0)]
    }
}

impl SpatialGrid {
    /// First-derivative stencil along `axis` at `node`.
    pub fn first_stencil(&self, node: usize, axis: usize, out: &mut Stencil) {
        out.clear();
        let k = self.axis_index(node, axis);
        for (off, w) in first_1d(k, self.nodes_per_axis(), self.spacing(axis)) {
            if w != 0.0 {
                out.push((self.shift(node, axis, off).expect("stencil inside grid"), w));
            }
        }
    }

    /// Stencil of `deriv` at `node`. Mixed derivatives are products of two
    /// first-derivative stencils, so `D2(i, j)` and `D2(j, i)` give identical weights.
    pub fn stencil(&self, node: usize, deriv: Deriv, out: &mut Stencil) {
        out.clear();
        match deriv {
            Deriv::Value => out.push((node, 1.0)),
            Deriv::D1(ax) => self.first_stencil(node, ax, out),
            Deriv::D2(i, j) if i == j => {
                let k = self.axis_index(node, i);
                for (off, w) in second_1d(k, self.nodes_per_axis(), self.spacing(i)) {
                    if w != 0.0 {
                        out.push((self.shift(node, i, off).expect("stencil inside grid"), w));
                    }
                }
            }
            Deriv::D2(i, j) => {
                let (a, b) = if i < j { (i, j) } else { (j, i) };
                let mut outer = Stencil::new();
                self.first_stencil(node, a, &mut outer);
                let mut inner = Stencil::new();
                for (n1, w1) in outer {
                    self.first_stencil(n1, b, &mut inner);
                    for &(n2, w2) in &inner {
                        out.push((n2, w1 * w2));
                    }
                }
            }
        }
    }

    /// Applies `deriv` at `node` to component `comp` of an interleaved field with `m` components.
    pub fn apply(&self, values: &[f64], m: usize, comp: usize, node: usize, deriv: Deriv) -> f64 {
        let mut st = Stencil::with_capacity(9);
        self.stencil(node, deriv, &mut st);
        st.iter().map(|&(n, w)| w * values[n * m + comp]).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_gradient_exact_everywhere() {
        let g = SpatialGrid::new(&[(-1.0, 2.0)], 9).unwrap();
        let v: Vec<f64> = (0..g.len()).map(|n| 3.0 * g.coords_vec(n)[0] - 1.0).collect();
        for n in 0..g.len() {
            assert!((g.apply(&v, 1, 0, n, Deriv::D1(0)) - 3.0).abs() < 1e-12);
            assert!(g.apply(&v, 1, 0, n, Deriv::D2(0, 0)).abs() < 1e-10);
        }
    }

    #[test]
    fn quadratic_hessian_exact_with_boundaries() {
        let g = SpatialGrid::new(&[(-1.0, 1.0), (0.0, 2.0)], 7).unwrap();
        let f = |y: &[f64]| y[0] * y[0] + 3.0 * y[0] * y[1] - 2.0 * y[1] * y[1];
        let v: Vec<f64> = (0..g.len()).map(|n| f(&g.coords_vec(n))).collect();
        for n in 0..g.len() {
            assert!((g.apply(&v, 1, 0, n, Deriv::D2(0, 0)) - 2.0).abs() < 1e-9);
            assert!((g.apply(&v, 1, 0, n, Deriv::D2(1, 1)) + 4.0).abs() < 1e-9);
            assert!((g.apply(&v, 1, 0, n, Deriv::D2(0, 1)) - 3.0).abs() < 1e-9);
            assert_eq!(
                g.apply(&v, 1, 0, n, Deriv::D2(0, 1)),
                g.apply(&v, 1, 0, n, Deriv::D2(1, 0))
            );
        }
    }
}
