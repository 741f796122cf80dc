use std::io::Write;

use crate::jet::{jet_at, JetLayout};
use crate::{GridError, TriTimeGrid};

/// Samples of an `m`-vector field `u(t, s, y)` on the admissible pairs of a grid.
///
/// Storage is `[pair][node][component]`, pairs in lexicographic `(t, s)` order.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    grid: TriTimeGrid,
    m: usize,
    values: Vec<f64>,
}

impl FlowField {
    pub fn zeros(grid: &TriTimeGrid, m: usize) -> Self {
        let len = grid.n_pairs() * grid.space().len() * m;
        Self { grid: grid.clone(), m, values: vec![0.0; len] }
    }

    /// Fills every admissible node with `f(t, s, y, out)`.
    pub fn from_fn(grid: &TriTimeGrid, m: usize, f: impl Fn(f64, f64, &[f64], &mut [f64])) -> Self {
        let mut field = Self::zeros(grid, m);
        let mut y = vec![0.0; grid.space().dim()];
        for (it, is) in grid.pairs() {
            let (t, s) = (grid.time(it), grid.time(is));
            for node in 0..grid.space().len() {
                grid.space().coords(node, &mut y);
                let o = field.offset(it, is, node);
                f(t, s, &y, &mut field.values[o..o + m]);
            }
        }
        field
    }

    pub fn from_values(grid: &TriTimeGrid, m: usize, values: Vec<f64>) -> Result<Self, GridError> {
        if values.len() != grid.n_pairs() * grid.space().len() * m {
            return Err(GridError::InvalidParameter("value count does not match grid".into()));
        }
        Ok(Self { grid: grid.clone(), m, values })
    }

    pub fn grid(&self) -> &TriTimeGrid {
        &self.grid
    }
    pub fn m(&self) -> usize {
        self.m
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    fn slice_len(&self) -> usize {
        self.grid.space().len() * self.m
    }

    fn offset(&self, it: usize, is: usize, node: usize) -> usize {
        let p = self.grid.pair_index(it, is).unwrap_or_else(|| panic!("pair ({it}, {is}) outside grid"));
        p * self.slice_len() + node * self.m
    }

    pub fn get(&self, it: usize, is: usize, node: usize, comp: usize) -> f64 {
        self.values[self.offset(it, is, node) + comp]
    }

    pub fn set(&mut self, it: usize, is: usize, node: usize, comp: usize, v: f64) {
        let o = self.offset(it, is, node) + comp;
        self.values[o] = v;
    }

    /// Spatial slice `u(t_it, s_is, ·)`, interleaved by component.
    pub fn slice(&self, it: usize, is: usize) -> &[f64] {
        let o = self.offset(it, is, 0);
        &self.values[o..o + self.slice_len()]
    }

    pub fn slice_mut(&mut self, it: usize, is: usize) -> &mut [f64] {
        let o = self.offset(it, is, 0);
        let len = self.slice_len();
        &mut self.values[o..o + len]
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn max_abs_diff(&self, other: &FlowField) -> f64 {
        assert_eq!(self.values.len(), other.values.len(), "fields on different grids");
        self.values.iter().zip(&other.values).fold(0.0, |a, (x, y)| a.max((x - y).abs()))
    }

    /// `self + c * other`, nodewise.
    pub fn axpy(&self, c: f64, other: &FlowField) -> FlowField {
        assert_eq!(self.values.len(), other.values.len(), "fields on different grids");
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + c * b).collect();
        FlowField { grid: self.grid.clone(), m: self.m, values }
    }

    pub fn scaled(&self, c: f64) -> FlowField {
        FlowField { grid: self.grid.clone(), m: self.m, values: self.values.iter().map(|v| c * v).collect() }
    }

    /// Writes `t,s,y1..yd,u1..um` rows in lexicographic `(t, s, y)` order with 17 significant digits.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), GridError> {
        let d = self.grid.space().dim();
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["t".to_string(), "s".to_string()];
        header.extend((1..=d).map(|i| format!("y{i}")));
        header.extend((1..=self.m).map(|a| format!("u{a}")));
        wr.write_record(&header)?;
        let mut y = vec![0.0; d];
        let mut rec: Vec<String> = Vec::with_capacity(2 + d + self.m);
        for (it, is) in self.grid.pairs() {
            for node in 0..self.grid.space().len() {
                self.grid.space().coords(node, &mut y);
                rec.clear();
                rec.push(fmt17(self.grid.time(it)));
                rec.push(fmt17(self.grid.time(is)));
                rec.extend(y.iter().map(|&v| fmt17(v)));
                let o = self.offset(it, is, node);
                rec.extend(self.values[o..o + self.m].iter().map(|&v| fmt17(v)));
                wr.write_record(&rec)?;
            }
        }
        wr.flush()?;
        Ok(())
    }
}

/// Float formatting with 17 significant digits.
pub(crate) fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}

/// `v(t, s, y) = u(T - t, T - s, y)` on the opposite orientation. Pure index permutation,
/// so applying it twice returns the input bit for bit.
pub fn time_reflect(field: &FlowField) -> FlowField {
    let grid = field.grid.reflected();
    let n = grid.steps();
    let mut out = FlowField::zeros(&grid, field.m);
    for (it, is) in grid.pairs() {
        out.slice_mut(it, is).copy_from_slice(field.slice(n - it, n - is));
    }
    out
}

/// Diagonal jets `u(s, s, y)`, `u_y(s, s, y)`, `u_yy(s, s, y)` for every s-node.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalField {
    grid: TriTimeGrid,
    m: usize,
    jets: Vec<f64>,
}

impl DiagonalField {
    pub fn layout(&self) -> JetLayout {
        JetLayout::new(self.m, self.grid.space().dim())
    }
    pub fn grid(&self) -> &TriTimeGrid {
        &self.grid
    }
    pub fn m(&self) -> usize {
        self.m
    }

    /// Jets of all nodes at s-index `is`, concatenated.
    pub fn at(&self, is: usize) -> &[f64] {
        let per = self.layout().len() * self.grid.space().len();
        &self.jets[is * per..(is + 1) * per]
    }

    /// Jet at s-index `is` and spatial `node`.
    pub fn jet(&self, is: usize, node: usize) -> &[f64] {
        let len = self.layout().len();
        &self.at(is)[node * len..(node + 1) * len]
    }

    pub fn from_jets(grid: &TriTimeGrid, m: usize, jets: Vec<f64>) -> Result<Self, GridError> {
        let per = JetLayout::new(m, grid.space().dim()).len() * grid.space().len();
        if jets.len() != per * (grid.steps() + 1) {
            return Err(GridError::InvalidParameter("jet count does not match grid".into()));
        }
        Ok(Self { grid: grid.clone(), m, jets })
    }
}

/// Copies `u(s, s, ·)` and differentiates it with the second-order stencils.
pub fn extract_diagonal(field: &FlowField) -> DiagonalField {
    let grid = &field.grid;
    let m = field.m;
    let lay = JetLayout::new(m, grid.space().dim());
    let per_node = lay.len();
    let nn = grid.space().len();
    let mut jets = vec![0.0; per_node * nn * (grid.steps() + 1)];
    for is in 0..=grid.steps() {
        let sl = field.slice(is, is);
        for node in 0..nn {
            let o = (is * nn + node) * per_node;
            jet_at(grid.space(), sl, m, node, &mut jets[o..o + per_node]);
        }
    }
    DiagonalField { grid: grid.clone(), m, jets }
}
