use crate::GridError;

/// Which triangle of the `(t, s)` square carries the unknowns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Orientation {
    /// Pairs with `s <= t`; data are given at `s = 0`.
    Forward,
    /// Pairs with `t <= s`; data are given at `s = T`.
    Backward,
}

impl Orientation {
    pub fn flipped(self) -> Self {
        match self {
            Orientation::Forward => Orientation::Backward,
            Orientation::Backward => Orientation::Forward,
        }
    }
}

/// Uniform tensor grid on a box in `R^d`, `M` nodes per axis.
///
/// Nodes are numbered row-major with the first axis slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialGrid {
    d: usize,
    m_nodes: usize,
    lo: Vec<f64>,
    hi: Vec<f64>,
    h: Vec<f64>,
    strides: Vec<usize>,
    n: usize,
}

impl SpatialGrid {
    pub fn new(bounds: &[(f64, f64)], m_nodes: usize) -> Result<Self, GridError> {
        let d = bounds.len();
        if d == 0 {
            return Err(GridError::InvalidParameter("spatial dimension must be at least 1".into()));
        }
        if m_nodes < 5 {
            return Err(GridError::InvalidParameter(format!("M = {m_nodes} < 5")));
        }
        for (i, &(a, b)) in bounds.iter().enumerate() {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(GridError::InvalidParameter(format!(
                    "degenerate box in dimension {i}: [{a}, {b}]"
                )));
            }
        }
        let lo: Vec<f64> = bounds.iter().map(|b| b.0).collect();
        let hi: Vec<f64> = bounds.iter().map(|b| b.1).collect();
        let h = bounds.iter().map(|&(a, b)| (b - a) / (m_nodes - 1) as f64).collect();
        let mut strides = vec![1usize; d];
        for i in (0..d.saturating_sub(1)).rev() {
            strides[i] = strides[i + 1] * m_nodes;
        }
        let n = m_nodes.pow(d as u32);
        Ok(Self { d, m_nodes, lo, hi, h, strides, n })
    }

    pub fn dim(&self) -> usize {
        self.d
    }
    /// Nodes per axis.
    pub fn nodes_per_axis(&self) -> usize {
        self.m_nodes
    }
    pub fn len(&self) -> usize {
        self.n
    }
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }
    pub fn spacing(&self, axis: usize) -> f64 {
        self.h[axis]
    }
    pub fn lower(&self) -> &[f64] {
        &self.lo
    }
    pub fn upper(&self) -> &[f64] {
        &self.hi
    }
    pub fn stride(&self, axis: usize) -> usize {
        self.strides[axis]
    }

    /// Index of `node` along `axis`.
    pub fn axis_index(&self, node: usize, axis: usize) -> usize {
        (node / self.strides[axis]) % self.m_nodes
    }

    /// Coordinate of grid index `k` on `axis`, computed directly from `k`.
    pub fn axis_coord(&self, axis: usize, k: usize) -> f64 {
        if k == self.m_nodes - 1 {
            return self.hi[axis];
        }
        self.lo[axis] + k as f64 * (self.hi[axis] - self.lo[axis]) / (self.m_nodes - 1) as f64
    }

    pub fn coords(&self, node: usize, out: &mut [f64]) {
        for (axis, o) in out.iter_mut().enumerate().take(self.d) {
            *o = self.axis_coord(axis, self.axis_index(node, axis));
        }
    }

    pub fn coords_vec(&self, node: usize) -> Vec<f64> {
        let mut y = vec![0.0; self.d];
        self.coords(node, &mut y);
        y
    }

    /// First axis on which `node` sits on the box boundary, if any.
    pub fn boundary_axis(&self, node: usize) -> Option<usize> {
        (0..self.d).find(|&ax| {
            let k = self.axis_index(node, ax);
            k == 0 || k == self.m_nodes - 1
        })
    }

    /// True when every axis index lies in `[margin, M-1-margin]`.
    pub fn is_interior(&self, node: usize, margin: usize) -> bool {
        (0..self.d).all(|ax| {
            let k = self.axis_index(node, ax);
            k >= margin && k + margin < self.m_nodes
        })
    }

    /// Node reached from `node` by moving `delta` steps along `axis`, if it exists.
    pub fn shift(&self, node: usize, axis: usize, delta: isize) -> Option<usize> {
        let k = self.axis_index(node, axis) as isize + delta;
        if k < 0 || k >= self.m_nodes as isize {
            return None;
        }
        Some((node as isize + delta * self.strides[axis] as isize) as usize)
    }

    /// Node containing `y` in the half-open cell sense, plus local fractions, for interpolation.
    /// Returns `None` outside the box.
    pub fn locate(&self, y: &[f64]) -> Option<(Vec<usize>, Vec<f64>)> {
        let mut idx = Vec::with_capacity(self.d);
        let mut frac = Vec::with_capacity(self.d);
        for ax in 0..self.d {
            let v = y[ax];
            if !(v >= self.lo[ax] && v <= self.hi[ax]) {
                return None;
            }
            let x = (v - self.lo[ax]) / self.h[ax];
            let mut k = x.floor() as usize;
            if k >= self.m_nodes - 1 {
                k = self.m_nodes - 2;
            }
            idx.push(k);
            frac.push(x - k as f64);
        }
        Some((idx, frac))
    }

    pub fn node_from_indices(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.strides).map(|(k, s)| k * s).sum()
    }
}

/// Shared time grid for `t` and `s` on `[0, T]` with the triangular pair set, plus
/// a spatial grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TriTimeGrid {
    t_final: f64,
    n_steps: usize,
    orientation: Orientation,
    space: SpatialGrid,
}

impl TriTimeGrid {
    pub fn new(
        t_final: f64,
        n_steps: usize,
        bounds: &[(f64, f64)],
        m_nodes: usize,
        orientation: Orientation,
    ) -> Result<Self, GridError> {
        if !(t_final.is_finite() && t_final > 0.0) {
            return Err(GridError::InvalidParameter(format!("T = {t_final} must be positive")));
        }
        if n_steps < 2 {
            return Err(GridError::InvalidParameter(format!("N = {n_steps} < 2")));
        }
        let space = SpatialGrid::new(bounds, m_nodes)?;
        Ok(Self { t_final, n_steps, orientation, space })
    }

    pub fn from_space(
        t_final: f64,
        n_steps: usize,
        space: SpatialGrid,
        orientation: Orientation,
    ) -> Result<Self, GridError> {
        if !(t_final.is_finite() && t_final > 0.0) {
            return Err(GridError::InvalidParameter(format!("T = {t_final} must be positive")));
        }
        if n_steps < 2 {
            return Err(GridError::InvalidParameter(format!("N = {n_steps} < 2")));
        }
        Ok(Self { t_final, n_steps, orientation, space })
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }
    pub fn steps(&self) -> usize {
        self.n_steps
    }
    pub fn dt(&self) -> f64 {
        self.t_final / self.n_steps as f64
    }
    pub fn orientation(&self) -> Orientation {
        self.orientation
    }
    pub fn space(&self) -> &SpatialGrid {
        &self.space
    }

    /// Time node `k T / N`; the last node is exactly `T`.
    pub fn time(&self, k: usize) -> f64 {
        if k == self.n_steps {
            return self.t_final;
        }
        k as f64 * self.t_final / self.n_steps as f64
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_steps).map(|k| self.time(k)).collect()
    }

    pub fn contains(&self, it: usize, is: usize) -> bool {
        if it > self.n_steps || is > self.n_steps {
            return false;
        }
        match self.orientation {
            Orientation::Forward => is <= it,
            Orientation::Backward => it <= is,
        }
    }

    pub fn n_pairs(&self) -> usize {
        (self.n_steps + 1) * (self.n_steps + 2) / 2
    }

    /// Position of `(it, is)` in the lexicographic pair order.
    pub fn pair_index(&self, it: usize, is: usize) -> Option<usize> {
        if !self.contains(it, is) {
            return None;
        }
        let n = self.n_steps;
        Some(match self.orientation {
            Orientation::Forward => it * (it + 1) / 2 + is,
            Orientation::Backward => it * (n + 1) - it * (it.saturating_sub(1)) / 2 - it + is,
        })
    }

    /// All admissible `(it, is)` pairs in lexicographic order.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let n = self.n_steps;
        let mut out = Vec::with_capacity(self.n_pairs());
        for it in 0..=n {
            for is in 0..=n {
                if self.contains(it, is) {
                    out.push((it, is));
                }
            }
        }
        out
    }

    /// Admissible s-indices of the slice at `it`, increasing.
    pub fn s_range(&self, it: usize) -> std::ops::RangeInclusive<usize> {
        match self.orientation {
            Orientation::Forward => 0..=it,
            Orientation::Backward => it..=self.n_steps,
        }
    }

    /// Same grid with the opposite orientation.
    pub fn reflected(&self) -> Self {
        Self { orientation: self.orientation.flipped(), ..self.clone() }
    }

    /// Same spatial grid and step, horizon shortened to `n_steps` steps.
    pub fn with_steps(&self, n_steps: usize) -> Result<Self, GridError> {
        let dt = self.dt();
        Self::from_space(dt * n_steps as f64, n_steps, self.space.clone(), self.orientation)
    }
}
