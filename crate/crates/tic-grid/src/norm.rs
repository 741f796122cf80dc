//! Discrete parabolic Hölder norms, plain and weighted by `rho(y) = exp(1 + <S y, y>^{1/2})`.
//!
//! For order `l` the norm of `phi(s, y)` sums, over `2h + |j| <= floor(l)`,
//! the supremum of `d_s^h d_y^j phi`, the y-Hölder quotient of exponent
//! `l - floor(l)` for the top-order terms, and the s-Hölder quotient of
//! exponent `(l - 2h - |j|) / 2` whenever that exponent lies in `(0, 1)`.
//! Quotients run over node pairs at distance at most `rho0`.

use nalgebra::DMatrix;

use crate::stencil::Deriv;
use crate::{FlowField, GridError, SpatialGrid};

/// Weight matrix `S`, comparison radius `rho0` and Hölder exponent `alpha`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSpec {
    s: DMatrix<f64>,
    rho0: f64,
    alpha: f64,
    lambda_low: f64,
    lambda_high: f64,
}

impl WeightSpec {
    pub fn new(s: DMatrix<f64>, rho0: f64, alpha: f64) -> Result<Self, GridError> {
        if !s.is_square() || s.nrows() == 0 {
            return Err(GridError::InvalidParameter("S must be a nonempty square matrix".into()));
        }
        if (&s - s.transpose()).amax() > 1e-12 * (1.0 + s.amax()) {
            return Err(GridError::InvalidParameter("S must be symmetric".into()));
        }
        if !(rho0 > 0.0) {
            return Err(GridError::InvalidParameter(format!("rho0 = {rho0} must be positive")));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(GridError::InvalidParameter(format!("alpha = {alpha} outside (0, 1)")));
        }
        let eig = s.clone().symmetric_eigen().eigenvalues;
        let lambda_low = eig.min();
        let lambda_high = eig.max();
        if !(lambda_low > 0.0) {
            return Err(GridError::InvalidParameter("S must be positive definite".into()));
        }
        Ok(Self { s, rho0, alpha, lambda_low, lambda_high })
    }

    /// `S = 0.1 I`, `rho0 = 1`, `alpha = 0.5`.
    pub fn default_for(d: usize) -> Self {
        Self::new(DMatrix::identity(d, d) * 0.1, 1.0, 0.5).expect("default weight is valid")
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self, GridError> {
        Self::new(self.s.clone(), self.rho0, alpha)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.s
    }
    pub fn rho0(&self) -> f64 {
        self.rho0
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn lambda_low(&self) -> f64 {
        self.lambda_low
    }
    pub fn lambda_high(&self) -> f64 {
        self.lambda_high
    }

    pub fn rho(&self, y: &[f64]) -> f64 {
        let d = y.len();
        let mut q = 0.0;
        for i in 0..d {
            for j in 0..d {
                q += self.s[(i, j)] * y[i] * y[j];
            }
        }
        (1.0 + q.max(0.0).sqrt()).exp()
    }

    /// Constant `C` of the two-sided comparison between forms 2 and 3.
    ///
    /// `|<Sy,y>^{1/2} - <Sy',y'>^{1/2}| <= lambda_high^{1/2} |y - y'|` and
    /// `|y - y'| <= rho0^{1-alpha} |y - y'|^alpha` for pairs within `rho0`, so
    /// `|1 - rho(y)/rho(y')| <= C |y - y'|^alpha` whenever `rho(y) <= rho(y')`.
    /// Form 2 is then at most `(1 + C)` times form 3 and vice versa.
    pub fn equivalence_constant(&self) -> f64 {
        self.lambda_high.sqrt() * self.rho0.powf(1.0 - self.alpha)
    }
}

/// Which norm to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormForm {
    /// No weight.
    Plain,
    /// Norm of `phi / rho`.
    Form1,
    /// Every derivative divided by `rho` before suprema and quotients.
    Form2,
    /// As form 2, but y-quotients of raw derivatives scaled by `min(1/rho(y), 1/rho(y'))`.
    Form3,
}

/// Samples of `phi(s, y)` on uniform s-nodes times a spatial grid, `values[(is * nodes + node) * m + a]`.
#[derive(Debug, Clone, Copy)]
pub struct SlicePlane<'a> {
    pub space: &'a SpatialGrid,
    pub s_nodes: &'a [f64],
    pub m: usize,
    pub values: &'a [f64],
}

/// Hölder norm of order `order` (either `alpha` or `2 + alpha`), summed over components.
pub fn weighted_holder_norm(
    plane: SlicePlane<'_>,
    form: NormForm,
    spec: &WeightSpec,
    order: f64,
) -> Result<f64, GridError> {
    let alpha = spec.alpha;
    let top = if (order - alpha).abs() < 1e-12 {
        0
    } else if (order - 2.0 - alpha).abs() < 1e-12 {
        2
    } else {
        return Err(GridError::InvalidParameter(format!(
            "order {order} unsupported; use alpha = {alpha} or 2 + alpha"
        )));
    };
    if plane.values.len() != plane.s_nodes.len() * plane.space.len() * plane.m {
        return Err(GridError::InvalidParameter("slice size does not match its grids".into()));
    }
    if plane.space.dim() != spec.s.nrows() {
        return Err(GridError::InvalidParameter("weight dimension does not match the grid".into()));
    }
    Ok(NormEval::new(plane, spec, top, order).total(form))
}

struct NormEval<'a> {
    plane: SlicePlane<'a>,
    alpha: f64,
    order: f64,
    top: usize,
    rho: Vec<f64>,
    y_offsets: Vec<(Vec<isize>, f64)>,
    s_pairs: Vec<(usize, usize, f64)>,
}

impl<'a> NormEval<'a> {
    fn new(plane: SlicePlane<'a>, spec: &WeightSpec, top: usize, order: f64) -> Self {
        let space = plane.space;
        let rho = (0..space.len()).map(|n| spec.rho(&space.coords_vec(n))).collect();
        let y_offsets = y_offsets(space, spec.rho0);
        let ns = plane.s_nodes.len();
        let mut s_pairs = Vec::new();
        for i in 0..ns {
            for j in i + 1..ns {
                let ds = plane.s_nodes[j] - plane.s_nodes[i];
                if ds <= spec.rho0 * (1.0 + 1e-12) {
                    s_pairs.push((i, j, ds));
                }
            }
        }
        Self { plane, alpha: spec.alpha, order, top, rho, y_offsets, s_pairs }
    }

    fn total(&self, form: NormForm) -> f64 {
        let space = self.plane.space;
        let d = space.dim();
        let mut terms: Vec<(usize, Deriv)> = vec![(0, Deriv::Value)];
        if self.top == 2 {
            terms.extend((0..d).map(|i| (0, Deriv::D1(i))));
            for i in 0..d {
                for j in i..d {
                    terms.push((0, Deriv::D2(i, j)));
                }
            }
            terms.push((1, Deriv::Value));
        }
        let nn = space.len();
        let ns = self.plane.s_nodes.len();
        let mut sum = 0.0;
        for a in 0..self.plane.m {
            let mut base = vec![0.0; ns * nn];
            for is in 0..ns {
                for n in 0..nn {
                    let v = self.plane.values[(is * nn + n) * self.plane.m + a];
                    base[is * nn + n] = if form == NormForm::Form1 { v / self.rho[n] } else { v };
                }
            }
            for &(h, deriv) in &terms {
                let raw = if h == 1 { self.s_derivative(&base) } else { self.y_derivative(&base, deriv) };
                let weighted: Vec<f64> = match form {
                    NormForm::Form2 | NormForm::Form3 => {
                        raw.iter().enumerate().map(|(k, v)| v / self.rho[k % nn]).collect()
                    }
                    _ => raw.clone(),
                };
                sum += weighted.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let k = 2 * h + deriv.order();
                if k == self.top {
                    sum += if form == NormForm::Form3 {
                        self.y_quotient(&raw, true)
                    } else {
                        self.y_quotient(&weighted, false)
                    };
                }
                let rem = self.order - k as f64;
                if rem > 0.0 && rem < 2.0 {
                    sum += self.s_quotient(&weighted, rem / 2.0);
                }
            }
        }
        sum
    }

    fn y_derivative(&self, base: &[f64], deriv: Deriv) -> Vec<f64> {
        let space = self.plane.space;
        let nn = space.len();
        let ns = self.plane.s_nodes.len();
        if deriv == Deriv::Value {
            return base.to_vec();
        }
        let mut out = vec![0.0; ns * nn];
        let mut st = Vec::with_capacity(16);
        for n in 0..nn {
            space.stencil(n, deriv, &mut st);
            for is in 0..ns {
                let row = &base[is * nn..(is + 1) * nn];
                out[is * nn + n] = st.iter().map(|&(k, w)| w * row[k]).sum();
            }
        }
        out
    }

    fn s_derivative(&self, base: &[f64]) -> Vec<f64> {
        let nn = self.plane.space.len();
        let s = self.plane.s_nodes;
        let ns = s.len();
        let mut out = vec![0.0; ns * nn];
        if ns < 2 {
            return out;
        }
        let ds = (s[ns - 1] - s[0]) / (ns - 1) as f64;
        for n in 0..nn {
            let b = |i: usize| base[i * nn + n];
            for i in 0..ns {
                out[i * nn + n] = if ns == 2 {
                    (b(1) - b(0)) / ds
                } else if i == 0 {
                    (-3.0 * b(0) + 4.0 * b(1) - b(2)) / (2.0 * ds)
                } else if i == ns - 1 {
                    (3.0 * b(i) - 4.0 * b(i - 1) + b(i - 2)) / (2.0 * ds)
                } else {
                    (b(i + 1) - b(i - 1)) / (2.0 * ds)
                };
            }
        }
        out
    }

    fn y_quotient(&self, vals: &[f64], min_weight: bool) -> f64 {
        let space = self.plane.space;
        let nn = space.len();
        let ns = self.plane.s_nodes.len();
        let mut best: f64 = 0.0;
        for n in 0..nn {
            'offsets: for (off, dist) in &self.y_offsets {
                let mut q = n;
                for (ax, &o) in off.iter().enumerate() {
                    match space.shift(q, ax, o) {
                        Some(r) => q = r,
                        None => continue 'offsets,
                    }
                }
                let scale = if min_weight { (1.0 / self.rho[n]).min(1.0 / self.rho[q]) } else { 1.0 };
                let denom = dist.powf(self.alpha);
                for is in 0..ns {
                    let diff = (vals[is * nn + n] - vals[is * nn + q]).abs();
                    best = best.max(diff * scale / denom);
                }
            }
        }
        best
    }

    fn s_quotient(&self, vals: &[f64], expo: f64) -> f64 {
        let nn = self.plane.space.len();
        let mut best: f64 = 0.0;
        for &(i, j, ds) in &self.s_pairs {
            let denom = ds.powf(expo);
            for n in 0..nn {
                best = best.max((vals[i * nn + n] - vals[j * nn + n]).abs() / denom);
            }
        }
        best
    }
}

/// Integer offsets with physical length in `(0, rho0]`, one representative per unordered pair.
fn y_offsets(space: &SpatialGrid, rho0: f64) -> Vec<(Vec<isize>, f64)> {
    let d = space.dim();
    let kmax: Vec<isize> = (0..d)
        .map(|ax| ((rho0 / space.spacing(ax)) * (1.0 + 1e-12)).floor() as isize)
        .map(|k| k.min(space.nodes_per_axis() as isize - 1))
        .collect();
    let mut out = Vec::new();
    let mut cur = vec![0isize; d];
    fn rec(
        ax: usize,
        cur: &mut Vec<isize>,
        kmax: &[isize],
        space: &SpatialGrid,
        rho0: f64,
        out: &mut Vec<(Vec<isize>, f64)>,
    ) {
        if ax == cur.len() {
            let first_nonzero = cur.iter().find(|&&v| v != 0);
            if let Some(&v) = first_nonzero {
                if v > 0 {
                    let dist = cur
                        .iter()
                        .enumerate()
                        .map(|(i, &o)| (o as f64 * space.spacing(i)).powi(2))
                        .sum::<f64>()
                        .sqrt();
                    if dist <= rho0 * (1.0 + 1e-12) {
                        out.push((cur.clone(), dist));
                    }
                }
            }
            return;
        }
        for o in -kmax[ax]..=kmax[ax] {
            cur[ax] = o;
            rec(ax + 1, cur, kmax, space, rho0, out);
        }
    }
    rec(0, &mut cur, &kmax, space, rho0, &mut out);
    out
}

/// Plain norm of a field over the triangle: the supremum over t-slices of the slice norm of
/// `u(t, ·, ·)` on its admissible s-range, plus (optionally) that of the finite-difference
/// t-derivative.
pub fn field_holder_norm(field: &FlowField, order: f64, spec: &WeightSpec, with_t_derivative: bool) -> f64 {
    let grid = field.grid();
    let nn = grid.space().len();
    let m = field.m();
    let times = grid.times();
    let mut best: f64 = 0.0;
    for it in 0..=grid.steps() {
        let range: Vec<usize> = grid.s_range(it).collect();
        let s_nodes: Vec<f64> = range.iter().map(|&k| times[k]).collect();
        let mut vals = Vec::with_capacity(range.len() * nn * m);
        for &is in &range {
            vals.extend_from_slice(field.slice(it, is));
        }
        let plane = SlicePlane { space: grid.space(), s_nodes: &s_nodes, m, values: &vals };
        let mut total = weighted_holder_norm(plane, NormForm::Plain, spec, order).expect("valid order");
        if with_t_derivative {
            let dt = grid.dt();
            let mut tv = Vec::with_capacity(vals.len());
            for &is in &range {
                tv.extend(t_derivative(field, it, is, dt));
            }
            let plane = SlicePlane { space: grid.space(), s_nodes: &s_nodes, m, values: &tv };
            total += weighted_holder_norm(plane, NormForm::Plain, spec, order).expect("valid order");
        }
        best = best.max(total);
    }
    best
}

/// Finite-difference t-derivative of a whole field, on the same index set.
pub fn t_derivative_field(field: &FlowField) -> FlowField {
    let grid = field.grid();
    let mut out = FlowField::zeros(grid, field.m());
    for (it, is) in grid.pairs() {
        out.slice_mut(it, is).copy_from_slice(&t_derivative(field, it, is, grid.dt()));
    }
    out
}

/// Finite-difference `u_t(t_it, s_is, ·)` using whichever neighbours exist in the triangle.
fn t_derivative(field: &FlowField, it: usize, is: usize, dt: f64) -> Vec<f64> {
    let grid = field.grid();
    let has = |k: isize| k >= 0 && grid.contains(k as usize, is);
    let at = |k: isize| field.slice(k as usize, is);
    let i = it as isize;
    let len = field.slice(it, is).len();
    let combine = |terms: &[(isize, f64)]| -> Vec<f64> {
        let mut out = vec![0.0; len];
        for &(k, w) in terms {
            for (o, v) in out.iter_mut().zip(at(k)) {
                *o += w * v;
            }
        }
        out
    };
    if has(i - 1) && has(i + 1) {
        combine(&[(i + 1, 0.5 / dt), (i - 1, -0.5 / dt)])
    } else if has(i + 1) && has(i + 2) {
        combine(&[(i, -1.5 / dt), (i + 1, 2.0 / dt), (i + 2, -0.5 / dt)])
    } else if has(i - 1) && has(i - 2) {
        combine(&[(i, 1.5 / dt), (i - 1, -2.0 / dt), (i - 2, 0.5 / dt)])
    } else if has(i + 1) {
        combine(&[(i + 1, 1.0 / dt), (i, -1.0 / dt)])
    } else if has(i - 1) {
        combine(&[(i, 1.0 / dt), (i - 1, -1.0 / dt)])
    } else {
        vec![0.0; len]
    }
}
