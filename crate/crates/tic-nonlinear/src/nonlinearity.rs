//! The generator `F(t, s, y, local jet, diagonal jet)` of a nonlocal system.

use std::fmt;
use std::sync::Arc;

use tic_grid::jet::JetLayout;
use tic_grid::stencil::Deriv;
use tic_linear::LinearSystemSpec;

/// Relative step of the default central differences in the jet arguments.
pub const JET_FD_STEP: f64 = 1e-6;

/// Right-hand side `F^a(t, s, y, z, zbar)` of `u_s = F(t, s, y, J u(t,s,y), J u(s,s,y))`.
///
/// `F` is stated in the marching direction: on a backward grid the solved equation is
/// `-u_s = F`, the terminal-value convention shared with the linear solver.
///
/// Jets follow [`JetLayout`]: `[values | gradients | Hessians]`, Hessians stored in full.
/// Partial derivatives treat every jet entry as an independent argument.
pub trait Nonlinearity: Send + Sync {
    fn m(&self) -> usize;
    fn d(&self) -> usize;
    fn eval(&self, a: usize, t: f64, s: f64, y: &[f64], local: &[f64], diag: &[f64]) -> f64;

    /// `dF^a / d local[e]` for every entry `e`.
    #[allow(clippy::too_many_arguments)]
    fn d_local(&self, a: usize, t: f64, s: f64, y: &[f64], local: &[f64], diag: &[f64], out: &mut [f64]) {
        let mut z = local.to_vec();
        for e in 0..z.len() {
            let x = z[e];
            let h = JET_FD_STEP * (1.0 + x.abs());
            z[e] = x + h;
            let fp = self.eval(a, t, s, y, &z, diag);
            z[e] = x - h;
            let fm = self.eval(a, t, s, y, &z, diag);
            z[e] = x;
            out[e] = (fp - fm) / (2.0 * h);
        }
    }

    /// `dF^a / d diag[e]` for every entry `e`.
    #[allow(clippy::too_many_arguments)]
    fn d_diag(&self, a: usize, t: f64, s: f64, y: &[f64], local: &[f64], diag: &[f64], out: &mut [f64]) {
        if !self.depends_on_diagonal() {
            out.iter_mut().for_each(|v| *v = 0.0);
            return;
        }
        let mut z = diag.to_vec();
        for e in 0..z.len() {
            let x = z[e];
            let h = JET_FD_STEP * (1.0 + x.abs());
            z[e] = x + h;
            let fp = self.eval(a, t, s, y, local, &z);
            z[e] = x - h;
            let fm = self.eval(a, t, s, y, local, &z);
            z[e] = x;
            out[e] = (fp - fm) / (2.0 * h);
        }
    }

    /// `false` when `F` ignores the diagonal jet.
    fn depends_on_diagonal(&self) -> bool {
        true
    }
    /// Declared Lipschitz bound of `F` in the jet arguments, if known.
    fn lipschitz(&self) -> Option<f64> {
        None
    }
    /// Declared Hölder bound of the jet derivatives of `F`, if known.
    fn holder(&self) -> Option<f64> {
        None
    }
}

impl<N: Nonlinearity + ?Sized> Nonlinearity for Arc<N> {
    fn m(&self) -> usize {
        (**self).m()
    }
    fn d(&self) -> usize {
        (**self).d()
    }
    fn eval(&self, a: usize, t: f64, s: f64, y: &[f64], local: &[f64], diag: &[f64]) -> f64 {
        (**self).eval(a, t, s, y, local, diag)
    }
    fn d_local(&self, a: usize, t: f64, s: f64, y: &[f64], local: &[f64], diag: &[f64], out: &mut [f64]) {
        (**self).d_local(a, t, s, y, local, diag, out)
    }
    fn d_diag(&self, a: usize, t: f64, s: f64, y: &[f64], local: &[f64], diag: &[f64], out: &mut [f64]) {
        (**self).d_diag(a, t, s, y, local, diag, out)
    }
    fn depends_on_diagonal(&self) -> bool {
        (**self).depends_on_diagonal()
    }
    fn lipschitz(&self) -> Option<f64> {
        (**self).lipschitz()
    }
    fn holder(&self) -> Option<f64> {
        (**self).holder()
    }
}

/// `(a, t, s, y, local, diag) -> F^a`.
pub type JetFn = Arc<dyn Fn(usize, f64, f64, &[f64], &[f64], &[f64]) -> f64 + Send + Sync>;
/// `(a, t, s, y, local, diag, out)` filling a jet gradient.
pub type JetGradFn = Arc<dyn Fn(usize, f64, f64, &[f64], &[f64], &[f64], &mut [f64]) + Send + Sync>;

/// A [`Nonlinearity`] assembled from closures.
#[derive(Clone)]
pub struct NonlinearitySpec {
    pub m: usize,
    pub d: usize,
    pub f: JetFn,
    pub d_local: Option<JetGradFn>,
    pub d_diag: Option<JetGradFn>,
    pub diagonal_free: bool,
    pub lipschitz: Option<f64>,
    pub holder: Option<f64>,
}

impl fmt::Debug for NonlinearitySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NonlinearitySpec")
            .field("m", &self.m)
            .field("d", &self.d)
            .field("analytic_d_local", &self.d_local.is_some())
            .field("analytic_d_diag", &self.d_diag.is_some())
            .field("diagonal_free", &self.diagonal_free)
            .finish()
    }
}

impl NonlinearitySpec {
    pub fn new(m: usize, d: usize, f: JetFn) -> Self {
        Self { m, d, f, d_local: None, d_diag: None, diagonal_free: false, lipschitz: None, holder: None }
    }
    pub fn with_derivatives(mut self, d_local: JetGradFn, d_diag: Option<JetGradFn>) -> Self {
        self.d_local = Some(d_local);
        self.d_diag = d_diag;
        self
    }
    /// Declares that `F` does not read the diagonal jet.
    pub fn diagonal_free(mut self) -> Self {
        self.diagonal_free = true;
        self
    }
    pub fn with_bounds(mut self, lipschitz: Option<f64>, holder: Option<f64>) -> Self {
        self.lipschitz = lipschitz;
        self.holder = holder;
        self
    }

    /// The generator of a linear system: `A d u + B d u(s,s) + f`.
    pub fn from_linear(spec: &LinearSystemSpec) -> Self {
        let (m, d) = (spec.m, spec.d);
        let lay = JetLayout::new(m, d);
        let derivs = Deriv::all(d);
        let (a_c, b_c, f_c) = (spec.a.clone(), spec.b.clone(), spec.f.clone());
        let (da, db) = (derivs.clone(), derivs.clone());
        let (a2, b2) = (a_c.clone(), b_c.clone());
        let f: JetFn = Arc::new(move |a, t, s, y, z, zb| {
            let mut acc = f_c(a, t, s, y);
            for &dv in &derivs {
                for b in 0..m {
                    let e = lay.index(b, dv);
                    acc += a_c(a, dv, b, t, s, y) * z[e];
                    if let Some(bc) = &b_c {
                        acc += bc(a, dv, b, t, s, y) * zb[e];
                    }
                }
            }
            acc
        });
        let d_local: JetGradFn = Arc::new(move |a, t, s, y, _, _, out| {
            for &dv in &da {
                for b in 0..m {
                    out[lay.index(b, dv)] = a2(a, dv, b, t, s, y);
                }
            }
        });
        let d_diag: JetGradFn = Arc::new(move |a, t, s, y, _, _, out| {
            for &dv in &db {
                for b in 0..m {
                    out[lay.index(b, dv)] = b2.as_ref().map_or(0.0, |bc| bc(a, dv, b, t, s, y));
                }
            }
        });
        let mut out = Self::new(m, d, f).with_derivatives(d_local, Some(d_diag));
        out.diagonal_free = spec.b.is_none();
        out
    }
}

impl Nonlinearity for NonlinearitySpec {
    fn m(&self) -> usize {
        self.m
    }
    fn d(&self) -> usize {
        self.d
    }
    fn eval(&self, a: usize, t: f64, s: f64, y: &[f64], local: &[f64], diag: &[f64]) -> f64 {
        (self.f)(a, t, s, y, local, diag)
    }
    fn d_local(&self, a: usize, t: f64, s: f64, y: &[f64], local: &[f64], diag: &[f64], out: &mut [f64]) {
        match &self.d_local {
            Some(g) => g(a, t, s, y, local, diag, out),
            None => fd_gradient(|z| (self.f)(a, t, s, y, z, diag), local, out),
        }
    }
    fn d_diag(&self, a: usize, t: f64, s: f64, y: &[f64], local: &[f64], diag: &[f64], out: &mut [f64]) {
        if self.diagonal_free {
            out.iter_mut().for_each(|v| *v = 0.0);
            return;
        }
        match &self.d_diag {
            Some(g) => g(a, t, s, y, local, diag, out),
            None => fd_gradient(|z| (self.f)(a, t, s, y, local, z), diag, out),
        }
    }
    fn depends_on_diagonal(&self) -> bool {
        !self.diagonal_free
    }
    fn lipschitz(&self) -> Option<f64> {
        self.lipschitz
    }
    fn holder(&self) -> Option<f64> {
        self.holder
    }
}

/// Central-difference gradient of `f` at `x` with step `1e-6 (1 + |x_e|)`.
pub fn fd_gradient(f: impl Fn(&[f64]) -> f64, x: &[f64], out: &mut [f64]) {
    let mut z = x.to_vec();
    for e in 0..z.len() {
        let v = z[e];
        let h = JET_FD_STEP * (1.0 + v.abs());
        z[e] = v + h;
        let fp = f(&z);
        z[e] = v - h;
        let fm = f(&z);
        z[e] = v;
        out[e] = (fp - fm) / (2.0 * h);
    }
}

/// `F` seen in reflected time: `(t, s) -> (T - t, T - s)`.
///
/// Together with the reflected datum this turns a backward problem into a forward one.
/// Jets are spatial and `F` is stated in the marching direction, so nothing else changes.
#[derive(Debug, Clone)]
pub struct Reflected<N> {
    pub inner: N,
    pub t_final: f64,
}

impl<N: Nonlinearity> Reflected<N> {
    pub fn new(inner: N, t_final: f64) -> Self {
        Self { inner, t_final }
    }
}

impl<N: Nonlinearity> Nonlinearity for Reflected<N> {
    fn m(&self) -> usize {
        self.inner.m()
    }
    fn d(&self) -> usize {
        self.inner.d()
    }
    fn eval(&self, a: usize, t: f64, s: f64, y: &[f64], local: &[f64], diag: &[f64]) -> f64 {
        self.inner.eval(a, self.t_final - t, self.t_final - s, y, local, diag)
    }
    fn d_local(&self, a: usize, t: f64, s: f64, y: &[f64], local: &[f64], diag: &[f64], out: &mut [f64]) {
        self.inner.d_local(a, self.t_final - t, self.t_final - s, y, local, diag, out);
    }
    fn d_diag(&self, a: usize, t: f64, s: f64, y: &[f64], local: &[f64], diag: &[f64], out: &mut [f64]) {
        self.inner.d_diag(a, self.t_final - t, self.t_final - s, y, local, diag, out);
    }
    fn depends_on_diagonal(&self) -> bool {
        self.inner.depends_on_diagonal()
    }
    fn lipschitz(&self) -> Option<f64> {
        self.inner.lipschitz()
    }
    fn holder(&self) -> Option<f64> {
        self.inner.holder()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use tic_linear::{laplacian, zeroth_order};

    #[test]
    fn fd_derivatives_match_analytic() {
        let f: JetFn = Arc::new(|_, t, _, y, z, zb| z[2] + z[0] * z[1] + t * y[0] * zb[0].powi(2));
        let spec = NonlinearitySpec::new(1, 1, f);
        let (z, zb) = ([0.3, -1.2, 2.0], [0.7, 0.1, 0.4]);
        let mut dl = [0.0; 3];
        let mut dd = [0.0; 3];
        spec.d_local(0, 0.5, 0.2, &[2.0], &z, &zb, &mut dl);
        spec.d_diag(0, 0.5, 0.2, &[2.0], &z, &zb, &mut dd);
        let want_l = [-1.2, 0.3, 1.0];
        let want_d = [2.0 * 0.5 * 2.0 * 0.7, 0.0, 0.0];
        for e in 0..3 {
            assert!((dl[e] - want_l[e]).abs() < 1e-8, "{dl:?}");
            assert!((dd[e] - want_d[e]).abs() < 1e-8, "{dd:?}");
        }
    }

    #[test]
    fn linear_generator_reproduces_coefficients() {
        let spec = LinearSystemSpec::new(1, 1, laplacian(2.0)).with_diagonal(zeroth_order(0.5));
        let nl = NonlinearitySpec::from_linear(&spec);
        let v = nl.eval(0, 0.3, 0.1, &[0.0], &[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]);
        assert!((v - (2.0 * 3.0 + 0.5 * 4.0)).abs() < 1e-14);
        let mut out = [0.0; 3];
        nl.d_diag(0, 0.3, 0.1, &[0.0], &[0.0; 3], &[0.0; 3], &mut out);
        assert_eq!(out, [0.5, 0.0, 0.0]);
    }

    #[test]
    fn reflection_maps_times() {
        let f: JetFn = Arc::new(|_, t, s, _, z, _| t + 10.0 * s + z[0]);
        let r = Reflected::new(NonlinearitySpec::new(1, 1, f), 1.0);
        assert!((r.eval(0, 0.25, 0.5, &[0.0], &[1.0, 0.0, 0.0], &[0.0; 3]) - (0.75 + 5.0 + 1.0)).abs() < 1e-14);
    }
}
