use std::fmt;
use std::sync::Arc;

use tic_grid::stencil::Deriv;

/// Coefficient evaluator `(a, I, b, t, s, y)`: multiplier of `d_I u^b` in equation `a`.
/// Second derivatives are summed over all ordered pairs `(i, j)`.
pub type CoefFn = Arc<dyn Fn(usize, Deriv, usize, f64, f64, &[f64]) -> f64 + Send + Sync>;
/// Source evaluator `(a, t, s, y)`.
pub type SourceFn = Arc<dyn Fn(usize, f64, f64, &[f64]) -> f64 + Send + Sync>;
/// Datum evaluator `(a, t, y)`.
pub type DatumFn = Arc<dyn Fn(usize, f64, &[f64]) -> f64 + Send + Sync>;

/// Data of `u_s = A d u(t,s,y) + B d u(s,s,y) + f` with `u = g` on the initial s-line.
#[derive(Clone)]
pub struct LinearSystemSpec {
    pub m: usize,
    pub d: usize,
    pub a: CoefFn,
    pub b: Option<CoefFn>,
    pub f: SourceFn,
    pub g: DatumFn,
    pub a_t: Option<CoefFn>,
    pub b_t: Option<CoefFn>,
    pub f_t: Option<SourceFn>,
    pub g_t: Option<DatumFn>,
    /// Ellipticity constant to verify against.
    pub lambda: f64,
    /// Exact solution `(a, t, s, y)` used for Dirichlet boundary values when present.
    pub exact: Option<SourceFn>,
}

impl fmt::Debug for LinearSystemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LinearSystemSpec")
            .field("m", &self.m)
            .field("d", &self.d)
            .field("diagonal", &self.b.is_some())
            .field("lambda", &self.lambda)
            .field("dirichlet", &self.exact.is_some())
            .finish()
    }
}

impl LinearSystemSpec {
    /// Zero source and datum, no diagonal terms, `lambda = 1`.
    pub fn new(m: usize, d: usize, a: CoefFn) -> Self {
        Self {
            m,
            d,
            a,
            b: None,
            f: Arc::new(|_, _, _, _| 0.0),
            g: Arc::new(|_, _, _| 0.0),
            a_t: None,
            b_t: None,
            f_t: None,
            g_t: None,
            lambda: 1.0,
            exact: None,
        }
    }

    pub fn with_diagonal(mut self, b: CoefFn) -> Self {
        self.b = Some(b);
        self
    }
    pub fn with_source(mut self, f: SourceFn) -> Self {
        self.f = f;
        self
    }
    pub fn with_datum(mut self, g: DatumFn) -> Self {
        self.g = g;
        self
    }
    pub fn with_exact(mut self, u: SourceFn) -> Self {
        self.exact = Some(u);
        self
    }
    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }
    pub fn with_t_derivatives(
        mut self,
        a_t: Option<CoefFn>,
        b_t: Option<CoefFn>,
        f_t: Option<SourceFn>,
        g_t: Option<DatumFn>,
    ) -> Self {
        self.a_t = a_t;
        self.b_t = b_t;
        self.f_t = f_t;
        self.g_t = g_t;
        self
    }

    /// Same spec with source and datum replaced, keeping coefficients; drops the exact solution.
    pub fn with_data(&self, f: SourceFn, g: DatumFn) -> Self {
        Self { f, g, f_t: None, g_t: None, exact: None, ..self.clone() }
    }

    /// Evaluators at `(T - t, T - s)`, so that a forward solve of the result is the
    /// backward solve of `self` read in reflected time.
    pub fn reflected(&self, t_final: f64) -> Self {
        let tf = t_final;
        let coef = |c: &CoefFn| -> CoefFn {
            let c = c.clone();
            Arc::new(move |a, i, b, t, s, y| c(a, i, b, tf - t, tf - s, y))
        };
        let coef_t = |c: &CoefFn| -> CoefFn {
            let c = c.clone();
            Arc::new(move |a, i, b, t, s, y| -c(a, i, b, tf - t, tf - s, y))
        };
        let src = |c: &SourceFn, sign: f64| -> SourceFn {
            let c = c.clone();
            Arc::new(move |a, t, s, y| sign * c(a, tf - t, tf - s, y))
        };
        let dat = |c: &DatumFn, sign: f64| -> DatumFn {
            let c = c.clone();
            Arc::new(move |a, t, y| sign * c(a, tf - t, y))
        };
        Self {
            m: self.m,
            d: self.d,
            a: coef(&self.a),
            b: self.b.as_ref().map(coef),
            f: src(&self.f, 1.0),
            g: dat(&self.g, 1.0),
            a_t: self.a_t.as_ref().map(coef_t),
            b_t: self.b_t.as_ref().map(coef_t),
            f_t: self.f_t.as_ref().map(|c| src(c, -1.0)),
            g_t: self.g_t.as_ref().map(|c| dat(c, -1.0)),
            lambda: self.lambda,
            exact: self.exact.as_ref().map(|c| src(c, 1.0)),
        }
    }
}

/// `scale` times the Laplacian acting componentwise.
pub fn laplacian(scale: f64) -> CoefFn {
    Arc::new(move |a, i, b, _, _, _| match i {
        Deriv::D2(p, q) if p == q && a == b => scale,
        _ => 0.0,
    })
}

/// `c` on the zeroth-order diagonal entries, zero elsewhere.
pub fn zeroth_order(c: f64) -> CoefFn {
    Arc::new(move |a, i, b, _, _, _| if i == Deriv::Value && a == b { c } else { 0.0 })
}

/// Sum of two coefficient evaluators.
pub fn coef_sum(x: CoefFn, y: CoefFn) -> CoefFn {
    Arc::new(move |a, i, b, t, s, z| x(a, i, b, t, s, z) + y(a, i, b, t, s, z))
}
