//! Reference games.

use std::sync::Arc;

use crate::game::{GameSpec, MinimaxOptions, Sense};

/// One player, zero drift, unit noise, no costs: the equilibrium value is zero.
pub fn zero_cost_game() -> GameSpec {
    GameSpec {
        m: 1,
        d: 1,
        k: 1,
        p: vec![1],
        b: Arc::new(|_, _, _, o| o[0] = 0.0),
        sigma: Arc::new(|_, _, _, o| o[0] = 1.0),
        h: Arc::new(|_, _, _, _, _, _, _| 0.0),
        g: Arc::new(|_, _, _| 0.0),
        control_box: vec![(-1.0, 1.0)],
        phi: Some(Arc::new(|_, _, _, _, _, _, o| o[0] = 0.0)),
        sense: Sense::Minimize,
        minimax: MinimaxOptions::default(),
    }
}

/// Coefficients of the scalar game with
/// `sigma^2 = 2 a1 + a2 alpha^2`, `b = b1 + b2 alpha`,
/// `h = c1 + (1/2) (c2 + c2_t e^{-(s - t)}) alpha^2`, `g = g_amp cos(y)`.
///
/// `c2_t` makes the running cost depend on the initial time; with `c2_t = 0` the game is
/// time consistent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadraticCoefficients {
    pub a1: f64,
    pub a2: f64,
    pub b1: f64,
    pub b2: f64,
    pub c1: f64,
    pub c2: f64,
    pub c2_t: f64,
    pub g_amp: f64,
}

impl Default for QuadraticCoefficients {
    fn default() -> Self {
        Self { a1: 1.0, a2: 0.5, b1: 0.0, b2: 1.0, c1: 0.0, c2: 2.0, c2_t: 1.0, g_amp: 0.5 }
    }
}

impl QuadraticCoefficients {
    pub fn c2_at(&self, t: f64, s: f64) -> f64 {
        self.c2 + self.c2_t * (-(s - t)).exp()
    }

    /// `H(t, s, p, q, alpha)` of the scalar game.
    pub fn hamiltonian(&self, t: f64, s: f64, p: f64, q: f64, alpha: f64) -> f64 {
        p * (self.b1 + self.b2 * alpha)
            + 0.5 * q * (2.0 * self.a1 + self.a2 * alpha * alpha)
            + self.c1
            + 0.5 * self.c2_at(t, s) * alpha * alpha
    }

    /// Minimizer `-b2 p / (a2 q + c2(t, s))`; meaningful while the denominator is positive.
    pub fn minimizer(&self, t: f64, s: f64, p: f64, q: f64) -> f64 {
        -self.b2 * p / (self.a2 * q + self.c2_at(t, s))
    }
}

/// The scalar quadratic game with its closed-form minimax.
pub fn quadratic_game(c: QuadraticCoefficients) -> GameSpec {
    GameSpec {
        m: 1,
        d: 1,
        k: 1,
        p: vec![1],
        b: Arc::new(move |_, _, a, o| o[0] = c.b1 + c.b2 * a[0]),
        sigma: Arc::new(move |_, _, a, o| o[0] = (2.0 * c.a1 + c.a2 * a[0] * a[0]).sqrt()),
        h: Arc::new(move |_, t, s, _, a, _, _| c.c1 + 0.5 * c.c2_at(t, s) * a[0] * a[0]),
        g: Arc::new(move |_, _, y| c.g_amp * y[0].cos()),
        control_box: vec![(f64::NEG_INFINITY, f64::INFINITY)],
        phi: Some(Arc::new(move |t, s, _, _, p, q, o| o[0] = c.minimizer(t, s, p[0], q[0]))),
        sense: Sense::Minimize,
        minimax: MinimaxOptions::default(),
    }
}

/// Coefficients of the two-player game with `b = alpha_1 + alpha_2`, `sigma = 1` and
/// `h^a = (1/2) c_a alpha_a^2 + kappa_a alpha_1 alpha_2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeparableCoefficients {
    pub c: [f64; 2],
    pub kappa: [f64; 2],
    pub bound: f64,
}

impl Default for SeparableCoefficients {
    fn default() -> Self {
        Self { c: [1.0, 2.0], kappa: [0.3, -0.2], bound: 10.0 }
    }
}

impl SeparableCoefficients {
    /// Nash point of `c_1 a_1 + kappa_1 a_2 = -p_1`, `kappa_2 a_1 + c_2 a_2 = -p_2`.
    pub fn nash(&self, p: [f64; 2]) -> [f64; 2] {
        let [c1, c2] = self.c;
        let [k1, k2] = self.kappa;
        let det = c1 * c2 - k1 * k2;
        [(-p[0] * c2 + k1 * p[1]) / det, (-c1 * p[1] + k2 * p[0]) / det]
    }
}

/// Two players sharing a scalar state; the minimax is found numerically on `[-bound, bound]^2`.
pub fn separable_two_player(c: SeparableCoefficients) -> GameSpec {
    GameSpec {
        m: 2,
        d: 1,
        k: 1,
        p: vec![1, 1],
        b: Arc::new(|_, _, a, o| o[0] = a[0] + a[1]),
        sigma: Arc::new(|_, _, _, o| o[0] = 1.0),
        h: Arc::new(move |pl, _, _, _, a, _, _| 0.5 * c.c[pl] * a[pl] * a[pl] + c.kappa[pl] * a[0] * a[1]),
        g: Arc::new(|pl, _, y| if pl == 0 { 0.5 * y[0].cos() } else { 0.3 * y[0].sin() }),
        control_box: vec![(-c.bound, c.bound); 2],
        phi: None,
        sense: Sense::Minimize,
        minimax: MinimaxOptions::default(),
    }
}
