//! Game data, the player Hamiltonians and the per-point Nash minimax.

use std::fmt;
use std::sync::Arc;

use tic_linear::DatumFn;

use crate::GameError;

/// `(s, y, alpha, out)`: drift (`d` entries) or diffusion (`d x k`, entry `[i * k + l]`).
pub type ControlMapFn = Arc<dyn Fn(f64, &[f64], &[f64], &mut [f64]) + Send + Sync>;
/// `(a, t, s, y, alpha, u, z) -> h^a` with `u` in `R^m` and `z` the `m x k` matrix `[b * k + l]`.
pub type RunningCostFn = Arc<dyn Fn(usize, f64, f64, &[f64], &[f64], &[f64], &[f64]) -> f64 + Send + Sync>;
/// `(t, s, y, u, p, q, out)`: closed-form equilibrium controls of all players.
///
/// `p` is `m x d` at `[a * d + i]`, `q` is `m x d x d` at `[(a * d + i) * d + j]`.
pub type MinimaxFn = Arc<dyn Fn(f64, f64, &[f64], &[f64], &[f64], &[f64], &mut [f64]) + Send + Sync>;

/// Whether players minimize costs or maximize utilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Sense {
    #[default]
    Minimize,
    Maximize,
}

impl Sense {
    fn sign(self) -> f64 {
        match self {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        }
    }
    /// True when `a` is at least as good as `b`.
    pub fn prefers(self, a: f64, b: f64) -> bool {
        self.sign() * a <= self.sign() * b
    }
}

/// Settings of the numeric best-response search used when no closed-form minimax is given.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinimaxOptions {
    /// Points of the coarse search per control coordinate.
    pub grid_points: usize,
    /// Joint change below which the best-response cycle stops.
    pub tol: f64,
    pub max_cycles: usize,
}

impl Default for MinimaxOptions {
    fn default() -> Self {
        Self { grid_points: 32, tol: 1e-8, max_cycles: 50 }
    }
}

/// An `m`-player game with state in `R^d` driven by `k` Brownian motions.
#[derive(Clone)]
pub struct GameSpec {
    pub m: usize,
    pub d: usize,
    pub k: usize,
    /// Control dimension of each player; the aggregate control has `sum(p)` entries.
    pub p: Vec<usize>,
    pub b: ControlMapFn,
    pub sigma: ControlMapFn,
    pub h: RunningCostFn,
    /// Terminal cost `g^a(t, y)`.
    pub g: DatumFn,
    /// Bounds of every aggregate control coordinate.
    pub control_box: Vec<(f64, f64)>,
    pub phi: Option<MinimaxFn>,
    pub sense: Sense,
    pub minimax: MinimaxOptions,
}

impl fmt::Debug for GameSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GameSpec")
            .field("m", &self.m)
            .field("d", &self.d)
            .field("k", &self.k)
            .field("p", &self.p)
            .field("control_box", &self.control_box)
            .field("closed_form_phi", &self.phi.is_some())
            .field("sense", &self.sense)
            .finish()
    }
}

impl GameSpec {
    pub fn n_controls(&self) -> usize {
        self.p.iter().sum()
    }

    /// Offset of player `a`'s block in the aggregate control.
    pub fn control_offset(&self, a: usize) -> usize {
        self.p[..a].iter().sum()
    }

    pub fn validate(&self) -> Result<(), GameError> {
        if self.m == 0 || self.d == 0 || self.k == 0 {
            return Err(GameError::InvalidParameter("m, d and k must be positive".into()));
        }
        if self.p.len() != self.m || self.p.contains(&0) {
            return Err(GameError::InvalidParameter("every player needs a nonempty control".into()));
        }
        if self.control_box.len() != self.n_controls() {
            return Err(GameError::InvalidParameter(format!(
                "control_box has {} entries, expected {}",
                self.control_box.len(),
                self.n_controls()
            )));
        }
        if self.control_box.iter().any(|&(lo, hi)| !(lo <= hi)) {
            return Err(GameError::InvalidParameter("control_box is empty".into()));
        }
        if self.phi.is_none() && self.control_box.iter().any(|(lo, hi)| !lo.is_finite() || !hi.is_finite()) {
            return Err(GameError::InvalidParameter("a numeric minimax needs a finite control_box".into()));
        }
        if self.minimax.grid_points < 2 || self.minimax.max_cycles == 0 {
            return Err(GameError::InvalidParameter("minimax needs at least 2 grid points and 1 cycle".into()));
        }
        Ok(())
    }
}

/// `H^a = (1/2) tr[q_a sigma sigma^T] + p_a . b + h^a(t, s, y, alpha, u, p^T sigma)`.
#[allow(clippy::too_many_arguments)]
pub fn hamiltonian(
    game: &GameSpec,
    a: usize,
    t: f64,
    s: f64,
    y: &[f64],
    alpha: &[f64],
    u: &[f64],
    p: &[f64],
    q_a: &[f64],
) -> f64 {
    let (m, d, k) = (game.m, game.d, game.k);
    let mut sig = vec![0.0; d * k];
    let mut b = vec![0.0; d];
    (game.sigma)(s, y, alpha, &mut sig);
    (game.b)(s, y, alpha, &mut b);
    let mut z = vec![0.0; m * k];
    for c in 0..m {
        for l in 0..k {
            z[c * k + l] = (0..d).map(|i| p[c * d + i] * sig[i * k + l]).sum();
        }
    }
    let mut val = 0.0;
    for i in 0..d {
        val += p[a * d + i] * b[i];
        for j in 0..d {
            let ss: f64 = (0..k).map(|l| sig[i * k + l] * sig[j * k + l]).sum();
            val += 0.5 * q_a[i * d + j] * ss;
        }
    }
    val + (game.h)(a, t, s, y, alpha, u, &z)
}

/// Equilibrium controls at one point: the closed form when given, otherwise cyclic best
/// responses with a coarse grid search and a local polish per control coordinate.
#[allow(clippy::too_many_arguments)]
pub fn minimax_solve(
    game: &GameSpec,
    t: f64,
    s: f64,
    y: &[f64],
    u: &[f64],
    p: &[f64],
    q: &[f64],
) -> Result<Vec<f64>, GameError> {
    let n = game.n_controls();
    let mut alpha = vec![0.0; n];
    if let Some(phi) = &game.phi {
        phi(t, s, y, u, p, q, &mut alpha);
        return Ok(alpha);
    }
    let dd = game.d * game.d;
    let opts = game.minimax;
    let sign = game.sense.sign();
    for (c, &(lo, hi)) in game.control_box.iter().enumerate() {
        alpha[c] = 0.0f64.clamp(lo, hi);
    }
    let mut change = f64::INFINITY;
    for _ in 0..opts.max_cycles {
        let prev = alpha.clone();
        for a in 0..game.m {
            let off = game.control_offset(a);
            let q_a = &q[a * dd..(a + 1) * dd];
            for c in off..off + game.p[a] {
                let (lo, hi) = game.control_box[c];
                let mut trial = alpha.clone();
                let mut obj = |x: f64| {
                    trial[c] = x;
                    sign * hamiltonian(game, a, t, s, y, &trial, u, p, q_a)
                };
                alpha[c] = argmin_1d(&mut obj, lo, hi, opts.grid_points);
            }
        }
        change = alpha.iter().zip(&prev).map(|(x, z)| (x - z).abs()).fold(0.0, f64::max);
        if change < opts.tol {
            return Ok(alpha);
        }
    }
    Err(GameError::NoNashConvergence { alpha, residual: change })
}

const GOLDEN: f64 = 0.618_033_988_749_894_8;

/// Minimizer of a scalar function on `[lo, hi]`: grid search, golden section on the
/// bracketing cells, then three-point parabolic steps with shrinking spacing.
pub fn argmin_1d(f: &mut dyn FnMut(f64) -> f64, lo: f64, hi: f64, grid_points: usize) -> f64 {
    if hi <= lo {
        return lo;
    }
    let h = (hi - lo) / (grid_points - 1) as f64;
    let (mut best_i, mut best_v) = (0, f64::INFINITY);
    for i in 0..grid_points {
        let v = f(lo + h * i as f64);
        if v < best_v {
            best_v = v;
            best_i = i;
        }
    }
    let mut a = (lo + h * best_i as f64 - h).max(lo);
    let mut b = (lo + h * best_i as f64 + h).min(hi);
    let mut x1 = b - GOLDEN * (b - a);
    let mut x2 = a + GOLDEN * (b - a);
    let (mut f1, mut f2) = (f(x1), f(x2));
    while b - a > 1e-9 * (hi - lo) {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - GOLDEN * (b - a);
            f1 = f(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + GOLDEN * (b - a);
            f2 = f(x2);
        }
    }
    let mut x = 0.5 * (a + b);
    let mut fx = f(x);
    for scale in [1e-3, 1e-4, 1e-5] {
        let step = scale * (hi - lo);
        if x - step < lo || x + step > hi {
            break;
        }
        let (fm, fp) = (f(x - step), f(x + step));
        let curv = fp - 2.0 * fx + fm;
        if curv <= 0.0 {
            break;
        }
        let cand = (x - 0.5 * step * (fp - fm) / curv).clamp(lo, hi);
        let fc = f(cand);
        if fc <= fx {
            x = cand;
            fx = fc;
        }
    }
    for edge in [lo, hi] {
        if f(edge) < fx {
            x = edge;
            fx = f(edge);
        }
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_game(h: RunningCostFn, b: ControlMapFn, sigma: ControlMapFn) -> GameSpec {
        GameSpec {
            m: 1,
            d: 1,
            k: 1,
            p: vec![1],
            b,
            sigma,
            h,
            g: Arc::new(|_, _, _| 0.0),
            control_box: vec![(-5.0, 5.0)],
            phi: None,
            sense: Sense::Minimize,
            minimax: MinimaxOptions::default(),
        }
    }

    #[test]
    fn zero_data_gives_zero_hamiltonian() {
        let zero: ControlMapFn = Arc::new(|_, _, _, o| o.iter_mut().for_each(|v| *v = 0.0));
        let g = scalar_game(Arc::new(|_, _, _, _, _, _, _| 0.0), zero.clone(), zero);
        for x in [-1.0, 0.0, 2.5] {
            assert_eq!(hamiltonian(&g, 0, 0.1, 0.3, &[x], &[x], &[1.0], &[2.0], &[3.0]), 0.0);
        }
    }

    #[test]
    fn substitution_example() {
        // sigma = b = alpha, h = alpha^2 / 2, p = q = 1 gives alpha^2 + alpha.
        let id: ControlMapFn = Arc::new(|_, _, a, o| o[0] = a[0]);
        let g = scalar_game(Arc::new(|_, _, _, _, a, _, _| 0.5 * a[0] * a[0]), id.clone(), id);
        for x in [-2.0, -0.5, 0.0, 1.5] {
            let h = hamiltonian(&g, 0, 0.0, 0.0, &[0.0], &[x], &[0.0], &[1.0], &[1.0]);
            assert!((h - (x * x + x)).abs() < 1e-15);
        }
    }

    #[test]
    fn numeric_minimax_finds_quadratic_minimizer() {
        let id: ControlMapFn = Arc::new(|_, _, a, o| o[0] = a[0]);
        let g = scalar_game(Arc::new(|_, _, _, _, a, _, _| 0.5 * a[0] * a[0]), id.clone(), id);
        // H = alpha^2 + alpha, minimum at -1/2.
        let a = minimax_solve(&g, 0.0, 0.0, &[0.0], &[0.0], &[1.0], &[1.0]).unwrap();
        assert!((a[0] + 0.5).abs() < 1e-10, "{a:?}");
    }

    #[test]
    fn minimizer_on_the_box_edge() {
        let id: ControlMapFn = Arc::new(|_, _, a, o| o[0] = a[0]);
        let zero: ControlMapFn = Arc::new(|_, _, _, o| o[0] = 0.0);
        let g = scalar_game(Arc::new(|_, _, _, _, _, _, _| 0.0), id, zero);
        let a = minimax_solve(&g, 0.0, 0.0, &[0.0], &[0.0], &[1.0], &[0.0]).unwrap();
        assert_eq!(a[0], -5.0);
    }

    #[test]
    fn maximizing_players_take_the_other_end() {
        let id: ControlMapFn = Arc::new(|_, _, a, o| o[0] = a[0]);
        let zero: ControlMapFn = Arc::new(|_, _, _, o| o[0] = 0.0);
        let mut g = scalar_game(Arc::new(|_, _, _, _, _, _, _| 0.0), id, zero);
        g.sense = Sense::Maximize;
        let a = minimax_solve(&g, 0.0, 0.0, &[0.0], &[0.0], &[1.0], &[0.0]).unwrap();
        assert_eq!(a[0], 5.0);
    }

    #[test]
    fn validation() {
        let zero: ControlMapFn = Arc::new(|_, _, _, o| o[0] = 0.0);
        let mut g = scalar_game(Arc::new(|_, _, _, _, _, _, _| 0.0), zero.clone(), zero);
        assert!(g.validate().is_ok());
        g.control_box = vec![(1.0, 0.0)];
        assert!(g.validate().is_err());
        g.control_box = vec![(f64::NEG_INFINITY, 0.0)];
        assert!(g.validate().is_err());
    }
}
