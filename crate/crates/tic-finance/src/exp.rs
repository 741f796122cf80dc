//! Exponential utility with zero consumption: ODE reduction, closed form and the game data.
//!
//! All formulas use the discounted wealth `x = y e^{r (T - s)}`, whose dynamics are
//! `dx = sum_b (mu_b - r) e^{r (T - s)} alpha_b ds + sum_b sigma_b e^{r (T - s)} alpha_b dW_b`.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use tic_games::{hamiltonian_at, minimax_solve, split_jet, GameSpec, MinimaxOptions, Sense};

use crate::fundamental::{cauchy_solution, fundamental_matrix, FundamentalMethod};
use crate::FinanceError;

pub type PairMatrixFn = Arc<dyn Fn(f64, f64) -> DMatrix<f64> + Send + Sync>;
pub type PairVectorFn = Arc<dyn Fn(f64, f64) -> DVector<f64> + Send + Sync>;
pub type TimeVectorFn = Arc<dyn Fn(f64) -> DVector<f64> + Send + Sync>;

/// Discretization of the ODE reductions: `intervals` quadrature cells on `[s, T]`,
/// `n_sub` Runge–Kutta steps per cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OdeOptions {
    pub intervals: usize,
    pub n_sub: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            intervals: 64,
            n_sub: 8,
        }
    }
}

impl OdeOptions {
    pub(crate) fn method(&self) -> FundamentalMethod {
        FundamentalMethod::MatrixOde {
            steps: self.intervals * self.n_sub,
        }
    }
}

#[derive(Clone)]
pub struct ExpUtilitySpec {
    pub m: usize,
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    pub r: f64,
    pub eta: f64,
    pub t_final: f64,
    /// Recursive weight `R(t, s)` on the players' utilities.
    pub w3: PairMatrixFn,
    /// Terminal weights `T(t)`.
    pub tvec: TimeVectorFn,
    /// Embedding parameter; zero is the original problem.
    pub gamma: f64,
    /// `W1(t, s)`, only used when `gamma > 0`.
    pub w1: PairVectorFn,
    /// `g1(t)`, only used when `gamma > 0`.
    pub g1: TimeVectorFn,
    pub ode: OdeOptions,
}

impl fmt::Debug for ExpUtilitySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExpUtilitySpec")
            .field("m", &self.m)
            .field("mu", &self.mu)
            .field("sigma", &self.sigma)
            .field("r", &self.r)
            .field("eta", &self.eta)
            .field("t_final", &self.t_final)
            .field("gamma", &self.gamma)
            .field("ode", &self.ode)
            .finish_non_exhaustive()
    }
}

impl ExpUtilitySpec {
    /// The original problem (`gamma = 0`) with `W1 = 1`, `g1 = 1` for later embedding.
    pub fn new(
        mu: Vec<f64>,
        sigma: Vec<f64>,
        r: f64,
        eta: f64,
        t_final: f64,
        w3: PairMatrixFn,
        tvec: TimeVectorFn,
    ) -> Result<Self, FinanceError> {
        let m = mu.len();
        let spec = Self {
            m,
            mu,
            sigma,
            r,
            eta,
            t_final,
            w3,
            tvec,
            gamma: 0.0,
            w1: Arc::new(move |_, _| DVector::from_element(m, 1.0)),
            g1: Arc::new(move |_| DVector::from_element(m, 1.0)),
            ode: OdeOptions::default(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_embedding(
        mut self,
        gamma: f64,
        w1: PairVectorFn,
        g1: TimeVectorFn,
    ) -> Result<Self, FinanceError> {
        self.gamma = gamma;
        self.w1 = w1;
        self.g1 = g1;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), FinanceError> {
        let bad = |msg: &str| Err(FinanceError::InvalidParameter(msg.into()));
        if self.m == 0 || self.mu.len() != self.m || self.sigma.len() != self.m {
            return bad("mu and sigma need one entry per player");
        }
        if self.mu.iter().any(|&mu| !(mu >= self.r)) {
            return bad("appreciation rates must not fall below the riskless rate");
        }
        if self.sigma.iter().any(|&s| !(s > 0.0)) {
            return bad("volatilities must be positive");
        }
        if !(self.eta > 0.0) || !(self.t_final > 0.0) || !(self.gamma >= 0.0) || !self.r.is_finite()
        {
            return bad("need eta > 0, T > 0, gamma >= 0 and finite r");
        }
        if self.ode.intervals < 2 || self.ode.n_sub == 0 {
            return bad("ode options need at least 2 intervals and 1 substep");
        }
        let w3 = (self.w3)(0.0, self.t_final);
        if w3.nrows() != self.m || w3.ncols() != self.m {
            return bad("R must be m x m");
        }
        for t in [0.0, self.t_final] {
            let tv = (self.tvec)(t);
            if tv.len() != self.m || tv.iter().any(|&v| !(v > 0.0)) {
                return bad("T(t) must be a positive m-vector");
            }
        }
        if self.gamma > 0.0
            && ((self.w1)(0.0, self.t_final).len() != self.m || (self.g1)(0.0).len() != self.m)
        {
            return bad("W1 and g1 must be m-vectors");
        }
        Ok(())
    }

    /// `(mu_b - r)^2 / sigma_b^2`.
    fn sharpe_sq(&self) -> Vec<f64> {
        self.mu
            .iter()
            .zip(&self.sigma)
            .map(|(mu, s)| (mu - self.r).powi(2) / (s * s))
            .collect()
    }

    fn discount(&self, s: f64) -> f64 {
        (-self.r * (self.t_final - s)).exp()
    }
}

/// `(N1, N2, M1)` of the linear systems `phi1_s + N1 phi1 + M1 = 0`, `phi2_s + N2 phi2 = 0`.
pub fn exp_ode_matrices(
    spec: &ExpUtilitySpec,
    t: f64,
    s: f64,
) -> (DMatrix<f64>, DMatrix<f64>, DVector<f64>) {
    let m = spec.m;
    let k = spec.sharpe_sq();
    let total: f64 = k.iter().sum();
    let w3 = (spec.w3)(t, s);
    let n1 = DMatrix::from_fn(
        m,
        m,
        |a, b| if a == b { 1.5 * total } else { 0.0 } - k[b] - w3[(a, b)],
    );
    let n2 = DMatrix::from_fn(
        m,
        m,
        |a, b| if a == b { -0.5 * total } else { 0.0 } - w3[(a, b)],
    );
    let m1 = if spec.gamma == 0.0 {
        DVector::zeros(m)
    } else {
        mbar1(spec, t, s) * spec.gamma
    };
    (n1, n2, m1)
}

fn mbar1(spec: &ExpUtilitySpec, t: f64, s: f64) -> DVector<f64> {
    let w1 = (spec.w1)(t, s);
    let disc = spec.discount(s);
    let v: f64 = (0..spec.m)
        .map(|b| (spec.mu[b] - spec.r) * disc / (2.0 * spec.sigma[b].powi(2) * spec.eta) * w1[b])
        .sum();
    DVector::from_element(spec.m, v)
}

/// `phi2(t, s) = F2(t, s) g2(t)` with `g2 = T`.
pub fn exp_phi2(spec: &ExpUtilitySpec, t: f64, s: f64) -> Result<DVector<f64>, FinanceError> {
    let f2 = fundamental_matrix(
        &|t, s| exp_ode_matrices(spec, t, s).1,
        t,
        s,
        spec.t_final,
        spec.ode.method(),
    )?;
    Ok(f2 * (spec.tvec)(t))
}

/// `phi1(t, s) = gamma [F1(t, s) g1(t) + int_s^T F1(t, s) F1(t, tau)^{-1} M1bar(t, tau) dtau]`.
pub fn exp_phi1(spec: &ExpUtilitySpec, t: f64, s: f64) -> Result<DVector<f64>, FinanceError> {
    if spec.gamma == 0.0 {
        return Ok(DVector::zeros(spec.m));
    }
    let phi = cauchy_solution(
        &|tau| exp_ode_matrices(spec, t, tau).0,
        &|tau| mbar1(spec, t, tau),
        &(spec.g1)(t),
        s,
        spec.t_final,
        spec.ode.intervals,
        spec.ode.n_sub,
    )?;
    Ok(phi * spec.gamma)
}

/// `U(t, s, x) = phi1(t, s) e^{eta x} - phi2(t, s) e^{-eta x}` in discounted wealth.
pub fn exp_solution(
    spec: &ExpUtilitySpec,
    t: f64,
    s: f64,
    x: f64,
) -> Result<Vec<f64>, FinanceError> {
    let (phi1, phi2) = (exp_phi1(spec, t, s)?, exp_phi2(spec, t, s)?);
    let (up, down) = ((spec.eta * x).exp(), (-spec.eta * x).exp());
    Ok((0..spec.m).map(|a| phi1[a] * up - phi2[a] * down).collect())
}

/// Equilibrium investment `(mu_a - r) / (eta sigma_a^2) e^{-r (T - s)}` of the original problem.
pub fn exp_equilibrium(spec: &ExpUtilitySpec, s: f64) -> Vec<f64> {
    let disc = spec.discount(s);
    (0..spec.m)
        .map(|a| (spec.mu[a] - spec.r) / (spec.eta * spec.sigma[a].powi(2)) * disc)
        .collect()
}

/// Equilibrium value `-F2(s, s) T(s) exp(-eta y e^{r (T - s)})` in undiscounted wealth `y`.
pub fn exp_value(spec: &ExpUtilitySpec, s: f64, y: f64) -> Result<Vec<f64>, FinanceError> {
    let phi2 = exp_phi2(spec, s, s)?;
    let e = (-spec.eta * y / spec.discount(s)).exp();
    Ok(phi2.iter().map(|p| -p * e).collect())
}

/// The original problem as a game in discounted wealth: one control per player,
/// one Brownian motion per asset, players maximize.
pub fn exp_game(spec: &ExpUtilitySpec) -> Result<GameSpec, FinanceError> {
    if spec.gamma != 0.0 {
        return Err(FinanceError::InvalidParameter(
            "the game form covers gamma = 0 only".into(),
        ));
    }
    let m = spec.m;
    let (sp_b, sp_s, sp_h, sp_g, sp_phi) = (
        Arc::new(spec.clone()),
        Arc::new(spec.clone()),
        Arc::new(spec.clone()),
        Arc::new(spec.clone()),
        Arc::new(spec.clone()),
    );
    Ok(GameSpec {
        m,
        d: 1,
        k: m,
        p: vec![1; m],
        b: Arc::new(move |s, _, a, o| {
            let grow = 1.0 / sp_b.discount(s);
            o[0] = (0..sp_b.m)
                .map(|b| (sp_b.mu[b] - sp_b.r) * grow * a[b])
                .sum();
        }),
        sigma: Arc::new(move |s, _, a, o| {
            let grow = 1.0 / sp_s.discount(s);
            for l in 0..sp_s.m {
                o[l] = sp_s.sigma[l] * grow * a[l];
            }
        }),
        h: Arc::new(move |a, t, s, _, _, u, _| {
            let w3 = (sp_h.w3)(t, s);
            -(0..sp_h.m).map(|b| w3[(a, b)] * u[b]).sum::<f64>()
        }),
        g: Arc::new(move |a, t, y| -(sp_g.tvec)(t)[a] * (-sp_g.eta * y[0]).exp()),
        control_box: vec![(f64::NEG_INFINITY, f64::INFINITY); m],
        phi: Some(Arc::new(move |_, s, _, _, p, q, o| {
            let disc = sp_phi.discount(s);
            for a in 0..sp_phi.m {
                o[a] = (sp_phi.mu[a] - sp_phi.r) * p[a] / (-sp_phi.sigma[a].powi(2) * q[a]) * disc;
            }
        })),
        sense: Sense::Maximize,
        minimax: MinimaxOptions::default(),
    })
}

/// Analytic jet `[U | U_x | U_xx]` of the closed form at `(t, s, x)`.
fn exp_jet(spec: &ExpUtilitySpec, t: f64, s: f64, x: f64) -> Result<Vec<f64>, FinanceError> {
    let (phi1, phi2) = (exp_phi1(spec, t, s)?, exp_phi2(spec, t, s)?);
    let (up, down, eta) = ((spec.eta * x).exp(), (-spec.eta * x).exp(), spec.eta);
    let mut jet = vec![0.0; 3 * spec.m];
    for a in 0..spec.m {
        jet[a] = phi1[a] * up - phi2[a] * down;
        jet[spec.m + a] = eta * (phi1[a] * up + phi2[a] * down);
        jet[2 * spec.m + a] = eta * eta * (phi1[a] * up - phi2[a] * down);
    }
    Ok(jet)
}

/// Step of the finite difference in `s` used by [`exp_hjb_residual`].
pub const RESIDUAL_STEP: f64 = 1e-3;

/// `U_s + H^a(t, s, x, alpha(s, s, x), J U(t, s, x))` for the closed form, per player, with
/// `U_s` by a fourth-order difference and the controls from the closed-form minimax at the
/// diagonal jet.
pub fn exp_hjb_residual(
    spec: &ExpUtilitySpec,
    t: f64,
    s: f64,
    x: f64,
) -> Result<Vec<f64>, FinanceError> {
    let game = exp_game(spec)?;
    if !(t <= s && s <= spec.t_final) {
        return Err(FinanceError::InvalidParameter("need t <= s <= T".into()));
    }
    let h = RESIDUAL_STEP;
    let at = |ds: f64| exp_solution(spec, t, s + ds * h, x);
    let u_s: Vec<f64> = if s + 2.0 * h <= spec.t_final {
        let (m2, m1, p1, p2) = (at(-2.0)?, at(-1.0)?, at(1.0)?, at(2.0)?);
        (0..spec.m)
            .map(|a| (m2[a] - 8.0 * m1[a] + 8.0 * p1[a] - p2[a]) / (12.0 * h))
            .collect()
    } else {
        let f: Vec<Vec<f64>> = (0..5).map(|k| at(-(k as f64))).collect::<Result<_, _>>()?;
        (0..spec.m)
            .map(|a| {
                (25.0 * f[0][a] - 48.0 * f[1][a] + 36.0 * f[2][a] - 16.0 * f[3][a] + 3.0 * f[4][a])
                    / (12.0 * h)
            })
            .collect()
    };
    let local = exp_jet(spec, t, s, x)?;
    let diag = exp_jet(spec, s, s, x)?;
    let (u, p, q) = split_jet(&diag, spec.m, 1);
    let alpha = minimax_solve(&game, s, s, &[x], u, p, q)?;
    Ok((0..spec.m)
        .map(|a| u_s[a] + hamiltonian_at(&game, a, t, s, &[x], &alpha, &local))
        .collect())
}

/// Rows `t, s, phi1_1..phi1_m, phi2_1..phi2_m` over the pairs `t <= s` of a uniform grid with
/// `n` steps on `[0, T]`.
pub fn write_exp_oracle_csv<W: Write>(
    spec: &ExpUtilitySpec,
    n: usize,
    w: W,
) -> Result<(), FinanceError> {
    if n == 0 {
        return Err(FinanceError::InvalidParameter("n must be positive".into()));
    }
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["t".to_string(), "s".to_string()];
    header.extend((1..=spec.m).map(|a| format!("phi1_{a}")));
    header.extend((1..=spec.m).map(|a| format!("phi2_{a}")));
    out.write_record(&header)?;
    let dt = spec.t_final / n as f64;
    for i in 0..=n {
        for j in i..=n {
            let (t, s) = (i as f64 * dt, j as f64 * dt);
            let mut rec = vec![format!("{t:.16e}"), format!("{s:.16e}")];
            rec.extend(exp_phi1(spec, t, s)?.iter().map(|v| format!("{v:.16e}")));
            rec.extend(exp_phi2(spec, t, s)?.iter().map(|v| format!("{v:.16e}")));
            out.write_record(&rec)?;
        }
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(mu: f64, w3: f64) -> ExpUtilitySpec {
        ExpUtilitySpec::new(
            vec![mu],
            vec![0.2],
            0.02,
            1.0,
            1.0,
            Arc::new(move |_, _| DMatrix::from_element(1, 1, w3)),
            Arc::new(|t| DVector::from_element(1, 1.0 + 0.5 * t)),
        )
        .unwrap()
    }

    #[test]
    fn zero_excess_return_leaves_only_the_weight() {
        let (_, n2, m1) = exp_ode_matrices(&scalar(0.02, 0.3), 0.1, 0.4);
        assert_eq!(n2[(0, 0)], -0.3);
        assert_eq!(m1[0], 0.0);
        assert_eq!(exp_equilibrium(&scalar(0.02, 0.3), 0.5), vec![0.0]);
    }

    #[test]
    fn terminal_slice_is_the_datum() {
        let spec = scalar(0.08, 0.3);
        let u = exp_solution(&spec, 0.3, 1.0, 0.7).unwrap();
        assert_eq!(u[0], -1.15 * (-0.7f64).exp());
    }

    #[test]
    fn game_controls_match_the_closed_form() {
        let spec = scalar(0.08, 0.3);
        let game = exp_game(&spec).unwrap();
        let jet = exp_jet(&spec, 0.4, 0.4, 0.2).unwrap();
        let (u, p, q) = split_jet(&jet, 1, 1);
        let a = minimax_solve(&game, 0.4, 0.4, &[0.2], u, p, q).unwrap();
        assert!((a[0] - exp_equilibrium(&spec, 0.4)[0]).abs() < 1e-14);
    }
}
