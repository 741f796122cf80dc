//! Power utility with investment and consumption: the ansatz `U = psi(t, s) y^beta` reduces the
//! equilibrium system to a linear ODE in `s` driven by the diagonal `psibar(s) = psi(s, s)`,
//! which is found by Picard iteration on the Cauchy formula.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use tic_games::{hamiltonian_at, minimax_solve, split_jet, GameSpec, MinimaxOptions, Sense};

use crate::exp::{OdeOptions, PairMatrixFn, TimeVectorFn};
use crate::fundamental::cauchy_solution;
use crate::quadrature::{cubic_interp, uniform_integral};
use crate::FinanceError;

#[derive(Clone)]
pub struct PowerUtilitySpec {
    pub m: usize,
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    pub r: f64,
    pub t_final: f64,
    pub beta: f64,
    /// Consumption weights `v(t, s)`.
    pub v: PairMatrixFn,
    /// Recursive weights `w(t, s)`.
    pub w: PairMatrixFn,
    /// Terminal weights `g(t)`.
    pub g: TimeVectorFn,
    pub ode: OdeOptions,
}

impl fmt::Debug for PowerUtilitySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PowerUtilitySpec")
            .field("m", &self.m)
            .field("mu", &self.mu)
            .field("sigma", &self.sigma)
            .field("r", &self.r)
            .field("t_final", &self.t_final)
            .field("beta", &self.beta)
            .field("ode", &self.ode)
            .finish_non_exhaustive()
    }
}

impl PowerUtilitySpec {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        mu: Vec<f64>,
        sigma: Vec<f64>,
        r: f64,
        t_final: f64,
        beta: f64,
        v: PairMatrixFn,
        w: PairMatrixFn,
        g: TimeVectorFn,
    ) -> Result<Self, FinanceError> {
        let spec = Self {
            m: mu.len(),
            mu,
            sigma,
            r,
            t_final,
            beta,
            v,
            w,
            g,
            ode: OdeOptions::default(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), FinanceError> {
        let bad = |msg: &str| Err(FinanceError::InvalidParameter(msg.into()));
        if self.m == 0 || self.mu.len() != self.m || self.sigma.len() != self.m {
            return bad("mu and sigma need one entry per player");
        }
        if self.sigma.iter().any(|&s| !(s > 0.0)) {
            return bad("volatilities must be positive");
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return bad("beta must lie in (0, 1)");
        }
        if !(self.t_final > 0.0) || !self.r.is_finite() {
            return bad("need T > 0 and finite r");
        }
        if self.ode.intervals < 2 || self.ode.n_sub == 0 {
            return bad("ode options need at least 2 intervals and 1 substep");
        }
        for (t, s) in [
            (0.0, 0.0),
            (0.0, self.t_final),
            (self.t_final, self.t_final),
        ] {
            let (v, w) = ((self.v)(t, s), (self.w)(t, s));
            if v.shape() != (self.m, self.m) || w.shape() != (self.m, self.m) {
                return bad("v and w must be m x m");
            }
            if (0..self.m).any(|a| !(v[(a, a)] > 0.0)) {
                return bad("diagonal consumption weights must be positive");
            }
        }
        for t in [0.0, self.t_final] {
            let g = (self.g)(t);
            if g.len() != self.m || g.iter().any(|&x| !(x > 0.0)) {
                return bad("g(t) must be a positive m-vector");
            }
        }
        Ok(())
    }

    /// `k = r beta + sum_b (mu_b - r)^2 beta / (2 sigma_b^2 (1 - beta))`.
    pub fn k(&self) -> f64 {
        let b = self.beta;
        self.r * b
            + self
                .mu
                .iter()
                .zip(&self.sigma)
                .map(|(mu, s)| (mu - self.r).powi(2) * b / (2.0 * s * s * (1.0 - b)))
                .sum::<f64>()
    }
}

/// `(A, f)` of `psi_s + A psi + f = 0` at `(t, s)` given the diagonal value `psibar(s)`.
pub fn power_ode_terms(
    spec: &PowerUtilitySpec,
    psibar: &[f64],
    t: f64,
    s: f64,
) -> Result<(DMatrix<f64>, DVector<f64>), FinanceError> {
    let (m, beta) = (spec.m, spec.beta);
    let vss = (spec.v)(s, s);
    let mut ratio = vec![0.0; m];
    for b in 0..m {
        if !(psibar[b] > 0.0) {
            return Err(FinanceError::Domain(format!(
                "psibar[{b}] = {} at s = {s} is not positive",
                psibar[b]
            )));
        }
        ratio[b] = psibar[b] / vss[(b, b)];
    }
    let cons: f64 = ratio
        .iter()
        .map(|x| beta * x.powf(1.0 / (beta - 1.0)))
        .sum();
    let diag = spec.k() - cons;
    let w = (spec.w)(t, s);
    let a = DMatrix::from_fn(m, m, |i, j| if i == j { diag } else { 0.0 } - w[(i, j)]);
    let v = (spec.v)(t, s);
    let f = DVector::from_fn(m, |i, _| {
        (0..m)
            .map(|b| v[(i, b)] * ratio[b].powf(beta / (beta - 1.0)))
            .sum()
    });
    Ok((a, f))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixedPointOptions {
    /// Uniform cells on `[0, T]`.
    pub intervals: usize,
    /// Runge–Kutta steps per cell.
    pub n_sub: usize,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FixedPointOptions {
    fn default() -> Self {
        Self {
            intervals: 64,
            n_sub: 8,
            tol: 1e-12,
            max_iter: 200,
        }
    }
}

/// Converged diagonal `psibar` on the nodes `s_i = i T / n`.
#[derive(Debug, Clone, PartialEq)]
pub struct PowerDiagonal {
    pub nodes: Vec<f64>,
    /// `psibar[i][a]`.
    pub psibar: Vec<Vec<f64>>,
    /// Sup-norm change of each sweep.
    pub update_norms: Vec<f64>,
    pub n_sub: usize,
}

impl PowerDiagonal {
    pub fn spacing(&self) -> f64 {
        self.nodes[1] - self.nodes[0]
    }

    /// Cubic interpolation of `psibar` at `s`.
    pub fn at(&self, s: f64) -> Vec<f64> {
        let m = self.psibar[0].len();
        (0..m)
            .map(|a| {
                let col: Vec<f64> = self.psibar.iter().map(|p| p[a]).collect();
                cubic_interp(&col, self.nodes[0], self.spacing(), s)
            })
            .collect()
    }

    /// Rows `s, psibar_1..psibar_m`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), FinanceError> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["s".to_string()];
        header.extend((1..=self.psibar[0].len()).map(|a| format!("psibar_{a}")));
        out.write_record(&header)?;
        for (s, p) in self.nodes.iter().zip(&self.psibar) {
            let mut rec = vec![format!("{s:.16e}")];
            rec.extend(p.iter().map(|v| format!("{v:.16e}")));
            out.write_record(&rec)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Picard iteration `psibar <- chi(s) [g(s) + int_s^T chi(tau)^{-1} f(s, tau, psibar(tau)) dtau]`
/// where `chi` solves the homogeneous system with the current iterate. Starts from `g(s)`.
pub fn power_diagonal_fixed_point(
    spec: &PowerUtilitySpec,
    opts: &FixedPointOptions,
) -> Result<PowerDiagonal, FinanceError> {
    spec.validate()?;
    let n = opts.intervals;
    if n < 3 || opts.n_sub == 0 || opts.max_iter == 0 {
        return Err(FinanceError::InvalidParameter(
            "need at least 3 intervals, 1 substep and 1 sweep".into(),
        ));
    }
    let h = spec.t_final / n as f64;
    let nodes: Vec<f64> = (0..=n)
        .map(|i| if i == n { spec.t_final } else { i as f64 * h })
        .collect();
    let mut diag = PowerDiagonal {
        psibar: nodes
            .iter()
            .map(|&s| (spec.g)(s).iter().copied().collect())
            .collect(),
        nodes,
        update_norms: Vec::new(),
        n_sub: opts.n_sub,
    };
    for sweep in 1..=opts.max_iter {
        let current = &diag;
        let next: Result<Vec<Vec<f64>>, FinanceError> = (0..=n)
            .into_par_iter()
            .map(|i| diagonal_sweep_at(spec, current, i))
            .collect();
        let next = next?;
        for (i, p) in next.iter().enumerate() {
            if p.iter().any(|&v| !(v > 0.0)) {
                return Err(FinanceError::PositivityLost {
                    sweep,
                    s: diag.nodes[i],
                });
            }
        }
        let update = next
            .iter()
            .zip(&diag.psibar)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max);
        diag.psibar = next;
        diag.update_norms.push(update);
        if update < opts.tol {
            return Ok(diag);
        }
    }
    Err(FinanceError::NoConvergence {
        sweeps: opts.max_iter,
        update: *diag.update_norms.last().unwrap(),
    })
}

fn diagonal_sweep_at(
    spec: &PowerUtilitySpec,
    diag: &PowerDiagonal,
    i: usize,
) -> Result<Vec<f64>, FinanceError> {
    let n = diag.nodes.len() - 1;
    let s = diag.nodes[i];
    cauchy_with(spec, diag, s, s, n - i, diag.n_sub)
}

/// Cauchy formula for `psi(t, s)` on `intervals` uniform cells of `[s, T]`, with the
/// diagonal read from `diag` by interpolation.
fn cauchy_with(
    spec: &PowerUtilitySpec,
    diag: &PowerDiagonal,
    t: f64,
    s: f64,
    intervals: usize,
    n_sub: usize,
) -> Result<Vec<f64>, FinanceError> {
    let g = (spec.g)(t);
    if intervals == 0 || s >= spec.t_final {
        return Ok(g.iter().copied().collect());
    }
    let terms = |tau: f64| power_ode_terms(spec, &diag.at(tau), t, tau);
    let nan = |m: usize| {
        (
            DMatrix::from_element(m, m, f64::NAN),
            DVector::from_element(m, f64::NAN),
        )
    };
    let m = spec.m;
    let psi = cauchy_solution(
        &|tau| terms(tau).unwrap_or_else(|_| nan(m)).0,
        &|tau| terms(tau).unwrap_or_else(|_| nan(m)).1,
        &g,
        s,
        spec.t_final,
        intervals,
        n_sub,
    )?;
    if psi.iter().any(|v| !v.is_finite()) {
        return Err(FinanceError::Domain(format!(
            "diagonal left the positive cone on [{s}, T]"
        )));
    }
    Ok(psi.iter().copied().collect())
}

/// `psi(t, s)` from the converged diagonal, on as many cells of `[s, T]` as the diagonal grid has.
pub fn power_full_solution(
    spec: &PowerUtilitySpec,
    diag: &PowerDiagonal,
    t: f64,
    s: f64,
) -> Result<Vec<f64>, FinanceError> {
    if !(0.0 <= t && t <= s && s <= spec.t_final) {
        return Err(FinanceError::InvalidParameter(
            "need 0 <= t <= s <= T".into(),
        ));
    }
    cauchy_with(spec, diag, t, s, diag.nodes.len() - 1, diag.n_sub)
}

/// `U(t, s, y) = psi(t, s) y^beta`.
pub fn power_value(
    spec: &PowerUtilitySpec,
    diag: &PowerDiagonal,
    t: f64,
    s: f64,
    y: f64,
) -> Result<Vec<f64>, FinanceError> {
    if !(y > 0.0) {
        return Err(FinanceError::Domain(format!("wealth {y} is not positive")));
    }
    Ok(power_full_solution(spec, diag, t, s)?
        .iter()
        .map(|p| p * y.powf(spec.beta))
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerEquilibrium {
    pub alpha: Vec<f64>,
    pub consumption: Vec<f64>,
    pub value: Vec<f64>,
}

/// Equilibrium investment, consumption and value at `(s, y)`.
pub fn power_equilibrium(
    spec: &PowerUtilitySpec,
    diag: &PowerDiagonal,
    s: f64,
    y: f64,
) -> Result<PowerEquilibrium, FinanceError> {
    if !(y > 0.0) {
        return Err(FinanceError::Domain(format!("wealth {y} is not positive")));
    }
    let beta = spec.beta;
    let psibar = diag.at(s);
    let vss = (spec.v)(s, s);
    let alpha = (0..spec.m)
        .map(|a| (spec.mu[a] - spec.r) / (spec.sigma[a].powi(2) * (1.0 - beta)) * y)
        .collect();
    let consumption = (0..spec.m)
        .map(|a| (vss[(a, a)] / psibar[a]).powf(1.0 / (1.0 - beta)) * y)
        .collect();
    let value = psibar.iter().map(|p| p * y.powf(beta)).collect();
    Ok(PowerEquilibrium {
        alpha,
        consumption,
        value,
    })
}

/// The investment–consumption game: player `a` controls `(alpha_a, c_a)` at indices
/// `(2a, 2a + 1)`, one Brownian motion per asset, players maximize.
pub fn power_game(spec: &PowerUtilitySpec) -> GameSpec {
    let m = spec.m;
    let sp: Arc<PowerUtilitySpec> = Arc::new(spec.clone());
    let (sb, ss, sh, sg, sphi) = (sp.clone(), sp.clone(), sp.clone(), sp.clone(), sp);
    let mut control_box = Vec::with_capacity(2 * m);
    for _ in 0..m {
        control_box.push((f64::NEG_INFINITY, f64::INFINITY));
        control_box.push((0.0, f64::INFINITY));
    }
    GameSpec {
        m,
        d: 1,
        k: m,
        p: vec![2; m],
        b: Arc::new(move |_, y, a, o| {
            o[0] = sb.r * y[0]
                + (0..sb.m)
                    .map(|b| (sb.mu[b] - sb.r) * a[2 * b] - a[2 * b + 1])
                    .sum::<f64>();
        }),
        sigma: Arc::new(move |_, _, a, o| {
            for l in 0..ss.m {
                o[l] = ss.sigma[l] * a[2 * l];
            }
        }),
        h: Arc::new(move |a, t, s, _, ctl, u, _| {
            let (v, w) = ((sh.v)(t, s), (sh.w)(t, s));
            (0..sh.m)
                .map(|b| v[(a, b)] * ctl[2 * b + 1].powf(sh.beta) - w[(a, b)] * u[b])
                .sum()
        }),
        g: Arc::new(move |a, t, y| (sg.g)(t)[a] * y[0].max(0.0).powf(sg.beta)),
        control_box,
        phi: Some(Arc::new(move |_, s, _, _, p, q, o| {
            let vss = (sphi.v)(s, s);
            for a in 0..sphi.m {
                o[2 * a] = -(sphi.mu[a] - sphi.r) * p[a] / (sphi.sigma[a].powi(2) * q[a]);
                o[2 * a + 1] = (p[a] / (sphi.beta * vss[(a, a)])).powf(1.0 / (sphi.beta - 1.0));
            }
        })),
        sense: Sense::Maximize,
        minimax: MinimaxOptions::default(),
    }
}

fn power_jet(spec: &PowerUtilitySpec, psi: &[f64], y: f64) -> Vec<f64> {
    let (m, b) = (spec.m, spec.beta);
    let mut jet = vec![0.0; 3 * m];
    for a in 0..m {
        jet[a] = psi[a] * y.powf(b);
        jet[m + a] = b * psi[a] * y.powf(b - 1.0);
        jet[2 * m + a] = b * (b - 1.0) * psi[a] * y.powf(b - 2.0);
    }
    jet
}

/// `U_s + H^a(t, s, y, controls(J U(s, s, y)), J U(t, s, y))` for `U = psi y^beta`, with `U_s`
/// by a fourth-order difference of `psi` in `s`.
pub fn power_hjb_residual(
    spec: &PowerUtilitySpec,
    diag: &PowerDiagonal,
    t: f64,
    s: f64,
    y: f64,
) -> Result<Vec<f64>, FinanceError> {
    if !(y > 0.0) {
        return Err(FinanceError::Domain(format!("wealth {y} is not positive")));
    }
    let game = power_game(spec);
    let h = crate::exp::RESIDUAL_STEP;
    let at = |k: f64| power_full_solution(spec, diag, t, s + k * h);
    let psi_s: Vec<f64> = if s - 2.0 * h >= t && s + 2.0 * h <= spec.t_final {
        let (m2, m1, p1, p2) = (at(-2.0)?, at(-1.0)?, at(1.0)?, at(2.0)?);
        (0..spec.m)
            .map(|a| (m2[a] - 8.0 * m1[a] + 8.0 * p1[a] - p2[a]) / (12.0 * h))
            .collect()
    } else {
        let dir = if s + 4.0 * h <= spec.t_final {
            1.0
        } else {
            -1.0
        };
        let f: Vec<Vec<f64>> = (0..5)
            .map(|k| at(dir * k as f64))
            .collect::<Result<_, _>>()?;
        (0..spec.m)
            .map(|a| {
                dir * (-25.0 * f[0][a] + 48.0 * f[1][a] - 36.0 * f[2][a] + 16.0 * f[3][a]
                    - 3.0 * f[4][a])
                    / (12.0 * h)
            })
            .collect()
    };
    let local = power_jet(spec, &power_full_solution(spec, diag, t, s)?, y);
    let diag_jet = power_jet(spec, &power_full_solution(spec, diag, s, s)?, y);
    let (u, p, q) = split_jet(&diag_jet, spec.m, 1);
    let ctl = minimax_solve(&game, s, s, &[y], u, p, q)?;
    Ok((0..spec.m)
        .map(|a| psi_s[a] * y.powf(spec.beta) + hamiltonian_at(&game, a, t, s, &[y], &ctl, &local))
        .collect())
}

/// Merton diagonal for one player with constant `v`, `g` and `w = 0`:
/// `phi' + k phi + (1 - beta) phi (phi / v)^{1/(beta - 1)} = 0`, `phi(T) = g`, by Runge–Kutta
/// with `steps` steps. Returns the values at `i T / n_out`.
pub fn merton_diagonal(
    k: f64,
    beta: f64,
    v: f64,
    g: f64,
    t_final: f64,
    steps: usize,
    n_out: usize,
) -> Vec<f64> {
    assert!(
        n_out > 0 && steps % n_out == 0,
        "steps must be a multiple of n_out"
    );
    let rhs = |phi: f64| -k * phi - (1.0 - beta) * phi * (phi / v).powf(1.0 / (beta - 1.0));
    let h = t_final / steps as f64;
    let every = steps / n_out;
    let mut out = vec![0.0; n_out + 1];
    let mut phi = g;
    out[n_out] = g;
    for j in 1..=steps {
        // Integrating downwards in s: dphi/d(-s) = -rhs.
        let k1 = -rhs(phi);
        let k2 = -rhs(phi + 0.5 * h * k1);
        let k3 = -rhs(phi + 0.5 * h * k2);
        let k4 = -rhs(phi + h * k3);
        phi += h * (k1 + 2.0 * k2 + 2.0 * k3 + k4) / 6.0;
        if j % every == 0 {
            out[n_out - j / every] = phi;
        }
    }
    out
}

/// Tightest constants of the lower-bound conditions on a sampled grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionsReport {
    /// `min_{a, s} ghat^a(s)`.
    pub g0: f64,
    /// Smallest `gamma >= 0` with `vhat^{ab}(s, sigma) >= e^{-gamma (sigma - s)}`; infinite when
    /// some `vhat` is not positive.
    pub gamma: f64,
    /// Upper bound `C` of `psibar^a(s) / v^{aa}(s, s)`.
    pub upper: f64,
    pub t_final: f64,
    pub pass: bool,
}

impl ConditionsReport {
    /// Lower bound `g0 e^{-gamma (T - s)}` of `psibar^a(s) / v^{aa}(s, s)`.
    pub fn lower_bound(&self, s: f64) -> f64 {
        self.g0 * (-self.gamma * (self.t_final - s)).exp()
    }
}

/// Evaluates `ghat^a(s) = g^a(s) / v^{aa}(s, s) exp(int_s^T k^a(s, tau) dtau)` and
/// `vhat^{ab}(s, sigma) = v^{ab}(s, sigma) / v^{aa}(s, s) exp(int_s^sigma k^a(s, tau) dtau)`,
/// `k^a = k - w^{aa}`, on `intervals` uniform cells.
pub fn check_conditions_g0_gamma(
    spec: &PowerUtilitySpec,
    intervals: usize,
) -> Result<ConditionsReport, FinanceError> {
    spec.validate()?;
    if intervals < 2 {
        return Err(FinanceError::InvalidParameter(
            "need at least 2 intervals".into(),
        ));
    }
    let (m, n, beta) = (spec.m, intervals, spec.beta);
    let h = spec.t_final / n as f64;
    let node = |j: usize| if j == n { spec.t_final } else { j as f64 * h };
    let k = spec.k();
    for i in 0..=n {
        for j in i..=n {
            let w = (spec.w)(node(i), node(j));
            for a in 0..m {
                for b in 0..m {
                    if a != b && w[(a, b)] != 0.0 {
                        return Err(FinanceError::HypothesisViolated("w is not diagonal".into()));
                    }
                }
            }
        }
    }
    let mut g0 = f64::INFINITY;
    let mut gamma = 0.0f64;
    // vhat[i][a][b][j - i]
    let mut vhat = vec![vec![vec![Vec::new(); m]; m]; n + 1];
    let mut ghat = vec![vec![0.0; m]; n + 1];
    for i in 0..=n {
        let s = node(i);
        let vss = (spec.v)(s, s);
        let ka = |a: usize, tau: f64| k - (spec.w)(s, tau)[(a, a)];
        for a in 0..m {
            // Cumulative int_s^{sigma_j} k^a(s, .) with Simpson on each cell.
            let mut cum = vec![0.0; n + 1 - i];
            for j in i..n {
                let (x0, x1) = (node(j), node(j + 1));
                cum[j + 1 - i] = cum[j - i]
                    + (x1 - x0) / 6.0 * (ka(a, x0) + 4.0 * ka(a, 0.5 * (x0 + x1)) + ka(a, x1));
            }
            ghat[i][a] = (spec.g)(s)[a] / vss[(a, a)] * cum[n - i].exp();
            g0 = g0.min(ghat[i][a]);
            for b in 0..m {
                let row: Vec<f64> = (i..=n)
                    .map(|j| (spec.v)(s, node(j))[(a, b)] / vss[(a, a)] * cum[j - i].exp())
                    .collect();
                for (off, &vh) in row.iter().enumerate().skip(1) {
                    let gap = node(i + off) - s;
                    gamma = if vh > 0.0 {
                        gamma.max(-vh.ln() / gap)
                    } else {
                        f64::INFINITY
                    };
                    if gamma.is_infinite() {
                        break;
                    }
                }
                vhat[i][a][b] = row;
            }
        }
    }
    let pass = g0 > 0.0 && gamma.is_finite();
    let upper = if pass {
        let c = g0 * (-gamma * spec.t_final).exp();
        let scale = c.powf(-beta / (1.0 - beta));
        let mut best = 0.0f64;
        for i in 0..=n {
            for a in 0..m {
                let sum: Vec<f64> = (0..=n - i)
                    .map(|j| (0..m).map(|b| vhat[i][a][b][j]).sum())
                    .collect();
                best = best.max(ghat[i][a] + scale * uniform_integral(&sum, h));
            }
        }
        best
    } else {
        f64::INFINITY
    };
    Ok(ConditionsReport {
        g0,
        gamma,
        upper,
        t_final: spec.t_final,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn merton_spec(t_final: f64) -> PowerUtilitySpec {
        PowerUtilitySpec::new(
            vec![0.08],
            vec![0.2],
            0.02,
            t_final,
            0.5,
            Arc::new(|_, _| DMatrix::from_element(1, 1, 1.0)),
            Arc::new(|_, _| DMatrix::zeros(1, 1)),
            Arc::new(|_| DVector::from_element(1, 1.0)),
        )
        .unwrap()
    }

    #[test]
    fn merton_constant() {
        // 0.02 * 0.5 + 0.0036 * 0.5 / (2 * 0.04 * 0.5)
        assert!((merton_spec(1.0).k() - 0.055).abs() < 1e-15);
    }

    #[test]
    fn half_power_uses_inverse_squares() {
        let spec = merton_spec(1.0);
        let (a, f) = power_ode_terms(&spec, &[2.0], 0.0, 0.5).unwrap();
        assert!((a[(0, 0)] - (0.055 - 0.5 * 0.25)).abs() < 1e-15);
        assert!((f[0] - 0.5).abs() < 1e-15);
        assert!(matches!(
            power_ode_terms(&spec, &[0.0], 0.0, 0.5),
            Err(FinanceError::Domain(_))
        ));
    }

    #[test]
    fn strategy_is_linear_in_wealth() {
        let spec = merton_spec(0.5);
        let diag = power_diagonal_fixed_point(
            &spec,
            &FixedPointOptions {
                intervals: 16,
                ..Default::default()
            },
        )
        .unwrap();
        let (e1, e2) = (
            power_equilibrium(&spec, &diag, 0.2, 1.0).unwrap(),
            power_equilibrium(&spec, &diag, 0.2, 2.0).unwrap(),
        );
        assert!((e1.alpha[0] - 3.0).abs() < 1e-14);
        assert!((e2.alpha[0] - 2.0 * e1.alpha[0]).abs() < 1e-14);
        assert!((e2.consumption[0] - 2.0 * e1.consumption[0]).abs() < 1e-14);
        assert_eq!(diag.psibar.last().unwrap()[0], 1.0);
        assert!(power_equilibrium(&spec, &diag, 0.2, 0.0).is_err());
    }

    #[test]
    fn vanishing_terminal_weight_fails_the_conditions() {
        let mut spec = merton_spec(1.0);
        spec.g = Arc::new(|t| DVector::from_element(1, (t - 0.5) * (t - 0.5)));
        let rep = check_conditions_g0_gamma(&spec, 16).unwrap();
        assert!(!rep.pass && rep.g0 == 0.0);
    }
}
