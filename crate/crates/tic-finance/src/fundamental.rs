//! Fundamental matrices of linear systems `phi_s + N(t, s) phi + M = 0` with data at `s = T`.
//!
//! `F(t, s)` solves `dF/ds = -N(t, s) F`, `F(t, T) = I`, so that
//! `phi(s) = F(s) [g + int_s^T F(tau)^{-1} M(tau) dtau]`.

use nalgebra::{DMatrix, DVector};

use crate::quadrature::{cell_integrals, uniform_integral};
use crate::FinanceError;

/// How a fundamental matrix is computed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FundamentalMethod {
    /// Classical Runge–Kutta on `dF/ds = -N F` from `T` down to `s`.
    MatrixOde { steps: usize },
    /// Iterated-integral series `I + int N + int N int N + ...`, each term by fourth-order
    /// cumulative quadrature on `intervals` cells.
    PeanoBaker { intervals: usize },
    /// `exp(int_s^T N)` with Simpson on `intervals` cells, after the commutation check at `tol`.
    Expm { intervals: usize, tol: f64 },
}

impl Default for FundamentalMethod {
    fn default() -> Self {
        FundamentalMethod::MatrixOde { steps: 512 }
    }
}

/// Terms below this norm end the Peano–Baker series.
pub const SERIES_TOL: f64 = 1e-14;
pub const MAX_SERIES_TERMS: usize = 100;

/// `F(t, s)` for the family `N(t, .)` on `[s, T]`.
pub fn fundamental_matrix(
    n: &dyn Fn(f64, f64) -> DMatrix<f64>,
    t: f64,
    s: f64,
    t_final: f64,
    method: FundamentalMethod,
) -> Result<DMatrix<f64>, FinanceError> {
    if !(s <= t_final) {
        return Err(FinanceError::InvalidParameter(format!(
            "s = {s} exceeds T = {t_final}"
        )));
    }
    let dim = n(t, t_final).nrows();
    if s == t_final {
        return Ok(DMatrix::identity(dim, dim));
    }
    match method {
        FundamentalMethod::MatrixOde { steps } => {
            if steps == 0 {
                return Err(FinanceError::InvalidParameter(
                    "steps must be positive".into(),
                ));
            }
            let path = fundamental_path(&|tau| n(t, tau), s, t_final, 1, steps)?;
            Ok(path[0].clone())
        }
        FundamentalMethod::PeanoBaker { intervals } => {
            peano_baker(&|tau| n(t, tau), s, t_final, intervals)
        }
        FundamentalMethod::Expm { intervals, tol } => {
            let ld = lappo_danilevskii_check(n, t, s, t_final, tol, intervals)?;
            if !ld.pass {
                return Err(FinanceError::NotCommuting {
                    norm: ld.commutator_norm,
                });
            }
            Ok(integral(&|tau| n(t, tau), s, t_final, intervals)?.exp())
        }
    }
}

/// `F` at the nodes `s + j (T - s) / intervals`, `j = 0..=intervals`, by Runge–Kutta with
/// `n_sub` steps per cell, integrated from `F(T) = I` downwards.
pub fn fundamental_path(
    n: &dyn Fn(f64) -> DMatrix<f64>,
    s: f64,
    t_final: f64,
    intervals: usize,
    n_sub: usize,
) -> Result<Vec<DMatrix<f64>>, FinanceError> {
    if intervals == 0 || n_sub == 0 {
        return Err(FinanceError::InvalidParameter(
            "intervals and n_sub must be positive".into(),
        ));
    }
    let dim = n(t_final).nrows();
    let big = (t_final - s) / intervals as f64;
    let h = big / n_sub as f64;
    let mut out = vec![DMatrix::identity(dim, dim); intervals + 1];
    let mut f = DMatrix::identity(dim, dim);
    for j in (0..intervals).rev() {
        let top = s + (j + 1) as f64 * big;
        for k in 0..n_sub {
            let tau = top - k as f64 * h;
            let (n0, nh, n1) = (n(tau), n(tau - 0.5 * h), n(tau - h));
            let k1 = -&n0 * &f;
            let k2 = -&nh * (&f - &k1 * (0.5 * h));
            let k3 = -&nh * (&f - &k2 * (0.5 * h));
            let k4 = -&n1 * (&f - &k3 * h);
            f -= (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        }
        out[j] = f.clone();
    }
    Ok(out)
}

fn peano_baker(
    n: &dyn Fn(f64) -> DMatrix<f64>,
    s: f64,
    t_final: f64,
    intervals: usize,
) -> Result<DMatrix<f64>, FinanceError> {
    if intervals < 3 {
        return Err(FinanceError::InvalidParameter(
            "Peano-Baker needs at least 3 intervals".into(),
        ));
    }
    let h = (t_final - s) / intervals as f64;
    let nv: Vec<DMatrix<f64>> = (0..=intervals).map(|j| n(s + j as f64 * h)).collect();
    let dim = nv[0].nrows();
    let mut term = vec![DMatrix::identity(dim, dim); intervals + 1];
    let mut sum = DMatrix::identity(dim, dim);
    let mut norm = f64::INFINITY;
    for _ in 0..MAX_SERIES_TERMS {
        let integrand: Vec<DMatrix<f64>> = nv.iter().zip(&term).map(|(a, p)| a * p).collect();
        let mut next = vec![DMatrix::zeros(dim, dim); intervals + 1];
        for i in 0..dim {
            for j in 0..dim {
                let col: Vec<f64> = integrand.iter().map(|g| g[(i, j)]).collect();
                let cells = cell_integrals(&col, h);
                let mut acc = 0.0;
                for k in (0..intervals).rev() {
                    acc += cells[k];
                    next[k][(i, j)] = acc;
                }
            }
        }
        norm = next.iter().map(|p| p.norm()).fold(0.0, f64::max);
        sum += &next[0];
        term = next;
        if norm < SERIES_TOL {
            return Ok(sum);
        }
    }
    Err(FinanceError::SeriesNotConverged {
        terms: MAX_SERIES_TERMS,
        norm,
    })
}

fn integral(
    n: &dyn Fn(f64) -> DMatrix<f64>,
    s: f64,
    t_final: f64,
    intervals: usize,
) -> Result<DMatrix<f64>, FinanceError> {
    if intervals == 0 {
        return Err(FinanceError::InvalidParameter(
            "intervals must be positive".into(),
        ));
    }
    let h = (t_final - s) / intervals as f64;
    let nv: Vec<DMatrix<f64>> = (0..=intervals).map(|j| n(s + j as f64 * h)).collect();
    let dim = nv[0].nrows();
    Ok(DMatrix::from_fn(dim, dim, |i, j| {
        let col: Vec<f64> = nv.iter().map(|a| a[(i, j)]).collect();
        uniform_integral(&col, h)
    }))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LdReport {
    /// Largest Frobenius norm of `[N(t, tau), int_tau^T N(t, .)]` over the quadrature nodes `tau` in `[s, T)`.
    pub commutator_norm: f64,
    pub pass: bool,
}

/// Checks that `N(t, tau)` commutes with its integral over `[tau, T]` at every node `tau` of
/// `[s, T)`, which makes `exp(int_s^T N)` the fundamental matrix.
pub fn lappo_danilevskii_check(
    n: &dyn Fn(f64, f64) -> DMatrix<f64>,
    t: f64,
    s: f64,
    t_final: f64,
    tol: f64,
    intervals: usize,
) -> Result<LdReport, FinanceError> {
    if intervals == 0 {
        return Err(FinanceError::InvalidParameter(
            "intervals must be positive".into(),
        ));
    }
    let h = (t_final - s) / intervals as f64;
    let mut worst = 0.0f64;
    for j in 0..intervals {
        let tau = s + j as f64 * h;
        let a = n(t, tau);
        let int = integral(&|x| n(t, x), tau, t_final, intervals - j)?;
        worst = worst.max((&a * &int - &int * &a).norm());
    }
    Ok(LdReport {
        commutator_norm: worst,
        pass: worst < tol,
    })
}

/// `phi(s) = F(s) [g + int_s^T F(tau)^{-1} m(tau) dtau]` with `F` from [`fundamental_path`] and
/// the integral by Simpson on the same nodes.
pub fn cauchy_solution(
    n: &dyn Fn(f64) -> DMatrix<f64>,
    m: &dyn Fn(f64) -> DVector<f64>,
    g: &DVector<f64>,
    s: f64,
    t_final: f64,
    intervals: usize,
    n_sub: usize,
) -> Result<DVector<f64>, FinanceError> {
    if s == t_final {
        return Ok(g.clone());
    }
    let path = fundamental_path(n, s, t_final, intervals, n_sub)?;
    let h = (t_final - s) / intervals as f64;
    let mut integrand = Vec::with_capacity(intervals + 1);
    for (j, f) in path.iter().enumerate() {
        let tau = s + j as f64 * h;
        let inv = f
            .clone()
            .try_inverse()
            .ok_or(FinanceError::SingularFundamental { s: tau })?;
        integrand.push((inv * m(tau)).iter().copied().collect::<Vec<f64>>());
    }
    let dim = g.len();
    let int = DVector::from_fn(dim, |c, _| {
        let col: Vec<f64> = integrand.iter().map(|v| v[c]).collect();
        uniform_integral(&col, h)
    });
    Ok(&path[0] * (g + int))
}
