//! Pathwise residuals of the backward equation for `Y` and the forward equation for `Z`.

use std::io::Write;

use rayon::prelude::*;

use crate::paths::pairwise_sum;
use crate::{FbsdeError, FkBundle, FkFields, PathEnsemble};

/// Largest censored fraction accepted.
pub const MAX_CENSORED_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, PartialEq)]
pub struct BreakdownRow {
    pub t: f64,
    pub s: f64,
    pub mean: f64,
    pub std_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualStats {
    /// Component index: `a` for the `Y` residual, `a * k + l` for the `Z` residual.
    pub component: usize,
    pub t: f64,
    pub mean: f64,
    pub std_error: f64,
    /// Number of simulated paths, censored ones included.
    pub n: usize,
    /// Paths that left the spatial box; excluded from the estimates.
    pub censored: usize,
    /// Partial residuals at every path node `s >= t`.
    pub breakdown: Vec<BreakdownRow>,
}

/// `t,mean,std_error,n,censored`, one row per component in order.
pub fn write_residual_csv<W: Write>(stats: &[ResidualStats], w: W) -> Result<(), FbsdeError> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["t", "mean", "std_error", "n", "censored"])?;
    for st in stats {
        wr.write_record([
            format!("{:.16e}", st.t),
            format!("{:.16e}", st.mean),
            format!("{:.16e}", st.std_error),
            st.n.to_string(),
            st.censored.to_string(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = pairwise_sum(v) / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let dev: Vec<f64> = v.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&dev) / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Per-path partial residuals `[node][component]` for nodes `j_t..=n`, or `None` if censored.
type PathResiduals = Option<Vec<Vec<f64>>>;

fn summarize(
    per_path: Vec<PathResiduals>,
    paths: &PathEnsemble,
    t: f64,
    j_t: usize,
    n_comp: usize,
    main_node: usize,
) -> Result<Vec<ResidualStats>, FbsdeError> {
    let n = paths.n_paths;
    let kept: Vec<&Vec<Vec<f64>>> = per_path.iter().flatten().collect();
    let censored = n - kept.len();
    if censored as f64 > MAX_CENSORED_FRACTION * n as f64 {
        return Err(FbsdeError::TooManyCensored { censored, n });
    }
    let nodes = paths.n_steps + 1 - j_t;
    Ok((0..n_comp)
        .map(|c| {
            let breakdown: Vec<BreakdownRow> = (0..nodes)
                .map(|r| {
                    let v: Vec<f64> = kept.iter().map(|p| p[r][c]).collect();
                    let (mean, std_error) = mean_se(&v);
                    BreakdownRow { t, s: paths.time(j_t + r), mean, std_error }
                })
                .collect();
            let main = &breakdown[main_node - j_t];
            ResidualStats { component: c, t, mean: main.mean, std_error: main.std_error, n, censored, breakdown }
        })
        .collect())
}

/// Fields at `(t, s, X(s))` along one simulated path; `s` must be a path node.
pub fn fk_fields(
    bundle: &FkBundle,
    paths: &PathEnsemble,
    path: usize,
    t: f64,
    s: f64,
) -> Result<FkFields, FbsdeError> {
    let j = paths.step_of(s).ok_or_else(|| FbsdeError::InvalidParameter(format!("s = {s} is not a path node")))?;
    if path >= paths.n_paths {
        return Err(FbsdeError::InvalidParameter(format!("path {path} out of range")));
    }
    bundle.fields_at(t, s, paths.state(path, j))
}

fn check_alignment(bundle: &FkBundle, paths: &PathEnsemble, t: f64) -> Result<usize, FbsdeError> {
    let grid = bundle.u.grid();
    if (paths.t_final - grid.t_final()).abs() > 1e-12 * (1.0 + grid.t_final()) || paths.t0 < 0.0 {
        return Err(FbsdeError::InvalidParameter("path horizon must lie in the solution horizon and end at T".into()));
    }
    if paths.d != bundle.sde.d || paths.k != bundle.sde.k {
        return Err(FbsdeError::InvalidParameter("path dimensions differ from the state equation".into()));
    }
    let j_t = paths
        .step_of(t)
        .ok_or_else(|| FbsdeError::InvalidParameter(format!("t = {t} is not a path node")))?;
    if j_t >= paths.n_steps {
        return Err(FbsdeError::InvalidParameter("t must be below the terminal time".into()));
    }
    Ok(j_t)
}

fn inside(bundle: &FkBundle, paths: &PathEnsemble, p: usize, j_t: usize) -> bool {
    let space = bundle.u.grid().space();
    (j_t..=paths.n_steps).all(|j| space.locate(paths.state(p, j)).is_some())
}

/// `R = Y(t,t) - [g(t, X_T) + sum F(t, tau) dtau - sum Z(t, tau)^T dW]` with left-point sums over
/// `tau` in `[t, T)`, for every component.
pub fn bsde_residual(bundle: &FkBundle, paths: &PathEnsemble, t: f64) -> Result<Vec<ResidualStats>, FbsdeError> {
    let j_t = check_alignment(bundle, paths, t)?;
    let (m, k, n) = (bundle.m(), paths.k, paths.n_steps);
    let dt = paths.dt();
    let per_path: Result<Vec<PathResiduals>, FbsdeError> = (0..paths.n_paths)
        .into_par_iter()
        .map(|p| {
            if !inside(bundle, paths, p, j_t) {
                return Ok(None);
            }
            let x_t = paths.state(p, n);
            let mut acc = bundle.terminal(t, x_t)?;
            let mut out = vec![Vec::new(); n + 1 - j_t];
            let y_end = bundle.jet(t, paths.time(n), x_t)?;
            out[n - j_t] = (0..m).map(|a| y_end[a] - acc[a]).collect();
            for j in (j_t..n).rev() {
                let tau = paths.time(j);
                let x = paths.state(p, j);
                let (local, z) = bundle.jet_and_z(t, tau, x)?;
                let diag = bundle.jet(tau, tau, x)?;
                let drv = bundle.driver(t, tau, x, &local, &diag);
                let dw = paths.increment(p, j);
                for a in 0..m {
                    let zdw: f64 = (0..k).map(|l| z[a * k + l] * dw[l]).sum();
                    acc[a] += drv[a] * dt - zdw;
                }
                out[j - j_t] = (0..m).map(|a| local[a] - acc[a]).collect();
            }
            Ok(Some(out))
        })
        .collect();
    summarize(per_path?, paths, t, j_t, m, j_t)
}

/// `R' = Z(t,s) - Z(t,t) - sum A(t, tau) dtau - sum Gamma(t, tau) dW` for `s` up to `T`,
/// with left-point sums; the reported residual is the one at `s = T`.
pub fn z_dynamics_residual(bundle: &FkBundle, paths: &PathEnsemble, t: f64) -> Result<Vec<ResidualStats>, FbsdeError> {
    let j_t = check_alignment(bundle, paths, t)?;
    let (m, k, n) = (bundle.m(), paths.k, paths.n_steps);
    let mk = m * k;
    let dt = paths.dt();
    let per_path: Result<Vec<PathResiduals>, FbsdeError> = (0..paths.n_paths)
        .into_par_iter()
        .map(|p| {
            if !inside(bundle, paths, p, j_t) {
                return Ok(None);
            }
            let mut out = Vec::with_capacity(n + 1 - j_t);
            let first = bundle.fields_at(t, paths.time(j_t), paths.state(p, j_t))?;
            let z0 = first.z.clone();
            let mut acc = vec![0.0; mk];
            out.push(vec![0.0; mk]);
            let mut cur = first;
            for j in j_t..n {
                let dw = paths.increment(p, j);
                for c in 0..mk {
                    acc[c] += cur.a[c] * dt + (0..k).map(|l| cur.gamma[c * k + l] * dw[l]).sum::<f64>();
                }
                cur = bundle.fields_at(t, paths.time(j + 1), paths.state(p, j + 1))?;
                out.push((0..mk).map(|c| cur.z[c] - z0[c] - acc[c]).collect());
            }
            Ok(Some(out))
        })
        .collect();
    summarize(per_path?, paths, t, j_t, mk, n)
}
