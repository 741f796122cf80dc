//! Euler–Maruyama paths with reproducible Brownian increments.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::FbsdeError;

/// `(s, y, out)`: drift `b(s, y)` into `out[0..d]`.
pub type DriftFn = Arc<dyn Fn(f64, &[f64], &mut [f64]) + Send + Sync>;
/// `(s, y, out)`: diffusion `sigma(s, y)` into `out[i * k + l]`, a `d x k` matrix.
pub type DiffusionFn = Arc<dyn Fn(f64, &[f64], &mut [f64]) + Send + Sync>;

/// Uncontrolled state equation `dX = b ds + sigma dW` with `X` in `R^d`, `W` in `R^k`.
#[derive(Clone)]
pub struct StateSde {
    pub d: usize,
    pub k: usize,
    pub b: DriftFn,
    pub sigma: DiffusionFn,
}

impl fmt::Debug for StateSde {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StateSde").field("d", &self.d).field("k", &self.k).finish()
    }
}

impl StateSde {
    pub fn new(d: usize, k: usize, b: DriftFn, sigma: DiffusionFn) -> Self {
        Self { d, k, b, sigma }
    }

    /// Constant drift and diffusion.
    pub fn constant(b: Vec<f64>, sigma: Vec<f64>, k: usize) -> Self {
        let d = b.len();
        assert_eq!(sigma.len(), d * k, "sigma must be d x k");
        Self::new(
            d,
            k,
            Arc::new(move |_, _, out| out.copy_from_slice(&b)),
            Arc::new(move |_, _, out| out.copy_from_slice(&sigma)),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    pub n_paths: usize,
    /// Steps over the whole horizon `[t0, T]`.
    pub n_steps: usize,
    pub seed: u64,
}

impl McConfig {
    pub fn validate(&self) -> Result<(), FbsdeError> {
        if self.n_paths < 100 {
            return Err(FbsdeError::InvalidParameter(format!("n_paths = {} < 100", self.n_paths)));
        }
        if self.n_steps < 10 {
            return Err(FbsdeError::InvalidParameter(format!("n_steps = {} < 10", self.n_steps)));
        }
        Ok(())
    }
}

/// Brownian increments of one path: `n_steps * k` values, step-major.
///
/// Each path reads its own ChaCha8 stream `(seed, path)` from the start, so the increment of
/// step `j` is determined by `(seed, path, j)` alone.
pub fn brownian_increments(seed: u64, path: u64, n_steps: usize, k: usize, dt: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(path);
    let sd = dt.sqrt();
    (0..n_steps * k).map(|_| sd * rng.sample::<f64, _>(StandardNormal)).collect()
}

/// States `x[(path * (n_steps + 1) + j) * d + i]` and increments `dw[(path * n_steps + j) * k + l]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    pub t0: f64,
    pub t_final: f64,
    pub n_paths: usize,
    pub n_steps: usize,
    pub d: usize,
    pub k: usize,
    pub x: Vec<f64>,
    pub dw: Vec<f64>,
}

impl PathEnsemble {
    pub fn dt(&self) -> f64 {
        (self.t_final - self.t0) / self.n_steps as f64
    }
    pub fn time(&self, j: usize) -> f64 {
        if j == self.n_steps {
            self.t_final
        } else {
            self.t0 + j as f64 * self.dt()
        }
    }
    pub fn state(&self, path: usize, j: usize) -> &[f64] {
        let o = (path * (self.n_steps + 1) + j) * self.d;
        &self.x[o..o + self.d]
    }
    pub fn increment(&self, path: usize, j: usize) -> &[f64] {
        let o = (path * self.n_steps + j) * self.k;
        &self.dw[o..o + self.k]
    }
    /// Path step index of time `t`, if `t` is a node.
    pub fn step_of(&self, t: f64) -> Option<usize> {
        let x = (t - self.t0) / self.dt();
        let j = x.round();
        ((x - j).abs() < 1e-9 && j >= 0.0 && j as usize <= self.n_steps).then_some(j as usize)
    }
}

/// Simulates `X(s) = y0 + int b ds + int sigma dW` on `[t0, T]` with Euler–Maruyama.
pub fn simulate_paths(
    sde: &StateSde,
    y0: &[f64],
    t0: f64,
    t_final: f64,
    cfg: &McConfig,
) -> Result<PathEnsemble, FbsdeError> {
    cfg.validate()?;
    if y0.len() != sde.d {
        return Err(FbsdeError::InvalidParameter("y0 has the wrong dimension".into()));
    }
    if !(t_final > t0) {
        return Err(FbsdeError::InvalidParameter(format!("empty horizon [{t0}, {t_final}]")));
    }
    let (d, k, n) = (sde.d, sde.k, cfg.n_steps);
    let dt = (t_final - t0) / n as f64;
    let per_path: Vec<(Vec<f64>, Vec<f64>)> = (0..cfg.n_paths)
        .into_par_iter()
        .map(|p| {
            let dw = brownian_increments(cfg.seed, p as u64, n, k, dt);
            let mut x = Vec::with_capacity((n + 1) * d);
            x.extend_from_slice(y0);
            let mut b = vec![0.0; d];
            let mut sig = vec![0.0; d * k];
            for j in 0..n {
                let s = t0 + j as f64 * dt;
                let cur = x[j * d..(j + 1) * d].to_vec();
                (sde.b)(s, &cur, &mut b);
                (sde.sigma)(s, &cur, &mut sig);
                for i in 0..d {
                    let mut v = cur[i] + b[i] * dt;
                    for l in 0..k {
                        v += sig[i * k + l] * dw[j * k + l];
                    }
                    x.push(v);
                }
            }
            (x, dw)
        })
        .collect();
    let mut x = Vec::with_capacity(cfg.n_paths * (n + 1) * d);
    let mut dw = Vec::with_capacity(cfg.n_paths * n * k);
    for (px, pw) in per_path {
        x.extend(px);
        dw.extend(pw);
    }
    Ok(PathEnsemble { t0, t_final, n_paths: cfg.n_paths, n_steps: n, d, k, x, dw })
}

/// Sum in a fixed binary tree, independent of thread scheduling.
pub fn pairwise_sum(v: &[f64]) -> f64 {
    match v.len() {
        0 => 0.0,
        1 => v[0],
        n => pairwise_sum(&v[..n / 2]) + pairwise_sum(&v[n / 2..]),
    }
}
