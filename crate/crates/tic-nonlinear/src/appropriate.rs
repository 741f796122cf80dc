//! Sampled check that `(F, g)` is an appropriate pair: ellipticity of the jet derivatives at
//! the initial data, plus Hölder and Lipschitz quotients on sampled node pairs.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use tic_grid::jet::JetLayout;
use tic_grid::{TriTimeGrid, WeightSpec};
use tic_linear::{march_levels, DatumFn, ELLIPTICITY_SLACK};

use crate::march::{initial_field, validate};
use crate::newton::{SliceContext, SolverOptions};
use crate::{NonlinearError, Nonlinearity};

/// Upper limit on sampled points and pairs.
pub const MAX_SAMPLES: usize = 10_000;

#[derive(Debug, Clone)]
pub struct AppropriateReport {
    /// `min over points, xi of lambda_min(sum dF/dz_ij xi_i xi_j) - lambda`.
    pub margin_local: f64,
    /// Same with the local and diagonal derivatives added.
    pub margin_total: f64,
    pub ellipticity_pass: bool,
    /// Largest sampled `|dF(p) - dF(p')| / (|s - s'|^{alpha/2} + |y - y'|^alpha)`.
    pub holder_quotient: f64,
    /// Largest sampled `|F(z) - F(z')| / |z - z'|` around the initial jets.
    pub lipschitz_quotient: f64,
    /// Whether declared bounds of `F`, if any, dominate the sampled quotients.
    pub bounds_consistent: bool,
    pub points: usize,
    pub pass: bool,
}

struct Point {
    it: usize,
    is: usize,
    node: usize,
}

fn unit_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    loop {
        let x: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 1e-8 {
            return x.into_iter().map(|v| v / norm).collect();
        }
    }
}

/// Smallest eigenvalue over `v` of `sum_ij c[(b, i, j)] xi_i xi_j v^a v^b`, symmetrized.
fn min_form(c: &[Vec<f64>], lay: JetLayout, xi: &[f64]) -> f64 {
    let (m, d) = (lay.m, lay.d);
    let mut mat = DMatrix::<f64>::zeros(m, m);
    for a in 0..m {
        for b in 0..m {
            let mut q = 0.0;
            for i in 0..d {
                for j in 0..d {
                    q += c[a][lay.hess(b, i, j)] * xi[i] * xi[j];
                }
            }
            mat[(a, b)] += 0.5 * q;
            mat[(b, a)] += 0.5 * q;
        }
    }
    SymmetricEigen::new(mat).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Checks the pair `(F, g)` with ellipticity constant `lambda` on `grid`.
pub fn check_appropriate(
    f: &dyn Nonlinearity,
    g: &DatumFn,
    grid: &TriTimeGrid,
    lambda: f64,
    weight: &WeightSpec,
    seed: u64,
) -> Result<AppropriateReport, NonlinearError> {
    validate(f, grid)?;
    let space = grid.space();
    let (m, d, nn) = (f.m(), space.dim(), space.len());
    let lay = JetLayout::new(m, d);
    let len = lay.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let opts = SolverOptions::default();
    let ctx = SliceContext::new(f, space, &opts);
    let datum = initial_field(g, grid, m);
    let (k0, _) = march_levels(grid);
    let jets_t: Vec<Vec<f64>> = (0..=grid.steps())
        .map(|it| if grid.contains(it, k0) { ctx.jets(datum.slice(it, k0)) } else { Vec::new() })
        .collect();
    let diag0 = &jets_t[k0];

    let pairs = grid.pairs();
    let total = pairs.len() * nn;
    let points: Vec<Point> = if total <= MAX_SAMPLES {
        pairs.iter().flat_map(|&(it, is)| (0..nn).map(move |node| Point { it, is, node })).collect()
    } else {
        (0..MAX_SAMPLES)
            .map(|_| {
                let (it, is) = pairs[rng.random_range(0..pairs.len())];
                Point { it, is, node: rng.random_range(0..nn) }
            })
            .collect()
    };

    let mut xis: Vec<Vec<f64>> = (0..d).map(|i| (0..d).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    if d > 1 {
        for _ in 0..8 {
            xis.push(unit_vector(&mut rng, d));
        }
    }

    let mut margin_local = f64::INFINITY;
    let mut margin_total = f64::INFINITY;
    // Jet derivatives of F at each point: [local (m * len) | diag (m * len)].
    let mut derivs: Vec<Vec<f64>> = Vec::with_capacity(points.len());
    let mut dl = vec![vec![0.0; len]; m];
    let mut dt = vec![vec![0.0; len]; m];
    let mut dd = vec![0.0; len];
    for p in &points {
        let (t, s) = (grid.time(p.it), grid.time(p.is));
        let y = &ctx.coords[p.node];
        let z = &jets_t[p.it][p.node * len..(p.node + 1) * len];
        let zb = &diag0[p.node * len..(p.node + 1) * len];
        let mut flat = Vec::with_capacity(2 * m * len);
        for a in 0..m {
            f.d_local(a, t, s, y, z, zb, &mut dl[a]);
            f.d_diag(a, t, s, y, z, zb, &mut dd);
            for e in 0..len {
                dt[a][e] = dl[a][e] + dd[e];
            }
            flat.extend_from_slice(&dl[a]);
            flat.extend_from_slice(&dd);
        }
        for xi in &xis {
            margin_local = margin_local.min(min_form(&dl, lay, xi) - lambda);
            margin_total = margin_total.min(min_form(&dt, lay, xi) - lambda);
        }
        derivs.push(flat);
    }
    let ellipticity_pass = margin_local >= -ELLIPTICITY_SLACK && margin_total >= -ELLIPTICITY_SLACK;

    // Hölder quotients of the jet derivatives on pairs at equal t within rho0.
    let alpha = weight.alpha();
    let mut holder_quotient: f64 = 0.0;
    let n_pts = points.len();
    if n_pts > 1 {
        for _ in 0..MAX_SAMPLES {
            let i = rng.random_range(0..n_pts);
            let (p, q) = (&points[i], &points[rng.random_range(0..n_pts)]);
            let j = if p.it == q.it {
                rng.random_range(0..n_pts)
            } else {
                // Re-draw a partner on the same t-slice.
                let cand: Vec<usize> = grid.s_range(p.it).collect();
                let is = cand[rng.random_range(0..cand.len())];
                let node = rng.random_range(0..nn);
                let found = points.iter().position(|r| r.it == p.it && r.is == is && r.node == node);
                match found {
                    Some(j) => j,
                    None => continue,
                }
            };
            let q = &points[j];
            if q.it != p.it || (q.is == p.is && q.node == p.node) {
                continue;
            }
            let (yp, yq) = (&ctx.coords[p.node], &ctx.coords[q.node]);
            let dy = yp.iter().zip(yq).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            if dy > weight.rho0() {
                continue;
            }
            let ds = (grid.time(p.is) - grid.time(q.is)).abs();
            let den = ds.powf(alpha / 2.0) + dy.powf(alpha);
            let num = derivs[i].iter().zip(&derivs[j]).fold(0.0f64, |mx, (a, b)| mx.max((a - b).abs()));
            holder_quotient = holder_quotient.max(num / den);
        }
    }

    // Lipschitz quotients of F under random jet perturbations.
    let mut lipschitz_quotient: f64 = 0.0;
    let samples = MAX_SAMPLES.min(4 * n_pts).max(1);
    for _ in 0..samples {
        let p = &points[rng.random_range(0..n_pts)];
        let (t, s) = (grid.time(p.it), grid.time(p.is));
        let y = &ctx.coords[p.node];
        let z = &jets_t[p.it][p.node * len..(p.node + 1) * len];
        let zb = &diag0[p.node * len..(p.node + 1) * len];
        let dir = unit_vector(&mut rng, 2 * len);
        let scale = 0.1 * (1.0 + z.iter().chain(zb).fold(0.0f64, |mx, v| mx.max(v.abs())));
        let z2: Vec<f64> = z.iter().zip(&dir[..len]).map(|(v, e)| v + scale * e).collect();
        let zb2: Vec<f64> = zb.iter().zip(&dir[len..]).map(|(v, e)| v + scale * e).collect();
        let dz = dir.iter().fold(0.0f64, |mx, v| mx.max(v.abs())) * scale;
        for a in 0..m {
            let df = (f.eval(a, t, s, y, z, zb) - f.eval(a, t, s, y, &z2, &zb2)).abs();
            lipschitz_quotient = lipschitz_quotient.max(df / dz);
        }
    }

    let slack = 1.0 + 1e-9;
    let bounds_consistent = f.lipschitz().is_none_or(|l| lipschitz_quotient <= l * slack)
        && f.holder().is_none_or(|h| holder_quotient <= h * slack);
    let pass = ellipticity_pass && holder_quotient.is_finite() && lipschitz_quotient.is_finite() && bounds_consistent;
    Ok(AppropriateReport {
        margin_local,
        margin_total,
        ellipticity_pass,
        holder_quotient,
        lipschitz_quotient,
        bounds_consistent,
        points: n_pts,
        pass,
    })
}
