use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use tic_grid::stencil::Deriv;
use tic_grid::{Orientation, TriTimeGrid};

use crate::{LinearError, LinearSystemSpec};

/// One sampled point `(t, s, y, xi, v)` with unit `xi`, `v` and both quadratic forms.
#[derive(Debug, Clone, PartialEq)]
pub struct Probe {
    pub t: f64,
    pub s: f64,
    pub y: Vec<f64>,
    pub xi: Vec<f64>,
    pub v: Vec<f64>,
    /// `sum A^{a,(i,j)}_b xi_i xi_j v^a v^b`.
    pub q_local: f64,
    /// Same with `A + B`.
    pub q_total: f64,
}

#[derive(Debug, Clone)]
pub struct EllipticityReport {
    pub pass: bool,
    /// `min over probes of min(q_local, q_total) - lambda`.
    pub margin: f64,
    pub worst: Probe,
    pub probes: Vec<Probe>,
}

/// Tolerance below zero still counted as a pass.
pub const ELLIPTICITY_SLACK: f64 = 1e-12;

/// Second-order quadratic form of a coefficient evaluator.
pub fn quadratic_form(
    c: &dyn Fn(usize, Deriv, usize, f64, f64, &[f64]) -> f64,
    m: usize,
    t: f64,
    s: f64,
    y: &[f64],
    xi: &[f64],
    v: &[f64],
) -> f64 {
    let d = xi.len();
    let mut q = 0.0;
    for a in 0..m {
        for b in 0..m {
            for i in 0..d {
                for j in 0..d {
                    q += c(a, Deriv::D2(i, j), b, t, s, y) * xi[i] * xi[j] * v[a] * v[b];
                }
            }
        }
    }
    q
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

/// Samples `probes` points of the admissible region and checks both ellipticity inequalities.
pub fn check_ellipticity(
    spec: &LinearSystemSpec,
    grid: &TriTimeGrid,
    probes: usize,
    seed: u64,
) -> Result<EllipticityReport, LinearError> {
    if probes == 0 {
        return Err(LinearError::InvalidParameter("at least one probe is required".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tf = grid.t_final();
    let space = grid.space();
    let mut out = Vec::with_capacity(probes);
    for _ in 0..probes {
        let (p, q) = (rng.random::<f64>() * tf, rng.random::<f64>() * tf);
        let (lo, hi) = if p < q { (p, q) } else { (q, p) };
        let (t, s) = match grid.orientation() {
            Orientation::Forward => (hi, lo),
            Orientation::Backward => (lo, hi),
        };
        let y: Vec<f64> = (0..space.dim())
            .map(|ax| space.lower()[ax] + rng.random::<f64>() * (space.upper()[ax] - space.lower()[ax]))
            .collect();
        let xi = unit_vector(&mut rng, space.dim());
        let v = unit_vector(&mut rng, spec.m);
        let q_local = quadratic_form(&*spec.a, spec.m, t, s, &y, &xi, &v);
        let q_diag = match &spec.b {
            Some(b) => quadratic_form(&**b, spec.m, t, s, &y, &xi, &v),
            None => 0.0,
        };
        out.push(Probe { t, s, y, xi, v, q_local, q_total: q_local + q_diag });
    }
    let slack = |p: &Probe| p.q_local.min(p.q_total) - spec.lambda;
    let worst = out
        .iter()
        .min_by(|a, b| slack(a).total_cmp(&slack(b)))
        .cloned()
        .expect("at least one probe");
    let margin = slack(&worst);
    Ok(EllipticityReport { pass: margin >= -ELLIPTICITY_SLACK, margin, worst, probes: out })
}
