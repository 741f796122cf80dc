//! Monte Carlo check that the cost process under the equilibrium strategy is a martingale.

use std::sync::Arc;

use tic_fbsde::{bsde_residual, simulate_paths, FkBundle, McConfig, ResidualStats, StateSde};

use tic_nonlinear::{JetFn, NonlinearitySpec};

use crate::assemble::{assemble_equilibrium_h, hamiltonian_at, split_jet};
use crate::equilibrium::EquilibriumOutput;
use crate::game::{minimax_solve, GameSpec};
use crate::GameError;

#[derive(Debug, Clone, PartialEq)]
pub struct MartingaleOptions {
    /// Initial time of the paths; must be a path node below `T`.
    pub t: f64,
    pub y0: Vec<f64>,
    pub mc: McConfig,
    /// Added to every control coordinate of the feedback strategy. Zero for the check itself,
    /// nonzero for a negative control.
    pub shift: f64,
}

/// Residual `u(t,t,X_t) - [g(t, X_T) + int h^a(alpha) ds - int Z dW]` per player along paths driven
/// by the feedback `alpha(s, x)` read from the diagonal of the computed solution, plus `shift`.
///
/// With zero shift the mean vanishes up to discretization and sampling error. A shifted
/// strategy pays `H^a(alpha + shift) - H^a(alpha)` per unit time, which moves the mean.
pub fn verify_martingale(
    game: &GameSpec,
    out: &EquilibriumOutput,
    opts: &MartingaleOptions,
) -> Result<Vec<ResidualStats>, GameError> {
    let (m, d, k) = (game.m, game.d, game.k);
    let grid = out.grid();
    if opts.y0.len() != d {
        return Err(GameError::InvalidParameter("y0 has the wrong dimension".into()));
    }
    let h = Arc::new(assemble_equilibrium_h(game)?);
    let idle = StateSde::constant(vec![0.0; d], vec![0.0; d * k], k);
    let lookup = Arc::new(FkBundle::new(out.u.clone(), idle, h, Some(game.g.clone()))?);
    let (lo, hi) = (grid.space().lower().to_vec(), grid.space().upper().to_vec());
    let shared = Arc::new(game.clone());
    let shift = opts.shift;
    let feedback = move |s: f64, x: &[f64]| -> Vec<f64> {
        let xc: Vec<f64> = x.iter().enumerate().map(|(i, v)| v.clamp(lo[i], hi[i])).collect();
        let Ok(jet) = lookup.jet(s, s, &xc) else {
            return vec![f64::NAN; shared.n_controls()];
        };
        let (u, p, q) = split_jet(&jet, m, d);
        match minimax_solve(&shared, s, s, x, u, p, q) {
            Ok(a) => a.into_iter().map(|v| v + shift).collect(),
            Err(_) => vec![f64::NAN; shared.n_controls()],
        }
    };
    let feedback = Arc::new(feedback);
    let (fb, gb) = (feedback.clone(), game.b.clone());
    let (fs, gs) = (feedback.clone(), game.sigma.clone());
    let sde = StateSde::new(
        d,
        k,
        Arc::new(move |s, x, o| gb(s, x, &fb(s, x), o)),
        Arc::new(move |s, x, o| gs(s, x, &fs(s, x), o)),
    );
    let (fh, gh) = (feedback.clone(), game.clone());
    let used: JetFn = Arc::new(move |a, t, s, y, local, _| hamiltonian_at(&gh, a, t, s, y, &fh(s, y), local));
    let f = Arc::new(NonlinearitySpec::new(m, d, used));
    let bundle = FkBundle::new(out.u.clone(), sde.clone(), f, Some(game.g.clone()))?;
    let paths = simulate_paths(&sde, &opts.y0, opts.t, grid.t_final(), &opts.mc)?;
    Ok(bsde_residual(&bundle, &paths, opts.t)?)
}
