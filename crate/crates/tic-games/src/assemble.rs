//! The equilibrium nonlinearity `H^a(t, s, y, J u, J u(s,s,.)) = H^a(t, s, y, phi(s, s, y, J u(s,s,.)), J u)`.

use std::sync::Arc;

use tic_nonlinear::{fd_gradient, JetFn, JetGradFn, NonlinearitySpec};

use crate::game::{hamiltonian, minimax_solve, GameSpec};
use crate::GameError;

/// Splits a jet `[u (m) | p (m d) | q (m d d)]` into its three blocks.
pub fn split_jet(jet: &[f64], m: usize, d: usize) -> (&[f64], &[f64], &[f64]) {
    let (u, rest) = jet.split_at(m);
    let (p, q) = rest.split_at(m * d);
    (u, p, q)
}

/// Equilibrium controls from a diagonal jet; `NaN` controls when the minimax fails.
pub fn equilibrium_controls(game: &GameSpec, s: f64, y: &[f64], diag: &[f64]) -> Vec<f64> {
    let (u, p, q) = split_jet(diag, game.m, game.d);
    minimax_solve(game, s, s, y, u, p, q).unwrap_or_else(|_| vec![f64::NAN; game.n_controls()])
}

/// Player `a`'s Hamiltonian at fixed controls, read from a local jet.
pub fn hamiltonian_at(game: &GameSpec, a: usize, t: f64, s: f64, y: &[f64], alpha: &[f64], local: &[f64]) -> f64 {
    let (m, d) = (game.m, game.d);
    let (u, p, q) = split_jet(local, m, d);
    hamiltonian(game, a, t, s, y, alpha, u, p, &q[a * d * d..(a + 1) * d * d])
}

/// Builds the equilibrium HJB nonlinearity of a game, stated for the backward system
/// `u_s + H = 0`. Local derivatives are central differences of the Hamiltonian at frozen
/// controls; diagonal derivatives difference the full map including the minimax.
pub fn assemble_equilibrium_h(game: &GameSpec) -> Result<NonlinearitySpec, GameError> {
    game.validate()?;
    let game = Arc::new(game.clone());
    let (m, d) = (game.m, game.d);
    let g1 = game.clone();
    let f: JetFn = Arc::new(move |a, t, s, y, local, diag| {
        let alpha = equilibrium_controls(&g1, s, y, diag);
        hamiltonian_at(&g1, a, t, s, y, &alpha, local)
    });
    let g2 = game.clone();
    let d_local: JetGradFn = Arc::new(move |a, t, s, y, local, diag, out| {
        let alpha = equilibrium_controls(&g2, s, y, diag);
        fd_gradient(|z| hamiltonian_at(&g2, a, t, s, y, &alpha, z), local, out);
    });
    Ok(NonlinearitySpec::new(m, d, f).with_derivatives(d_local, None))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{quadratic_game, QuadraticCoefficients};
    use tic_nonlinear::Nonlinearity;

    #[test]
    fn jet_blocks() {
        let jet: Vec<f64> = (0..2 * (1 + 2 + 4)).map(|v| v as f64).collect();
        let (u, p, q) = split_jet(&jet, 2, 2);
        assert_eq!(u, &[0.0, 1.0]);
        assert_eq!(p, &[2.0, 3.0, 4.0, 5.0]);
        assert_eq!(q.len(), 8);
    }

    #[test]
    fn local_gradient_matches_coefficients() {
        let game = quadratic_game(QuadraticCoefficients::default());
        let h = assemble_equilibrium_h(&game).unwrap();
        let (local, diag) = ([0.3, -0.4, 0.8], [0.2, 0.5, -0.3]);
        let mut g = [0.0; 3];
        h.d_local(0, 0.1, 0.4, &[0.7], &local, &diag, &mut g);
        let c = QuadraticCoefficients::default();
        let alpha = c.minimizer(0.4, 0.4, diag[1], diag[2]);
        assert!(g[0].abs() < 1e-8);
        assert!((g[1] - (c.b1 + c.b2 * alpha)).abs() < 1e-8);
        assert!((g[2] - (c.a1 + 0.5 * c.a2 * alpha * alpha)).abs() < 1e-8);
    }
}
