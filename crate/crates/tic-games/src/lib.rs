//! Time-inconsistent stochastic differential games.
//!
//! Each player's equilibrium value solves a nonlocal HJB equation in which the feedback
//! controls are computed from the diagonal `u(s, s, .)` while the running cost may depend on
//! the initial time `t`. The system is assembled into a nonlinearity, solved with the causal
//! march, and checked through the equilibrium strategy and a martingale property of the
//! cost process.

mod assemble;
mod equilibrium;
mod error;
mod game;
mod martingale;
pub mod problems;

pub use assemble::{assemble_equilibrium_h, equilibrium_controls, hamiltonian_at, split_jet};
pub use equilibrium::{high_order_jet, solve_equilibrium, EquilibriumOptions, EquilibriumOutput, StrategyJets};
pub use error::GameError;
pub use game::{
    argmin_1d, hamiltonian, minimax_solve, ControlMapFn, GameSpec, MinimaxFn, MinimaxOptions, RunningCostFn, Sense,
};
pub use martingale::{verify_martingale, MartingaleOptions};
