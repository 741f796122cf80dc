//! Exponential- and power-utility equilibrium investment games: fundamental matrices,
//! ODE reductions of the equilibrium systems and closed-form oracles.

mod error;
mod exp;
mod fundamental;
mod power;
pub mod quadrature;

pub use error::FinanceError;
pub use exp::{
    exp_equilibrium, exp_game, exp_hjb_residual, exp_ode_matrices, exp_phi1, exp_phi2,
    exp_solution, exp_value, write_exp_oracle_csv, ExpUtilitySpec, OdeOptions, PairMatrixFn,
    PairVectorFn, TimeVectorFn, RESIDUAL_STEP,
};
pub use fundamental::{
    cauchy_solution, fundamental_matrix, fundamental_path, lappo_danilevskii_check,
    FundamentalMethod, LdReport, MAX_SERIES_TERMS, SERIES_TOL,
};
pub use power::{
    check_conditions_g0_gamma, merton_diagonal, power_diagonal_fixed_point, power_equilibrium,
    power_full_solution, power_game, power_hjb_residual, power_ode_terms, power_value,
    ConditionsReport, FixedPointOptions, PowerDiagonal, PowerEquilibrium, PowerUtilitySpec,
};
