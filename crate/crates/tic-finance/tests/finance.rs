use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use tic_finance::{
    check_conditions_g0_gamma, exp_equilibrium, exp_game, exp_hjb_residual, exp_ode_matrices,
    exp_solution, exp_value, fundamental_matrix, lappo_danilevskii_check, merton_diagonal,
    power_diagonal_fixed_point, power_equilibrium, power_full_solution, power_hjb_residual,
    power_ode_terms, write_exp_oracle_csv, ExpUtilitySpec, FixedPointOptions, FundamentalMethod,
    PowerUtilitySpec,
};
use tic_games::{solve_equilibrium, EquilibriumOptions};
use tic_grid::{Orientation, TriTimeGrid};
use tic_nonlinear::{BoundaryClosure, SolverOptions};

fn constant(m: usize, v: f64) -> Arc<dyn Fn(f64, f64) -> DMatrix<f64> + Send + Sync> {
    Arc::new(move |_, _| DMatrix::from_element(m, m, v))
}

/// Smooth 3 x 3 family with fixed pseudo-random coefficients.
fn smooth_family(t: f64, s: f64) -> DMatrix<f64> {
    DMatrix::from_fn(3, 3, |i, j| {
        let c = (i * 3 + j) as f64;
        0.3 * (1.7 * c + 0.4).sin() + 0.2 * (0.9 * c - 1.1).cos() * s + 0.1 * (c * s + t).sin()
    })
}

#[test]
fn scalar_fundamental_matrix_is_an_exponential() {
    let n = |_: f64, _: f64| DMatrix::from_element(1, 1, -0.1);
    let ex = (-0.1f64).exp();
    for method in [
        FundamentalMethod::MatrixOde { steps: 128 },
        FundamentalMethod::PeanoBaker { intervals: 64 },
        FundamentalMethod::Expm {
            intervals: 16,
            tol: 1e-12,
        },
    ] {
        let f = fundamental_matrix(&n, 0.2, 0.5, 1.5, method).unwrap();
        assert!((f[(0, 0)] - ex).abs() < 1e-13, "{method:?}");
    }
}

#[test]
fn peano_baker_agrees_with_runge_kutta() {
    for (t, s) in [(0.0, 0.0), (0.3, 0.5), (0.9, 0.9)] {
        let rk = fundamental_matrix(
            &smooth_family,
            t,
            s,
            1.0,
            FundamentalMethod::MatrixOde { steps: 1024 },
        )
        .unwrap();
        let pb = fundamental_matrix(
            &smooth_family,
            t,
            s,
            1.0,
            FundamentalMethod::PeanoBaker { intervals: 512 },
        )
        .unwrap();
        let diff = (&rk - &pb).abs().max();
        assert!(diff < 1e-10, "({t}, {s}): {diff:e}");
    }
}

#[test]
fn commuting_families_pass_and_the_exponential_matches() {
    let cases: Vec<(&str, Box<dyn Fn(f64, f64) -> DMatrix<f64>>)> = vec![
        (
            "scalar",
            Box::new(|t: f64, s: f64| DMatrix::from_element(1, 1, t - s * s)),
        ),
        (
            "initial time only",
            Box::new(|t: f64, _: f64| DMatrix::from_row_slice(2, 2, &[0.1, t, 0.3 - t, -0.2])),
        ),
        (
            "diagonal",
            Box::new(|t: f64, s: f64| {
                DMatrix::from_diagonal(&DVector::from_vec(vec![s, -t * s, 0.5 * s.cos()]))
            }),
        ),
        (
            "commuting",
            Box::new(|_: f64, s: f64| {
                let j = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
                DMatrix::identity(2, 2) * s.sin() + j * (0.5 + s)
            }),
        ),
    ];
    for (name, n) in &cases {
        let ld = lappo_danilevskii_check(n.as_ref(), 0.2, 0.3, 1.0, 1e-10, 64).unwrap();
        assert!(ld.pass, "{name}: {:e}", ld.commutator_norm);
        let ex = fundamental_matrix(
            n.as_ref(),
            0.2,
            0.3,
            1.0,
            FundamentalMethod::Expm {
                intervals: 256,
                tol: 1e-10,
            },
        )
        .unwrap();
        let pb = fundamental_matrix(
            n.as_ref(),
            0.2,
            0.3,
            1.0,
            FundamentalMethod::PeanoBaker { intervals: 256 },
        )
        .unwrap();
        assert!((&ex - &pb).abs().max() < 1e-10, "{name}");
    }
}

#[test]
fn rotation_plus_symmetric_drift_does_not_commute() {
    // [J + s D, (T - s) J + (T^2 - s^2)/2 D] = (T - s)^2 / 2 [J, D] with D = diag(1, -1).
    let n = |_: f64, s: f64| DMatrix::from_row_slice(2, 2, &[s, -1.0, 1.0, -s]);
    let ld = lappo_danilevskii_check(&n, 0.0, 0.0, 1.0, 1e-10, 64).unwrap();
    // |[J, D]|_F = 2 sqrt(2) at s = 0, T = 1.
    assert!(!ld.pass);
    assert!(
        (ld.commutator_norm - 2f64.sqrt()).abs() < 1e-12,
        "{}",
        ld.commutator_norm
    );
    // The scaled rotation s J commutes with its integral.
    let scaled = |_: f64, s: f64| DMatrix::from_row_slice(2, 2, &[0.0, -s, s, 0.0]);
    assert!(
        lappo_danilevskii_check(&scaled, 0.0, 0.0, 1.0, 1e-12, 64)
            .unwrap()
            .pass
    );
}

fn exp_spec(
    mu: Vec<f64>,
    sigma: Vec<f64>,
    w3: Arc<dyn Fn(f64, f64) -> DMatrix<f64> + Send + Sync>,
) -> ExpUtilitySpec {
    let m = mu.len();
    ExpUtilitySpec::new(
        mu,
        sigma,
        0.02,
        1.0,
        1.0,
        w3,
        Arc::new(move |t| DVector::from_element(m, 1.0 + 0.5 * t)),
    )
    .unwrap()
}

#[test]
fn two_asset_excess_return_sum() {
    let spec = exp_spec(vec![0.08, 0.06], vec![0.2, 0.3], constant(2, 0.0));
    let (n1, n2, _) = exp_ode_matrices(&spec, 0.1, 0.2);
    let sum: f64 = 0.0036 / 0.08 + 0.0016 / 0.18;
    assert!((sum - 0.053_888_888_888_888_9).abs() < 1e-15);
    assert!((n2[(0, 0)] + sum).abs() < 1e-15 && (n2[(1, 1)] + sum).abs() < 1e-15);
    assert_eq!(n2[(0, 1)], 0.0);
    // N1 = 3 sum / 2 on the diagonal minus the excess-return row (0.09, 0.0177...) in every row.
    assert!((n1[(0, 0)] - (1.5 * 2.0 * sum - 0.09)).abs() < 1e-15);
    assert!((n1[(0, 1)] + 0.0016 / 0.09).abs() < 1e-15);
}

#[test]
fn scalar_closed_form_at_zero_excess_return() {
    let (rr, tf) = (0.3, 1.0);
    let spec = exp_spec(vec![0.02], vec![0.2], constant(1, rr));
    for (t, s, x) in [(0.0, 0.0, 0.3), (0.2, 0.7, -1.0), (0.5, 1.0, 2.0)] {
        let u = exp_solution(&spec, t, s, x).unwrap()[0];
        let ex = -(-rr * (tf - s)).exp() * (1.0 + 0.5 * t) * (-x).exp();
        assert!((u - ex).abs() < 1e-12 * ex.abs(), "{u} vs {ex}");
    }
}

#[test]
fn scalar_strategy_and_value() {
    let spec = exp_spec(vec![0.08], vec![0.2], constant(1, 0.3));
    assert!((exp_equilibrium(&spec, 1.0)[0] - 1.5).abs() < 1e-15);
    assert!((exp_equilibrium(&spec, 0.5)[0] - 1.5 * (-0.01f64).exp()).abs() < 1e-15);
    // V(s, y) = U(s, s, y e^{r (T - s)}).
    let v = exp_value(&spec, 0.4, 0.7).unwrap()[0];
    let u = exp_solution(&spec, 0.4, 0.4, 0.7 * (0.02f64 * 0.6).exp()).unwrap()[0];
    assert!((v - u).abs() < 1e-15 * u.abs());
}

#[test]
fn embedding_is_linear_in_gamma() {
    let base = exp_spec(
        vec![0.08, 0.06],
        vec![0.2, 0.3],
        Arc::new(|t, s| DMatrix::from_diagonal(&DVector::from_vec(vec![0.1 + t, 0.2 * s]))),
    );
    let u0 = exp_solution(&base, 0.1, 0.3, 0.4).unwrap();
    let mut ks = Vec::new();
    for gamma in [1e-2, 1e-3, 1e-4] {
        let spec = base
            .clone()
            .with_embedding(
                gamma,
                Arc::new(|_, s| DVector::from_vec(vec![1.0 + s, 2.0])),
                Arc::new(|t| DVector::from_vec(vec![1.0, 1.0 + t])),
            )
            .unwrap();
        let u = exp_solution(&spec, 0.1, 0.3, 0.4).unwrap();
        let gap = u
            .iter()
            .zip(&u0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        ks.push(gap / gamma);
    }
    for k in &ks {
        assert!((k - ks[0]).abs() < 1e-8 * ks[0], "{ks:?}");
    }
}

#[test]
fn closed_form_satisfies_the_equilibrium_system_on_commuting_cases() {
    let specs = [
        exp_spec(
            vec![0.08],
            vec![0.2],
            Arc::new(|t, s| DMatrix::from_element(1, 1, 0.05 + 0.05 * (-(s - t)).exp())),
        ),
        exp_spec(
            vec![0.08, 0.06],
            vec![0.2, 0.3],
            Arc::new(|t, s| {
                DMatrix::from_diagonal(&DVector::from_vec(vec![0.1 + 0.1 * (t - s).exp(), 0.2 * s]))
            }),
        ),
        exp_spec(
            vec![0.08, 0.06],
            vec![0.2, 0.3],
            Arc::new(|t, _| DMatrix::from_row_slice(2, 2, &[0.1, 0.05 + t, 0.02, 0.1])),
        ),
    ];
    for spec in &specs {
        let mut worst = 0.0f64;
        for (t, s) in [(0.0, 0.0), (0.0, 0.5), (0.3, 0.6), (0.5, 0.999), (0.8, 1.0)] {
            for x in [-2.0, 0.0, 1.5] {
                let r = exp_hjb_residual(spec, t, s, x).unwrap();
                worst = r.iter().fold(worst, |w, v| w.max(v.abs()));
            }
        }
        assert!(worst <= 1e-8, "{spec:?}: {worst:e}");
    }
}

#[test]
fn oracle_table_lists_the_triangle() {
    let spec = exp_spec(vec![0.08, 0.06], vec![0.2, 0.3], constant(2, 0.1));
    let mut buf = Vec::new();
    write_exp_oracle_csv(&spec, 4, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,s,phi1_1,phi1_2,phi2_1,phi2_2");
    assert_eq!(lines.len(), 1 + 15);
}

#[test]
fn pde_equilibrium_matches_the_closed_form() {
    let spec = exp_spec(
        vec![0.08],
        vec![0.2],
        Arc::new(|t, s| DMatrix::from_element(1, 1, 0.05 + 0.05 * (-(s - t)).exp())),
    );
    let game = exp_game(&spec).unwrap();
    let half = 1000f64.ln() / spec.eta;
    let grid = TriTimeGrid::new(
        spec.t_final,
        64,
        &[(-half, half)],
        201,
        Orientation::Backward,
    )
    .unwrap();
    let opts = EquilibriumOptions {
        solver: SolverOptions {
            boundary: BoundaryClosure::Geometric,
            ..Default::default()
        },
        ..Default::default()
    };
    let out = solve_equilibrium(&game, &grid, &opts).unwrap();
    let space = grid.space();
    let (mut rel, mut spread, mut off) = (0.0f64, 0.0f64, 0.0f64);
    for is in 0..=grid.steps() {
        let s = grid.time(is);
        let phi2 = exp_solution(&spec, s, s, 0.0).unwrap()[0];
        let alpha = exp_equilibrium(&spec, s)[0];
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for node in 0..space.len() {
            let x = space.coords_vec(node)[0];
            if x.abs() > 0.5 * half {
                continue;
            }
            let ex = phi2 * (-spec.eta * x).exp();
            rel = rel.max((out.value(is, node)[0] - ex).abs() / ex.abs());
            let a = out.strategy(is, node)[0];
            lo = lo.min(a);
            hi = hi.max(a);
            off = off.max((a - alpha).abs());
        }
        spread = spread.max(hi - lo);
    }
    eprintln!("relative value error {rel:e}, strategy spread {spread:e}, strategy error {off:e}");
    assert!(rel < 1e-2);
    assert!(spread <= 1e-10);
    assert!(off <= 1e-6);
}

fn merton(t_final: f64) -> PowerUtilitySpec {
    PowerUtilitySpec::new(
        vec![0.08],
        vec![0.2],
        0.02,
        t_final,
        0.5,
        constant(1, 1.0),
        constant(1, 0.0),
        Arc::new(|_| DVector::from_element(1, 1.0)),
    )
    .unwrap()
}

#[test]
fn merton_case_matches_the_brute_force_ode() {
    let spec = merton(1.0);
    let n = 64;
    let diag = power_diagonal_fixed_point(
        &spec,
        &FixedPointOptions {
            intervals: n,
            ..Default::default()
        },
    )
    .unwrap();
    let oracle = merton_diagonal(spec.k(), spec.beta, 1.0, 1.0, spec.t_final, 1_000_000, n);
    let worst = diag
        .psibar
        .iter()
        .zip(&oracle)
        .map(|(p, o)| ((p[0] - o) / o).abs())
        .fold(0.0, f64::max);
    assert!(worst < 1e-6, "{worst:e}");
    assert_eq!(diag.psibar[n][0], 1.0);
    for w in diag.update_norms.windows(2).skip(1) {
        assert!(w[1] < w[0], "{:?}", diag.update_norms);
    }
}

#[test]
fn full_solution_is_consistent_with_the_diagonal() {
    let spec = merton(1.0);
    let diag = power_diagonal_fixed_point(&spec, &FixedPointOptions::default()).unwrap();
    for (i, &s) in diag.nodes.iter().enumerate().step_by(8) {
        let psi = power_full_solution(&spec, &diag, s, s).unwrap()[0];
        assert!(
            (psi - diag.psibar[i][0]).abs() < 1e-8,
            "{s}: {psi} vs {}",
            diag.psibar[i][0]
        );
        // Time consistent: psi(t, s) does not depend on t.
        for t in [0.0, 0.5 * s] {
            let other = power_full_solution(&spec, &diag, t, s).unwrap()[0];
            assert!((other - psi).abs() < 1e-8);
        }
    }
    assert_eq!(power_full_solution(&spec, &diag, 0.3, 1.0).unwrap()[0], 1.0);
}

fn time_inconsistent_pair() -> PowerUtilitySpec {
    PowerUtilitySpec::new(
        vec![0.08, 0.06],
        vec![0.2, 0.3],
        0.02,
        1.0,
        0.5,
        Arc::new(|t, s| {
            let d = (-0.5 * (s - t)).exp();
            DMatrix::from_row_slice(2, 2, &[d, 0.5 * d, 0.3 * d, 1.2 * d])
        }),
        Arc::new(|t, s| {
            DMatrix::from_diagonal(&DVector::from_vec(vec![0.05 + 0.02 * (s - t), 0.03]))
        }),
        Arc::new(|t| DVector::from_vec(vec![1.0 + 0.2 * t, 0.8])),
    )
    .unwrap()
}

#[test]
fn lower_bound_holds_under_the_conditions() {
    let spec = time_inconsistent_pair();
    let rep = check_conditions_g0_gamma(&spec, 64).unwrap();
    assert!(rep.pass, "{rep:?}");
    let diag = power_diagonal_fixed_point(&spec, &FixedPointOptions::default()).unwrap();
    for (s, p) in diag.nodes.iter().zip(&diag.psibar) {
        let v = (spec.v)(*s, *s);
        for a in 0..2 {
            let normalized = p[a] / v[(a, a)];
            assert!(
                normalized >= rep.lower_bound(*s),
                "s = {s}: {normalized} < {}",
                rep.lower_bound(*s)
            );
            assert!(
                normalized <= rep.upper,
                "s = {s}: {normalized} > {}",
                rep.upper
            );
        }
    }
    for w in diag.update_norms.windows(2).skip(1) {
        assert!(w[1] < w[0], "{:?}", diag.update_norms);
    }
}

#[test]
fn equal_consumption_weights_satisfy_the_conditions() {
    let spec = PowerUtilitySpec::new(
        vec![0.08, 0.06],
        vec![0.2, 0.3],
        0.02,
        1.0,
        0.5,
        constant(2, 0.7),
        constant(2, 0.0),
        Arc::new(|_| DVector::from_element(2, 1.0)),
    )
    .unwrap();
    let rep = check_conditions_g0_gamma(&spec, 32).unwrap();
    assert!(rep.pass && rep.gamma.is_finite(), "{rep:?}");
    let (_, f) = power_ode_terms(&spec, &[0.5, 0.9], 0.1, 0.4).unwrap();
    let ex: f64 = [0.5f64, 0.9]
        .iter()
        .map(|p| 0.7 * (p / 0.7).powf(-1.0))
        .sum();
    assert!((f[0] - ex).abs() < 1e-14 && (f[1] - ex).abs() < 1e-14);

    let mut zero_cross = spec.clone();
    zero_cross.v = Arc::new(|_, _| DMatrix::from_row_slice(2, 2, &[0.7, 0.0, 0.7, 0.7]));
    let rep = check_conditions_g0_gamma(&zero_cross, 32).unwrap();
    assert!(!rep.pass && rep.gamma.is_infinite());
}

#[test]
fn power_ansatz_satisfies_the_equilibrium_system() {
    let spec = time_inconsistent_pair();
    let diag = power_diagonal_fixed_point(&spec, &FixedPointOptions::default()).unwrap();
    let mut worst = 0.0f64;
    for (t, s) in [(0.0, 0.1), (0.2, 0.5), (0.5, 0.9), (0.7, 0.7)] {
        for y in [0.5, 1.0, 3.0] {
            let r = power_hjb_residual(&spec, &diag, t, s, y).unwrap();
            worst = r.iter().fold(worst, |w, v| w.max(v.abs()));
        }
    }
    assert!(worst < 1e-6, "{worst:e}");
    let eq = power_equilibrium(&spec, &diag, 0.5, 2.0).unwrap();
    assert!((eq.alpha[1] - 0.04 / (0.09 * 0.5) * 2.0).abs() < 1e-14);
}
