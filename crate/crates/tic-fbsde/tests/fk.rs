use std::sync::Arc;

use tic_fbsde::{
    bsde_residual, fk_fields, simulate_paths, write_residual_csv, z_dynamics_residual, FkBundle, McConfig,
    ResidualStats, StateSde,
};
use tic_grid::{extract_diagonal, FlowField, Orientation, TriTimeGrid};
use tic_linear::DatumFn;
use tic_nonlinear::{Nonlinearity, NonlinearitySpec};

fn backward_grid(n: usize, m: usize, half: f64) -> TriTimeGrid {
    TriTimeGrid::new(1.0, n, &[(-half, half)], m, Orientation::Backward).unwrap()
}

fn half_laplacian() -> Arc<dyn Nonlinearity> {
    Arc::new(NonlinearitySpec::new(1, 1, Arc::new(|_, _, _, _, z, _| 0.5 * z[2])).diagonal_free())
}

fn brownian() -> StateSde {
    StateSde::constant(vec![0.0], vec![1.0], 1)
}

fn heat_bundle(shift: f64) -> FkBundle {
    let g = backward_grid(100, 401, 8.0);
    let u = FlowField::from_fn(&g, 1, |_, s, y, o| o[0] = (-(1.0 - s) / 2.0).exp() * y[0].sin() + shift);
    let gd: DatumFn = Arc::new(|_, _, y| y[0].sin());
    FkBundle::new(u, brownian(), half_laplacian(), Some(gd)).unwrap()
}

fn cfg(n_paths: usize, n_steps: usize) -> McConfig {
    McConfig { n_paths, n_steps, seed: 2024 }
}

#[test]
fn brownian_variance_matches_horizon() {
    let p = simulate_paths(&brownian(), &[0.3], 0.0, 1.0, &cfg(10_000, 50)).unwrap();
    let inc: Vec<f64> = (0..p.n_paths).map(|i| p.state(i, 50)[0] - 0.3).collect();
    let n = inc.len() as f64;
    let mean = inc.iter().sum::<f64>() / n;
    let var = inc.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let se = (2.0 / (n - 1.0)).sqrt();
    assert!((var - 1.0).abs() < 3.0 * se, "variance {var}");
}

#[test]
fn constant_and_linear_fields() {
    let g = backward_grid(10, 41, 8.0);
    let p = simulate_paths(&brownian(), &[0.1], 0.0, 1.0, &cfg(100, 20)).unwrap();
    let c = FkBundle::new(FlowField::from_fn(&g, 1, |_, _, _, o| o[0] = 2.5), brownian(), half_laplacian(), None)
        .unwrap();
    let f = fk_fields(&c, &p, 7, 0.2, 0.55).unwrap();
    assert!((f.y[0] - 2.5).abs() < 1e-14);
    assert!(f.z[0].abs() < 1e-12 && f.gamma[0].abs() < 1e-12 && f.a[0].abs() < 1e-12);

    let lin = FkBundle::new(FlowField::from_fn(&g, 1, |_, _, y, o| o[0] = y[0]), brownian(), half_laplacian(), None)
        .unwrap();
    let f = fk_fields(&lin, &p, 3, 0.2, 0.55).unwrap();
    assert!((f.z[0] - 1.0).abs() < 1e-12 && f.gamma[0].abs() < 1e-10 && f.a[0].abs() < 1e-10, "{f:?}");
}

#[test]
fn quadratic_field_z_dynamics_vanish_pathwise() {
    let g = backward_grid(20, 81, 8.0);
    let u = FlowField::from_fn(&g, 1, |_, _, y, o| o[0] = y[0] * y[0]);
    let b = FkBundle::new(u, brownian(), half_laplacian(), None).unwrap();
    let p = simulate_paths(&brownian(), &[0.0], 0.0, 1.0, &cfg(1000, 40)).unwrap();
    for t in [0.0, 0.5] {
        let st = &z_dynamics_residual(&b, &p, t).unwrap()[0];
        assert_eq!(st.censored, 0);
        for row in &st.breakdown {
            assert!(row.mean.abs() < 1e-12 && row.std_error < 1e-12, "{row:?}");
        }
    }
}

#[test]
fn heat_equation_controls() {
    let p = simulate_paths(&brownian(), &[0.3], 0.0, 1.0, &cfg(10_000, 200)).unwrap();
    let good = &bsde_residual(&heat_bundle(0.0), &p, 0.0).unwrap()[0];
    assert!(good.mean.abs() < 3.0 * good.std_error, "{} vs {}", good.mean, good.std_error);
    let bad = &bsde_residual(&heat_bundle(0.1), &p, 0.0).unwrap()[0];
    assert!(bad.mean.abs() > 3.0 * bad.std_error, "{} vs {}", bad.mean, bad.std_error);
    let z = &z_dynamics_residual(&heat_bundle(0.0), &p, 0.0).unwrap()[0];
    assert!(z.mean.abs() < 3.0 * z.std_error, "{} vs {}", z.mean, z.std_error);
}

#[test]
fn residuals_are_seed_deterministic() {
    let run = || {
        let p = simulate_paths(&brownian(), &[0.3], 0.0, 1.0, &cfg(500, 50)).unwrap();
        let st: Vec<ResidualStats> = bsde_residual(&heat_bundle(0.0), &p, 0.2).unwrap();
        let mut buf = Vec::new();
        write_residual_csv(&st, &mut buf).unwrap();
        (st, buf)
    };
    let (a, ba) = run();
    let (b, bb) = run();
    assert_eq!(a, b);
    assert_eq!(ba, bb);
    assert!(String::from_utf8(ba).unwrap().starts_with("t,mean,std_error,n,censored\n"));
}

#[test]
fn standard_error_halves_with_four_times_the_paths() {
    let b = heat_bundle(0.0);
    let se = |n| {
        let p = simulate_paths(&brownian(), &[0.3], 0.0, 1.0, &cfg(n, 50)).unwrap();
        bsde_residual(&b, &p, 0.0).unwrap()[0].std_error
    };
    let ratio = se(1000) / se(4000);
    assert!((ratio - 2.0).abs() <= 0.4, "ratio {ratio}");
}

#[test]
fn euler_bias_decreases_with_step_refinement() {
    // Ornstein–Uhlenbeck state; u = y e^{-(T - s)} solves u_s + (1/2) u_yy - y u_y = 0.
    let sde = StateSde::new(1, 1, Arc::new(|_, y, o| o[0] = -y[0]), Arc::new(|_, _, o| o[0] = 1.0));
    let f: Arc<dyn Nonlinearity> = Arc::new(
        NonlinearitySpec::new(1, 1, Arc::new(|_, _, _, y, z, _| 0.5 * z[2] - y[0] * z[1])).diagonal_free(),
    );
    let g = backward_grid(64, 161, 8.0);
    let u = FlowField::from_fn(&g, 1, |_, s, y, o| o[0] = y[0] * (-(1.0 - s)).exp());
    let gd: DatumFn = Arc::new(|_, _, y| y[0]);
    let b = FkBundle::new(u, sde.clone(), f, Some(gd)).unwrap();
    let bias = |n| {
        let p = simulate_paths(&sde, &[1.0], 0.0, 1.0, &cfg(10_000, n)).unwrap();
        bsde_residual(&b, &p, 0.0).unwrap()[0].mean.abs()
    };
    let (b1, b2) = (bias(32), bias(64));
    assert!(b2 < b1, "{b1} {b2}");
    assert!(b1 / b2 > 1.5 && b1 / b2 < 2.6, "observed order off: {}", b1 / b2);
}

#[test]
fn diagonal_generator_arguments_come_from_the_diagonal_field() {
    let g = backward_grid(10, 41, 4.0);
    let u = FlowField::from_fn(&g, 1, |t, s, y, o| o[0] = (1.0 + t) * (s * y[0]).sin());
    let diag = extract_diagonal(&u);
    let b = FkBundle::new(u, brownian(), half_laplacian(), None).unwrap();
    for is in [0, 3, 10] {
        for node in [0, 7, 20, 40] {
            let y = g.space().coords_vec(node);
            let jet = b.jet(g.time(is), g.time(is), &y).unwrap();
            assert_eq!(jet.as_slice(), diag.jet(is, node));
        }
    }
}

#[test]
fn censoring_limit_is_enforced() {
    let g = backward_grid(10, 21, 0.5);
    let u = FlowField::from_fn(&g, 1, |_, _, _, o| o[0] = 0.0);
    let b = FkBundle::new(u, brownian(), half_laplacian(), None).unwrap();
    let p = simulate_paths(&brownian(), &[0.0], 0.0, 1.0, &cfg(200, 20)).unwrap();
    assert!(matches!(bsde_residual(&b, &p, 0.0), Err(tic_fbsde::FbsdeError::TooManyCensored { .. })));
}

#[test]
fn zero_problem_has_zero_residual() {
    let g = backward_grid(10, 41, 8.0);
    let u = FlowField::zeros(&g, 1);
    let zero: Arc<dyn Nonlinearity> = Arc::new(NonlinearitySpec::new(1, 1, Arc::new(|_, _, _, _, _, _| 0.0)));
    let b = FkBundle::new(u, brownian(), zero, None).unwrap();
    let p = simulate_paths(&brownian(), &[0.0], 0.0, 1.0, &cfg(100, 20)).unwrap();
    let st = &bsde_residual(&b, &p, 0.0).unwrap()[0];
    assert!(st.breakdown.iter().all(|r| r.mean == 0.0 && r.std_error == 0.0));
}
