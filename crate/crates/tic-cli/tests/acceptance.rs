//! Acceptance criteria 1-9. Each criterion prints one `PASS`/`FAIL` line to the real stdout
//! (bypassing test capture); the test fails if any criterion fails.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tic_cli::{growth_functions, norm_row};
use tic_fbsde::{bsde_residual, simulate_paths, write_residual_csv, z_dynamics_residual, FkBundle, McConfig, StateSde};
use tic_finance::{
    check_conditions_g0_gamma, exp_equilibrium, exp_game, exp_hjb_residual, exp_solution, fundamental_matrix,
    merton_diagonal, power_diagonal_fixed_point, ExpUtilitySpec, FixedPointOptions,
    FundamentalMethod, PowerUtilitySpec,
};
use tic_games::{solve_equilibrium, EquilibriumOptions};
use tic_grid::{time_reflect, FlowField, Orientation, SpatialGrid, TriTimeGrid, WeightSpec};
use tic_linear::problems::manufactured_nonlocal;
use tic_linear::{laplacian, march_linear, zeroth_order, DatumFn, LinearSystemSpec, MarchOptions, SourceFn};
use tic_nonlinear::problems::manufactured_nonlinear;
use tic_nonlinear::{
    causal_march, classical_march, picard_fixed_point, BoundaryClosure, Nonlinearity, NonlinearitySpec,
    PicardOptions, SolverOptions,
};

// Pinned tolerances.
const C1_RATIO: f64 = 3.0;
const C1_ERROR: f64 = 5e-3;
const C1_TIME: Duration = Duration::from_secs(60);
const C2_REL: f64 = 1e-12;
const C3_REL: f64 = 1e-12;
const C4_SPREAD: f64 = 1e-10;
const C4_CLASSICAL: f64 = 1e-8;
const C5_PB_RK4: f64 = 1e-10;
const C5_RESIDUAL: f64 = 1e-8;
const C5_PDE_REL: f64 = 1e-2;
const C5_SPREAD: f64 = 1e-10;
const C5_STRATEGY: f64 = 1e-6;
const C5_TIME: Duration = Duration::from_secs(300);
const C6_MERTON: f64 = 1e-6;
const C7_SIGMAS: f64 = 3.0;
const C7_PATHWISE: f64 = 1e-12;

struct Outcome {
    pass: bool,
    detail: String,
}

fn report(n: usize, title: &str, o: &Outcome) {
    let mut out = std::io::stdout().lock();
    let tag = if o.pass { "PASS" } else { "FAIL" };
    writeln!(out, "criterion {n} {tag} {title}: {}", o.detail).unwrap();
    out.flush().unwrap();
}

fn max_error(field: &FlowField, exact: &dyn Fn(f64, f64, f64) -> f64) -> f64 {
    let g = field.grid();
    let mut worst = 0.0f64;
    for (it, is) in g.pairs() {
        for node in 0..g.space().len() {
            let y = g.space().coords_vec(node)[0];
            worst = worst.max((field.get(it, is, node, 0) - exact(g.time(it), g.time(is), y)).abs());
        }
    }
    worst
}

fn forward(t: f64, n: usize, half: f64, m: usize) -> TriTimeGrid {
    TriTimeGrid::new(t, n, &[(-half, half)], m, Orientation::Forward).unwrap()
}

fn criterion_1() -> Outcome {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let start = Instant::now();
    let (ec, ef) = pool.install(|| {
        let spec = manufactured_nonlocal();
        let exact = |t: f64, s: f64, y: f64| (1.0 + t) * s * y.sin();
        let solve = |n, m| march_linear(&spec, &forward(1.0, n, PI, m), &MarchOptions::default()).unwrap();
        (max_error(&solve(32, 65).solution, &exact), max_error(&solve(64, 129).solution, &exact))
    });
    let elapsed = start.elapsed();
    let ratio = ec / ef;
    Outcome {
        pass: ratio >= C1_RATIO && ef < C1_ERROR && elapsed < C1_TIME,
        detail: format!("errors {ec:.3e} -> {ef:.3e}, ratio {ratio:.2}, {:.1} s on one thread", elapsed.as_secs_f64()),
    }
}

/// Source and datum with coefficients drawn from `rng`.
fn random_data(rng: &mut ChaCha8Rng) -> (SourceFn, DatumFn) {
    let c: [f64; 6] = std::array::from_fn(|_| rng.random_range(-2.0..2.0));
    let f: SourceFn = Arc::new(move |_, t, s, y| (c[0] * y[0] + c[1] * t).sin() * (1.0 + c[2] * s));
    let g: DatumFn = Arc::new(move |_, t, y| (c[3] * y[0]).cos() + c[4] * t + c[5] * y[0] * y[0]);
    (f, g)
}

fn criterion_2() -> Outcome {
    let base = LinearSystemSpec::new(1, 1, laplacian(0.5)).with_diagonal(zeroth_order(0.8));
    let g = forward(1.0, 12, 2.0, 33);
    let solve = |f: SourceFn, d: DatumFn| march_linear(&base.with_data(f, d), &g, &MarchOptions::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut worst = 0.0f64;
    for _ in 0..3 {
        let (f1, g1) = random_data(&mut rng);
        let (f2, g2) = random_data(&mut rng);
        let (a1, b1, a2, b2) = (f1.clone(), g1.clone(), f2.clone(), g2.clone());
        let f12: SourceFn = Arc::new(move |a, t, s, y| a1(a, t, s, y) + a2(a, t, s, y));
        let g12: DatumFn = Arc::new(move |a, t, y| b1(a, t, y) + b2(a, t, y));
        let lhs = solve(f12, g12).solution;
        let rhs = solve(f1, g1).solution.axpy(1.0, &solve(f2, g2).solution);
        worst = worst.max(lhs.max_abs_diff(&rhs) / rhs.max_abs());
    }
    Outcome { pass: worst <= C2_REL, detail: format!("worst relative defect {worst:.2e} over 3 pairs") }
}

fn criterion_3() -> Outcome {
    let t_final = 1.0;
    let spec = LinearSystemSpec::new(1, 1, laplacian(0.7))
        .with_diagonal(zeroth_order(0.4))
        .with_source(Arc::new(|_, t, s, y| (t - 2.0 * s) * y[0].cos()))
        .with_datum(Arc::new(|_, t, y| (1.0 + t) * (0.5 * y[0]).sin()));
    let gb = TriTimeGrid::new(t_final, 16, &[(-2.0, 2.0)], 41, Orientation::Backward).unwrap();
    let back = march_linear(&spec, &gb, &MarchOptions::default()).unwrap().solution;
    let fwd = march_linear(&spec.reflected(t_final), &gb.reflected(), &MarchOptions::default()).unwrap().solution;
    let refl = time_reflect(&fwd);
    let involution = time_reflect(&refl) == fwd;
    let diff = back.max_abs_diff(&refl) / back.max_abs();
    Outcome {
        pass: involution && diff <= C3_REL,
        detail: format!("involution bit-exact {involution}, backward vs reflected forward {diff:.2e}"),
    }
}

fn criterion_4() -> Outcome {
    let f = NonlinearitySpec::new(1, 1, Arc::new(|_, _, _, _, z, zb| z[2] + 0.5 * zb[0].sin() - 0.2 * z[1] * z[1]));
    let gd: DatumFn = Arc::new(|_, _, y| (-y[0] * y[0]).exp());
    let g = forward(1.0, 32, 4.0, 65);
    let opts = SolverOptions::default();
    let u = causal_march(&f, &gd, &g, &opts).unwrap().solution;
    let classical = classical_march(&f, &gd, &g, &opts).unwrap();
    let (mut spread, mut gap) = (0.0f64, 0.0f64);
    for (it, is) in g.pairs() {
        for node in 0..g.space().len() {
            let v = u.get(it, is, node, 0);
            spread = spread.max((v - u.get(is, is, node, 0)).abs());
            gap = gap.max((v - classical[is][node]).abs());
        }
    }
    Outcome {
        pass: spread <= C4_SPREAD && gap <= C4_CLASSICAL,
        detail: format!("t-spread {spread:.2e}, classical gap {gap:.2e}"),
    }
}

fn exp_spec(mu: Vec<f64>, sigma: Vec<f64>, w3: Arc<dyn Fn(f64, f64) -> DMatrix<f64> + Send + Sync>) -> ExpUtilitySpec {
    let m = mu.len();
    ExpUtilitySpec::new(mu, sigma, 0.02, 1.0, 1.0, w3, Arc::new(move |t| DVector::from_element(m, 1.0 + 0.5 * t)))
        .unwrap()
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    // Random smooth 3 x 3 family.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let coef: Vec<[f64; 3]> = (0..9).map(|_| std::array::from_fn(|_| rng.random_range(-0.5..0.5))).collect();
    let family = |t: f64, s: f64| DMatrix::from_fn(3, 3, |i, j| {
        let c = coef[3 * i + j];
        c[0] + c[1] * s + c[2] * (t + 2.0 * s).sin()
    });
    let mut pb_gap = 0.0f64;
    for (t, s) in [(0.0, 0.0), (0.3, 0.5), (0.9, 0.9)] {
        let rk = fundamental_matrix(&family, t, s, 1.0, FundamentalMethod::MatrixOde { steps: 1024 }).unwrap();
        let pb = fundamental_matrix(&family, t, s, 1.0, FundamentalMethod::PeanoBaker { intervals: 512 }).unwrap();
        pb_gap = pb_gap.max((&rk - &pb).abs().max());
    }

    let ld_cases = [
        exp_spec(vec![0.08], vec![0.2], Arc::new(|t, s| DMatrix::from_element(1, 1, 0.05 + 0.05 * (-(s - t)).exp()))),
        exp_spec(
            vec![0.08, 0.06],
            vec![0.2, 0.3],
            Arc::new(|t, s| DMatrix::from_diagonal(&DVector::from_vec(vec![0.1 + 0.1 * (t - s).exp(), 0.2 * s]))),
        ),
        exp_spec(vec![0.08, 0.06], vec![0.2, 0.3], Arc::new(|t, _| DMatrix::from_row_slice(2, 2, &[0.1, 0.05 + t, 0.02, 0.1]))),
    ];
    let mut residual = 0.0f64;
    for spec in &ld_cases {
        for (t, s) in [(0.0, 0.0), (0.0, 0.5), (0.3, 0.6), (0.5, 0.999), (0.8, 1.0)] {
            for x in [-2.0, 0.0, 1.5] {
                residual = exp_hjb_residual(spec, t, s, x).unwrap().iter().fold(residual, |w, v| w.max(v.abs()));
            }
        }
    }

    let spec = &ld_cases[0];
    let game = exp_game(spec).unwrap();
    let half = 1000f64.ln() / spec.eta;
    let grid = TriTimeGrid::new(spec.t_final, 64, &[(-half, half)], 201, Orientation::Backward).unwrap();
    let opts = EquilibriumOptions {
        solver: SolverOptions { boundary: BoundaryClosure::Geometric, ..Default::default() },
        ..Default::default()
    };
    let out = solve_equilibrium(&game, &grid, &opts).unwrap();
    let space = grid.space();
    let (mut rel, mut spread, mut off) = (0.0f64, 0.0f64, 0.0f64);
    for is in 0..=grid.steps() {
        let s = grid.time(is);
        let phi2 = exp_solution(spec, s, s, 0.0).unwrap()[0];
        let alpha = exp_equilibrium(spec, s)[0];
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
    let elapsed = start.elapsed();
    Outcome {
        pass: pb_gap <= C5_PB_RK4
            && residual <= C5_RESIDUAL
            && rel < C5_PDE_REL
            && spread <= C5_SPREAD
            && off <= C5_STRATEGY
            && elapsed < C5_TIME,
        detail: format!(
            "PB vs RK4 {pb_gap:.2e}, closed-form residual {residual:.2e}, PDE rel {rel:.2e}, \
             strategy spread {spread:.2e}, strategy error {off:.2e}, {:.1} s",
            elapsed.as_secs_f64()
        ),
    }
}

fn criterion_6() -> Outcome {
    let constant = |v: f64| -> Arc<dyn Fn(f64, f64) -> DMatrix<f64> + Send + Sync> {
        Arc::new(move |_, _| DMatrix::from_element(1, 1, v))
    };
    let merton = PowerUtilitySpec::new(
        vec![0.08],
        vec![0.2],
        0.02,
        1.0,
        0.5,
        constant(1.0),
        constant(0.0),
        Arc::new(|_| DVector::from_element(1, 1.0)),
    )
    .unwrap();
    let n = 64;
    let diag = power_diagonal_fixed_point(&merton, &FixedPointOptions { intervals: n, ..Default::default() }).unwrap();
    let oracle = merton_diagonal(merton.k(), merton.beta, 1.0, 1.0, merton.t_final, 1_000_000, n);
    let merton_err = diag.psibar.iter().zip(&oracle).map(|(p, o)| ((p[0] - o) / o).abs()).fold(0.0, f64::max);
    let mut monotone = diag.update_norms.windows(2).skip(1).all(|w| w[1] < w[0]);

    let pair = PowerUtilitySpec::new(
        vec![0.08, 0.06],
        vec![0.2, 0.3],
        0.02,
        1.0,
        0.5,
        Arc::new(|t, s| {
            let d = (-0.5 * (s - t)).exp();
            DMatrix::from_row_slice(2, 2, &[d, 0.5 * d, 0.3 * d, 1.2 * d])
        }),
        Arc::new(|t, s| DMatrix::from_diagonal(&DVector::from_vec(vec![0.05 + 0.02 * (s - t), 0.03]))),
        Arc::new(|t| DVector::from_vec(vec![1.0 + 0.2 * t, 0.8])),
    )
    .unwrap();
    let cond = check_conditions_g0_gamma(&pair, 64).unwrap();
    let diag = power_diagonal_fixed_point(&pair, &FixedPointOptions::default()).unwrap();
    let mut slack = f64::INFINITY;
    for (s, p) in diag.nodes.iter().zip(&diag.psibar) {
        let v = (pair.v)(*s, *s);
        for (a, pa) in p.iter().enumerate() {
            slack = slack.min(pa / v[(a, a)] - cond.lower_bound(*s));
        }
    }
    monotone &= diag.update_norms.windows(2).skip(1).all(|w| w[1] < w[0]);
    Outcome {
        pass: merton_err < C6_MERTON && cond.pass && slack >= 0.0 && monotone,
        detail: format!(
            "Merton rel {merton_err:.2e}, conditions {}, lower-bound slack {slack:.3e}, monotone sweeps {monotone}",
            cond.pass
        ),
    }
}

fn criterion_7() -> Outcome {
    let brownian = StateSde::constant(vec![0.0], vec![1.0], 1);
    let half_laplacian: Arc<dyn Nonlinearity> =
        Arc::new(NonlinearitySpec::new(1, 1, Arc::new(|_, _, _, _, z, _| 0.5 * z[2])).diagonal_free());
    let grid = TriTimeGrid::new(1.0, 100, &[(-8.0, 8.0)], 401, Orientation::Backward).unwrap();
    let heat = |shift: f64| {
        let u = FlowField::from_fn(&grid, 1, |_, s, y, o| o[0] = (-(1.0 - s) / 2.0).exp() * y[0].sin() + shift);
        let gd: DatumFn = Arc::new(|_, _, y| y[0].sin());
        FkBundle::new(u, brownian.clone(), half_laplacian.clone(), Some(gd)).unwrap()
    };
    let cfg = McConfig { n_paths: 10_000, n_steps: 200, seed: 2024 };
    let paths = simulate_paths(&brownian, &[0.3], 0.0, 1.0, &cfg).unwrap();
    let pos = &bsde_residual(&heat(0.0), &paths, 0.0).unwrap()[0];
    let neg = &bsde_residual(&heat(0.1), &paths, 0.0).unwrap()[0];
    let controls = pos.mean.abs() < C7_SIGMAS * pos.std_error && neg.mean.abs() > C7_SIGMAS * neg.std_error;

    let quad_grid = TriTimeGrid::new(1.0, 20, &[(-8.0, 8.0)], 81, Orientation::Backward).unwrap();
    let quad = FkBundle::new(
        FlowField::from_fn(&quad_grid, 1, |_, _, y, o| o[0] = y[0] * y[0]),
        brownian.clone(),
        half_laplacian.clone(),
        None,
    )
    .unwrap();
    let qp = simulate_paths(&brownian, &[0.0], 0.0, 1.0, &McConfig { n_paths: 1000, n_steps: 40, seed: 2024 }).unwrap();
    let mut pathwise = 0.0f64;
    for t in [0.0, 0.5] {
        let st = &z_dynamics_residual(&quad, &qp, t).unwrap()[0];
        for row in &st.breakdown {
            pathwise = pathwise.max(row.mean.abs()).max(row.std_error);
        }
    }

    let bytes = || {
        let p = simulate_paths(&brownian, &[0.3], 0.0, 1.0, &McConfig { n_paths: 500, n_steps: 50, seed: 9 }).unwrap();
        let mut buf = Vec::new();
        write_residual_csv(&bsde_residual(&heat(0.0), &p, 0.2).unwrap(), &mut buf).unwrap();
        write_residual_csv(&z_dynamics_residual(&heat(0.0), &p, 0.2).unwrap(), &mut buf).unwrap();
        buf
    };
    let deterministic = bytes() == bytes();
    Outcome {
        pass: controls && pathwise <= C7_PATHWISE && deterministic,
        detail: format!(
            "positive |mean| {:.2e} vs 3 SE {:.2e}, shifted |mean| {:.2e} vs 3 SE {:.2e}, \
             quadratic z pathwise {pathwise:.1e}, byte-identical reruns {deterministic}",
            pos.mean.abs(),
            C7_SIGMAS * pos.std_error,
            neg.mean.abs(),
            C7_SIGMAS * neg.std_error
        ),
    }
}

fn criterion_8() -> Outcome {
    let p = manufactured_nonlinear();
    let base = forward(0.25, 16, PI, 65);
    let po = PicardOptions::new(1);
    let mut worst = Vec::new();
    let mut all_below = true;
    for steps in [16, 8, 4] {
        let g = base.with_steps(steps).unwrap();
        let rep = picard_fixed_point(&p.f, &p.g, &g, &p.solver_options(), &po).unwrap();
        all_below &= rep.contraction_factors.iter().all(|&c| c < 1.0);
        worst.push(rep.worst_contraction());
    }
    let non_increasing = worst.windows(2).all(|w| w[1] <= w[0]);
    Outcome {
        pass: all_below && non_increasing,
        detail: format!("worst factor by stage length T, T/2, T/4 (dt fixed): {worst:.3?}"),
    }
}

fn criterion_9() -> Outcome {
    let spec = WeightSpec::new(DMatrix::identity(1, 1), 1.0, 0.5).unwrap();
    let space = SpatialGrid::new(&[(-2.0, 2.0)], 81).unwrap();
    let s_nodes: Vec<f64> = (0..=8).map(|k| k as f64 / 8.0).collect();
    let c = 1.0 + spec.equivalence_constant();
    let mut worst = 0.0f64;
    let mut count = 0;
    for (_, f) in growth_functions() {
        let rows = norm_row(&space, &s_nodes, f, &spec).unwrap();
        let a = &rows[0];
        for (i, j) in [(1, 2), (1, 3), (2, 3), (2, 1), (3, 1), (3, 2)] {
            worst = worst.max(a[i] / a[j]);
        }
        let b = &rows[1];
        worst = worst.max(b[2] / b[3]).max(b[3] / b[2]);
        count += 1;
    }
    Outcome {
        pass: count == 5 && worst <= c,
        detail: format!("largest norm ratio {worst:.4} against constant {c:.4} over {count} functions"),
    }
}

#[test]
fn acceptance_criteria() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("manufactured nonlocal linear convergence", criterion_1),
        ("superposition", criterion_2),
        ("forward/backward involution", criterion_3),
        ("time-consistent reduction", criterion_4),
        ("exponential-utility oracle chain", criterion_5),
        ("power-utility fixed point", criterion_6),
        ("Feynman-Kac verification", criterion_7),
        ("Picard contraction diagnostics", criterion_8),
        ("weighted norm equivalence", criterion_9),
    ];
    let mut failed = Vec::new();
    for (i, (title, run)) in criteria.iter().enumerate() {
        let o = run();
        report(i + 1, title, &o);
        if !o.pass {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
