//! The coupled system for `(u, v)` with `v = u_t`.
//!
//! Using `d u(t,s) - d u(s,s) = int_s^t d v(theta,s) dtheta`, the diagonal terms become
//!
//! ```text
//! u_s = (A + B) d u - B I + f
//! v_s = A d v + (A_t + B_t) d u - B_t I + f_t,      I = int_s^t d v(theta, s, y) dtheta
//! ```
//!
//! with `(u, v) = (g, g_t)` on the initial line. Each s-step is implicit Euler; slices are
//! solved outward from the diagonal so the trapezoid sum for `I` only has one unknown term.

use tic_grid::{FlowField, Orientation, TriTimeGrid};

use crate::banded::{solve_rows, RowBuilder};
use crate::march::{march_levels, validate, LinearSolveReport, StencilTable};
use crate::spec::CoefFn;
use crate::system::SpecSystem;
use crate::{LinearError, LinearSystemSpec};

/// Relative step of the central difference used for Dirichlet values of `v`.
const EXACT_T_STEP: f64 = 1e-6;

pub fn solve_augmented(spec: &LinearSystemSpec, grid: &TriTimeGrid) -> Result<LinearSolveReport, LinearError> {
    validate(spec, grid)?;
    let sys = SpecSystem::new(spec, grid);
    let m = spec.m;
    let m2 = 2 * m;
    let space = grid.space();
    let nn = space.len();
    let table = StencilTable::new(space);
    let nd = table.n_derivs();
    let dt = grid.dt();
    let t_final = grid.t_final();
    let n = grid.steps();
    let fd_used =
        spec.a_t.is_none() || (spec.b.is_some() && spec.b_t.is_none()) || spec.f_t.is_none() || spec.g_t.is_none();
    let sign = match grid.orientation() {
        Orientation::Forward => 1.0,
        Orientation::Backward => -1.0,
    };

    // Finite-difference helpers in t with step dt, one-sided at the ends of [0, T].
    let fd_t = |t: f64, f: &dyn Fn(f64) -> f64| -> f64 {
        if t - dt < -1e-12 * t_final {
            (f(t + dt) - f(t)) / dt
        } else if t + dt > t_final * (1.0 + 1e-12) {
            (f(t) - f(t - dt)) / dt
        } else {
            (f(t + dt) - f(t - dt)) / (2.0 * dt)
        }
    };
    let coef_t = |exact: &Option<CoefFn>, base: Option<&CoefFn>, t: f64, s: f64, node: usize, out: &mut [f64]| {
        match (exact, base) {
            (Some(c), _) => sys.fill(&**c, t, s, node, out),
            (None, Some(c)) => {
                let derivs = sys.derivs();
                let y = sys.coords(node);
                for a in 0..m {
                    for (k, &dv) in derivs.iter().enumerate() {
                        for b in 0..m {
                            out[(a * nd + k) * m + b] = fd_t(t, &|tt| c(a, dv, b, tt, s, y));
                        }
                    }
                }
            }
            (None, None) => out.iter_mut().for_each(|v| *v = 0.0),
        }
    };

    let mut u = FlowField::zeros(grid, m);
    let mut v = FlowField::zeros(grid, m);
    let (k0, levels) = march_levels(grid);
    for it in 0..=n {
        if !grid.contains(it, k0) {
            continue;
        }
        let t = sys.time(it);
        for node in 0..nn {
            let y = sys.coords(node);
            for a in 0..m {
                let gv = (spec.g)(a, t, y);
                let gt = match &spec.g_t {
                    Some(c) => c(a, t, y),
                    None => fd_t(t, &|tt| (spec.g)(a, tt, y)),
                };
                u.set(it, k0, node, a, gv);
                v.set(it, k0, node, a, gt);
            }
        }
    }

    let mut residual: f64 = 0.0;
    let mut a_buf = vec![0.0; m * nd * m];
    let mut b_buf = vec![0.0; m * nd * m];
    let mut at_buf = vec![0.0; m * nd * m];
    let mut bt_buf = vec![0.0; m * nd * m];
    for (k_old, k_new) in levels {
        let s = sys.time(k_new);
        // Slices ordered by distance from the diagonal.
        let order: Vec<usize> = match grid.orientation() {
            Orientation::Forward => (k_new..=n).collect(),
            Orientation::Backward => (0..=k_new).rev().collect(),
        };
        // Trapezoid accumulator of d_k v^b over already solved slices, `[(node * nd + k) * m + b]`.
        let mut acc = vec![0.0; nn * nd * m];
        for (pos, &it) in order.iter().enumerate() {
            let on_diag = pos == 0;
            let t = sys.time(it);
            let u_old = u.slice(it, k_old).to_vec();
            let v_old = v.slice(it, k_old).to_vec();
            let mut rows = RowBuilder::new(nn * m2);
            let mut rhs = vec![0.0; nn * m2];
            for node in 0..nn {
                let y = sys.coords(node);
                if let Some(normal) = table.boundary(node) {
                    if let Some(ex) = &spec.exact {
                        for a in 0..m {
                            let h = EXACT_T_STEP * (1.0 + t.abs());
                            let vt = (ex(a, t + h, s, y) - ex(a, t - h, s, y)) / (2.0 * h);
                            rows.add(node * m2 + a, node * m2 + a, 1.0);
                            rhs[node * m2 + a] = ex(a, t, s, y);
                            rows.add(node * m2 + m + a, node * m2 + m + a, 1.0);
                            rhs[node * m2 + m + a] = vt;
                        }
                    } else {
                        for c in 0..m2 {
                            for &(n2, w) in normal {
                                rows.add(node * m2 + c, n2 * m2 + c, w);
                            }
                        }
                    }
                    continue;
                }
                sys.fill(&*spec.a, t, s, node, &mut a_buf);
                match &spec.b {
                    Some(b) => sys.fill(&**b, t, s, node, &mut b_buf),
                    None => b_buf.iter_mut().for_each(|x| *x = 0.0),
                }
                coef_t(&spec.a_t, Some(&spec.a), t, s, node, &mut at_buf);
                coef_t(&spec.b_t, spec.b.as_ref(), t, s, node, &mut bt_buf);
                for a in 0..m {
                    let ru = node * m2 + a;
                    let rv = node * m2 + m + a;
                    rows.add(ru, ru, 1.0);
                    rows.add(rv, rv, 1.0);
                    let f = (spec.f)(a, t, s, y);
                    let ft = match &spec.f_t {
                        Some(c) => c(a, t, s, y),
                        None => fd_t(t, &|tt| (spec.f)(a, tt, s, y)),
                    };
                    let mut ur = u_old[node * m + a] + dt * f;
                    let mut vr = v_old[node * m + a] + dt * ft;
                    for k in 0..nd {
                        for b in 0..m {
                            let ix = (a * nd + k) * m + b;
                            let (ca, cb, cat, cbt) = (a_buf[ix], b_buf[ix], at_buf[ix], bt_buf[ix]);
                            let st = table.stencil(node, k);
                            for &(n2, w) in st {
                                let cu = n2 * m2 + b;
                                let cv = n2 * m2 + m + b;
                                rows.add(ru, cu, -dt * (ca + cb) * w);
                                rows.add(rv, cv, -dt * ca * w);
                                rows.add(rv, cu, -dt * (cat + cbt) * w);
                                if !on_diag {
                                    // Implicit endpoint of the trapezoid rule.
                                    rows.add(ru, cv, dt * sign * cb * 0.5 * dt * w);
                                    rows.add(rv, cv, dt * sign * cbt * 0.5 * dt * w);
                                }
                            }
                            if !on_diag {
                                let known = acc[(node * nd + k) * m + b];
                                ur -= dt * sign * cb * known;
                                vr -= dt * sign * cbt * known;
                            }
                        }
                    }
                    rhs[ru] = ur;
                    rhs[rv] = vr;
                }
            }
            if rhs.iter().any(|x| !x.is_finite()) {
                return Err(LinearError::NanDetected { it, is: k_new });
            }
            let (x, res) = solve_rows(&rows, &rhs).map_err(|e| match e {
                LinearError::SingularMatrix { .. } => LinearError::SingularSlice { it, is: k_new },
                other => other,
            })?;
            if x.iter().any(|q| !q.is_finite()) {
                return Err(LinearError::NanDetected { it, is: k_new });
            }
            residual = residual.max(res);
            let mut vs = vec![0.0; nn * m];
            {
                let us = u.slice_mut(it, k_new);
                for node in 0..nn {
                    for a in 0..m {
                        us[node * m + a] = x[node * m2 + a];
                        vs[node * m + a] = x[node * m2 + m + a];
                    }
                }
            }
            let weight = if on_diag { 0.5 * dt } else { dt };
            for node in 0..nn {
                for k in 0..nd {
                    for b in 0..m {
                        acc[(node * nd + k) * m + b] += weight * table.apply(&vs, m, b, node, k);
                    }
                }
            }
            v.slice_mut(it, k_new).copy_from_slice(&vs);
        }
    }
    Ok(LinearSolveReport { solution: u, t_derivative: v, residual_max: residual, steps: n, coefficient_t_fd: fd_used })
}
