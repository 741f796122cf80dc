//! Quadrature and interpolation on uniform node sets.

/// Integral of samples `f[0..=n]` with spacing `h`: composite Simpson for an even number of
/// intervals, Simpson plus a closing 3/8 panel for an odd number, the trapezoid for one interval.
pub fn uniform_integral(f: &[f64], h: f64) -> f64 {
    let n = f.len().saturating_sub(1);
    match n {
        0 => 0.0,
        1 => 0.5 * h * (f[0] + f[1]),
        _ if n % 2 == 0 => simpson(f, h),
        _ => {
            simpson(&f[..n - 2], h)
                + 3.0 * h / 8.0 * (f[n - 3] + 3.0 * f[n - 2] + 3.0 * f[n - 1] + f[n])
        }
    }
}

fn simpson(f: &[f64], h: f64) -> f64 {
    let n = f.len() - 1;
    if n == 0 {
        return 0.0;
    }
    let mut acc = f[0] + f[n];
    for (i, v) in f.iter().enumerate().take(n).skip(1) {
        acc += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    acc * h / 3.0
}

/// Vector version of [`uniform_integral`]: `f[j]` is the sample at node `j`.
pub fn uniform_integral_vec(f: &[Vec<f64>], h: f64) -> Vec<f64> {
    let m = f.first().map_or(0, Vec::len);
    (0..m)
        .map(|c| {
            let col: Vec<f64> = f.iter().map(|v| v[c]).collect();
            uniform_integral(&col, h)
        })
        .collect()
}

/// Integrals `int_{x_j}^{x_{j+1}} f` over each cell of a uniform grid, fourth order, from the
/// samples alone: four-point Lagrange panels, one-sided at the ends.
pub fn cell_integrals(f: &[f64], h: f64) -> Vec<f64> {
    let n = f.len() - 1;
    assert!(n >= 3, "at least three cells are required");
    (0..n)
        .map(|j| {
            if j == 0 {
                h * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3]) / 24.0
            } else if j == n - 1 {
                h * (9.0 * f[n] + 19.0 * f[n - 1] - 5.0 * f[n - 2] + f[n - 3]) / 24.0
            } else {
                h * (-f[j - 1] + 13.0 * f[j] + 13.0 * f[j + 1] - f[j + 2]) / 24.0
            }
        })
        .collect()
}

/// Cubic Lagrange interpolation of samples on the uniform grid `x0 + j h`, clamped to the
/// sampled range. Fewer than four samples fall back to lower degree.
pub fn cubic_interp(samples: &[f64], x0: f64, h: f64, x: f64) -> f64 {
    let n = samples.len();
    if n == 1 {
        return samples[0];
    }
    let pos = ((x - x0) / h).clamp(0.0, (n - 1) as f64);
    let deg = (n - 1).min(3);
    let start =
        (pos.floor() as isize - (deg as isize - 1) / 2).clamp(0, (n - 1 - deg) as isize) as usize;
    let mut acc = 0.0;
    for i in 0..=deg {
        let xi = (start + i) as f64;
        let mut w = 1.0;
        for j in 0..=deg {
            if j != i {
                let xj = (start + j) as f64;
                w *= (pos - xj) / (xi - xj);
            }
        }
        acc += w * samples[start + i];
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rules_are_exact_on_cubics() {
        let p = |x: f64| 1.0 + x - 2.0 * x * x + 0.5 * x.powi(3);
        let ip = |x: f64| x + 0.5 * x * x - 2.0 / 3.0 * x.powi(3) + 0.125 * x.powi(4);
        for n in [2usize, 3, 5, 8] {
            let h = 1.5 / n as f64;
            let f: Vec<f64> = (0..=n).map(|j| p(j as f64 * h)).collect();
            assert!((uniform_integral(&f, h) - ip(1.5)).abs() < 1e-13, "n = {n}");
            if n >= 3 {
                let cells = cell_integrals(&f, h);
                for (j, c) in cells.iter().enumerate() {
                    let ex = ip((j + 1) as f64 * h) - ip(j as f64 * h);
                    assert!((c - ex).abs() < 1e-13);
                }
            }
        }
        let h = 0.25;
        let f: Vec<f64> = (0..6).map(|j| p(j as f64 * h)).collect();
        for x in [0.0, 0.1, 0.6, 1.2, 1.25] {
            assert!((cubic_interp(&f, 0.0, h, x) - p(x)).abs() < 1e-13);
        }
    }

    #[test]
    fn single_interval_is_the_trapezoid() {
        assert_eq!(uniform_integral(&[1.0, 3.0], 0.5), 1.0);
        assert_eq!(uniform_integral(&[2.0], 0.5), 0.0);
    }
}
