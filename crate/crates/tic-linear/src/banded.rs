//! Banded LU factorization with partial pivoting.
//!
//! Storage follows the LAPACK `gbtrf` convention: a column-major array with
//! leading dimension `2 kl + ku + 1`, entry `A(i, j)` at row `kl + ku + i - j`
//! of column `j`, leaving `kl` extra superdiagonals for pivoting fill-in.

use crate::LinearError;

/// Sparse rows collected during assembly; duplicate columns are summed.
#[derive(Debug, Clone, Default)]
pub struct RowBuilder {
    rows: Vec<Vec<(usize, f64)>>,
}

impl RowBuilder {
    pub fn new(n: usize) -> Self {
        Self { rows: vec![Vec::new(); n] }
    }
    pub fn len(&self) -> usize {
        self.rows.len()
    }
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        if v != 0.0 {
            self.rows[i].push((j, v));
        }
    }
    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    /// `max_i |(A x)_i - b_i|`.
    pub fn residual(&self, x: &[f64], b: &[f64]) -> f64 {
        self.rows
            .iter()
            .zip(b)
            .map(|(r, bi)| (r.iter().map(|&(j, v)| v * x[j]).sum::<f64>() - bi).abs())
            .fold(0.0, f64::max)
    }

    pub fn to_banded(&self) -> BandedMatrix {
        let n = self.rows.len();
        let (mut kl, mut ku) = (0usize, 0usize);
        for (i, r) in self.rows.iter().enumerate() {
            for &(j, _) in r {
                if j > i {
                    ku = ku.max(j - i);
                } else {
                    kl = kl.max(i - j);
                }
            }
        }
        let mut a = BandedMatrix::zeros(n, kl, ku);
        for (i, r) in self.rows.iter().enumerate() {
            for &(j, v) in r {
                *a.entry_mut(i, j) += v;
            }
        }
        a
    }
}

#[derive(Debug, Clone)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    ldab: usize,
    ab: Vec<f64>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        let ldab = 2 * kl + ku + 1;
        Self { n, kl, ku, ldab, ab: vec![0.0; ldab * n] }
    }
    pub fn n(&self) -> usize {
        self.n
    }
    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> usize {
        self.kl + self.ku + i - j + j * self.ldab
    }

    /// Mutable reference to `A(i, j)`; panics outside the stored band.
    pub fn entry_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        assert!(i <= j + self.kl && j <= i + self.ku, "entry ({i}, {j}) outside band");
        let k = self.at(i, j);
        &mut self.ab[k]
    }

    /// Factorizes in place; fails on an exactly zero pivot.
    pub fn factor(mut self) -> Result<BandedLu, LinearError> {
        let n = self.n;
        let kl = self.kl;
        let kv = self.kl + self.ku;
        let mut ipiv = vec![0usize; n];
        let mut ju = 0usize;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let mut jp = 0;
            let mut best = self.ab[self.at(j, j)].abs();
            for r in 1..=km {
                let v = self.ab[self.at(j + r, j)].abs();
                if v > best {
                    best = v;
                    jp = r;
                }
            }
            ipiv[j] = j + jp;
            if !(best > 0.0) || !best.is_finite() {
                return Err(LinearError::SingularMatrix { row: j });
            }
            ju = ju.max((j + kv - kl + jp).min(n - 1)).max(j);
            if jp != 0 {
                for c in j..=ju {
                    let (p, q) = (self.at(j, c), self.at(j + jp, c));
                    self.ab.swap(p, q);
                }
            }
            let piv = self.ab[self.at(j, j)];
            for r in 1..=km {
                let k = self.at(j + r, j);
                self.ab[k] /= piv;
            }
            for c in j + 1..=ju {
                let ajc = self.ab[self.at(j, c)];
                if ajc != 0.0 {
                    for r in 1..=km {
                        let l = self.ab[self.at(j + r, j)];
                        let k = self.at(j + r, c);
                        self.ab[k] -= l * ajc;
                    }
                }
            }
        }
        Ok(BandedLu { a: self, ipiv })
    }
}

#[derive(Debug, Clone)]
pub struct BandedLu {
    a: BandedMatrix,
    ipiv: Vec<usize>,
}

impl BandedLu {
    /// Overwrites `b` with `A^{-1} b`.
    pub fn solve(&self, b: &mut [f64]) {
        let a = &self.a;
        let n = a.n;
        let kv = a.kl + a.ku;
        for j in 0..n {
            let km = a.kl.min(n - 1 - j);
            let l = self.ipiv[j];
            if l != j {
                b.swap(l, j);
            }
            let bj = b[j];
            if bj != 0.0 {
                for r in 1..=km {
                    b[j + r] -= a.ab[a.at(j + r, j)] * bj;
                }
            }
        }
        for j in (0..n).rev() {
            b[j] /= a.ab[a.at(j, j)];
            let bj = b[j];
            if bj != 0.0 {
                for i in j.saturating_sub(kv)..j {
                    b[i] -= a.ab[a.at(i, j)] * bj;
                }
            }
        }
    }
}

/// Assembles, factorizes and solves `rows x = rhs`, returning `x` and the residual.
pub fn solve_rows(rows: &RowBuilder, rhs: &[f64]) -> Result<(Vec<f64>, f64), LinearError> {
    let lu = rows.to_banded().factor()?;
    let mut x = rhs.to_vec();
    lu.solve(&mut x);
    let res = rows.residual(&x, rhs);
    Ok((x, res))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn matches_dense_solve_with_pivoting() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &(n, kl, ku) in &[(1, 0, 0), (6, 1, 1), (20, 3, 2), (15, 0, 4), (17, 5, 0)] {
            let mut rows = RowBuilder::new(n);
            let mut dense = DMatrix::zeros(n, n);
            for i in 0..n {
                for j in i.saturating_sub(kl)..(i + ku + 1).min(n) {
                    // Some small pivots force row interchanges.
                    let v = if i == j && i % 3 == 0 { 0.01 } else if i == j { 4.0 } else { rng.random_range(-1.0..1.0) };
                    rows.add(i, j, v);
                    dense[(i, j)] = v;
                }
            }
            let b: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let (x, res) = solve_rows(&rows, &b).unwrap();
            let xd = dense.lu().solve(&DVector::from_vec(b.clone())).unwrap();
            for i in 0..n {
                assert!((x[i] - xd[i]).abs() < 1e-9 * (1.0 + xd[i].abs()), "n={n} i={i}");
            }
            let scale = 1.0 + x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(res < 1e-12 * scale * n as f64, "residual {res} scale {scale}");
        }
    }

    #[test]
    fn zero_matrix_is_singular() {
        let rows = RowBuilder::new(3);
        assert!(matches!(solve_rows(&rows, &[1.0, 1.0, 1.0]), Err(LinearError::SingularMatrix { .. })));
    }
}
