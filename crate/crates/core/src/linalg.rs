//! Small dense linear algebra on top of `nalgebra`: Pfaffians, spectral rank
//! and kernels, guarded solves.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::real::Real;

/// Pfaffian of the antisymmetric matrix stored row-major in `a` (`dim`×`dim`).
///
/// Expansion along the first remaining row; fine for `dim <= 8`.
pub fn pfaffian<T: Real>(a: &[T], dim: usize) -> T {
    if dim % 2 == 1 {
        return T::cst(0.0);
    }
    let idx: Vec<usize> = (0..dim).collect();
    pf_rec(a, dim, &idx)
}

fn pf_rec<T: Real>(a: &[T], dim: usize, idx: &[usize]) -> T {
    match idx.len() {
        0 => T::cst(1.0),
        2 => a[idx[0] * dim + idx[1]],
        _ => {
            let first = idx[0];
            let mut acc = T::cst(0.0);
            let mut rest = Vec::with_capacity(idx.len() - 2);
            for k in 1..idx.len() {
                rest.clear();
                rest.extend(idx[1..].iter().enumerate().filter(|&(j, _)| j + 1 != k).map(|(_, &v)| v));
                let term = a[first * dim + idx[k]] * pf_rec(a, dim, &rest);
                if k % 2 == 1 {
                    acc = acc + term;
                } else {
                    acc = acc - term;
                }
            }
            acc
        }
    }
}

pub fn pfaffian_matrix(m: &DMatrix<f64>) -> f64 {
    let dim = m.nrows();
    let flat: Vec<f64> = (0..dim * dim).map(|k| m[(k / dim, k % dim)]).collect();
    pfaffian(&flat, dim)
}

/// Kernel direction of an odd-dimensional antisymmetric matrix from its
/// principal Pfaffian minors: `v_k = (-1)^k Pf(A without row/col k)`.
///
/// The result is not normalized; it vanishes when the corank exceeds one.
pub fn odd_kernel(m: &DMatrix<f64>) -> DVector<f64> {
    let dim = m.nrows();
    let flat: Vec<f64> = (0..dim * dim).map(|k| m[(k / dim, k % dim)]).collect();
    let mut v = DVector::zeros(dim);
    for k in 0..dim {
        let idx: Vec<usize> = (0..dim).filter(|&i| i != k).collect();
        let pf = pf_rec(&flat, dim, &idx);
        v[k] = if k % 2 == 0 { pf } else { -pf };
    }
    v
}

/// Singular value decomposition with the singular values in decreasing order.
pub struct Spectrum {
    pub values: Vec<f64>,
    pub u: DMatrix<f64>,
    pub v: DMatrix<f64>,
}

impl Spectrum {
    pub fn new(m: &DMatrix<f64>) -> Spectrum {
        let svd = m.clone().svd(true, true);
        let u = svd.u.expect("u requested");
        let vt = svd.v_t.expect("v_t requested");
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
        let values = order.iter().map(|&i| svd.singular_values[i]).collect();
        let u = DMatrix::from_fn(u.nrows(), order.len(), |r, c| u[(r, order[c])]);
        let v = DMatrix::from_fn(vt.ncols(), order.len(), |r, c| vt[(order[c], r)]);
        Spectrum { values, u, v }
    }

    pub fn max(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    /// Number of singular values above `rel * max`.
    pub fn rank(&self, rel: f64) -> usize {
        let cut = rel * self.max();
        if self.max() == 0.0 {
            return 0;
        }
        self.values.iter().filter(|&&s| s > cut).count()
    }

    /// Right singular vectors spanning the numerical kernel (square matrices).
    pub fn kernel(&self, rel: f64) -> Vec<DVector<f64>> {
        let r = self.rank(rel);
        let mut out: Vec<DVector<f64>> = (r..self.v.ncols()).map(|c| self.v.column(c).into_owned()).collect();
        // Square inputs with fewer stored singular vectors than columns cannot
        // occur for the thin SVD of a square matrix; rectangular callers use
        // `rank` only.
        for k in out.iter_mut() {
            let n = k.norm();
            if n > 0.0 {
                *k /= n;
            }
        }
        out
    }

    /// Left singular vectors of the numerical cokernel.
    pub fn cokernel(&self, rel: f64) -> Vec<DVector<f64>> {
        let r = self.rank(rel);
        (r..self.u.ncols()).map(|c| self.u.column(c).into_owned()).collect()
    }

    /// Minimum-norm least-squares solution restricted to the regular block.
    pub fn pseudo_solve(&self, b: &DVector<f64>, rel: f64) -> DVector<f64> {
        let r = self.rank(rel);
        let mut x = DVector::zeros(self.v.nrows());
        for k in 0..r {
            let coef = self.u.column(k).dot(b) / self.values[k];
            x += self.v.column(k) * coef;
        }
        x
    }
}

pub fn numerical_rank(m: &DMatrix<f64>, rel: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    Spectrum::new(m).rank(rel)
}

/// Solve a square system by LU, refusing pivots that signal near-singularity.
pub fn solve(m: &DMatrix<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let lu = m.clone().lu();
    let u = lu.u();
    let diag: Vec<f64> = (0..u.nrows()).map(|i| u[(i, i)].abs()).collect();
    let hi = diag.iter().cloned().fold(0.0, f64::max);
    let lo = diag.iter().cloned().fold(f64::INFINITY, f64::min);
    if hi == 0.0 || lo <= hi * 1e-15 {
        let cond = if lo == 0.0 { f64::INFINITY } else { hi / lo };
        return Err(Error::NearSingular(cond));
    }
    let x = lu.solve(b).ok_or(Error::NearSingular(f64::INFINITY))?;
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("non-finite solution".into()));
    }
    Ok(x)
}

/// Least-squares solve through the SVD (used by Gauss-Newton iterations).
pub fn least_squares(m: &DMatrix<f64>, b: &DVector<f64>, rel: f64) -> DVector<f64> {
    Spectrum::new(m).pseudo_solve(b, rel)
}

/// Determinant of an integer matrix by fraction-free elimination.
pub fn int_det(m: &[Vec<i64>]) -> i128 {
    let n = m.len();
    let mut a: Vec<Vec<i128>> = m.iter().map(|r| r.iter().map(|&v| v as i128).collect()).collect();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n {
        if a[k][k] == 0 {
            let Some(swap) = (k + 1..n).find(|&i| a[i][k] != 0) else {
                return 0;
            };
            a.swap(k, swap);
            sign = -sign;
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) / prev;
            }
        }
        prev = a[k][k];
    }
    if n == 0 {
        1
    } else {
        sign * a[n - 1][n - 1]
    }
}
