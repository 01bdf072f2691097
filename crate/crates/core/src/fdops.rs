//! One-dimensional finite-difference matrices and the Neumann Laplacian on the primal grid.

use crate::error::{Error, Result};
use crate::linsolve::LinearOperator;
use crate::mat::Mat;

/// The five 1D matrices every operator of the scheme is built from.
#[derive(Clone, Debug, PartialEq)]
pub struct FdMatrices {
    /// `M x M` central difference on primal points, one-sided rows at the ends.
    pub dc: Mat,
    /// `M x (M-1)` derivative from dual to primal points (homogeneous Dirichlet on the walls).
    pub d: Mat,
    /// Same as `d` with the first and last rows doubled.
    pub dstar: Mat,
    /// `M x M` Laplacian with homogeneous Neumann conditions.
    pub l: Mat,
    /// `(M-1) x M` primal-to-dual average.
    pub a: Mat,
}

pub fn build_fd_matrices(m: usize, h: f64) -> Result<FdMatrices> {
    if m < 4 {
        return Err(Error::Config(alloc::format!("finite-difference matrices need M >= 4, got {m}")));
    }
    Ok(FdMatrices {
        dc: central_difference(m, h),
        d: dual_difference(m, h),
        dstar: dual_difference_star(m, h),
        l: neumann_laplacian(m, h),
        a: average(m),
    })
}

pub fn central_difference(n: usize, h: f64) -> Mat {
    let s = 1.0 / (2.0 * h);
    let mut dc = Mat::zeros(n, n);
    for i in 0..n {
        let lo = if i == 0 { 0 } else { i - 1 };
        let hi = if i + 1 == n { n - 1 } else { i + 1 };
        dc[(i, lo)] -= s;
        dc[(i, hi)] += s;
    }
    dc
}

/// `n x (n-1)`: `+1` on the diagonal, `-1` on the subdiagonal, scaled by `1/h`.
pub fn dual_difference(n: usize, h: f64) -> Mat {
    let mut d = Mat::zeros(n, n - 1);
    for k in 0..n - 1 {
        d[(k, k)] = 1.0 / h;
        d[(k + 1, k)] = -1.0 / h;
    }
    d
}

pub fn dual_difference_star(n: usize, h: f64) -> Mat {
    let mut d = dual_difference(n, h);
    d[(0, 0)] = 2.0 / h;
    d[(n - 1, n - 2)] = -2.0 / h;
    d
}

pub fn neumann_laplacian(n: usize, h: f64) -> Mat {
    let s = 1.0 / (h * h);
    let mut l = Mat::zeros(n, n);
    for i in 0..n {
        if i > 0 {
            l[(i, i - 1)] = s;
            l[(i, i)] -= s;
        }
        if i + 1 < n {
            l[(i, i + 1)] = s;
            l[(i, i)] -= s;
        }
    }
    l
}

pub fn average(n: usize) -> Mat {
    let mut a = Mat::zeros(n - 1, n);
    for k in 0..n - 1 {
        a[(k, k)] = 0.5;
        a[(k, k + 1)] = 0.5;
    }
    a
}

/// `Delta_h f = L f + f L^T` on an `M x M` primal field, applied as a stencil.
pub fn laplacian2d(f: &Mat, h: f64) -> Result<Mat> {
    let (m, n) = f.shape();
    if m != n {
        return Err(Error::Shape { context: "laplacian2d", expected: (m, m), found: (m, n) });
    }
    let mut out = Mat::zeros(m, m);
    laplacian2d_into(f.as_slice(), out.as_mut_slice(), m, h);
    Ok(out)
}

/// Raw column-major kernel behind [`laplacian2d`].
pub(crate) fn laplacian2d_into(f: &[f64], out: &mut [f64], m: usize, h: f64) {
    let s = 1.0 / (h * h);
    for j in 0..m {
        for i in 0..m {
            let c = f[i + m * j];
            let mut acc = 0.0;
            if i > 0 {
                acc += f[i - 1 + m * j] - c;
            }
            if i + 1 < m {
                acc += f[i + 1 + m * j] - c;
            }
            if j > 0 {
                acc += f[i + m * (j - 1)] - c;
            }
            if j + 1 < m {
                acc += f[i + m * (j + 1)] - c;
            }
            out[i + m * j] = s * acc;
        }
    }
}

/// The diagonal operator `D(v) w`, i.e. the pointwise product.
pub fn diag_apply(v: &Mat, w: &Mat) -> Result<Mat> {
    v.hadamard(w)
}

/// `Delta_h` as a matrix-free operator on vectorized primal fields.
#[derive(Clone, Copy, Debug)]
pub struct Laplacian2d {
    pub m: usize,
    pub h: f64,
}

impl LinearOperator for Laplacian2d {
    fn dim(&self) -> usize {
        self.m * self.m
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        laplacian2d_into(x, y, self.m, self.h);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec::Vec;
    use core::f64::consts::PI;

    fn random(rows: usize, cols: usize, seed: u64) -> Mat {
        let mut s = seed;
        Mat::from_fn(rows, cols, |_, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        })
    }

    #[test]
    fn matrix_entries() {
        let m = 4;
        let h = 0.25;
        let fd = build_fd_matrices(m, h).unwrap();
        let s = 1.0 / (2.0 * h);
        assert_eq!((0..m).map(|j| fd.dc[(0, j)]).collect::<Vec<_>>(), [-s, s, 0.0, 0.0]);
        assert_eq!((0..m).map(|j| fd.dc[(3, j)]).collect::<Vec<_>>(), [0.0, 0.0, -s, s]);
        assert_eq!((0..m).map(|j| fd.dc[(1, j)]).collect::<Vec<_>>(), [-s, 0.0, s, 0.0]);
        assert_eq!(fd.dstar.column(0), &[2.0 / h, -1.0 / h, 0.0, 0.0]);
        assert_eq!(fd.d.column(0), &[1.0 / h, -1.0 / h, 0.0, 0.0]);
        assert_eq!(fd.d.column(2), &[0.0, 0.0, 1.0 / h, -1.0 / h]);
        assert_eq!(fd.dstar.column(2), &[0.0, 0.0, 1.0 / h, -2.0 / h]);
        assert_eq!(fd.a.shape(), (3, 4));
        assert!(build_fd_matrices(3, 1.0 / 3.0).is_err());
    }

    #[test]
    fn laplacian_rows_and_symmetry() {
        let fd = build_fd_matrices(9, 1.0 / 9.0).unwrap();
        for i in 0..9 {
            let row: f64 = (0..9).map(|j| fd.l[(i, j)]).sum();
            assert!(row.abs() < 1e-10);
        }
        assert_eq!(fd.l, fd.l.transpose());
        for k in 0..8 {
            assert_eq!((0..9).map(|j| fd.a[(k, j)]).sum::<f64>(), 1.0);
        }
        let ones = Mat::filled(9, 1, 1.0);
        assert!(fd.l.matmul(&ones).unwrap().max_abs() < 1e-10);
    }

    #[test]
    fn laplacian_is_negative_semidefinite() {
        for m in [4usize, 8, 16] {
            let l = neumann_laplacian(m, 1.0 / m as f64);
            let dm = nalgebra::DMatrix::from_fn(m, m, |i, j| l[(i, j)]);
            let eig = dm.symmetric_eigenvalues();
            assert!(eig.iter().all(|&e| e <= 1e-9), "M={m}: {eig}");
            assert_eq!(eig.iter().filter(|e| e.abs() < 1e-9).count(), 1);
        }
    }

    #[test]
    fn laplacian2d_matches_matrix_form() {
        let m = 8;
        let h = 1.0 / m as f64;
        let fd = build_fd_matrices(m, h).unwrap();
        let f = random(m, m, 3);
        let dense = fd.l.matmul(&f).unwrap().add(&f.matmul(&fd.l.transpose()).unwrap()).unwrap();
        let stencil = laplacian2d(&f, h).unwrap();
        assert!(dense.max_abs_diff(&stencil) < 1e-10 * dense.max_abs());
        assert!(laplacian2d(&Mat::zeros(3, 4), h).is_err());
    }

    #[test]
    fn laplacian2d_null_space_and_conservation() {
        let m = 12;
        let h = 1.0 / m as f64;
        let c = laplacian2d(&Mat::filled(m, m, 3.3), h).unwrap();
        assert!(c.max_abs() == 0.0);
        let f = random(m, m, 11);
        let lf = laplacian2d(&f, h).unwrap();
        assert!(lf.sum().abs() < 1e-10 * lf.max_abs());
    }

    #[test]
    fn laplacian2d_symmetric_inner_product() {
        let m = 10;
        let h = 1.0 / m as f64;
        let f = random(m, m, 5);
        let g = random(m, m, 6);
        let a = crate::mat::dot(f.as_slice(), laplacian2d(&g, h).unwrap().as_slice());
        let b = crate::mat::dot(laplacian2d(&f, h).unwrap().as_slice(), g.as_slice());
        assert!((a - b).abs() < 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn laplacian2d_second_order_on_cosine() {
        let err = |m: usize| {
            let grid = crate::grid::MacGrid::new(m).unwrap();
            let f = grid.sample_primal(|x, y| libm::cos(PI * x) * libm::cos(PI * y));
            let lf = laplacian2d(&f, grid.h()).unwrap();
            lf.add(&f.scale(2.0 * PI * PI)).unwrap().max_abs()
        };
        let r = err(32) / err(64);
        assert!((r - 4.0).abs() < 0.2, "ratio {r}");
    }

    #[test]
    fn laplacian2d_separable_additivity() {
        let m = 6;
        let h = 1.0 / m as f64;
        let u = random(m, 1, 1);
        let w = random(m, 1, 2);
        let f = Mat::from_fn(m, m, |i, j| u[(i, 0)] + w[(j, 0)]);
        let l = neumann_laplacian(m, h);
        let lu = l.matmul(&u).unwrap();
        let lw = l.matmul(&w).unwrap();
        let expect = Mat::from_fn(m, m, |i, j| lu[(i, 0)] + lw[(j, 0)]);
        assert!(laplacian2d(&f, h).unwrap().max_abs_diff(&expect) < 1e-11);
    }

    #[test]
    fn diagonal_operator() {
        let w = random(5, 5, 9);
        assert_eq!(diag_apply(&Mat::filled(5, 5, 1.0), &w).unwrap(), w);
        assert_eq!(diag_apply(&Mat::zeros(5, 5), &w).unwrap().max_abs(), 0.0);
        let v = random(5, 5, 10);
        let p = diag_apply(&v, &w).unwrap();
        for j in 0..5 {
            for i in 0..5 {
                assert_eq!(p[(i, j)], v[(i, j)] * w[(i, j)]);
            }
        }
        assert!(diag_apply(&v, &Mat::zeros(4, 5)).is_err());
    }
}
