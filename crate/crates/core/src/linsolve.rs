//! Preconditioned conjugate gradients and a geometric multigrid preconditioner.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::mat::{dot, norm2};
use crate::sparse::Csr;

/// A symmetric linear map on `R^n`.
pub trait LinearOperator {
    fn dim(&self) -> usize;

    /// `y = A x`; `y` is overwritten.
    fn apply(&self, x: &[f64], y: &mut [f64]);

    fn diagonal(&self) -> Option<Vec<f64>> {
        None
    }
}

impl LinearOperator for Csr {
    fn dim(&self) -> usize {
        self.rows()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        self.spmv(x, y);
    }

    fn diagonal(&self) -> Option<Vec<f64>> {
        Some(Csr::diagonal(self))
    }
}

/// Approximate inverse `z = B^{-1} r`. Must be symmetric positive definite for CG.
pub trait Preconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]);
}

pub struct IdentityPreconditioner;

impl Preconditioner for IdentityPreconditioner {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        z.copy_from_slice(r);
    }
}

pub struct Jacobi {
    inv_diag: Vec<f64>,
}

impl Jacobi {
    pub fn new(diag: &[f64]) -> Result<Self> {
        let inv_diag = diag
            .iter()
            .enumerate()
            .map(|(i, &d)| if d > 0.0 { Ok(1.0 / d) } else { Err(Error::ZeroDiagonal(i)) })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { inv_diag })
    }
}

impl Preconditioner for Jacobi {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        for ((z, r), d) in z.iter_mut().zip(r).zip(&self.inv_diag) {
            *z = r * d;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    /// Final true relative residual `|b - A x| / |b|`.
    pub residual: f64,
    pub converged: bool,
}

impl fmt::Display for SolveReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} iterations, relative residual {:.3e}{}",
            self.iterations,
            self.residual,
            if self.converged { "" } else { " (not converged)" }
        )
    }
}

pub const DEFAULT_TOL: f64 = 1e-10;

/// Preconditioned CG from the initial guess `x0`.
///
/// Stops when `|r| <= tol |b|` or after `max_iter` iterations (default `10 n`). A
/// non-positive curvature `p'Ap` is reported as [`Error::Breakdown`].
pub fn cg(
    op: &dyn LinearOperator,
    b: &[f64],
    x0: &[f64],
    tol: f64,
    max_iter: Option<usize>,
    precond: &dyn Preconditioner,
) -> Result<(Vec<f64>, SolveReport)> {
    let n = op.dim();
    if b.len() != n || x0.len() != n {
        return Err(Error::Shape { context: "cg", expected: (n, 1), found: (b.len(), x0.len()) });
    }
    let max_iter = max_iter.unwrap_or(10 * n);
    let bnorm = norm2(b);
    if bnorm == 0.0 {
        return Ok((vec![0.0; n], SolveReport { iterations: 0, residual: 0.0, converged: true }));
    }
    if !bnorm.is_finite() {
        return Err(Error::NonFinite("cg right-hand side"));
    }

    let mut x = x0.to_vec();
    let mut r = vec![0.0; n];
    op.apply(&x, &mut r);
    for (r, b) in r.iter_mut().zip(b) {
        *r = b - *r;
    }
    let mut z = vec![0.0; n];
    precond.apply(&r, &mut z);
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let target = tol * bnorm;

    let mut it = 0;
    let mut rnorm = norm2(&r);
    while rnorm > target && it < max_iter {
        op.apply(&p, &mut ap);
        let curv = dot(&p, &ap);
        if !(curv > 0.0) {
            return Err(Error::Breakdown { iterations: it, curvature: curv });
        }
        let alpha = rz / curv;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        it += 1;
        rnorm = norm2(&r);
        if rnorm <= target {
            break;
        }
        precond.apply(&r, &mut z);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }

    op.apply(&x, &mut ap);
    let true_res = norm2(&b.iter().zip(&ap).map(|(b, a)| b - a).collect::<Vec<_>>()) / bnorm;
    if !true_res.is_finite() {
        return Err(Error::NonFinite("cg iterate"));
    }
    // the recursive residual may drift below the true one; accept a little slack
    let converged = rnorm <= target && true_res <= 10.0 * tol;
    Ok((x, SolveReport { iterations: it, residual: true_res, converged }))
}

/// One Gauss-Seidel sweep on `A x = b`, forward or backward.
pub fn gs_sweep(a: &Csr, b: &[f64], x: &mut [f64], forward: bool) -> Result<()> {
    let n = a.rows();
    let mut step = |r: usize| -> Result<()> {
        let (cols, vals) = a.row(r);
        let mut diag = 0.0;
        let mut s = b[r];
        for (&c, &v) in cols.iter().zip(vals) {
            if c == r {
                diag = v;
            } else {
                s -= v * x[c];
            }
        }
        if diag == 0.0 {
            return Err(Error::ZeroDiagonal(r));
        }
        x[r] = s / diag;
        Ok(())
    };
    if forward {
        (0..n).try_for_each(&mut step)
    } else {
        (0..n).rev().try_for_each(&mut step)
    }
}

/// `n` sweeps of symmetric Gauss-Seidel (forward then backward).
pub fn gs_smooth(a: &Csr, b: &[f64], x: &mut [f64], sweeps: usize) -> Result<()> {
    for _ in 0..sweeps {
        gs_sweep(a, b, x, true)?;
        gs_sweep(a, b, x, false)?;
    }
    Ok(())
}

/// Dense Cholesky factor, used on the coarsest level.
#[derive(Clone, Debug)]
pub struct Cholesky {
    n: usize,
    l: Vec<f64>,
}

impl Cholesky {
    pub fn factor(a: &Csr) -> Result<Self> {
        let n = a.rows();
        let d = a.to_dense();
        let mut l = vec![0.0; n * n];
        for j in 0..n {
            let mut s = d[(j, j)];
            for k in 0..j {
                s -= l[j * n + k] * l[j * n + k];
            }
            if !(s > 0.0) {
                return Err(Error::Breakdown { iterations: j, curvature: s });
            }
            let ljj = libm::sqrt(s);
            l[j * n + j] = ljj;
            for i in j + 1..n {
                let mut s = d[(i, j)];
                for k in 0..j {
                    s -= l[i * n + k] * l[j * n + k];
                }
                l[i * n + j] = s / ljj;
            }
        }
        Ok(Self { n, l })
    }

    pub fn solve(&self, b: &[f64], x: &mut [f64]) {
        let n = self.n;
        let l = &self.l;
        for i in 0..n {
            let mut s = b[i];
            for k in 0..i {
                s -= l[i * n + k] * x[k];
            }
            x[i] = s / l[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for k in i + 1..n {
                s -= l[k * n + i] * x[k];
            }
            x[i] = s / l[i * n + i];
        }
    }
}

/// Prolongation from `n/2` to `n` cell-centered points: weights 3/4 and 1/4, clamped at
/// the ends.
pub fn prolong_cells_1d(n_fine: usize) -> Csr {
    let nc = n_fine / 2;
    let mut t = Vec::with_capacity(2 * n_fine);
    for c in 0..nc {
        let (even, odd) = (2 * c, 2 * c + 1);
        if c == 0 {
            t.push((even, 0, 1.0));
        } else {
            t.push((even, c, 0.75));
            t.push((even, c - 1, 0.25));
        }
        if c + 1 == nc {
            t.push((odd, c, 1.0));
        } else {
            t.push((odd, c, 0.75));
            t.push((odd, c + 1, 0.25));
        }
    }
    Csr::from_triplets(n_fine, nc, t)
}

/// Prolongation between interior face (vertex) points, `n/2 - 1` to `n - 1`, by linear
/// interpolation with zero wall values.
pub fn prolong_faces_1d(n_fine: usize) -> Csr {
    let nc = n_fine / 2;
    let mut t = Vec::new();
    // fine face number k = 1..n_fine-1 is stored at k-1
    for k in 1..n_fine {
        if k % 2 == 0 {
            t.push((k - 1, k / 2 - 1, 1.0));
        } else {
            let (lo, hi) = (k / 2, k / 2 + 1);
            if lo >= 1 {
                t.push((k - 1, lo - 1, 0.5));
            }
            if hi < nc {
                t.push((k - 1, hi - 1, 0.5));
            }
        }
    }
    Csr::from_triplets(n_fine - 1, nc - 1, t)
}

/// How the unknowns of a system are laid out on the grid, to build prolongations.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GridLayout {
    /// `M x M` primal field.
    Cells,
    /// `[vec(v1); vec(v2)]` with `v1: (M-1) x M`, `v2: M x (M-1)`.
    Velocity,
}

pub const COARSEST_M: usize = 4;

/// Prolongation from grid size `m/2` to `m`.
pub fn prolongation(layout: GridLayout, m: usize) -> Csr {
    let pc = prolong_cells_1d(m);
    let pf = prolong_faces_1d(m);
    match layout {
        // vec(Px X Py^T) = (Py ⊗ Px) vec(X)
        GridLayout::Cells => pc.kron(&pc),
        GridLayout::Velocity => pc.kron(&pf).block_diag(&pf.kron(&pc)),
    }
}

struct Level {
    a: Csr,
    /// Prolongation from the next coarser level into this one.
    p: Option<Csr>,
}

enum Coarse {
    Direct(Cholesky),
    Smoother,
}

/// Galerkin V(1,1) multigrid: forward Gauss-Seidel before, backward after, exact solve on
/// the coarsest grid. Symmetric, so usable inside CG.
pub struct Multigrid {
    levels: Vec<Level>,
    coarse: Coarse,
}

impl Multigrid {
    pub fn new(a: Csr, layout: GridLayout, m: usize) -> Result<Self> {
        let mut levels = Vec::new();
        let mut a = a;
        let mut size = m;
        while size > COARSEST_M && size % 2 == 0 {
            let p = prolongation(layout, size);
            let coarse = p.transpose().matmul(&a)?.matmul(&p)?;
            levels.push(Level { a, p: Some(p) });
            a = coarse;
            size /= 2;
        }
        let coarse = if levels.is_empty() {
            Coarse::Smoother
        } else {
            Coarse::Direct(Cholesky::factor(&a)?)
        };
        levels.push(Level { a, p: None });
        for lv in &levels {
            if let Some(i) = lv.a.diagonal().iter().position(|&d| d == 0.0) {
                return Err(Error::ZeroDiagonal(i));
            }
        }
        Ok(Self { levels, coarse })
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    fn vcycle(&self, l: usize, b: &[f64], x: &mut [f64]) {
        let lv = &self.levels[l];
        x.iter_mut().for_each(|v| *v = 0.0);
        if l + 1 == self.levels.len() {
            match &self.coarse {
                Coarse::Direct(ch) => ch.solve(b, x),
                Coarse::Smoother => {
                    // diagonals were checked at construction
                    let _ = gs_smooth(&lv.a, b, x, 1);
                }
            }
            return;
        }
        let _ = gs_sweep(&lv.a, b, x, true);
        let n = b.len();
        let mut r = vec![0.0; n];
        lv.a.spmv(x, &mut r);
        for (r, b) in r.iter_mut().zip(b) {
            *r = b - *r;
        }
        let p = lv.p.as_ref().expect("non-coarsest level has a prolongation");
        let mut rc = vec![0.0; p.cols()];
        // restriction R = P^T
        for i in 0..p.rows() {
            let (cols, vals) = p.row(i);
            for (&c, &v) in cols.iter().zip(vals) {
                rc[c] += v * r[i];
            }
        }
        let mut ec = vec![0.0; p.cols()];
        self.vcycle(l + 1, &rc, &mut ec);
        let mut e = vec![0.0; n];
        p.spmv(&ec, &mut e);
        for (x, e) in x.iter_mut().zip(&e) {
            *x += e;
        }
        let _ = gs_sweep(&lv.a, b, x, false);
    }
}

impl Preconditioner for Multigrid {
    fn apply(&self, r: &[f64], z: &mut [f64]) {
        self.vcycle(0, r, z);
    }
}

/// Preconditioner choice exposed to the time stepper.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PrecondKind {
    #[default]
    None,
    Multigrid,
}

/// Builds the requested preconditioner; `assemble` is only called for multigrid. Grid sizes
/// that are not a power of two fall back to no preconditioning.
pub fn make_preconditioner(
    kind: PrecondKind,
    layout: GridLayout,
    m: usize,
    assemble: impl FnOnce() -> Result<Csr>,
) -> Result<Box<dyn Preconditioner>> {
    match kind {
        PrecondKind::None => Ok(Box::new(IdentityPreconditioner)),
        PrecondKind::Multigrid => {
            if !m.is_power_of_two() {
                log::warn!("multigrid needs a power-of-two grid, M = {m}; solving without preconditioner");
                return Ok(Box::new(IdentityPreconditioner));
            }
            Ok(Box::new(Multigrid::new(assemble()?, layout, m)?))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fdops::neumann_laplacian;
    use crate::mat::Mat;
    use proptest::prelude::*;

    /// `I + k (-Delta_h)` on an `m x m` grid, assembled.
    fn shifted_laplacian(m: usize, k: f64) -> Csr {
        let l = Csr::from_dense(&neumann_laplacian(m, 1.0 / m as f64));
        let i = Csr::identity(m);
        let lap = i.kron(&l).add(&l.kron(&i)).unwrap();
        Csr::identity(m * m).add(&lap.scale(-k)).unwrap()
    }

    fn rhs(n: usize) -> Vec<f64> {
        (0..n).map(|i| libm::sin(0.37 * i as f64) + 0.1).collect()
    }

    #[test]
    fn cg_solves_small_spd_system() {
        let a = Csr::from_dense(&Mat::from_rows(&[&[4.0, 1.0, 0.0], &[1.0, 3.0, 1.0], &[0.0, 1.0, 2.0]]));
        let b = [1.0, 2.0, 3.0];
        let (x, rep) = cg(&a, &b, &[0.0; 3], 1e-12, None, &IdentityPreconditioner).unwrap();
        assert!(rep.converged && rep.iterations <= 3);
        let mut y = [0.0; 3];
        a.spmv(&x, &mut y);
        assert!(y.iter().zip(&b).all(|(y, b)| (y - b).abs() < 1e-10));
    }

    #[test]
    fn cg_zero_rhs_and_bad_operator() {
        let a = Csr::identity(4);
        let (x, rep) = cg(&a, &[0.0; 4], &[1.0; 4], 1e-10, None, &IdentityPreconditioner).unwrap();
        assert_eq!(x, [0.0; 4]);
        assert_eq!(rep.iterations, 0);
        let neg = Csr::identity(4).scale(-1.0);
        assert!(matches!(
            cg(&neg, &[1.0; 4], &[0.0; 4], 1e-10, None, &IdentityPreconditioner),
            Err(Error::Breakdown { .. })
        ));
    }

    #[test]
    fn cg_reports_non_convergence() {
        let a = shifted_laplacian(8, 1.0);
        let b = rhs(64);
        let (_, rep) = cg(&a, &b, &[0.0; 64], 1e-14, Some(2), &IdentityPreconditioner).unwrap();
        assert!(!rep.converged);
        assert_eq!(rep.iterations, 2);
    }

    #[test]
    fn prolongations_reproduce_constants_and_lines() {
        let pc = prolong_cells_1d(8);
        let mut y = [0.0; 8];
        pc.spmv(&[1.0; 4], &mut y);
        assert!(y.iter().all(|&v| (v - 1.0).abs() < 1e-15));
        // faces: coarse values of x at coarse faces 1..3 of 4; fine faces at 1..7 of 8
        let pf = prolong_faces_1d(8);
        let coarse: Vec<f64> = (1..4).map(|k| k as f64 / 4.0).collect();
        let mut fine = [0.0; 7];
        pf.spmv(&coarse, &mut fine);
        // the last fine face interpolates towards the zero wall value
        for (k, v) in fine.iter().enumerate().take(6) {
            assert!((v - (k + 1) as f64 / 8.0).abs() < 1e-15);
        }
        assert!((fine[6] - 0.375).abs() < 1e-15);
    }

    #[test]
    fn multigrid_is_symmetric() {
        let m = 16;
        let a = shifted_laplacian(m, 0.05);
        let mg = Multigrid::new(a, GridLayout::Cells, m).unwrap();
        assert_eq!(mg.depth(), 3);
        let n = m * m;
        let u = rhs(n);
        let v: Vec<f64> = (0..n).map(|i| libm::cos(0.11 * i as f64)).collect();
        let (mut bu, mut bv) = (vec![0.0; n], vec![0.0; n]);
        mg.apply(&u, &mut bu);
        mg.apply(&v, &mut bv);
        let (l, r) = (dot(&v, &bu), dot(&u, &bv));
        assert!((l - r).abs() < 1e-10 * l.abs());
    }

    #[test]
    fn multigrid_reduces_iterations() {
        let m = 32;
        let a = shifted_laplacian(m, 1.0);
        let b = rhs(m * m);
        let x0 = vec![0.0; m * m];
        let (_, plain) = cg(&a, &b, &x0, 1e-10, None, &IdentityPreconditioner).unwrap();
        let mg = Multigrid::new(a.clone(), GridLayout::Cells, m).unwrap();
        let (x, pre) = cg(&a, &b, &x0, 1e-10, None, &mg).unwrap();
        assert!(pre.converged && plain.converged);
        assert!(pre.iterations * 3 < plain.iterations, "{pre} vs {plain}");
        let (xp, _) = cg(&a, &b, &x0, 1e-12, None, &IdentityPreconditioner).unwrap();
        assert!(x.iter().zip(&xp).all(|(a, b)| (a - b).abs() < 1e-7));
    }

    #[test]
    fn velocity_prolongation_shape() {
        let p = prolongation(GridLayout::Velocity, 8);
        assert_eq!((p.rows(), p.cols()), (2 * 7 * 8, 2 * 3 * 4));
    }

    #[test]
    fn gauss_seidel_rejects_zero_diagonal() {
        let a = Csr::from_dense(&Mat::from_rows(&[&[0.0, 1.0], &[1.0, 2.0]]));
        assert!(matches!(gs_sweep(&a, &[1.0, 1.0], &mut [0.0, 0.0], true), Err(Error::ZeroDiagonal(0))));
        assert!(Jacobi::new(&[1.0, 0.0]).is_err());
    }

    #[test]
    fn cholesky_solves() {
        let a = shifted_laplacian(4, 0.3);
        let ch = Cholesky::factor(&a).unwrap();
        let b = rhs(16);
        let mut x = vec![0.0; 16];
        ch.solve(&b, &mut x);
        let mut y = vec![0.0; 16];
        a.spmv(&x, &mut y);
        assert!(y.iter().zip(&b).all(|(y, b)| (y - b).abs() < 1e-12));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn cg_residual_meets_tolerance(k in 0.001f64..2.0, seed in 0u64..1000) {
            let m = 8;
            let a = shifted_laplacian(m, k);
            let b: Vec<f64> = (0..m * m).map(|i| libm::sin(seed as f64 + 0.7 * i as f64)).collect();
            let (x, rep) = cg(&a, &b, &vec![0.0; m * m], 1e-10, None, &IdentityPreconditioner).unwrap();
            prop_assert!(rep.converged);
            let mut y = vec![0.0; m * m];
            a.spmv(&x, &mut y);
            let r: Vec<f64> = y.iter().zip(&b).map(|(y, b)| y - b).collect();
            prop_assert!(norm2(&r) <= 1e-9 * norm2(&b));
        }
    }
}
