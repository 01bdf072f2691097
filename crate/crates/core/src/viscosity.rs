//! Viscous stress on the face velocities and the velocity-stage operator.
//!
//! With `S = D*^T D` (the `(M x M)` second difference with `3` in the corners) the blocks are
//!
//! ```text
//! A11 = (2nu + lambda) I_M ⊗ D^T D + nu S ⊗ I_{M-1}
//! A12 = (nu + lambda) D ⊗ D^T         A21 = A12^T
//! A22 = (2nu + lambda) D^T D ⊗ I_M + nu I_{M-1} ⊗ S
//! ```
//!
//! and the tendency is `L4 = -A v`.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fdops::{dual_difference, dual_difference_star, FdMatrices};
use crate::grid::check_positive;
use crate::linsolve::LinearOperator;
use crate::mat::Mat;
use crate::sparse::Csr;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Viscosity {
    pub nu: f64,
    pub lambda: f64,
}

/// `(A v)` for stacked column-major slices `v1: (M-1) x M`, `v2: M x (M-1)`.
pub(crate) fn apply_a(m: usize, visc: Viscosity, v1: &[f64], v2: &[f64], out1: &mut [f64], out2: &mut [f64]) {
    let n = m - 1;
    let h2 = 1.0 / ((m * m) as f64);
    let s = 1.0 / h2;
    let Viscosity { nu, lambda } = visc;
    let (normal, cross) = (2.0 * nu + lambda, nu + lambda);
    let u = |f: isize, b: isize| -> f64 {
        if f < 0 || f >= n as isize || b < 0 || b >= m as isize {
            0.0
        } else {
            v1[f as usize + n * b as usize]
        }
    };
    let w = |a: isize, g: isize| -> f64 {
        if a < 0 || a >= m as isize || g < 0 || g >= n as isize {
            0.0
        } else {
            v2[a as usize + m * g as usize]
        }
    };
    for b in 0..m as isize {
        for f in 0..n as isize {
            let c = u(f, b);
            let xx = u(f + 1, b) - 2.0 * c + u(f - 1, b);
            // tangential neighbours across a wall are odd mirrors: ghost = -c
            let up = if b + 1 < m as isize { u(f, b + 1) } else { -c };
            let dn = if b > 0 { u(f, b - 1) } else { -c };
            let yy = up - 2.0 * c + dn;
            let xy = (w(f + 1, b) - w(f, b)) - (w(f + 1, b - 1) - w(f, b - 1));
            out1[f as usize + n * b as usize] = -s * (normal * xx + nu * yy + cross * xy);
        }
    }
    for g in 0..n as isize {
        for a in 0..m as isize {
            let c = w(a, g);
            let yy = w(a, g + 1) - 2.0 * c + w(a, g - 1);
            let rt = if a + 1 < m as isize { w(a + 1, g) } else { -c };
            let lt = if a > 0 { w(a - 1, g) } else { -c };
            let xx = rt - 2.0 * c + lt;
            let xy = (u(a, g + 1) - u(a, g)) - (u(a - 1, g + 1) - u(a - 1, g));
            out2[a as usize + m * g as usize] = -s * (normal * yy + nu * xx + cross * xy);
        }
    }
}

fn check_velocity_shapes(v1: &Mat, v2: &Mat) -> Result<usize> {
    let m = v1.cols();
    v1.ensure_shape((m - 1, m), "viscosity v1")?;
    v2.ensure_shape((m, m - 1), "viscosity v2")?;
    Ok(m)
}

/// `L4 = -A (v1, v2)` evaluated with the stencils.
pub fn visc_apply(v1: &Mat, v2: &Mat, visc: Viscosity) -> Result<(Mat, Mat)> {
    let m = check_velocity_shapes(v1, v2)?;
    let mut a1 = Mat::zeros(m - 1, m);
    let mut a2 = Mat::zeros(m, m - 1);
    apply_a(m, visc, v1.as_slice(), v2.as_slice(), a1.as_mut_slice(), a2.as_mut_slice());
    Ok((a1.scale(-1.0), a2.scale(-1.0)))
}

/// `S = D*_{M+1}^T D_{M+1}`, the `M x M` second difference across cells with no-slip walls.
fn wall_second_difference(m: usize) -> Result<Mat> {
    let h = 1.0 / m as f64;
    dual_difference_star(m + 1, h).transpose().matmul(&dual_difference(m + 1, h))
}

/// `L4` from the matrix expressions with `D` and `D*`.
pub fn visc_apply_matrix(v1: &Mat, v2: &Mat, visc: Viscosity, fd: &FdMatrices) -> Result<(Mat, Mat)> {
    check_velocity_shapes(v1, v2)?;
    let Viscosity { nu, lambda } = visc;
    let dt = fd.d.transpose();
    let dtd = dt.matmul(&fd.d)?;
    let s = wall_second_difference(fd.d.rows())?;
    let a1 = dtd
        .matmul(v1)?
        .scale(2.0 * nu + lambda)
        .add(&v1.matmul(&s)?.scale(nu))?
        .add(&dt.matmul(v2)?.matmul(&dt)?.scale(nu + lambda))?;
    let a2 = v2
        .matmul(&dtd)?
        .scale(2.0 * nu + lambda)
        .add(&s.matmul(v2)?.scale(nu))?
        .add(&fd.d.matmul(v1)?.matmul(&fd.d)?.scale(nu + lambda))?;
    Ok((a1.scale(-1.0), a2.scale(-1.0)))
}

/// The four blocks of `A` as sparse Kronecker products.
#[derive(Clone, Debug)]
pub struct ViscousBlocks {
    pub a11: Csr,
    pub a12: Csr,
    pub a21: Csr,
    pub a22: Csr,
}

impl ViscousBlocks {
    pub fn new(fd: &FdMatrices, visc: Viscosity) -> Result<Self> {
        let Viscosity { nu, lambda } = visc;
        let m = fd.d.rows();
        let d = Csr::from_dense(&fd.d);
        let dt = d.transpose();
        let dtd = dt.matmul(&d)?;
        let s = Csr::from_dense(&wall_second_difference(m)?);
        let im = Csr::identity(m);
        let in_ = Csr::identity(m - 1);
        Ok(Self {
            a11: im.kron(&dtd).scale(2.0 * nu + lambda).add(&s.kron(&in_).scale(nu))?,
            a12: d.kron(&dt).scale(nu + lambda),
            a21: dt.kron(&d).scale(nu + lambda),
            a22: dtd.kron(&im).scale(2.0 * nu + lambda).add(&in_.kron(&s).scale(nu))?,
        })
    }

    /// The full `2M(M-1)` square operator.
    pub fn assemble(&self) -> Csr {
        self.a11.block2(Some(&self.a12), Some(&self.a21), &self.a22)
    }
}

/// `v -> blockdiag(D(rho_x), D(rho_y)) v + k A v` on `[vec(v1); vec(v2)]`.
#[derive(Clone, Debug)]
pub struct VelocitySystem {
    m: usize,
    rho_xy: Vec<f64>,
    coeff: f64,
    visc: Viscosity,
}

pub fn visc_system_operator(rho_x: &Mat, rho_y: &Mat, coeff: f64, visc: Viscosity) -> Result<VelocitySystem> {
    let m = check_velocity_shapes(rho_x, rho_y)?;
    check_positive(rho_x, "velocity system rho_x")?;
    check_positive(rho_y, "velocity system rho_y")?;
    if !(coeff >= 0.0) {
        return Err(Error::config("velocity stage coefficient must be non-negative"));
    }
    let mut rho_xy = rho_x.as_slice().to_vec();
    rho_xy.extend_from_slice(rho_y.as_slice());
    Ok(VelocitySystem { m, rho_xy, coeff, visc })
}

impl VelocitySystem {
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn assemble(&self, fd: &FdMatrices) -> Result<Csr> {
        let a = ViscousBlocks::new(fd, self.visc)?.assemble();
        Csr::diag(&self.rho_xy).add(&a.scale(self.coeff))
    }
}

impl LinearOperator for VelocitySystem {
    fn dim(&self) -> usize {
        self.rho_xy.len()
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let half = self.m * (self.m - 1);
        let (x1, x2) = x.split_at(half);
        let (y1, y2) = y.split_at_mut(half);
        apply_a(self.m, self.visc, x1, x2, y1, y2);
        for ((y, x), r) in y.iter_mut().zip(x).zip(&self.rho_xy) {
            *y = r * x + self.coeff * *y;
        }
    }

    fn diagonal(&self) -> Option<Vec<f64>> {
        let m = self.m;
        let n = m - 1;
        let s = (m * m) as f64;
        let Viscosity { nu, lambda } = self.visc;
        let mut d = vec![0.0; 2 * m * n];
        for b in 0..m {
            for f in 0..n {
                let t = if b == 0 || b + 1 == m { 3.0 } else { 2.0 };
                d[f + n * b] = s * ((2.0 * nu + lambda) * 2.0 + nu * t);
            }
        }
        for g in 0..n {
            for a in 0..m {
                let t = if a == 0 || a + 1 == m { 3.0 } else { 2.0 };
                d[m * n + a + m * g] = s * ((2.0 * nu + lambda) * 2.0 + nu * t);
            }
        }
        for (d, r) in d.iter_mut().zip(&self.rho_xy) {
            *d = r + self.coeff * *d;
        }
        Some(d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fdops::build_fd_matrices;
    use crate::mat::dot;
    use proptest::prelude::*;

    const CASES: [Viscosity; 3] = [
        Viscosity { nu: 1.0, lambda: 0.0 },
        Viscosity { nu: 1.0, lambda: 0.1 },
        Viscosity { nu: 1e-3, lambda: 1e-4 },
    ];

    fn random(r: usize, c: usize, seed: u64) -> Mat {
        let mut s = seed ^ 0x2545f4914f6cdd1d;
        Mat::from_fn(r, c, |_, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        })
    }

    fn dense_a(m: usize, visc: Viscosity) -> nalgebra::DMatrix<f64> {
        let fd = build_fd_matrices(m, 1.0 / m as f64).unwrap();
        let a = ViscousBlocks::new(&fd, visc).unwrap().assemble().to_dense();
        nalgebra::DMatrix::from_fn(a.rows(), a.cols(), |i, j| a[(i, j)])
    }

    #[test]
    fn zero_velocity() {
        let (a, b) = visc_apply(&Mat::zeros(7, 8), &Mat::zeros(8, 7), CASES[1]).unwrap();
        assert_eq!(a.max_abs() + b.max_abs(), 0.0);
    }

    #[test]
    fn stencil_matches_matrix_form() {
        for m in [4usize, 8, 16] {
            let fd = build_fd_matrices(m, 1.0 / m as f64).unwrap();
            let v1 = random(m - 1, m, 1);
            let v2 = random(m, m - 1, 2);
            for visc in CASES {
                let (s1, s2) = visc_apply(&v1, &v2, visc).unwrap();
                let (x1, x2) = visc_apply_matrix(&v1, &v2, visc, &fd).unwrap();
                let scale = s1.max_abs().max(s2.max_abs());
                assert!(s1.max_abs_diff(&x1) < 1e-13 * scale);
                assert!(s2.max_abs_diff(&x2) < 1e-13 * scale);
            }
        }
    }

    #[test]
    fn kronecker_blocks_match_stencil() {
        let m = 8;
        let fd = build_fd_matrices(m, 1.0 / m as f64).unwrap();
        let v1 = random(m - 1, m, 3);
        let v2 = random(m, m - 1, 4);
        let visc = CASES[1];
        let a = ViscousBlocks::new(&fd, visc).unwrap().assemble();
        let mut x = v1.as_slice().to_vec();
        x.extend_from_slice(v2.as_slice());
        let mut y = vec![0.0; x.len()];
        a.spmv(&x, &mut y);
        let (s1, s2) = visc_apply(&v1, &v2, visc).unwrap();
        let mut expect: Vec<f64> = s1.as_slice().iter().map(|v| -v).collect();
        expect.extend(s2.as_slice().iter().map(|v| -v));
        let scale = expect.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        assert!(y.iter().zip(&expect).all(|(a, b)| (a - b).abs() < 1e-12 * scale));
    }

    #[test]
    fn tangential_rows_use_the_wall_mirror() {
        // single nonzero v1 entry next to the bottom wall
        let m = 6;
        let mut v1 = Mat::zeros(m - 1, m);
        v1[(2, 0)] = 1.0;
        let visc = Viscosity { nu: 1.0, lambda: 0.0 };
        let (l1, _) = visc_apply(&v1, &Mat::zeros(m, m - 1), visc).unwrap();
        let h2 = 1.0 / (m * m) as f64;
        // (2 nu) (-2) + nu (-3), negated twice
        assert!((l1[(2, 0)] - (-(4.0 + 3.0)) / h2).abs() < 1e-9);
        assert!((l1[(2, 1)] - 1.0 / h2).abs() < 1e-9);
    }

    #[test]
    fn block_operator_is_spd() {
        for m in [4usize, 8, 16] {
            for visc in CASES {
                let a = dense_a(m, visc);
                assert_eq!(a, a.transpose(), "M={m}");
                let min = a.clone().symmetric_eigenvalues().min();
                assert!(min > 0.0, "M={m} {visc:?}: {min}");
            }
        }
    }

    #[test]
    fn splits_into_shear_and_dilatation() {
        let m = 8;
        let fd = build_fd_matrices(m, 1.0 / m as f64).unwrap();
        // nu = 1, lambda = -1 isolates P; nu = 0, lambda = 1 isolates Q
        let p = dense_a(m, Viscosity { nu: 1.0, lambda: -1.0 });
        assert!(p.symmetric_eigenvalues().min() > 0.0);
        let q = Viscosity { nu: 0.0, lambda: 1.0 };
        for seed in 0..5 {
            let u = random(m - 1, m, 10 + seed);
            let v = random(m, m - 1, 20 + seed);
            let (l1, l2) = visc_apply(&u, &v, q).unwrap();
            let form = -(dot(u.as_slice(), l1.as_slice()) + dot(v.as_slice(), l2.as_slice()));
            let div = fd.d.matmul(&u).unwrap().add(&v.matmul(&fd.d.transpose()).unwrap()).unwrap();
            let norm = dot(div.as_slice(), div.as_slice());
            assert!((form - norm).abs() < 1e-10 * norm);
        }
    }

    #[test]
    fn system_operator_examples() {
        let m = 8;
        let rx = random(m - 1, m, 5).map(|v| v + 1.0);
        let ry = random(m, m - 1, 6).map(|v| v + 1.0);
        let op0 = visc_system_operator(&rx, &ry, 0.0, CASES[1]).unwrap();
        let x: Vec<f64> = (0..op0.dim()).map(|i| libm::sin(i as f64)).collect();
        let mut y = vec![0.0; x.len()];
        op0.apply(&x, &mut y);
        let r: Vec<f64> = rx.as_slice().iter().chain(ry.as_slice()).copied().collect();
        assert!(y.iter().zip(&x).zip(&r).all(|((y, x), r)| *y == r * x));

        let ones = Mat::filled(m - 1, m, 1.0);
        let op = visc_system_operator(&ones, &ones.transpose(), 0.01, CASES[1]).unwrap();
        let n = op.dim();
        let mut a = nalgebra::DMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        let mut col = vec![0.0; n];
        for k in 0..n {
            e[k] = 1.0;
            op.apply(&e, &mut col);
            e[k] = 0.0;
            a.set_column(k, &nalgebra::DVector::from_column_slice(&col));
        }
        assert!(a.clone().cholesky().is_some());
        let d = op.diagonal().unwrap();
        assert!((0..n).all(|i| (d[i] - a[(i, i)]).abs() < 1e-10 * a[(i, i)]));
        let fd = build_fd_matrices(m, 1.0 / m as f64).unwrap();
        let s = op.assemble(&fd).unwrap().to_dense();
        assert!((0..n).all(|i| (0..n).all(|j| (s[(i, j)] - a[(i, j)]).abs() < 1e-10)));

        assert!(visc_system_operator(&ones.scale(-1.0), &ones.transpose(), 0.1, CASES[0]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn symmetric_and_positive(seed in 0u64..10_000, k in 0.0f64..0.1) {
            let m = 6;
            let rx = random(m - 1, m, seed).map(|v| v + 1.0);
            let ry = random(m, m - 1, seed + 1).map(|v| v + 1.0);
            let op = visc_system_operator(&rx, &ry, k, CASES[1]).unwrap();
            let n = op.dim();
            let u: Vec<f64> = random(n, 1, seed + 2).into_vec();
            let w: Vec<f64> = random(n, 1, seed + 3).into_vec();
            let (mut au, mut aw) = (vec![0.0; n], vec![0.0; n]);
            op.apply(&u, &mut au);
            op.apply(&w, &mut aw);
            let (l, r) = (dot(&w, &au), dot(&u, &aw));
            prop_assert!((l - r).abs() < 1e-12 * (1.0 + l.abs()) * (m * m) as f64);
            prop_assert!(dot(&u, &au) > 0.0);
        }
    }
}
