//! Convex-split Cahn-Hilliard terms and the linear operator of the order-parameter stage.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::Result;
use crate::fdops::{laplacian2d_into, neumann_laplacian};
use crate::grid::check_positive;
use crate::linsolve::LinearOperator;
use crate::mat::Mat;
use crate::params::{psi1_prime, psi2_prime, psi2_second, psi_prime};
use crate::sparse::Csr;

/// Splitting `psi' = psi1' + psi2'` into a convex (implicit) and concave (explicit) part.
#[derive(Clone, Copy, Debug)]
pub struct PotentialSplit {
    pub psi1_prime: fn(f64) -> f64,
    pub psi2_prime: fn(f64) -> f64,
    pub psi2_second: fn(f64) -> f64,
}

impl Default for PotentialSplit {
    fn default() -> Self {
        Self { psi1_prime, psi2_prime, psi2_second }
    }
}

/// `div(psi2''(c) grad c)` with face coefficients `(psi2''(c_L) + psi2''(c_R)) / 2` and no
/// flux through the walls.
pub fn m2_apply(c: &Mat) -> Result<Mat> {
    let m = c.rows();
    c.ensure_shape((m, m), "m2_apply")?;
    let h = 1.0 / m as f64;
    let s = 1.0 / (2.0 * h * h);
    let k = c.map(psi2_second);
    let mut out = Mat::zeros(m, m);
    for j in 0..m {
        for i in 0..m {
            let mut acc = 0.0;
            if i + 1 < m {
                acc += (k[(i + 1, j)] + k[(i, j)]) * (c[(i + 1, j)] - c[(i, j)]);
            }
            if i > 0 {
                acc -= (k[(i, j)] + k[(i - 1, j)]) * (c[(i, j)] - c[(i - 1, j)]);
            }
            if j + 1 < m {
                acc += (k[(i, j + 1)] + k[(i, j)]) * (c[(i, j + 1)] - c[(i, j)]);
            }
            if j > 0 {
                acc -= (k[(i, j)] + k[(i, j - 1)]) * (c[(i, j)] - c[(i, j - 1)]);
            }
            out[(i, j)] = s * acc;
        }
    }
    Ok(out)
}

fn lap(f: &Mat) -> Mat {
    let m = f.rows();
    let mut out = Mat::zeros(m, m);
    laplacian2d_into(f.as_slice(), out.as_mut_slice(), m, 1.0 / m as f64);
    out
}

/// `2 Delta_h c + M2(c_tilde) - eps Delta_h (Delta_h c / rho)`.
pub fn ch_rhs(rho: &Mat, c: &Mat, c_tilde: &Mat, eps: f64) -> Result<Mat> {
    let m = rho.rows();
    rho.ensure_shape((m, m), "ch_rhs rho")?;
    c.ensure_shape((m, m), "ch_rhs c")?;
    check_positive(rho, "ch_rhs")?;
    let lc = lap(c);
    let quot = lc.zip_map(rho, "ch_rhs", |l, r| l / r)?;
    let bih = lap(&quot);
    let mut out = m2_apply(c_tilde)?;
    for ((o, l), b) in out.as_mut_slice().iter_mut().zip(lc.as_slice()).zip(bih.as_slice()) {
        *o += 2.0 * l - eps * b;
    }
    Ok(out)
}

/// Discrete chemical potential `psi'(c) - eps Delta_h c / rho`, for output.
pub fn chemical_potential(rho: &Mat, c: &Mat, eps: f64) -> Result<Mat> {
    check_positive(rho, "chemical potential")?;
    let lc = lap(c);
    let mut mu = c.map(psi_prime);
    for ((mu, l), r) in mu.as_mut_slice().iter_mut().zip(lc.as_slice()).zip(rho.as_slice()) {
        *mu -= eps * l / r;
    }
    Ok(mu)
}

/// `C -> D(rho) C - 2k Delta_h C + k eps Delta_h D(rho)^{-1} Delta_h C`.
#[derive(Clone, Debug)]
pub struct ChSystem {
    m: usize,
    rho: Vec<f64>,
    inv_rho: Vec<f64>,
    coeff: f64,
    eps: f64,
}

pub fn ch_system_operator(rho: &Mat, coeff: f64, eps: f64) -> Result<ChSystem> {
    let m = rho.rows();
    rho.ensure_shape((m, m), "ch_system_operator")?;
    check_positive(rho, "ch_system_operator")?;
    if !(coeff >= 0.0) {
        return Err(crate::Error::config("CH stage coefficient must be non-negative"));
    }
    Ok(ChSystem {
        m,
        rho: rho.as_slice().to_vec(),
        inv_rho: rho.as_slice().iter().map(|r| 1.0 / r).collect(),
        coeff,
        eps,
    })
}

impl ChSystem {
    pub fn m(&self) -> usize {
        self.m
    }

    /// Assembled sparse form of the same operator.
    pub fn assemble(&self) -> Result<Csr> {
        let m = self.m;
        let l1 = Csr::from_dense(&neumann_laplacian(m, 1.0 / m as f64));
        let i = Csr::identity(m);
        let lap = i.kron(&l1).add(&l1.kron(&i))?;
        let bih = lap.matmul(&Csr::diag(&self.inv_rho))?.matmul(&lap)?;
        Csr::diag(&self.rho)
            .add(&lap.scale(-2.0 * self.coeff))?
            .add(&bih.scale(self.coeff * self.eps))
    }
}

impl LinearOperator for ChSystem {
    fn dim(&self) -> usize {
        self.m * self.m
    }

    fn apply(&self, x: &[f64], y: &mut [f64]) {
        let (m, h) = (self.m, 1.0 / self.m as f64);
        let mut lx = vec![0.0; m * m];
        laplacian2d_into(x, &mut lx, m, h);
        let q: Vec<f64> = lx.iter().zip(&self.inv_rho).map(|(l, r)| l * r).collect();
        laplacian2d_into(&q, y, m, h);
        let (k, ke) = (self.coeff, self.coeff * self.eps);
        for n in 0..m * m {
            y[n] = self.rho[n] * x[n] - 2.0 * k * lx[n] + ke * y[n];
        }
    }

    fn diagonal(&self) -> Option<Vec<f64>> {
        let m = self.m;
        let s = (m * m) as f64;
        let neighbors = |i: usize, j: usize| {
            [i > 0, i + 1 < m, j > 0, j + 1 < m].iter().filter(|&&b| b).count() as f64
        };
        let mut d = vec![0.0; m * m];
        for j in 0..m {
            for i in 0..m {
                let n = i + m * j;
                let own = neighbors(i, j) * s;
                // column n of Delta_h: -own at n, +s at each neighbor
                let mut bih = own * own * self.inv_rho[n];
                for (di, dj) in [(-1isize, 0isize), (1, 0), (0, -1), (0, 1)] {
                    let (a, b) = (i as isize + di, j as isize + dj);
                    if a >= 0 && b >= 0 && a < m as isize && b < m as isize {
                        bih += s * s * self.inv_rho[a as usize + m * b as usize];
                    }
                }
                d[n] = self.rho[n] + 2.0 * self.coeff * own + self.coeff * self.eps * bih;
            }
        }
        Some(d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat::dot;
    use proptest::prelude::*;

    fn random(m: usize, seed: u64, lo: f64, hi: f64) -> Mat {
        let mut s = seed.wrapping_mul(2862933555777941757).wrapping_add(3037000493);
        Mat::from_fn(m, m, |_, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            lo + (hi - lo) * ((s >> 11) as f64 / (1u64 << 53) as f64)
        })
    }

    fn dense(op: &dyn LinearOperator) -> nalgebra::DMatrix<f64> {
        let n = op.dim();
        let mut a = nalgebra::DMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        let mut col = vec![0.0; n];
        for k in 0..n {
            e[k] = 1.0;
            op.apply(&e, &mut col);
            e[k] = 0.0;
            for i in 0..n {
                a[(i, k)] = col[i];
            }
        }
        a
    }

    #[test]
    fn split_is_consistent() {
        let p = PotentialSplit::default();
        for c in [-1.3, -0.2, 0.0, 0.7, 2.0] {
            assert!(((p.psi1_prime)(c) + (p.psi2_prime)(c) - psi_prime(c)).abs() < 1e-14);
            assert!(((p.psi2_second)(c) - (3.0 * c * c - 3.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn m2_trivial_inputs() {
        assert_eq!(m2_apply(&Mat::filled(6, 6, 0.4)).unwrap().max_abs(), 0.0);
        assert_eq!(m2_apply(&Mat::zeros(6, 6)).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn m2_matches_dense_tridiagonal_assembly() {
        let m = 8;
        let h = 1.0 / m as f64;
        let c = random(m, 4, -1.0, 1.0);
        // assemble the variable-coefficient Laplacian as an (M^2 x M^2) matrix
        let mut a = nalgebra::DMatrix::<f64>::zeros(m * m, m * m);
        let idx = |i: usize, j: usize| i + m * j;
        for j in 0..m {
            for i in 0..m {
                let mut link = |p: usize, q: usize| {
                    let w = 0.5 * (psi2_second(c[(i, j)]) + psi2_second(c[(p, q)])) / (h * h);
                    a[(idx(i, j), idx(p, q))] += w;
                    a[(idx(i, j), idx(i, j))] -= w;
                };
                if i > 0 {
                    link(i - 1, j);
                }
                if i + 1 < m {
                    link(i + 1, j);
                }
                if j > 0 {
                    link(i, j - 1);
                }
                if j + 1 < m {
                    link(i, j + 1);
                }
            }
        }
        let v = nalgebra::DVector::from_column_slice(c.as_slice());
        let expect = &a * v;
        let got = m2_apply(&c).unwrap();
        for n in 0..m * m {
            assert!((got.as_slice()[n] - expect[n]).abs() < 1e-10 * expect.amax());
        }
    }

    #[test]
    fn rhs_matches_dense_assembly_at_unit_density() {
        let m = 8;
        let eps = 0.05;
        let c = random(m, 9, -1.0, 1.0);
        let rho = Mat::filled(m, m, 1.0);
        let op = ch_system_operator(&rho, 1.0, 0.0).unwrap();
        // rho = 1, coeff = 1, eps = 0: op = I - 2 Delta_h, so Delta_h = (I - op) / 2
        let lap = (nalgebra::DMatrix::identity(m * m, m * m) - dense(&op)) * 0.5;
        let v = nalgebra::DVector::from_column_slice(c.as_slice());
        let m2 = nalgebra::DVector::from_column_slice(m2_apply(&c).unwrap().as_slice());
        let expect = &lap * &v * 2.0 + m2 - (&lap * &lap * &v) * eps;
        let got = ch_rhs(&rho, &c, &c, eps).unwrap();
        for n in 0..m * m {
            assert!((got.as_slice()[n] - expect[n]).abs() < 1e-12 * expect.amax());
        }
    }

    #[test]
    fn rhs_constant_and_positivity() {
        let rho = random(6, 1, 0.5, 2.0);
        let c = Mat::filled(6, 6, 0.3);
        assert!(ch_rhs(&rho, &c, &c, 1e-2).unwrap().max_abs() < 1e-12);
        assert!(ch_rhs(&Mat::zeros(6, 6), &c, &c, 1e-2).is_err());
        assert!(ch_system_operator(&rho.scale(-1.0), 0.1, 1e-2).is_err());
    }

    #[test]
    fn zero_coefficient_is_density_multiplication() {
        let rho = random(5, 2, 0.5, 2.0);
        let op = ch_system_operator(&rho, 0.0, 0.1).unwrap();
        let x = random(5, 3, -1.0, 1.0);
        let mut y = vec![0.0; 25];
        op.apply(x.as_slice(), &mut y);
        for n in 0..25 {
            assert_eq!(y[n], rho.as_slice()[n] * x.as_slice()[n]);
        }
    }

    #[test]
    fn operator_symmetric_with_unit_lower_bound() {
        let m = 8;
        let op = ch_system_operator(&Mat::filled(m, m, 1.0), 0.3, 0.02).unwrap();
        let a = dense(&op);
        assert!((&a - a.transpose()).amax() < 1e-12 * a.amax());
        let min = a.symmetric_eigenvalues().min();
        assert!(min >= 1.0 - 1e-9, "min eigenvalue {min}");
    }

    #[test]
    fn assembled_form_and_diagonal_match() {
        let m = 8;
        let rho = random(m, 5, 0.5, 2.0);
        let op = ch_system_operator(&rho, 0.02, 1e-3).unwrap();
        let a = dense(&op);
        let s = op.assemble().unwrap().to_dense();
        let d = op.diagonal().unwrap();
        for i in 0..m * m {
            assert!((d[i] - a[(i, i)]).abs() < 1e-9 * a.amax());
            for j in 0..m * m {
                assert!((s[(i, j)] - a[(i, j)]).abs() < 1e-9 * a.amax());
            }
        }
    }

    #[test]
    fn chemical_potential_of_flat_field() {
        let mu = chemical_potential(&Mat::filled(4, 4, 2.0), &Mat::filled(4, 4, 0.5), 0.1).unwrap();
        assert!(mu.as_slice().iter().all(|&v| (v - psi_prime(0.5)).abs() < 1e-15));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn rhs_sums_to_zero(seed in 0u64..5000, eps in 1e-4f64..0.1) {
            let m = 8;
            let rho = random(m, seed, 0.5, 2.0);
            let c = random(m, seed + 1, -1.2, 1.2);
            let ct = random(m, seed + 2, -1.2, 1.2);
            let r = ch_rhs(&rho, &c, &ct, eps).unwrap();
            let scale = r.max_abs().max(1.0);
            prop_assert!(r.sum().abs() < 1e-10 * scale * (m * m) as f64);
        }

        #[test]
        fn system_is_spd(seed in 0u64..5000, coeff in 0.0f64..0.1, m in prop::sample::select(vec![4usize, 8])) {
            let rho = random(m, seed, 0.3, 3.0);
            let op = ch_system_operator(&rho, coeff, 1e-2).unwrap();
            let a = dense(&op);
            prop_assert!((&a - a.transpose()).amax() < 1e-12 * a.amax());
            prop_assert!(a.symmetric_eigenvalues().min() > 0.0);
            let f = random(m, seed + 7, -1.0, 1.0);
            let g = random(m, seed + 8, -1.0, 1.0);
            let (mut af, mut ag) = (vec![0.0; m * m], vec![0.0; m * m]);
            op.apply(f.as_slice(), &mut af);
            op.apply(g.as_slice(), &mut ag);
            let (l, r) = (dot(g.as_slice(), &af), dot(f.as_slice(), &ag));
            prop_assert!((l - r).abs() < 1e-12 * l.abs().max(1.0) * a.amax());
        }
    }
}
