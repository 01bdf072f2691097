//! Explicit source terms of the momentum equations: gravity and the capillary stress.

use crate::error::Result;
use crate::fdops::FdMatrices;
use crate::grid::{to_staggered, Axis};
use crate::mat::Mat;

/// Tendencies of the capillary stress on the two momentum blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct CapillaryBlocks {
    /// `(M-1) x M`, x-momentum.
    pub l2_2: Mat,
    /// `M x (M-1)`, y-momentum.
    pub l2_3: Mat,
}

/// `g` times the density averaged to the y-faces.
pub fn gravity_apply(rho: &Mat, g: f64) -> Result<Mat> {
    Ok(to_staggered(rho, Axis::Y)?.scale(g))
}

/// Central differences with one-sided end rows, the action of `D^c` along each axis.
fn central_gradients(c: &Mat, h: f64) -> (Mat, Mat) {
    let m = c.rows();
    let s = 0.5 / h;
    let clamp = |k: isize| k.clamp(0, m as isize - 1) as usize;
    let cx = Mat::from_fn(m, m, |i, j| s * (c[(clamp(i as isize + 1), j)] - c[(clamp(i as isize - 1), j)]));
    let cy = Mat::from_fn(m, m, |i, j| s * (c[(i, clamp(j as isize + 1))] - c[(i, clamp(j as isize - 1))]));
    (cx, cy)
}

/// `c_x c_y` at interior corners `(f, g)`, between cells `f, f+1` and `g, g+1`.
fn corner_products(c: &Mat, h: f64) -> Mat {
    let m = c.rows();
    let s = 0.5 / h;
    Mat::from_fn(m - 1, m - 1, |f, g| {
        let (a, b, d, e) = (c[(f, g)], c[(f + 1, g)], c[(f, g + 1)], c[(f + 1, g + 1)]);
        let cx = s * (b + e - a - d);
        let cy = s * (d + e - a - b);
        cx * cy
    })
}

/// `eps [ (c_y^2 - c_x^2)_x / 2 - (c_x c_y)_y ]` on x-faces and
/// `eps [ (c_x^2 - c_y^2)_y / 2 - (c_x c_y)_x ]` on y-faces.
///
/// Corner products vanish on the walls, so the mixed terms use one-sided differences in the
/// first and last rows.
pub fn capillary_apply(c: &Mat, eps: f64) -> Result<CapillaryBlocks> {
    let m = c.rows();
    c.ensure_shape((m, m), "capillary c")?;
    let h = 1.0 / m as f64;
    let (cx, cy) = central_gradients(c, h);
    let p = corner_products(c, h);
    let pc = |f: isize, g: isize| {
        if f < 0 || g < 0 || f >= m as isize - 1 || g >= m as isize - 1 {
            0.0
        } else {
            p[(f as usize, g as usize)]
        }
    };
    let diff2 = |i: usize, j: usize| cy[(i, j)] * cy[(i, j)] - cx[(i, j)] * cx[(i, j)];
    let l2_2 = Mat::from_fn(m - 1, m, |f, b| {
        let pure = 0.5 * (diff2(f + 1, b) - diff2(f, b)) / h;
        let mixed = (pc(f as isize, b as isize) - pc(f as isize, b as isize - 1)) / h;
        eps * (pure - mixed)
    });
    let l2_3 = Mat::from_fn(m, m - 1, |a, g| {
        let pure = -0.5 * (diff2(a, g + 1) - diff2(a, g)) / h;
        let mixed = (pc(a as isize, g as isize) - pc(a as isize - 1, g as isize)) / h;
        eps * (pure - mixed)
    });
    Ok(CapillaryBlocks { l2_2, l2_3 })
}

/// The same operator written with the finite-difference matrices:
///
/// ```text
/// L2_2 = -eps/2 D^T ((c Dc^T)^2 - (Dc c)^2) - eps ((D^T c A^T) * (A c D)) D^T
/// L2_3 = -eps/2 ((Dc c)^2 - (c Dc^T)^2) D   - eps D ((D^T c A^T) * (A c D))
/// ```
pub fn capillary_apply_matrix(c: &Mat, eps: f64, fd: &FdMatrices) -> Result<CapillaryBlocks> {
    let cx = fd.dc.matmul(c)?;
    let cy = c.matmul(&fd.dc.transpose())?;
    let sq = |a: &Mat| a.hadamard(a);
    let cy2_minus_cx2 = sq(&cy)?.sub(&sq(&cx)?)?;
    let dt = fd.d.transpose();
    let corners = dt.matmul(c)?.matmul(&fd.a.transpose())?.hadamard(&fd.a.matmul(c)?.matmul(&fd.d)?)?;

    let l2_2 = dt
        .matmul(&cy2_minus_cx2)?
        .scale(-0.5 * eps)
        .sub(&corners.matmul(&dt)?.scale(eps))?;
    let l2_3 = cy2_minus_cx2
        .scale(-1.0)
        .matmul(&fd.d)?
        .scale(-0.5 * eps)
        .sub(&fd.d.matmul(&corners)?.scale(eps))?;
    Ok(CapillaryBlocks { l2_2, l2_3 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fdops::build_fd_matrices;
    use crate::grid::MacGrid;
    use core::f64::consts::PI;
    use proptest::prelude::*;

    fn random(m: usize, seed: u64) -> Mat {
        let mut s = seed.wrapping_add(0x9e3779b97f4a7c15);
        Mat::from_fn(m, m, |_, _| {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        })
    }

    #[test]
    fn gravity_examples() {
        let grid = MacGrid::new(6).unwrap();
        assert!(gravity_apply(&Mat::filled(6, 6, 1.0), -10.0).unwrap().as_slice().iter().all(|&v| v == -10.0));
        assert_eq!(gravity_apply(&random(6, 1), 0.0).unwrap().max_abs(), 0.0);
        let rho = Mat::from_fn(6, 6, |_, j| j as f64);
        let gy = gravity_apply(&rho, 1.0).unwrap();
        assert_eq!(gy.shape(), grid.yface_shape());
        assert_eq!(gy[(3, 2)], 2.5);
    }

    #[test]
    fn constant_field_has_no_capillary_force() {
        let b = capillary_apply(&Mat::filled(8, 8, 0.7), 1.0).unwrap();
        assert_eq!(b.l2_2.max_abs(), 0.0);
        assert_eq!(b.l2_3.max_abs(), 0.0);
    }

    #[test]
    fn linear_profile_interior_is_zero() {
        let m = 10;
        let grid = MacGrid::new(m).unwrap();
        let c = grid.sample_primal(|x, _| 0.8 * x);
        let b = capillary_apply(&c, 1.0).unwrap();
        // faces next to the walls see the one-sided end differences
        for f in 1..m - 2 {
            for j in 0..m {
                assert!(b.l2_2[(f, j)].abs() < 1e-12);
            }
        }
        assert!(b.l2_3.max_abs() < 1e-12);
    }

    #[test]
    fn matrix_and_stencil_forms_agree() {
        for m in [4usize, 8, 16] {
            let fd = build_fd_matrices(m, 1.0 / m as f64).unwrap();
            let c = random(m, m as u64);
            let s = capillary_apply(&c, 0.3).unwrap();
            let x = capillary_apply_matrix(&c, 0.3, &fd).unwrap();
            let scale = s.l2_2.max_abs().max(s.l2_3.max_abs());
            assert!(s.l2_2.max_abs_diff(&x.l2_2) < 1e-13 * scale, "M={m}");
            assert!(s.l2_3.max_abs_diff(&x.l2_3) < 1e-13 * scale, "M={m}");
        }
    }

    #[test]
    fn interior_consistency() {
        // c = cos(pi x) cos(pi y): exact tendencies from the analytic derivatives
        let err = |m: usize| {
            let grid = MacGrid::new(m).unwrap();
            let c = grid.sample_primal(|x, y| libm::cos(PI * x) * libm::cos(PI * y));
            let b = capillary_apply(&c, 1.0).unwrap();
            let (s, co) = (|t: f64| libm::sin(PI * t), |t: f64| libm::cos(PI * t));
            // eps [(c_y^2 - c_x^2)_x / 2 - (c_x c_y)_y]
            let exact = |x: f64, y: f64| {
                let cycy_x = PI * PI * PI * 2.0 * co(x) * (-s(x)) * s(y) * s(y);
                let cxcx_x = PI * PI * PI * 2.0 * s(x) * co(x) * co(y) * co(y);
                let cxcy_y = PI * PI * PI * s(x) * co(x) * (co(y) * co(y) - s(y) * s(y));
                0.5 * (cycy_x - cxcx_x) - cxcy_y
            };
            let mut e = 0.0f64;
            for f in 2..m - 3 {
                for j in 2..m - 2 {
                    let (x, y) = grid.xface_point(f, j);
                    e = e.max((b.l2_2[(f, j)] - exact(x, y)).abs());
                }
            }
            e
        };
        let r = err(32) / err(64);
        assert!(r > 3.5 && r < 4.5, "ratio {r}");
    }

    #[test]
    fn transposed_field_swaps_blocks() {
        let c = random(8, 3);
        let a = capillary_apply(&c, 1.0).unwrap();
        let b = capillary_apply(&c.transpose(), 1.0).unwrap();
        assert!(a.l2_2.max_abs_diff(&b.l2_3.transpose()) < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn even_in_c_and_linear_in_eps(seed in 0u64..10_000, eps in 1e-4f64..1.0) {
            let c = random(8, seed);
            let a = capillary_apply(&c, eps).unwrap();
            let neg = capillary_apply(&c.scale(-1.0), eps).unwrap();
            prop_assert_eq!(&a, &neg);
            let twice = capillary_apply(&c, 2.0 * eps).unwrap();
            prop_assert!(twice.l2_2.max_abs_diff(&a.l2_2.scale(2.0)) <= 1e-12 * a.l2_2.max_abs().max(1.0));
            prop_assert!(twice.l2_3.max_abs_diff(&a.l2_3.scale(2.0)) <= 1e-12 * a.l2_3.max_abs().max(1.0));
        }
    }
}
