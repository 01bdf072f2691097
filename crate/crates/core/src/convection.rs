//! Explicit convective operator: reflected ghost cells, WENO5 reconstruction and Rusanov
//! fluxes on the staggered layout.
//!
//! Mass and `q = rho c` are balanced on primal cells with fluxes on the faces. The x-momentum
//! balance lives on x-faces with fluxes at cell centers (x-direction) and at cell corners
//! (y-direction); the y-momentum mirrors that. Every flux is
//!
//! ```text
//! F_hat = (F+ + F-)/2 - lambda/2 (u+ - u-)
//! ```
//!
//! where `F+-` are WENO5 reconstructions of the pointwise physical flux, `u+-` of the
//! conserved variable, and `lambda` the largest `|v_n| + sqrt(p'(rho))` over the two
//! reconstructed states.

use crate::error::{Error, Result};
use crate::grid::{
    check_positive, reflect_extend, transfer6, transfer6_all_faces, Axis, Direction, Fields, GhostField,
    Location, Parity, State,
};
use crate::mat::Mat;
use crate::params::ModelParams;

const WENO_EPS: f64 = 1e-6;

/// Fifth-order WENO (Jiang-Shu) value at the interface between `w[2]` and `w[3]`, biased
/// towards `w[0..3]`.
#[inline]
pub fn weno5(w: [f64; 5]) -> f64 {
    let [a, b, c, d, e] = w;
    let q0 = (2.0 * a - 7.0 * b + 11.0 * c) / 6.0;
    let q1 = (-b + 5.0 * c + 2.0 * d) / 6.0;
    let q2 = (2.0 * c + 5.0 * d - e) / 6.0;

    let s0 = 13.0 / 12.0 * sq(a - 2.0 * b + c) + 0.25 * sq(a - 4.0 * b + 3.0 * c);
    let s1 = 13.0 / 12.0 * sq(b - 2.0 * c + d) + 0.25 * sq(b - d);
    let s2 = 13.0 / 12.0 * sq(c - 2.0 * d + e) + 0.25 * sq(3.0 * c - 4.0 * d + e);

    let a0 = 0.1 / sq(WENO_EPS + s0);
    let a1 = 0.6 / sq(WENO_EPS + s1);
    let a2 = 0.3 / sq(WENO_EPS + s2);
    (a0 * q0 + a1 * q1 + a2 * q2) / (a0 + a1 + a2)
}

#[inline]
fn sq(x: f64) -> f64 {
    x * x
}

/// Both one-sided reconstructions at one interface.
///
/// `plus` is ordered from the right (`f_{i+3}, ..., f_{i-1}`), `minus` from the left
/// (`f_{i-2}, ..., f_{i+2}`); the interface sits between `f_i` and `f_{i+1}`.
#[inline]
pub fn weno5_pair(plus: [f64; 5], minus: [f64; 5]) -> (f64, f64) {
    (weno5(plus), weno5(minus))
}

/// Reconstructs `v` at the interface right of logical index `left`.
#[inline]
fn recon(v: impl Fn(isize) -> f64, left: isize) -> (f64, f64) {
    let plus = [v(left + 3), v(left + 2), v(left + 1), v(left), v(left - 1)];
    let minus = [v(left - 2), v(left - 1), v(left), v(left + 1), v(left + 2)];
    weno5_pair(plus, minus)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ConvectionOptions {
    /// Use the global maximal characteristic speed for every flux instead of the local one.
    pub global_speed: bool,
}

/// Tendencies of the four conserved blocks.
#[derive(Clone, Debug, PartialEq)]
pub struct Tendency {
    pub rho: Mat,
    pub m1: Mat,
    pub m2: Mat,
    pub q: Mat,
}

impl Tendency {
    pub fn into_state(self) -> State {
        State { rho: self.rho, m1: self.m1, m2: self.m2, q: self.q }
    }
}

/// Face fluxes and the local dissipation speeds behind them; exposed for inspection.
#[derive(Clone, Debug)]
pub struct NumericalFlux {
    /// `(M+1) x M` mass flux on x-faces, walls included.
    pub f_rho: Mat,
    pub f_q: Mat,
    /// `M x M` x-momentum flux at cell centers.
    pub f_m1: Mat,
    /// `(M+1) x (M-1)` y-momentum flux at corners.
    pub f_m2: Mat,
    /// `M x (M+1)` mass flux on y-faces, walls included.
    pub g_rho: Mat,
    pub g_q: Mat,
    /// `(M-1) x (M+1)` x-momentum flux at corners.
    pub g_m1: Mat,
    /// `M x M` y-momentum flux at cell centers.
    pub g_m2: Mat,
    /// Dissipation speeds, same layouts as the fluxes they enter.
    pub lambda_f_rho: Mat,
    pub lambda_f_m1: Mat,
    pub lambda_f_m2: Mat,
    pub lambda_g_rho: Mat,
    pub lambda_g_m1: Mat,
    pub lambda_g_m2: Mat,
}

#[inline]
fn speed(params: &ModelParams, m: f64, rho: f64) -> f64 {
    (m / rho).abs() + params.sound_speed(rho)
}

/// Dissipation speed from the reconstructed `(m, rho)` pairs; where a reconstructed density
/// is not positive, the two point values next to the interface are used instead.
fn dissipation_speed(params: &ModelParams, plus: (f64, f64), minus: (f64, f64), near: [(f64, f64); 2]) -> Result<f64> {
    let pairs = if plus.1 > 0.0 && minus.1 > 0.0 { [plus, minus] } else { near };
    let min = pairs[0].1.min(pairs[1].1);
    if !(min > 0.0) {
        return Err(Error::Positivity { context: "interface density", min });
    }
    Ok(speed(params, pairs[0].0, pairs[0].1).max(speed(params, pairs[1].0, pairs[1].1)))
}

/// Mass and scalar fluxes across faces normal to `axis`, from cell data.
struct ScalarFluxes {
    rho: Mat,
    q: Mat,
    lambda: Mat,
}

fn scalar_fluxes(
    rho: &GhostField,
    q: &GhostField,
    mom: &GhostField,
    params: &ModelParams,
    global: Option<f64>,
) -> Result<ScalarFluxes> {
    let m = rho.cells();
    let n = rho.cross_len();
    let axis = rho.axis();
    let shape = match axis {
        Axis::X => (m + 1, n),
        Axis::Y => (n, m + 1),
    };
    let mut f_rho = Mat::zeros(shape.0, shape.1);
    let mut f_q = Mat::zeros(shape.0, shape.1);
    let mut lam = Mat::zeros(shape.0, shape.1);
    for o in 0..n {
        let r = |k: isize| rho.get(k, o);
        let qq = |k: isize| q.get(k, o);
        let mm = |k: isize| mom.get(k, o);
        let fq = |k: isize| mom.get(k, o) * q.get(k, o) / rho.get(k, o);
        // walls carry no mass: f = 0 and f = M stay zero
        for f in 1..m {
            let left = f as isize - 1;
            let (rp, rm) = recon(r, left);
            let (qp, qm) = recon(qq, left);
            let (mp, mn) = recon(mm, left);
            let (fp, fm) = recon(fq, left);
            let l = match global {
                Some(cs) => cs,
                None => dissipation_speed(params, (mp, rp), (mn, rm), [(mm(left), r(left)), (mm(left + 1), r(left + 1))])?,
            };
            let idx = match axis {
                Axis::X => (f, o),
                Axis::Y => (o, f),
            };
            f_rho[idx] = 0.5 * (mp + mn) - 0.5 * l * (rp - rm);
            f_q[idx] = 0.5 * (fp + fm) - 0.5 * l * (qp - qm);
            lam[idx] = l;
        }
    }
    Ok(ScalarFluxes { rho: f_rho, q: f_q, lambda: lam })
}

/// Normal momentum flux `m^2/rho + p` at cell centers from face data along the same axis.
fn normal_momentum_flux(
    mom: &GhostField,
    rho_faces: &GhostField,
    params: &ModelParams,
    global: Option<f64>,
) -> Result<(Mat, Mat)> {
    let m = mom.cells();
    let n = mom.cross_len();
    let axis = mom.axis();
    let mut out = Mat::zeros(m, m);
    let mut lam = Mat::zeros(m, m);
    for o in 0..n {
        let mm = |k: isize| mom.get(k, o);
        let r = |k: isize| rho_faces.get(k, o);
        let fl = |k: isize| {
            let (mk, rk) = (mom.get(k, o), rho_faces.get(k, o));
            mk * mk / rk + params.pressure(rk)
        };
        for a in 0..m {
            let left = a as isize;
            let (mp, mn) = recon(mm, left);
            let (rp, rm) = recon(r, left);
            let (fp, fm) = recon(fl, left);
            let l = match global {
                Some(cs) => cs,
                None => dissipation_speed(params, (mp, rp), (mn, rm), [(mm(left), r(left)), (mm(left + 1), r(left + 1))])?,
            };
            let idx = match axis {
                Axis::X => (a, o),
                Axis::Y => (o, a),
            };
            out[idx] = 0.5 * (fp + fm) - 0.5 * l * (mp - mn);
            lam[idx] = l;
        }
    }
    Ok((out, lam))
}

/// Transverse momentum flux `m_t m_n / rho` at corners, reconstructed along `mom_t`'s axis
/// from cell-centered (along that axis) point values. `mom_n` is the momentum normal to the
/// corner line, the one whose speed enters `lambda`.
fn transverse_flux(
    mom_t: &GhostField,
    mom_n: &GhostField,
    rho: &GhostField,
    params: &ModelParams,
    global: Option<f64>,
) -> Result<(Mat, Mat)> {
    let m = mom_t.cells();
    let n = mom_t.cross_len();
    let axis = mom_t.axis();
    let shape = match axis {
        Axis::X => (m + 1, n),
        Axis::Y => (n, m + 1),
    };
    let mut out = Mat::zeros(shape.0, shape.1);
    let mut lam = Mat::zeros(shape.0, shape.1);
    for o in 0..n {
        let mt = |k: isize| mom_t.get(k, o);
        let mn_ = |k: isize| mom_n.get(k, o);
        let r = |k: isize| rho.get(k, o);
        let fl = |k: isize| mom_t.get(k, o) * mom_n.get(k, o) / rho.get(k, o);
        for f in 0..=m {
            let left = f as isize - 1;
            let (tp, tm) = recon(mt, left);
            let (np, nm) = recon(mn_, left);
            let (rp, rm) = recon(r, left);
            let (fp, fm) = recon(fl, left);
            let l = match global {
                Some(cs) => cs,
                None => dissipation_speed(params, (np, rp), (nm, rm), [(mn_(left), r(left)), (mn_(left + 1), r(left + 1))])?,
            };
            let idx = match axis {
                Axis::X => (f, o),
                Axis::Y => (o, f),
            };
            out[idx] = 0.5 * (fp + fm) - 0.5 * l * (tp - tm);
            lam[idx] = l;
        }
    }
    Ok((out, lam))
}

/// Computes every numerical flux of the convective operator.
pub fn numerical_fluxes(u: &State, params: &ModelParams, opts: ConvectionOptions) -> Result<NumericalFlux> {
    let m = u.rho.rows();
    u.rho.ensure_shape((m, m), "convection rho")?;
    u.m1.ensure_shape((m - 1, m), "convection m1")?;
    u.m2.ensure_shape((m, m - 1), "convection m2")?;
    u.q.ensure_shape((m, m), "convection q")?;
    check_positive(&u.rho, "convection")?;

    let global = if opts.global_speed {
        Some(max_char_speed(&u.to_fields()?, params)?)
    } else {
        None
    };

    use Location::{Cell, Face};
    use Parity::{Antisymmetric as Anti, Symmetric as Sym};

    // ---- x direction
    let rho_gx = reflect_extend(&u.rho, Sym, Axis::X, Cell)?;
    let q_gx = reflect_extend(&u.q, Sym, Axis::X, Cell)?;
    let m1_gx = reflect_extend(&u.m1, Anti, Axis::X, Face)?;
    let m1_cells = transfer6(&m1_gx, Direction::DualToPrimal)?;
    let m1_cells_gx = reflect_extend(&m1_cells, Anti, Axis::X, Cell)?;
    let sx = scalar_fluxes(&rho_gx, &q_gx, &m1_cells_gx, params, global)?;

    let rho_xfaces = GhostField::from_full_faces(&transfer6_all_faces(&rho_gx)?, Axis::X, Sym);
    let (f_m1, lambda_f_m1) = normal_momentum_flux(&m1_gx, &rho_xfaces, params, global)?;

    // y-momentum flux through vertical corner lines: data at y-face points, walked along x
    let m2_gx = reflect_extend(&u.m2, Anti, Axis::X, Cell)?;
    let m1_corners = Mat::from_fn(m - 1, m - 1, |f, g| 0.5 * (u.m1[(f, g)] + u.m1[(f, g + 1)]));
    let m1_at_yfaces = transfer6(&reflect_extend(&m1_corners, Anti, Axis::X, Face)?, Direction::DualToPrimal)?;
    let m1_yf_gx = reflect_extend(&m1_at_yfaces, Anti, Axis::X, Cell)?;
    let rho_gy = reflect_extend(&u.rho, Sym, Axis::Y, Cell)?;
    let rho_yfaces_int = transfer6(&rho_gy, Direction::PrimalToDual)?;
    let rho_yf_gx = reflect_extend(&rho_yfaces_int, Sym, Axis::X, Cell)?;
    let (f_m2, lambda_f_m2) = transverse_flux(&m2_gx, &m1_yf_gx, &rho_yf_gx, params, global)?;

    // ---- y direction
    let q_gy = reflect_extend(&u.q, Sym, Axis::Y, Cell)?;
    let m2_gy = reflect_extend(&u.m2, Anti, Axis::Y, Face)?;
    let m2_cells = transfer6(&m2_gy, Direction::DualToPrimal)?;
    let m2_cells_gy = reflect_extend(&m2_cells, Anti, Axis::Y, Cell)?;
    let sy = scalar_fluxes(&rho_gy, &q_gy, &m2_cells_gy, params, global)?;

    let rho_yfaces = GhostField::from_full_faces(&transfer6_all_faces(&rho_gy)?, Axis::Y, Sym);
    let (g_m2, lambda_g_m2) = normal_momentum_flux(&m2_gy, &rho_yfaces, params, global)?;

    let m1_gy = reflect_extend(&u.m1, Anti, Axis::Y, Cell)?;
    let m2_corners = Mat::from_fn(m - 1, m - 1, |f, g| 0.5 * (u.m2[(f, g)] + u.m2[(f + 1, g)]));
    let m2_at_xfaces = transfer6(&reflect_extend(&m2_corners, Anti, Axis::Y, Face)?, Direction::DualToPrimal)?;
    let m2_xf_gy = reflect_extend(&m2_at_xfaces, Anti, Axis::Y, Cell)?;
    let rho_xfaces_int = transfer6(&rho_gx, Direction::PrimalToDual)?;
    let rho_xf_gy = reflect_extend(&rho_xfaces_int, Sym, Axis::Y, Cell)?;
    let (g_m1, lambda_g_m1) = transverse_flux(&m1_gy, &m2_xf_gy, &rho_xf_gy, params, global)?;

    Ok(NumericalFlux {
        f_rho: sx.rho,
        f_q: sx.q,
        f_m1,
        f_m2,
        g_rho: sy.rho,
        g_q: sy.q,
        g_m1,
        g_m2,
        lambda_f_rho: sx.lambda,
        lambda_f_m1,
        lambda_f_m2,
        lambda_g_rho: sy.lambda,
        lambda_g_m1,
        lambda_g_m2,
    })
}

/// Assembles `-(flux differences)/h` for the four conserved blocks.
pub fn flux_divergence(fl: &NumericalFlux, h: f64) -> Tendency {
    let m = fl.f_m1.rows();
    let s = 1.0 / h;
    let rho = Mat::from_fn(m, m, |a, b| {
        -s * (fl.f_rho[(a + 1, b)] - fl.f_rho[(a, b)]) - s * (fl.g_rho[(a, b + 1)] - fl.g_rho[(a, b)])
    });
    let q = Mat::from_fn(m, m, |a, b| {
        -s * (fl.f_q[(a + 1, b)] - fl.f_q[(a, b)]) - s * (fl.g_q[(a, b + 1)] - fl.g_q[(a, b)])
    });
    // stored x-face f sits between cells f and f+1, below corner f and above corner f-1 ... in y
    let m1 = Mat::from_fn(m - 1, m, |f, b| {
        -s * (fl.f_m1[(f + 1, b)] - fl.f_m1[(f, b)]) - s * (fl.g_m1[(f, b + 1)] - fl.g_m1[(f, b)])
    });
    let m2 = Mat::from_fn(m, m - 1, |a, g| {
        -s * (fl.f_m2[(a + 1, g)] - fl.f_m2[(a, g)]) - s * (fl.g_m2[(a, g + 1)] - fl.g_m2[(a, g)])
    });
    Tendency { rho, m1, m2, q }
}

/// The convective operator `C(U)`.
pub fn conv_apply(u: &State, params: &ModelParams) -> Result<Tendency> {
    conv_apply_with(u, params, ConvectionOptions::default())
}

pub fn conv_apply_with(u: &State, params: &ModelParams, opts: ConvectionOptions) -> Result<Tendency> {
    let h = 1.0 / u.rho.rows() as f64;
    let fl = numerical_fluxes(u, params, opts)?;
    let t = flux_divergence(&fl, h);
    if !(t.rho.is_finite() && t.m1.is_finite() && t.m2.is_finite() && t.q.is_finite()) {
        return Err(Error::NonFinite("convective fluxes"));
    }
    Ok(t)
}

/// Largest `|v_k| + sqrt(p'(rho))` over the grid; face velocities are paired with the
/// two-point face density.
pub fn max_char_speed(u: &Fields, params: &ModelParams) -> Result<f64> {
    check_positive(&u.rho, "characteristic speed")?;
    let m = u.rho.rows();
    let mut cs = u.rho.as_slice().iter().fold(0.0f64, |acc, &r| acc.max(params.sound_speed(r)));
    for j in 0..m {
        for f in 0..m - 1 {
            let r = 0.5 * (u.rho[(f, j)] + u.rho[(f + 1, j)]);
            cs = cs.max(u.v1[(f, j)].abs() + params.sound_speed(r));
            let r = 0.5 * (u.rho[(j, f)] + u.rho[(j, f + 1)]);
            cs = cs.max(u.v2[(j, f)].abs() + params.sound_speed(r));
        }
    }
    Ok(cs)
}


#[cfg(test)]
#[path = "convection_oracle.rs"]
mod oracle;
