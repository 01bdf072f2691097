//! Straightforward re-derivation of the convective operator for cross-checking; shares no
//! code with the production path.

use std::vec;
use std::vec::Vec;

use crate::grid::{MacGrid, State};
use crate::mat::Mat;
use crate::params::ModelParams;

fn wj(w: [f64; 5]) -> f64 {
    let q = [
        (2.0 * w[0] - 7.0 * w[1] + 11.0 * w[2]) / 6.0,
        (-w[1] + 5.0 * w[2] + 2.0 * w[3]) / 6.0,
        (2.0 * w[2] + 5.0 * w[3] - w[4]) / 6.0,
    ];
    let b = [
        13.0 / 12.0 * (w[0] - 2.0 * w[1] + w[2]).powi(2) + 0.25 * (w[0] - 4.0 * w[1] + 3.0 * w[2]).powi(2),
        13.0 / 12.0 * (w[1] - 2.0 * w[2] + w[3]).powi(2) + 0.25 * (w[1] - w[3]).powi(2),
        13.0 / 12.0 * (w[2] - 2.0 * w[3] + w[4]).powi(2) + 0.25 * (3.0 * w[2] - 4.0 * w[3] + w[4]).powi(2),
    ];
    let d = [0.1, 0.6, 0.3];
    let a: [f64; 3] = core::array::from_fn(|k| d[k] / (1e-6 + b[k]).powi(2));
    (a[0] * q[0] + a[1] * q[1] + a[2] * q[2]) / (a[0] + a[1] + a[2])
}

/// Values right and left of the interface after index `l` of a ghosted line `v(k)`.
fn lr(v: &dyn Fn(isize) -> f64, l: isize) -> (f64, f64) {
    (
        wj([v(l + 3), v(l + 2), v(l + 1), v(l), v(l - 1)]),
        wj([v(l - 2), v(l - 1), v(l), v(l + 1), v(l + 2)]),
    )
}

/// Mirror of a cell line of length `m` across both walls.
fn cell_line(data: Vec<f64>, odd: bool) -> impl Fn(isize) -> f64 {
    let m = data.len() as isize;
    move |k| {
        let s = if odd { -1.0 } else { 1.0 };
        if k < 0 {
            s * data[(-1 - k) as usize]
        } else if k >= m {
            s * data[(2 * m - 1 - k) as usize]
        } else {
            data[k as usize]
        }
    }
}

/// Mirror of a face line holding faces `0..=m` across the wall faces.
fn face_line(data: Vec<f64>, odd: bool) -> impl Fn(isize) -> f64 {
    let m = data.len() as isize - 1;
    move |k| {
        let s = if odd { -1.0 } else { 1.0 };
        if k < 0 {
            s * data[(-k) as usize]
        } else if k > m {
            s * data[(2 * m - k) as usize]
        } else {
            data[k as usize]
        }
    }
}

fn six(v: &dyn Fn(isize) -> f64, base: isize) -> f64 {
    let w = [3.0, -25.0, 150.0, 150.0, -25.0, 3.0];
    (0..6).map(|k| w[k] * v(base + k as isize)).sum::<f64>() / 256.0
}

fn lam(p: &ModelParams, a: (f64, f64), b: (f64, f64)) -> f64 {
    let s = |(m, r): (f64, f64)| (m / r).abs() + (p.cp * p.gamma * r.powf(p.gamma - 1.0)).sqrt();
    s(a).max(s(b))
}

/// Rusanov combination from reconstructed flux and state pairs.
fn rus(fl: (f64, f64), u: (f64, f64), l: f64) -> f64 {
    0.5 * (fl.0 + fl.1) - 0.5 * l * (u.0 - u.1)
}

/// Tendency contributions of the x-direction fluxes only.
fn x_part(u: &State, p: &ModelParams) -> State {
    let m = u.rho.rows();
    let h = 1.0 / m as f64;
    let mut out = State {
        rho: Mat::zeros(m, m),
        m1: Mat::zeros(m - 1, m),
        m2: Mat::zeros(m, m - 1),
        q: Mat::zeros(m, m),
    };
    // m1 with wall faces, column b, faces 0..=m
    let m1_full = |b: usize| (0..=m).map(|f| if f == 0 || f == m { 0.0 } else { u.m1[(f - 1, b)] }).collect::<Vec<_>>();

    for b in 0..m {
        let rho = cell_line((0..m).map(|i| u.rho[(i, b)]).collect(), false);
        let q = cell_line((0..m).map(|i| u.q[(i, b)]).collect(), false);
        let m1f = face_line(m1_full(b), true);
        let m1c = cell_line((0..m).map(|a| six(&m1f, a as isize - 2)).collect(), true);

        let mut frho = vec![0.0; m + 1];
        let mut fq = vec![0.0; m + 1];
        for f in 1..m {
            let l = f as isize - 1;
            let r = lr(&rho, l);
            let mm = lr(&m1c, l);
            let qq = lr(&q, l);
            let fl = lr(&|k| m1c(k) * q(k) / rho(k), l);
            let s = lam(p, (mm.0, r.0), (mm.1, r.1));
            frho[f] = rus(mm, r, s);
            fq[f] = rus(fl, qq, s);
        }
        for a in 0..m {
            out.rho[(a, b)] = -(frho[a + 1] - frho[a]) / h;
            out.q[(a, b)] = -(fq[a + 1] - fq[a]) / h;
        }

        let rho_faces = face_line((0..=m).map(|f| six(&rho, f as isize - 3)).collect(), false);
        let mut fm1 = vec![0.0; m];
        for (a, slot) in fm1.iter_mut().enumerate() {
            let l = a as isize;
            let mm = lr(&m1f, l);
            let r = lr(&rho_faces, l);
            let fl = lr(&|k| m1f(k) * m1f(k) / rho_faces(k) + p.cp * rho_faces(k).powf(p.gamma), l);
            *slot = rus(fl, mm, lam(p, (mm.0, r.0), (mm.1, r.1)));
        }
        for f in 0..m - 1 {
            out.m1[(f, b)] = -(fm1[f + 1] - fm1[f]) / h;
        }
    }

    for g in 0..m - 1 {
        // along x on the horizontal line of y-face row g
        let m2 = cell_line((0..m).map(|i| u.m2[(i, g)]).collect(), true);
        let corner = (0..=m)
            .map(|f| if f == 0 || f == m { 0.0 } else { 0.5 * (u.m1[(f - 1, g)] + u.m1[(f - 1, g + 1)]) })
            .collect::<Vec<_>>();
        let corner = face_line(corner, true);
        let m1y = cell_line((0..m).map(|a| six(&corner, a as isize - 2)).collect(), true);
        let rho_y = cell_line(
            (0..m)
                .map(|i| {
                    let col = cell_line((0..m).map(|j| u.rho[(i, j)]).collect(), false);
                    six(&col, g as isize + 1 - 3)
                })
                .collect(),
            false,
        );
        let mut fm2 = vec![0.0; m + 1];
        for (f, slot) in fm2.iter_mut().enumerate() {
            let l = f as isize - 1;
            let t = lr(&m2, l);
            let n = lr(&m1y, l);
            let r = lr(&rho_y, l);
            let fl = lr(&|k| m2(k) * m1y(k) / rho_y(k), l);
            *slot = rus(fl, t, lam(p, (n.0, r.0), (n.1, r.1)));
        }
        for a in 0..m {
            out.m2[(a, g)] = -(fm2[a + 1] - fm2[a]) / h;
        }
    }
    out
}

fn transposed(u: &State) -> State {
    State { rho: u.rho.transpose(), m1: u.m2.transpose(), m2: u.m1.transpose(), q: u.q.transpose() }
}

/// `C(U)` as the x-direction part of `U` plus the transposed x-direction part of `U^T`.
pub fn convection(u: &State, p: &ModelParams) -> State {
    let a = x_part(u, p);
    let b = transposed(&x_part(&transposed(u), p));
    State {
        rho: a.rho.add(&b.rho).unwrap(),
        m1: a.m1.add(&b.m1).unwrap(),
        m2: a.m2.add(&b.m2).unwrap(),
        q: a.q.add(&b.q).unwrap(),
    }
}

/// Smooth random-phase state with positive density and vanishing wall momenta.
pub fn random_smooth_state(grid: &MacGrid, seed: u64) -> State {
    use core::f64::consts::PI;
    let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let mut next = || {
        s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (s >> 11) as f64 / (1u64 << 53) as f64
    };
    let (a, b, c, d, e) = (next(), next(), next(), next(), next());
    let rho = grid.sample_primal(|x, y| 1.0 + 0.3 * libm::cos(PI * (x + a)) * libm::cos(2.0 * PI * (y + b)));
    let v1 = grid.sample_xface(|x, y| (0.5 + c) * libm::sin(PI * x) * libm::cos(PI * (y + d)));
    let v2 = grid.sample_yface(|x, y| (0.5 - e) * libm::sin(2.0 * PI * y) * libm::cos(PI * (x + a)));
    let cc = grid.sample_primal(|x, y| libm::sin(PI * (x + e)) * libm::cos(PI * y * (1.0 + b)));
    crate::grid::Fields { rho, v1, v2, c: cc }.to_state()
}
