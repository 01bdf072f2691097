//! Manufactured solution of the order test and the source terms that make it exact.
//!
//! The sources are evaluated with a truncated Taylor jet in `(x, y, t)`, so every derivative
//! of the residual is exact up to rounding.

use core::f64::consts::PI;
use core::ops::{Add, Mul, Sub};

use crate::error::Result;
use crate::grid::{MacGrid, State};
use crate::mat::Mat;
use crate::params::ModelParams;

/// Highest total derivative order carried by a jet.
pub const ORDER: usize = 4;
const N: usize = (ORDER + 1) * (ORDER + 2) / 2;

const fn exponents() -> [[u8; 2]; N] {
    let mut out = [[0u8; 2]; N];
    let mut n = 0;
    let mut total = 0;
    while total <= ORDER {
        let mut a = total;
        loop {
            out[n] = [a as u8, (total - a) as u8];
            n += 1;
            if a == 0 {
                break;
            }
            a -= 1;
        }
        total += 1;
    }
    out
}

const EXPS: [[u8; 2]; N] = exponents();

const fn index_table() -> [[u8; ORDER + 1]; ORDER + 1] {
    let mut t = [[u8::MAX; ORDER + 1]; ORDER + 1];
    let mut n = 0;
    while n < N {
        let e = EXPS[n];
        t[e[0] as usize][e[1] as usize] = n as u8;
        n += 1;
    }
    t
}

const INDEX: [[u8; ORDER + 1]; ORDER + 1] = index_table();

/// Number of coefficient pairs whose product stays within the truncation degree.
const PAIRS: usize = 70;

const fn product_table() -> [[u8; 3]; PAIRS] {
    let mut out = [[0u8; 3]; PAIRS];
    let mut n = 0;
    let mut i = 0;
    while i < N {
        let mut j = 0;
        while j < N {
            let (a, b) = (EXPS[i], EXPS[j]);
            let e = [a[0] + b[0], a[1] + b[1]];
            if (e[0] + e[1]) as usize <= ORDER {
                out[n] = [i as u8, j as u8, INDEX[e[0] as usize][e[1] as usize]];
                n += 1;
            }
            j += 1;
        }
        i += 1;
    }
    assert!(n == PAIRS);
    out
}

const PRODUCTS: [[u8; 3]; PAIRS] = product_table();

fn index(a: usize, b: usize) -> Option<usize> {
    if a + b > ORDER {
        return None;
    }
    Some(INDEX[a][b] as usize)
}

/// Taylor coefficients `f_{ab} / (a! b!)` of a function of `(x, y)` around a point,
/// truncated at total degree [`ORDER`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    coef: [f64; N],
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Var {
    X,
    Y,
}

impl Jet {
    pub fn constant(v: f64) -> Self {
        let mut coef = [0.0; N];
        coef[0] = v;
        Self { coef }
    }

    /// The coordinate `var` itself, with value `at`.
    pub fn variable(var: Var, at: f64) -> Self {
        let mut j = Self::constant(at);
        let k = match var {
            Var::X => index(1, 0),
            Var::Y => index(0, 1),
        };
        j.coef[k.unwrap()] = 1.0;
        j
    }

    pub fn value(&self) -> f64 {
        self.coef[0]
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = *self;
        out.coef.iter_mut().for_each(|c| *c *= s);
        out
    }

    pub fn offset(&self, s: f64) -> Self {
        let mut out = *self;
        out.coef[0] += s;
        out
    }

    /// Partial derivative; the top degree of the result is lost.
    pub fn d(&self, var: Var) -> Self {
        let mut out = [0.0; N];
        for (n, e) in EXPS.iter().enumerate() {
            let [a, b] = e.map(usize::from);
            let (src, k) = match var {
                Var::X => (index(a + 1, b), a + 1),
                Var::Y => (index(a, b + 1), b + 1),
            };
            if let Some(src) = src {
                out[n] = k as f64 * self.coef[src];
            }
        }
        Self { coef: out }
    }

    pub fn dx(&self) -> Self {
        self.d(Var::X)
    }

    pub fn dy(&self) -> Self {
        self.d(Var::Y)
    }

    pub fn laplacian(&self) -> Self {
        self.dx().dx() + self.dy().dy()
    }

    /// `g(self)` from the derivatives `g^(k)(value)`, `k = 0..=ORDER`.
    pub fn compose(&self, derivs: [f64; ORDER + 1]) -> Self {
        let mut dev = *self;
        dev.coef[0] = 0.0;
        let mut out = Self::constant(derivs[0]);
        let mut power = Self::constant(1.0);
        let mut fact = 1.0;
        for (k, dk) in derivs.iter().enumerate().skip(1) {
            power = power * dev;
            fact *= k as f64;
            out = out + power.scale(dk / fact);
        }
        out
    }

    pub fn sin(&self) -> Self {
        let (s, c) = (libm::sin(self.value()), libm::cos(self.value()));
        self.compose([s, c, -s, -c, s])
    }

    pub fn cos(&self) -> Self {
        let (s, c) = (libm::sin(self.value()), libm::cos(self.value()));
        self.compose([c, -s, -c, s, c])
    }

    pub fn powf(&self, e: f64) -> Self {
        let u = self.value();
        let mut d = [0.0; ORDER + 1];
        let mut fall = 1.0;
        for (k, dk) in d.iter_mut().enumerate() {
            *dk = fall * libm::pow(u, e - k as f64);
            fall *= e - k as f64;
        }
        self.compose(d)
    }

    pub fn recip(&self) -> Self {
        self.powf(-1.0)
    }
}

impl Add for Jet {
    type Output = Jet;

    fn add(mut self, rhs: Jet) -> Jet {
        self.coef.iter_mut().zip(rhs.coef).for_each(|(a, b)| *a += b);
        self
    }
}

impl Sub for Jet {
    type Output = Jet;

    fn sub(mut self, rhs: Jet) -> Jet {
        self.coef.iter_mut().zip(rhs.coef).for_each(|(a, b)| *a -= b);
        self
    }
}

impl Mul for Jet {
    type Output = Jet;

    fn mul(self, rhs: Jet) -> Jet {
        let mut out = [0.0; N];
        for &[i, j, k] in PRODUCTS.iter() {
            out[k as usize] += self.coef[i as usize] * rhs.coef[j as usize];
        }
        Jet { coef: out }
    }
}

/// Spatial jets of `(rho, v1, v2, c)` at `(x, y, t)` and of their time derivatives.
pub fn exact_jets(x: f64, y: f64, t: f64) -> ([Jet; 4], [Jet; 4]) {
    let (x, y) = (Jet::variable(Var::X, x), Jet::variable(Var::Y, y));
    let px = |k: f64| x.scale(k * PI);
    let py = |k: f64| y.scale(k * PI);
    let r = px(2.0).cos() * py(1.0).cos();
    let a = px(1.0).sin() * py(1.0).sin();
    let b = px(1.0).sin() * py(2.0).sin();
    let c = px(1.0).cos() * py(1.0).cos();
    let values = [
        r.scale(0.1 * (t + 1.0)).offset(1.25),
        a.scale(1.0 - 2.0 * t * t),
        b.scale(1.0 + t * t),
        c.scale(0.1 * (1.0 - t)).offset(0.75),
    ];
    let rates = [r.scale(0.1), a.scale(-4.0 * t), b.scale(2.0 * t), c.scale(-0.1)];
    (values, rates)
}

/// `(rho, v1, v2, c)` of the manufactured solution.
pub fn exact(x: f64, y: f64, t: f64) -> [f64; 4] {
    let s = libm::sin;
    let co = libm::cos;
    [
        1.25 + 0.1 * co(2.0 * PI * x) * co(PI * y) * (t + 1.0),
        s(PI * x) * s(PI * y) * (1.0 - 2.0 * t * t),
        s(PI * x) * s(2.0 * PI * y) * (1.0 + t * t),
        0.75 + 0.1 * co(PI * x) * co(PI * y) * (1.0 - t),
    ]
}

fn momentum_fluxes(
    rho: Jet,
    v1: Jet,
    v2: Jet,
    params: &ModelParams,
) -> (Jet, Jet, Jet, Jet) {
    let m1 = rho * v1;
    let m2 = rho * v2;
    let p = rho.powf(params.gamma).scale(params.cp);
    (m1, m2, m1 * v1 + p, m2 * v2 + p)
}

/// `rho_t + (rho v1)_x + (rho v2)_y`.
fn continuity(u: &[Jet; 4], du: &[Jet; 4]) -> f64 {
    du[0].value() + (u[0] * u[1]).dx().value() + (u[0] * u[2]).dy().value()
}

fn momentum_x(u: &[Jet; 4], du: &[Jet; 4], params: &ModelParams) -> f64 {
    let [rho, v1, v2, c] = *u;
    let (nu, lam, eps) = (params.nu, params.lambda, params.eps);
    let (m1, _, f11, _) = momentum_fluxes(rho, v1, v2, params);
    let m1_t = du[0].value() * v1.value() + rho.value() * du[1].value();
    let (cx, cy) = (c.dx(), c.dy());
    let visc = v1.dx().dx().scale(2.0 * nu + lam) + v1.dy().dy().scale(nu) + v2.dx().dy().scale(nu + lam);
    let cap = ((cy * cy - cx * cx).dx().scale(0.5) - (cx * cy).dy()).scale(eps);
    m1_t + f11.dx().value() + (m1 * v2).dy().value() - visc.value() - cap.value()
}

fn momentum_y(u: &[Jet; 4], du: &[Jet; 4], params: &ModelParams) -> f64 {
    let [rho, v1, v2, c] = *u;
    let (nu, lam, eps) = (params.nu, params.lambda, params.eps);
    let (m1, _, _, f22) = momentum_fluxes(rho, v1, v2, params);
    let m2_t = du[0].value() * v2.value() + rho.value() * du[2].value();
    let (cx, cy) = (c.dx(), c.dy());
    let visc = v2.dy().dy().scale(2.0 * nu + lam) + v2.dx().dx().scale(nu) + v1.dx().dy().scale(nu + lam);
    let cap = ((cx * cx - cy * cy).dy().scale(0.5) - (cx * cy).dx()).scale(eps);
    m2_t + (m1 * v2).dx().value() + f22.dy().value() - params.g * rho.value() - visc.value() - cap.value()
}

/// `(rho c)_t + div(rho c v) - Delta(psi'(c)) + eps Delta(Delta c / rho)`.
fn order_parameter(u: &[Jet; 4], du: &[Jet; 4], eps: f64) -> f64 {
    let [rho, v1, v2, c] = *u;
    let q = rho * c;
    let q_t = du[0].value() * c.value() + rho.value() * du[3].value();
    let potential = c * c * c - c;
    let korteweg = (c.laplacian() * rho.recip()).laplacian().scale(eps);
    q_t + (q * v1).dx().value() + (q * v2).dy().value() - potential.laplacian().value() + korteweg.value()
}

/// Residuals `(S_rho, S_m1, S_m2, S_q)` of the manufactured solution in the four balance laws.
pub fn manufactured_forcing(x: f64, y: f64, t: f64, params: &ModelParams) -> [f64; 4] {
    let (u, du) = exact_jets(x, y, t);
    [continuity(&u, &du), momentum_x(&u, &du, params), momentum_y(&u, &du, params), order_parameter(&u, &du, params.eps)]
}

/// The sources sampled on the native grid of each conserved variable.
pub fn forcing_state(grid: &MacGrid, t: f64, params: &ModelParams) -> Result<State> {
    let m = grid.m();
    let mut rho = Mat::zeros(m, m);
    let mut q = Mat::zeros(m, m);
    for j in 0..m {
        for i in 0..m {
            let (x, y) = grid.primal_point(i, j);
            let (u, du) = exact_jets(x, y, t);
            rho[(i, j)] = continuity(&u, &du);
            q[(i, j)] = order_parameter(&u, &du, params.eps);
        }
    }
    let m1 = grid.sample_xface(|x, y| {
        let (u, du) = exact_jets(x, y, t);
        momentum_x(&u, &du, params)
    });
    let m2 = grid.sample_yface(|x, y| {
        let (u, du) = exact_jets(x, y, t);
        momentum_y(&u, &du, params)
    });
    Ok(State { rho, m1, m2, q })
}

/// Conserved variables of the manufactured solution, each sampled pointwise on its own grid.
pub fn exact_state(grid: &MacGrid, t: f64) -> State {
    let at = |f: fn([f64; 4]) -> f64| move |x: f64, y: f64| f(exact(x, y, t));
    State {
        rho: grid.sample_primal(at(|u| u[0])),
        m1: grid.sample_xface(at(|u| u[0] * u[1])),
        m2: grid.sample_yface(at(|u| u[0] * u[2])),
        q: grid.sample_primal(at(|u| u[0] * u[3])),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
    }

    /// Sixth-order central first derivative.
    fn d1(f: &dyn Fn(f64) -> f64, x: f64, h: f64) -> f64 {
        let w = [(1.0, 3.0 / 4.0), (2.0, -3.0 / 20.0), (3.0, 1.0 / 60.0)];
        w.iter().map(|&(k, c)| c * (f(x + k * h) - f(x - k * h))).sum::<f64>() / h
    }

    /// Sixth-order central second derivative.
    fn d2(f: &dyn Fn(f64) -> f64, x: f64, h: f64) -> f64 {
        let w = [(1.0, 3.0 / 2.0), (2.0, -3.0 / 20.0), (3.0, 1.0 / 90.0)];
        let s: f64 = w.iter().map(|&(k, c)| c * (f(x + k * h) + f(x - k * h))).sum();
        (s - 49.0 / 18.0 * f(x)) / (h * h)
    }

    type F3<'a> = dyn Fn(f64, f64, f64) -> f64 + 'a;

    fn fd_dx(f: &F3, x: f64, y: f64, t: f64, h: f64) -> f64 {
        d1(&|s| f(s, y, t), x, h)
    }

    fn fd_dy(f: &F3, x: f64, y: f64, t: f64, h: f64) -> f64 {
        d1(&|s| f(x, s, t), y, h)
    }

    fn fd_dt(f: &F3, x: f64, y: f64, t: f64, h: f64) -> f64 {
        d1(&|s| f(x, y, s), t, h)
    }

    fn fd_continuity(x: f64, y: f64, t: f64, h: f64) -> f64 {
        let rho = |x, y, t| exact(x, y, t)[0];
        let m1 = |x, y, t| {
            let u = exact(x, y, t);
            u[0] * u[1]
        };
        let m2 = |x, y, t| {
            let u = exact(x, y, t);
            u[0] * u[2]
        };
        fd_dt(&rho, x, y, t, h) + fd_dx(&m1, x, y, t, h) + fd_dy(&m2, x, y, t, h)
    }

    #[test]
    fn jets_reproduce_closed_form_values() {
        for &(x, y, t) in &[(0.1, 0.2, 0.0), (0.5, 0.5, 0.01), (0.93, 0.07, 0.4)] {
            let (j, dj) = exact_jets(x, y, t);
            let e = exact(x, y, t);
            let later = exact(x, y, t + 1e-6);
            let earlier = exact(x, y, t - 1e-6);
            for k in 0..4 {
                assert!(close(j[k].value(), e[k], 1e-15));
                assert!(close(dj[k].value(), (later[k] - earlier[k]) / 2e-6, 1e-8));
            }
        }
    }

    #[test]
    fn jet_derivatives_of_known_functions() {
        let x = Jet::variable(Var::X, 0.3);
        let y = Jet::variable(Var::Y, -0.2);
        let f = (x * y).sin() * y.recip().powf(2.0);
        // f = sin(xy) / y^2
        let (xv, yv) = (0.3f64, -0.2f64);
        let fxx = -yv * yv * libm::sin(xv * yv) / (yv * yv);
        assert!(close(f.dx().dx().value(), fxx, 1e-12));
        let g = |a: f64, b: f64| libm::sin(a * b) / (b * b);
        let fd = (g(xv + 1e-4, yv + 1e-4) - g(xv + 1e-4, yv - 1e-4) - g(xv - 1e-4, yv + 1e-4)
            + g(xv - 1e-4, yv - 1e-4))
            / 4e-8;
        assert!(close(f.dx().dy().value(), fd, 1e-6));
        let four = x.powf(4.0).dx().dx().dx().dx().value();
        assert!(close(four, 24.0, 1e-14));
        assert_eq!(x.powf(4.0).dx().dx().dx().dx().dx().value(), 0.0);
    }

    #[test]
    fn continuity_residual_matches_difference_oracle() {
        let p = ModelParams::default();
        let s = manufactured_forcing(0.5, 0.5, 0.0, &p)[0];
        let fd = fd_continuity(0.5, 0.5, 0.0, 1e-3);
        assert!((s - fd).abs() < 1e-8, "{s} vs {fd}");
        let finer = fd_continuity(0.5, 0.5, 0.0, 1e-4);
        assert!((finer - fd).abs() <= 1e-4 * s.abs().max(1.0));
        for &(x, y, t) in &[(0.13, 0.71, 0.003), (0.88, 0.31, 0.01)] {
            let s = manufactured_forcing(x, y, t, &p)[0];
            assert!((s - fd_continuity(x, y, t, 1e-3)).abs() < 1e-8);
        }
    }

    #[test]
    fn all_residuals_match_difference_oracle() {
        let p = ModelParams { eps: 0.05, ..ModelParams::default() };
        let h = 2e-3;
        let (nu, lam, eps) = (p.nu, p.lambda, p.eps);
        let u = |k: usize| move |x: f64, y: f64, t: f64| exact(x, y, t)[k];
        let rv1 = |x, y, t| u(0)(x, y, t) * u(1)(x, y, t);
        let rv2 = |x, y, t| u(0)(x, y, t) * u(2)(x, y, t);
        let press = |x, y, t| p.pressure(u(0)(x, y, t));
        for &(x, y, t) in &[(0.31, 0.62, 0.004), (0.77, 0.18, 0.0)] {
            let s = manufactured_forcing(x, y, t, &p);
            let cx = |x, y, t| fd_dx(&u(3), x, y, t, h);
            let cy = |x, y, t| fd_dy(&u(3), x, y, t, h);
            let half_diff = |x, y, t| 0.5 * (cy(x, y, t) * cy(x, y, t) - cx(x, y, t) * cx(x, y, t));
            let mixed = |x, y, t| cx(x, y, t) * cy(x, y, t);
            let v1xy = |x, y, t| fd_dy(&|a, b, c| fd_dx(&u(1), a, b, c, h), x, y, t, h);
            let v2xy = |x, y, t| fd_dy(&|a, b, c| fd_dx(&u(2), a, b, c, h), x, y, t, h);

            let flux11 = |x, y, t| rv1(x, y, t) * u(1)(x, y, t) + press(x, y, t);
            let flux12 = |x, y, t| rv1(x, y, t) * u(2)(x, y, t);
            let m1 = fd_dt(&rv1, x, y, t, h) + fd_dx(&flux11, x, y, t, h) + fd_dy(&flux12, x, y, t, h)
                - (2.0 * nu + lam) * d2(&|a| u(1)(a, y, t), x, h)
                - nu * d2(&|b| u(1)(x, b, t), y, h)
                - (nu + lam) * v2xy(x, y, t)
                - eps * (fd_dx(&half_diff, x, y, t, h) - fd_dy(&mixed, x, y, t, h));
            assert!(close(s[1], m1, 1e-7), "m1 {} vs {}", s[1], m1);

            let flux22 = |x, y, t| rv2(x, y, t) * u(2)(x, y, t) + press(x, y, t);
            let m2 = fd_dt(&rv2, x, y, t, h) + fd_dx(&flux12, x, y, t, h) + fd_dy(&flux22, x, y, t, h)
                - p.g * u(0)(x, y, t)
                - (2.0 * nu + lam) * d2(&|b| u(2)(x, b, t), y, h)
                - nu * d2(&|a| u(2)(a, y, t), x, h)
                - (nu + lam) * v1xy(x, y, t)
                - eps * (-fd_dy(&half_diff, x, y, t, h) - fd_dx(&mixed, x, y, t, h));
            assert!(close(s[2], m2, 1e-7), "m2 {} vs {}", s[2], m2);

            let lap = |f: &F3<'_>, x: f64, y: f64, t: f64, h: f64| {
                d2(&|a| f(a, y, t), x, h) + d2(&|b| f(x, b, t), y, h)
            };
            let q = |x, y, t| u(0)(x, y, t) * u(3)(x, y, t);
            let qv1 = |x, y, t| q(x, y, t) * u(1)(x, y, t);
            let qv2 = |x, y, t| q(x, y, t) * u(2)(x, y, t);
            let pot = |x, y, t| {
                let c: f64 = u(3)(x, y, t);
                c * c * c - c
            };
            let hk = 1e-2;
            let inner = |x, y, t| lap(&u(3), x, y, t, hk) / u(0)(x, y, t);
            let sq = fd_dt(&q, x, y, t, h) + fd_dx(&qv1, x, y, t, h) + fd_dy(&qv2, x, y, t, h)
                - lap(&pot, x, y, t, h)
                + eps * lap(&inner, x, y, t, hk);
            assert!(close(s[3], sq, 1e-6), "q {} vs {}", s[3], sq);
        }
    }

    #[test]
    fn corner_residual_is_the_density_rate() {
        // at (0, 0) the velocity and its divergence vanish, leaving rho_t = 0.1
        for t in [0.0, 0.004, 0.01] {
            let s = manufactured_forcing(0.0, 0.0, t, &ModelParams::default());
            assert!((s[0] - 0.1).abs() < 1e-15);
        }
    }

    #[test]
    fn sampled_state_has_native_shapes() {
        let grid = MacGrid::new(8).unwrap();
        let f = forcing_state(&grid, 0.0, &ModelParams::default()).unwrap();
        let e = exact_state(&grid, 0.0);
        assert_eq!(f.m1.shape(), grid.xface_shape());
        assert_eq!(e.m2.shape(), grid.yface_shape());
        let (x, y) = grid.yface_point(2, 3);
        assert_eq!(f.m2[(2, 3)], manufactured_forcing(x, y, 0.0, &ModelParams::default())[2]);
        assert!(e.rho.min() > 1.0);
    }
}
