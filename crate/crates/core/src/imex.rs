//! Partitioned IMEX Runge-Kutta stepping.
//!
//! Convection, the concave potential part and any forcing are explicit; gravity, capillarity,
//! the convex Cahn-Hilliard part and viscosity are implicit. Because the implicit terms are
//! linear in `C` and `V` once the stage density is known, every stage reduces to one
//! explicit density update and two SPD solves.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::cahn_hilliard::{ch_rhs, ch_system_operator, m2_apply};
use crate::convection::{conv_apply, max_char_speed};
use crate::error::{Error, Result};
use crate::fdops::{build_fd_matrices, FdMatrices};
use crate::forces::{capillary_apply, gravity_apply};
use crate::grid::{check_positive, to_staggered, Axis, Fields, MacGrid, State};
use crate::linsolve::{cg, make_preconditioner, GridLayout, PrecondKind, SolveReport, DEFAULT_TOL};
use crate::mat::Mat;
use crate::params::ModelParams;
use crate::viscosity::{visc_apply, visc_system_operator, Viscosity};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    EeIe,
    Dirksa,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::EeIe => "ee_ie",
            Scheme::Dirksa => "dirksa",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ee_ie" => Ok(Scheme::EeIe),
            "dirksa" => Ok(Scheme::Dirksa),
            other => Err(Error::config(alloc::format!("unknown scheme `{other}` (expected ee_ie or dirksa)"))),
        }
    }
}

/// Explicit/implicit tableau pair sharing the weights `beta`.
#[derive(Clone, Debug, PartialEq)]
pub struct ButcherPair {
    pub s: usize,
    pub alpha_tilde: Vec<Vec<f64>>,
    pub gamma_tilde: Vec<f64>,
    pub alpha: Vec<Vec<f64>>,
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
}

impl ButcherPair {
    pub fn validate(&self) -> Result<()> {
        let s = self.s;
        let square = |a: &Vec<Vec<f64>>| a.len() == s && a.iter().all(|r| r.len() == s);
        if !square(&self.alpha_tilde) || !square(&self.alpha) || self.gamma.len() != s
            || self.gamma_tilde.len() != s || self.beta.len() != s
        {
            return Err(Error::config("tableau dimensions do not match the stage count"));
        }
        for i in 0..s {
            if self.alpha_tilde[i][i..].iter().any(|&v| v != 0.0) {
                return Err(Error::config("explicit tableau is not strictly lower triangular"));
            }
            if self.alpha[i][i + 1..].iter().any(|&v| v != 0.0) || self.alpha[i][i] < 0.0 {
                return Err(Error::config("implicit tableau is not lower triangular with a non-negative diagonal"));
            }
            let rt: f64 = self.alpha_tilde[i].iter().sum();
            let ri: f64 = self.alpha[i].iter().sum();
            if (rt - self.gamma_tilde[i]).abs() > 1e-14 || (ri - self.gamma[i]).abs() > 1e-14 {
                return Err(Error::config("tableau row sums differ from the abscissae"));
            }
        }
        if (self.beta.iter().sum::<f64>() - 1.0).abs() > 1e-14 {
            return Err(Error::config("tableau weights do not sum to one"));
        }
        Ok(())
    }
}

pub fn tableau(scheme: Scheme) -> ButcherPair {
    match scheme {
        Scheme::EeIe => ButcherPair {
            s: 1,
            alpha_tilde: vec![vec![0.0]],
            gamma_tilde: vec![0.0],
            alpha: vec![vec![1.0]],
            gamma: vec![1.0],
            beta: vec![1.0],
        },
        Scheme::Dirksa => {
            let s = core::f64::consts::FRAC_1_SQRT_2;
            ButcherPair {
                s: 2,
                alpha_tilde: vec![vec![0.0, 0.0], vec![1.0 + s, 0.0]],
                gamma_tilde: vec![0.0, 1.0 + s],
                alpha: vec![vec![1.0 - s, 0.0], vec![s, 1.0 - s]],
                gamma: vec![1.0 - s, 1.0],
                beta: vec![s, 1.0 - s],
            }
        }
    }
}

pub fn tableau_by_name(name: &str) -> Result<ButcherPair> {
    Ok(tableau(name.parse()?))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeControls {
    pub cfl: f64,
    pub t: f64,
    pub t_final: f64,
    /// Upper bound on the step, also used when the characteristic speed vanishes.
    pub dt_max: f64,
}

impl TimeControls {
    pub fn new(cfl: f64, t_final: f64) -> Result<Self> {
        let c = Self { cfl, t: 0.0, t_final, dt_max: f64::INFINITY };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl < 1.0) {
            return Err(Error::config(alloc::format!("cfl = {} must lie in (0, 1)", self.cfl)));
        }
        if !(self.t_final >= 0.0) || !(self.dt_max > 0.0) {
            return Err(Error::config("final time must be >= 0 and dt_max > 0"));
        }
        Ok(())
    }
}

/// `dt = cfl h / cs`, with `cs` the larger of the current speed and `previous_cs`, clipped to
/// land on `t_final`.
pub fn dt_select(u: &Fields, previous_cs: Option<f64>, controls: &TimeControls, params: &ModelParams) -> Result<f64> {
    let h = 1.0 / u.rho.rows() as f64;
    let cs = max_char_speed(u, params)?.max(previous_cs.unwrap_or(0.0));
    let mut dt = if cs > 0.0 { controls.cfl * h / cs } else { controls.dt_max };
    dt = dt.min(controls.dt_max);
    let left = controls.t_final - controls.t;
    if dt >= left {
        dt = left;
    }
    Ok(dt)
}

/// Linear solver settings for the stage systems.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: Option<usize>,
    pub precond: PrecondKind,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { tol: DEFAULT_TOL, max_iter: None, precond: PrecondKind::None }
    }
}

/// Source term `S(t)` added to the explicit tendency.
pub type Forcing<'a> = &'a dyn Fn(f64) -> Result<State>;

/// Everything a step needs besides the state.
pub struct Integrator<'a> {
    grid: MacGrid,
    fd: FdMatrices,
    pub params: ModelParams,
    pub pair: ButcherPair,
    pub solver: SolverOptions,
    pub forcing: Option<Forcing<'a>>,
}

/// Per-step solver and speed information.
#[derive(Clone, Debug, PartialEq)]
pub struct StepReport {
    pub dt: f64,
    /// Largest characteristic speed over the explicit and implicit stage states.
    pub cs_stages: f64,
    pub ch: Vec<SolveReport>,
    pub vel: Vec<SolveReport>,
}

impl StepReport {
    pub fn iterations_ch(&self) -> usize {
        self.ch.iter().map(|r| r.iterations).sum()
    }

    pub fn iterations_vel(&self) -> usize {
        self.vel.iter().map(|r| r.iterations).sum()
    }

    pub fn max_residual(&self) -> f64 {
        self.ch.iter().chain(&self.vel).fold(0.0, |m, r| m.max(r.residual))
    }
}

/// Report for a stage whose system is diagonal and solved by division.
const EXACT: SolveReport = SolveReport { iterations: 0, residual: 0.0, converged: true };

fn viscosity(p: &ModelParams) -> Viscosity {
    Viscosity { nu: p.nu, lambda: p.lambda }
}

/// The full tendency `L~(U~, U)`: convection and the concave potential term at `u_tilde`,
/// everything else at `u`.
pub fn rhs_tilde(u_tilde: &State, u: &State, params: &ModelParams) -> Result<State> {
    let mut k = conv_apply(u_tilde, params)?.into_state();
    let f = u.to_fields()?;
    let c_tilde = u_tilde.to_fields()?.c;
    k.q.axpy(1.0, &ch_rhs(&f.rho, &f.c, &c_tilde, params.eps)?)?;
    let cap = capillary_apply(&f.c, params.eps)?;
    let (l4_2, l4_3) = visc_apply(&f.v1, &f.v2, viscosity(params))?;
    k.m1.axpy(1.0, &cap.l2_2)?;
    k.m1.axpy(1.0, &l4_2)?;
    k.m2.axpy(1.0, &gravity_apply(&f.rho, params.g)?)?;
    k.m2.axpy(1.0, &cap.l2_3)?;
    k.m2.axpy(1.0, &l4_3)?;
    Ok(k)
}

/// `sum_j w_j K_j` over the first `w.len()` stages.
fn combine(base: &State, dt: f64, w: &[f64], ks: &[State]) -> Result<State> {
    let mut out = base.clone();
    for (wj, kj) in w.iter().zip(ks) {
        if *wj != 0.0 {
            out.axpy(dt * wj, kj)?;
        }
    }
    Ok(out)
}

fn stack(a: &Mat, b: &Mat) -> Vec<f64> {
    let mut v = a.as_slice().to_vec();
    v.extend_from_slice(b.as_slice());
    v
}

impl<'a> Integrator<'a> {
    pub fn new(grid: MacGrid, params: ModelParams, pair: ButcherPair) -> Result<Self> {
        params.validate()?;
        pair.validate()?;
        let fd = build_fd_matrices(grid.m(), grid.h())?;
        Ok(Self { grid, fd, params, pair, solver: SolverOptions::default(), forcing: None })
    }

    pub fn grid(&self) -> &MacGrid {
        &self.grid
    }

    /// One step of size `dt` from `(t, u)`.
    pub fn step(&self, u: &State, t: f64, dt: f64) -> Result<(State, StepReport)> {
        let p = &self.params;
        let pair = &self.pair;
        let m = self.grid.m();
        check_positive(&u.rho, "step start")?;
        let visc = viscosity(p);

        let mut ks: Vec<State> = Vec::with_capacity(pair.s);
        let mut report = StepReport { dt, cs_stages: 0.0, ch: Vec::new(), vel: Vec::new() };
        let start = u.to_fields()?;
        let mut c_guess = start.c.clone();
        let mut v_guess = stack(&start.v1, &start.v2);

        for i in 0..pair.s {
            // explicit stage state and explicit tendency
            let ut = combine(u, dt, &pair.alpha_tilde[i][..i], &ks)?;
            let ft = ut.to_fields()?;
            report.cs_stages = report.cs_stages.max(max_char_speed(&ft, p)?);
            let mut e = conv_apply(&ut, p)?.into_state();
            if let Some(force) = self.forcing {
                e.axpy(1.0, &force(t + pair.gamma_tilde[i] * dt)?)?;
            }
            let m2t = m2_apply(&ft.c)?;

            let aii = pair.alpha[i][i];
            let k = dt * aii;
            let prior = combine(u, dt, &pair.alpha[i][..i], &ks)?;

            let mut rho = prior.rho.clone();
            rho.axpy(k, &e.rho)?;
            check_positive(&rho, "stage density")?;

            // order parameter
            let mut rhs_q = prior.q.clone();
            rhs_q.axpy(k, &e.q)?;
            rhs_q.axpy(k, &m2t)?;
            let c = if k == 0.0 {
                report.ch.push(EXACT);
                rhs_q.zip_map(&rho, "stage c", |q, r| q / r)?
            } else {
                let op = ch_system_operator(&rho, k, p.eps)?;
                let pre = make_preconditioner(self.solver.precond, GridLayout::Cells, m, || op.assemble())?;
                let (x, rep) = cg(&op, rhs_q.as_slice(), c_guess.as_slice(), self.solver.tol, self.solver.max_iter, &*pre)?;
                if !rep.converged {
                    return Err(Error::NotConverged { system: "order parameter", report: rep });
                }
                report.ch.push(rep);
                Mat::from_col_major(m, m, x)?
            };

            // velocity
            let rho_x = to_staggered(&rho, Axis::X)?;
            let rho_y = to_staggered(&rho, Axis::Y)?;
            let cap = capillary_apply(&c, p.eps)?;
            let grav = gravity_apply(&rho, p.g)?;
            let mut rhs_1 = prior.m1.clone();
            rhs_1.axpy(k, &e.m1)?;
            rhs_1.axpy(k, &cap.l2_2)?;
            let mut rhs_2 = prior.m2.clone();
            rhs_2.axpy(k, &e.m2)?;
            rhs_2.axpy(k, &cap.l2_3)?;
            rhs_2.axpy(k, &grav)?;
            let v_vec = if k == 0.0 {
                report.vel.push(EXACT);
                stack(&rhs_1.zip_map(&rho_x, "stage v1", |m, r| m / r)?, &rhs_2.zip_map(&rho_y, "stage v2", |m, r| m / r)?)
            } else {
                let op = visc_system_operator(&rho_x, &rho_y, k, visc)?;
                let pre = make_preconditioner(self.solver.precond, GridLayout::Velocity, m, || op.assemble(&self.fd))?;
                let (x, rep) = cg(&op, &stack(&rhs_1, &rhs_2), &v_guess, self.solver.tol, self.solver.max_iter, &*pre)?;
                if !rep.converged {
                    return Err(Error::NotConverged { system: "velocity", report: rep });
                }
                report.vel.push(rep);
                x
            };
            let half = m * (m - 1);
            let v1 = Mat::from_col_major(m - 1, m, v_vec[..half].to_vec())?;
            let v2 = Mat::from_col_major(m, m - 1, v_vec[half..].to_vec())?;

            // stage tendency
            let stage = Fields { rho: rho.clone(), v1, v2, c };
            if !stage.is_finite() {
                return Err(Error::NonFinite("stage state"));
            }
            report.cs_stages = report.cs_stages.max(max_char_speed(&stage, p)?);
            let (l4_2, l4_3) = visc_apply(&stage.v1, &stage.v2, visc)?;
            let mut ki = e;
            ki.q.axpy(1.0, &ch_rhs(&rho, &stage.c, &ft.c, p.eps)?)?;
            ki.m1.axpy(1.0, &cap.l2_2)?;
            ki.m1.axpy(1.0, &l4_2)?;
            ki.m2.axpy(1.0, &cap.l2_3)?;
            ki.m2.axpy(1.0, &grav)?;
            ki.m2.axpy(1.0, &l4_3)?;
            ks.push(ki);

            c_guess = stage.c;
            v_guess = v_vec;
        }

        let next = combine(u, dt, &pair.beta, &ks)?;
        check_positive(&next.rho, "step result")?;
        Ok((next, report))
    }

    /// The semidiscrete right-hand side `L(U) + S(t)`.
    pub fn tendency(&self, u: &State, t: f64) -> Result<State> {
        let mut k = rhs_tilde(u, u, &self.params)?;
        if let Some(force) = self.forcing {
            k.axpy(1.0, &force(t)?)?;
        }
        Ok(k)
    }
}

/// One row of the per-step log.
#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub step: usize,
    pub t: f64,
    pub dt: f64,
    pub cs: f64,
    pub it_ch: usize,
    pub it_vel: usize,
    pub max_residual: f64,
    pub rho_min: f64,
    pub c_min: f64,
    pub c_max: f64,
    /// `dt cs_stages / h` exceeded the target CFL by more than 10%.
    pub cfl_exceeded: bool,
}

/// Driver options beyond the time controls.
#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Times the integration must hit exactly (snapshots).
    pub stops: Vec<f64>,
    /// Redo a step with half the size when the realized CFL overshoots.
    pub redo_on_cfl_overshoot: bool,
}

/// Integrates from `controls.t` to `controls.t_final`, calling `observe` after every step
/// with the record, the new state and whether a stop time was reached.
pub fn integrate(
    integrator: &Integrator<'_>,
    u0: State,
    controls: TimeControls,
    opts: &RunOptions,
    mut observe: impl FnMut(&StepRecord, &State, bool) -> Result<()>,
) -> Result<State> {
    controls.validate()?;
    let h = integrator.grid.h();
    let mut u = u0;
    let mut ctl = controls;
    let mut prev_cs = None;
    let mut n = 0;
    let mut stops: Vec<f64> = opts.stops.iter().copied().filter(|&s| s > ctl.t && s <= ctl.t_final).collect();
    stops.sort_by(f64::total_cmp);
    let tiny = 1e-12 * ctl.t_final.max(1.0);
    while ctl.t_final - ctl.t > tiny {
        let fields = u.to_fields()?;
        let mut dt = dt_select(&fields, prev_cs, &ctl, &integrator.params)?;
        let mut hit = false;
        if let Some(&s) = stops.first() {
            if ctl.t + dt >= s - tiny {
                dt = s - ctl.t;
                hit = true;
            }
        }
        let (next, rep) = loop {
            let (next, rep) = integrator.step(&u, ctl.t, dt)?;
            let over = dt * rep.cs_stages / h > 1.1 * ctl.cfl;
            if over && opts.redo_on_cfl_overshoot && dt > 1e-14 {
                log::warn!("realized CFL {:.3} over target at t = {:.6}; halving dt", dt * rep.cs_stages / h, ctl.t);
                dt *= 0.5;
                hit = false;
                continue;
            }
            break (next, rep);
        };
        n += 1;
        ctl.t += dt;
        if hit {
            ctl.t = stops.remove(0);
        }
        let realized = dt * rep.cs_stages / h;
        let cfl_exceeded = realized > 1.1 * ctl.cfl;
        if cfl_exceeded {
            log::warn!("step {n}: realized CFL {realized:.3} exceeds target {:.3}", ctl.cfl);
        }
        let f = next.to_fields()?;
        let rec = StepRecord {
            step: n,
            t: ctl.t,
            dt,
            cs: rep.cs_stages,
            it_ch: rep.iterations_ch(),
            it_vel: rep.iterations_vel(),
            max_residual: rep.max_residual(),
            rho_min: f.rho.min(),
            c_min: f.c.min(),
            c_max: f.c.max(),
            cfl_exceeded,
        };
        prev_cs = Some(rep.cs_stages);
        u = next;
        observe(&rec, &u, hit)?;
    }
    Ok(u)
}

/// Classical fourth-order Runge-Kutta on the full semidiscrete system; a reference for tests.
pub fn rk4_reference(integrator: &Integrator<'_>, u0: &State, t0: f64, t1: f64, steps: usize) -> Result<State> {
    let dt = (t1 - t0) / steps as f64;
    let mut u = u0.clone();
    let mut t = t0;
    for _ in 0..steps {
        let k1 = integrator.tendency(&u, t)?;
        let mut s = u.clone();
        s.axpy(0.5 * dt, &k1)?;
        let k2 = integrator.tendency(&s, t + 0.5 * dt)?;
        let mut s = u.clone();
        s.axpy(0.5 * dt, &k2)?;
        let k3 = integrator.tendency(&s, t + 0.5 * dt)?;
        let mut s = u.clone();
        s.axpy(dt, &k3)?;
        let k4 = integrator.tendency(&s, t + dt)?;
        u.axpy(dt / 6.0, &k1)?;
        u.axpy(dt / 3.0, &k2)?;
        u.axpy(dt / 3.0, &k3)?;
        u.axpy(dt / 6.0, &k4)?;
        t += dt;
    }
    Ok(u)
}

/// Boxed forcing closure, for callers that build it at runtime.
pub type BoxedForcing = Box<dyn Fn(f64) -> Result<State>>;
