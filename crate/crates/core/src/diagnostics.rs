//! Conservation errors and bounds tracked during a run.

use crate::error::Result;
use crate::grid::State;

/// One diagnostics row.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Diagnostics {
    pub t: f64,
    pub dt: f64,
    pub cs: f64,
    /// `sum(rho^n - rho^0)`.
    pub err_rho: f64,
    /// `sum((rho c)^n - (rho c)^0)`.
    pub err_q: f64,
    pub cmin: f64,
    pub cmax: f64,
    pub rhomin: f64,
    pub it_ch: usize,
    pub it_vel: usize,
}

/// Totals of the initial state, the reference for conservation errors.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Baseline {
    pub mass: f64,
    pub q: f64,
}

impl Baseline {
    pub fn new(u0: &State) -> Self {
        Self { mass: u0.rho.sum(), q: u0.q.sum() }
    }

    /// Row for `u` at time `t`; step data is left to the caller.
    pub fn measure(&self, u: &State, t: f64) -> Result<Diagnostics> {
        let f = u.to_fields()?;
        Ok(Diagnostics {
            t,
            dt: 0.0,
            cs: 0.0,
            err_rho: u.rho.sum() - self.mass,
            err_q: u.q.sum() - self.q,
            cmin: f.c.min(),
            cmax: f.c.max(),
            rhomin: f.rho.min(),
            it_ch: 0,
            it_vel: 0,
        })
    }
}
