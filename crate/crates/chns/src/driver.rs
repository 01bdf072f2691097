//! The sequential run loop: time-step selection, IMEX step, diagnostics and snapshots.

use std::path::{Path, PathBuf};

use chns_core::diagnostics::{Baseline, Diagnostics};
use chns_core::imex::{integrate, tableau, Integrator, RunOptions, Scheme, SolverOptions, TimeControls};
use chns_core::linsolve::{PrecondKind, DEFAULT_TOL};
use chns_core::scenario::{compute_error, scenario, Scenario, ScenarioName};
use chns_core::{ModelParams, State};

use crate::config::Overrides;
use crate::error::{AppError, AppResult};
use crate::levelset::zero_level_set;
use crate::output::{self, DiagnosticsWriter};

pub const DEFAULT_M: usize = 64;
pub const DEFAULT_CFL: f64 = 0.4;

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub scenario: ScenarioName,
    pub m: usize,
    /// Final time; the scenario's own when `None`.
    pub t_final: Option<f64>,
    pub cfl: f64,
    pub scheme: Scheme,
    pub seed: u64,
    pub snapshots: Vec<f64>,
    pub solver: SolverOptions,
    /// Model parameter overrides applied on top of the scenario's values.
    pub model: Overrides,
}

impl RunConfig {
    pub fn new(scenario: ScenarioName, m: usize) -> Self {
        Self {
            scenario,
            m,
            t_final: None,
            cfl: DEFAULT_CFL,
            scheme: Scheme::Dirksa,
            seed: 0,
            snapshots: Vec::new(),
            solver: SolverOptions::default(),
            model: Overrides::default(),
        }
    }

    /// Configuration from merged file and command-line values.
    pub fn from_overrides(o: &Overrides) -> AppResult<Self> {
        let name = o.scenario.ok_or_else(|| AppError::Config("no scenario given".into()))?;
        let mut cfg = Self::new(name, o.m.unwrap_or(DEFAULT_M));
        cfg.t_final = o.t_final;
        cfg.cfl = o.cfl.unwrap_or(DEFAULT_CFL);
        cfg.scheme = o.scheme.unwrap_or(Scheme::Dirksa);
        cfg.seed = o.seed.unwrap_or(0);
        cfg.solver = SolverOptions {
            tol: o.tol.unwrap_or(DEFAULT_TOL),
            max_iter: o.max_iter,
            precond: o.precond.unwrap_or(PrecondKind::None),
        };
        cfg.model = o.clone();
        Ok(cfg)
    }

    fn apply_model(&self, p: &mut ModelParams) {
        let o = &self.model;
        p.gamma = o.gamma.unwrap_or(p.gamma);
        p.cp = o.cp.unwrap_or(p.cp);
        p.eps = o.eps.unwrap_or(p.eps);
        p.nu = o.nu.unwrap_or(p.nu);
        p.lambda = o.lambda.unwrap_or(p.lambda);
        p.g = o.g.unwrap_or(p.g);
    }

    /// The scenario with parameter overrides applied.
    pub fn build(&self) -> AppResult<Scenario> {
        let mut s = scenario(self.scenario, self.m, self.seed)?;
        self.apply_model(&mut s.params);
        s.params.validate()?;
        if let Some(t) = self.t_final {
            s.t_final = t;
        }
        Ok(s)
    }
}

/// Outcome of a run.
#[derive(Clone, Debug)]
pub struct RunSummary {
    pub scenario: Scenario,
    pub steps: usize,
    pub history: Vec<Diagnostics>,
    pub final_state: State,
    /// `e_M` against the exact solution when one is known.
    pub error: Option<f64>,
    /// Largest relative residual reported by any stage solve.
    pub max_residual: f64,
    pub initial_mass: f64,
    pub initial_q: f64,
}

fn write_snapshot(dir: &Path, s: &Scenario, u: &State, t: f64) -> AppResult<()> {
    let f = u.to_fields()?;
    let stem = output::snapshot_stem(t);
    output::write_snapshot_csv(&dir.join(format!("{stem}.csv")), &output::snapshot_rows(&s.grid, &f, &s.params))?;
    output::write_vtk(&dir.join(format!("{stem}.vtk")), &s.grid, &f, &s.params, t)?;
    output::write_segments(&dir.join(format!("levelset_t{t:.6}.csv")), &zero_level_set(&s.grid, &f.c))?;
    Ok(())
}

/// Runs `cfg`, writing `diagnostics.csv` and the requested snapshots into `out` when given.
pub fn run(cfg: &RunConfig, out: Option<&Path>) -> AppResult<RunSummary> {
    let s = cfg.build()?;
    let forcing = s.forcing();
    let mut integ = Integrator::new(s.grid, s.params, tableau(cfg.scheme))?;
    integ.solver = cfg.solver;
    integ.forcing = forcing.as_deref();
    let controls = TimeControls::new(cfg.cfl, s.t_final)?;

    let mut writer = match out {
        Some(dir) => {
            output::create_dir(dir)?;
            Some(DiagnosticsWriter::create(dir.join("diagnostics.csv"))?)
        }
        None => None,
    };
    let u0 = s.initial_state();
    let base = Baseline::new(&u0);
    let first = base.measure(&u0, 0.0)?;
    let mut history = vec![first];
    if let Some(w) = writer.as_mut() {
        w.append(&first)?;
    }
    if let Some(dir) = out {
        if cfg.snapshots.contains(&0.0) {
            write_snapshot(dir, &s, &u0, 0.0)?;
        }
    }
    let opts = RunOptions { stops: cfg.snapshots.clone(), redo_on_cfl_overshoot: false };
    let mut max_residual: f64 = 0.0;
    let mut steps = 0;
    // errors raised inside the observer are kept here so IO failures keep their type
    let mut app_err: Option<AppError> = None;
    let result = integrate(&integ, u0, controls, &opts, |rec, u, hit| {
        steps = rec.step;
        max_residual = max_residual.max(rec.max_residual);
        let mut d = base.measure(u, rec.t)?;
        d.dt = rec.dt;
        d.cs = rec.cs;
        d.it_ch = rec.it_ch;
        d.it_vel = rec.it_vel;
        history.push(d);
        let mut io = || -> AppResult<()> {
            if let Some(w) = writer.as_mut() {
                w.append(&d)?;
            }
            if let (true, Some(dir)) = (hit, out) {
                write_snapshot(dir, &s, u, rec.t)?;
            }
            Ok(())
        };
        if let Err(e) = io() {
            app_err = Some(e);
            return Err(chns_core::Error::config("output failure"));
        }
        log::debug!("step {} t = {:.6} dt = {:.3e} it = ({}, {})", rec.step, rec.t, rec.dt, rec.it_ch, rec.it_vel);
        Ok(())
    });
    let final_state = match (result, app_err) {
        (_, Some(e)) => return Err(e),
        (r, None) => r?,
    };
    let error = s.exact(s.t_final).map(|e| compute_error(&final_state, &e)).transpose()?;
    let (initial_mass, initial_q) = (base.mass, base.q);
    Ok(RunSummary { scenario: s, steps, history, final_state, error, max_residual, initial_mass, initial_q })
}

/// Error levels of the order test, one run per grid size.
pub fn eoc_sweep(cfg: &RunConfig, levels: &[usize], out: Option<&Path>) -> AppResult<Vec<(usize, f64)>> {
    let mut table = Vec::with_capacity(levels.len());
    for &m in levels {
        let mut c = cfg.clone();
        c.m = m;
        c.snapshots.clear();
        let sub: Option<PathBuf> = out.map(|d| d.join(format!("M{m}")));
        let summary = run(&c, sub.as_deref())?;
        let e = summary
            .error
            .ok_or_else(|| AppError::Config(format!("scenario {} has no exact solution", cfg.scenario)))?;
        log::info!("M = {m}: e_M = {e:.4e} after {} steps", summary.steps);
        table.push((m, e));
    }
    if let Some(dir) = out {
        output::create_dir(dir)?;
        output::write_eoc_table(&dir.join("eoc.csv"), &table)?;
    }
    Ok(table)
}
