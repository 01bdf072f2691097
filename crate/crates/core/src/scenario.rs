//! Initial data and parameters of the order test and Tests 1 to 4.

use alloc::boxed::Box;
use alloc::format;
use core::f64::consts::{PI, SQRT_2};
use core::fmt;
use core::str::FromStr;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{Fields, MacGrid, State};
use crate::imex::BoxedForcing;
use crate::mat::Mat;
use crate::mms;
use crate::params::ModelParams;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ScenarioName {
    Order,
    Test1,
    Test2,
    Test3,
    Test4,
}

impl ScenarioName {
    pub const ALL: [ScenarioName; 5] = [Self::Order, Self::Test1, Self::Test2, Self::Test3, Self::Test4];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Order => "order",
            Self::Test1 => "test1",
            Self::Test2 => "test2",
            Self::Test3 => "test3",
            Self::Test4 => "test4",
        }
    }
}

impl fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| Error::config(format!("unknown scenario `{s}` (expected order, test1, test2, test3 or test4)")))
    }
}

/// A fully specified initial-boundary value problem on a given grid.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: ScenarioName,
    pub grid: MacGrid,
    pub params: ModelParams,
    pub t_final: f64,
    pub initial: Fields,
}

/// Standard deviation of the Test 3 noise, variance `1e-10`.
pub const TEST3_NOISE_STD: f64 = 1e-5;
pub const TEST4_RADIUS: f64 = 0.1;
pub const TEST4_CENTERS: [(f64, f64); 2] = [(0.4, 0.5), (0.6, 0.5)];

fn uniform_open(rng: &mut ChaCha8Rng) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) / (1u64 << 53) as f64
}

/// Standard normal samples by the Box-Muller transform, both outputs used.
pub struct NormalSampler {
    rng: ChaCha8Rng,
    spare: Option<f64>,
}

impl NormalSampler {
    pub fn new(seed: u64) -> Self {
        Self { rng: ChaCha8Rng::seed_from_u64(seed), spare: None }
    }

    pub fn sample(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = uniform_open(&mut self.rng);
        let u2 = uniform_open(&mut self.rng);
        let r = libm::sqrt(-2.0 * libm::log(u1));
        let (s, c) = (libm::sin(2.0 * PI * u2), libm::cos(2.0 * PI * u2));
        self.spare = Some(r * s);
        r * c
    }
}

fn velocity_test12(grid: &MacGrid) -> (Mat, Mat) {
    let s = |t: f64| libm::sin(PI * t);
    (grid.sample_xface(|x, y| s(x) * s(y)), grid.sample_yface(|x, y| s(x) * libm::sin(2.0 * PI * y)))
}

fn density_test12(grid: &MacGrid) -> Mat {
    grid.sample_primal(|x, y| 1.25 + 0.1 * libm::cos(2.0 * PI * x) * libm::cos(PI * y))
}

/// `c0` of Test 4 at `(x, y)`.
pub fn kissing_bubbles(x: f64, y: f64, eps: f64) -> f64 {
    let w = 2.0 * eps * SQRT_2;
    TEST4_CENTERS.iter().fold(1.0, |acc, &(cx, cy)| {
        let r = libm::hypot(x - cx, y - cy);
        acc * libm::tanh((r - TEST4_RADIUS) / w)
    })
}

/// Builds the named scenario on an `m x m` grid. `seed` only affects Test 3.
pub fn scenario(name: ScenarioName, m: usize, seed: u64) -> Result<Scenario> {
    let grid = MacGrid::new(m)?;
    let mut params = ModelParams::default();
    let (t_final, initial) = match name {
        ScenarioName::Order => {
            let at = |k: usize| move |x: f64, y: f64| mms::exact(x, y, 0.0)[k];
            let initial = Fields {
                rho: grid.sample_primal(at(0)),
                v1: grid.sample_xface(at(1)),
                v2: grid.sample_yface(at(2)),
                c: grid.sample_primal(at(3)),
            };
            (0.01, initial)
        }
        ScenarioName::Test1 | ScenarioName::Test2 => {
            let (v1, v2) = velocity_test12(&grid);
            let mean = if name == ScenarioName::Test1 { 0.0 } else { 0.75 };
            let c = grid.sample_primal(|x, y| mean + 0.1 * libm::cos(PI * x) * libm::cos(PI * y));
            (1.0, Fields { rho: density_test12(&grid), v1, v2, c })
        }
        ScenarioName::Test3 => {
            params.nu = 1e-3;
            params.lambda = 1e-4;
            let mut normal = NormalSampler::new(seed);
            let mut f = Fields::uniform(&grid, 1.0, 0.0);
            f.c.as_mut_slice().iter_mut().for_each(|c| *c = TEST3_NOISE_STD * normal.sample());
            (1.0, f)
        }
        ScenarioName::Test4 => {
            params.cp = 1e4;
            params.nu = 0.1;
            params.lambda = 0.1;
            params.eps = 0.01;
            let mut f = Fields::uniform(&grid, 1.0, 0.0);
            f.c = grid.sample_primal(|x, y| kissing_bubbles(x, y, params.eps));
            (5e-3, f)
        }
    };
    Ok(Scenario { name, grid, params, t_final, initial })
}

impl Scenario {
    pub fn initial_state(&self) -> State {
        self.initial.to_state()
    }

    /// Source terms, present for the order test only.
    pub fn forcing(&self) -> Option<BoxedForcing> {
        if self.name != ScenarioName::Order {
            return None;
        }
        let (grid, params) = (self.grid, self.params);
        Some(Box::new(move |t| mms::forcing_state(&grid, t, &params)))
    }

    /// Exact conserved variables at `t` when known.
    pub fn exact(&self, t: f64) -> Option<State> {
        (self.name == ScenarioName::Order).then(|| mms::exact_state(&self.grid, t))
    }
}

/// `e_M = (1/M^2) sum |u - u_exact|` over all four conserved components on their own grids.
pub fn compute_error(u: &State, exact: &State) -> Result<f64> {
    let m = u.rho.rows();
    let mut sum = 0.0;
    for (a, b) in u.blocks().into_iter().zip(exact.blocks()) {
        b.ensure_shape(a.shape(), "compute_error")?;
        sum += a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y).abs()).sum::<f64>();
    }
    Ok(sum / (m * m) as f64)
}

/// `log2(e_M / e_2M)`.
pub fn eoc(e_coarse: f64, e_fine: f64) -> f64 {
    libm::log2(e_coarse / e_fine)
}
