//! MAC staggered-grid geometry, state storage and primal/dual transfers.
//!
//! All indices are 0-based. On an `M x M` grid with spacing `h = 1/M`:
//!
//! * primal (cell-center) node `(i, j)` sits at `((i + 1/2) h, (j + 1/2) h)`, `i, j < M`;
//! * x-face field entry `(f, j)`, `f < M - 1`, sits at `((f + 1) h, (j + 1/2) h)`;
//! * y-face field entry `(i, g)`, `g < M - 1`, sits at `((i + 1/2) h, (g + 1) h)`.
//!
//! Faces on the walls (`x = 0, 1` for `v1`, `y = 0, 1` for `v2`) are not stored; the
//! no-slip condition pins them to zero.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::mat::Mat;

/// Six-point interpolation weights between primal and dual points, in units of 1/256.
pub const TRANSFER6_WEIGHTS: [f64; 6] = [3.0, -25.0, 150.0, 150.0, -25.0, 3.0];

/// Ghost layers carried on each side by [`GhostField`].
pub const GHOST: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    X,
    Y,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    Symmetric,
    Antisymmetric,
}

/// Whether a field is cell-centered or face-centered along an axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Location {
    Cell,
    Face,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    PrimalToDual,
    DualToPrimal,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MacGrid {
    m: usize,
    h: f64,
}

impl MacGrid {
    pub const MIN_CELLS: usize = 4;

    pub fn new(m: usize) -> Result<Self> {
        if m < Self::MIN_CELLS {
            return Err(Error::Config(alloc::format!(
                "grid needs at least {} cells per direction, got {m}",
                Self::MIN_CELLS
            )));
        }
        Ok(Self { m, h: 1.0 / m as f64 })
    }

    #[inline]
    pub fn m(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn primal_shape(&self) -> (usize, usize) {
        (self.m, self.m)
    }

    pub fn xface_shape(&self) -> (usize, usize) {
        (self.m - 1, self.m)
    }

    pub fn yface_shape(&self) -> (usize, usize) {
        (self.m, self.m - 1)
    }

    /// Length of the flattened state `[rho; m1; m2; q]`.
    pub fn state_len(&self) -> usize {
        2 * self.m * self.m + 2 * self.m * (self.m - 1)
    }

    #[inline]
    pub fn primal_point(&self, i: usize, j: usize) -> (f64, f64) {
        ((i as f64 + 0.5) * self.h, (j as f64 + 0.5) * self.h)
    }

    #[inline]
    pub fn xface_point(&self, f: usize, j: usize) -> (f64, f64) {
        ((f as f64 + 1.0) * self.h, (j as f64 + 0.5) * self.h)
    }

    #[inline]
    pub fn yface_point(&self, i: usize, g: usize) -> (f64, f64) {
        ((i as f64 + 0.5) * self.h, (g as f64 + 1.0) * self.h)
    }

    pub fn sample_primal(&self, f: impl Fn(f64, f64) -> f64) -> Mat {
        Mat::from_fn(self.m, self.m, |i, j| {
            let (x, y) = self.primal_point(i, j);
            f(x, y)
        })
    }

    pub fn sample_xface(&self, f: impl Fn(f64, f64) -> f64) -> Mat {
        Mat::from_fn(self.m - 1, self.m, |i, j| {
            let (x, y) = self.xface_point(i, j);
            f(x, y)
        })
    }

    pub fn sample_yface(&self, f: impl Fn(f64, f64) -> f64) -> Mat {
        Mat::from_fn(self.m, self.m - 1, |i, j| {
            let (x, y) = self.yface_point(i, j);
            f(x, y)
        })
    }
}

/// Two-point average of a primal field onto the interior faces normal to `axis`.
pub fn to_staggered(rho: &Mat, axis: Axis) -> Result<Mat> {
    let (r, c) = rho.shape();
    if r != c {
        return Err(Error::Shape { context: "to_staggered", expected: (r, r), found: (r, c) });
    }
    let m = r;
    Ok(match axis {
        Axis::X => Mat::from_fn(m - 1, m, |f, j| 0.5 * (rho[(f, j)] + rho[(f + 1, j)])),
        Axis::Y => Mat::from_fn(m, m - 1, |i, g| 0.5 * (rho[(i, g)] + rho[(i, g + 1)])),
    })
}

/// A field padded with reflected ghost layers along one axis.
///
/// For cell-centered data the logical index runs over `-3..M+3`; for face-centered data it
/// is the face number, `-3..=M+3`, with the walls at `0` and `M`.
#[derive(Clone, Debug)]
pub struct GhostField {
    axis: Axis,
    location: Location,
    parity: Parity,
    m: usize,
    /// Extent along the other axis.
    n: usize,
    /// Logical index of `buf[0]` along `axis`.
    start: isize,
    len: usize,
    buf: Vec<f64>,
}

impl GhostField {
    #[inline]
    pub fn get(&self, k: isize, other: usize) -> f64 {
        let idx = (k - self.start) as usize;
        debug_assert!(idx < self.len && other < self.n);
        self.buf[idx + self.len * other]
    }

    pub fn axis(&self) -> Axis {
        self.axis
    }

    pub fn location(&self) -> Location {
        self.location
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn cells(&self) -> usize {
        self.m
    }

    pub fn cross_len(&self) -> usize {
        self.n
    }

    /// Logical index range covered along the axis.
    pub fn range(&self) -> core::ops::Range<isize> {
        self.start..self.start + self.len as isize
    }

    /// Face-centered data already given on every face `0..=M`, walls included.
    pub fn from_full_faces(full: &Mat, axis: Axis, parity: Parity) -> Self {
        let (along, n) = along_cross(full, axis);
        let m = along - 1;
        let start = -(GHOST as isize);
        let len = m + 1 + 2 * GHOST;
        let mut buf = Vec::with_capacity(len * n);
        let sign = parity_sign(parity);
        for o in 0..n {
            for idx in 0..len {
                let k = start + idx as isize;
                let (src, s) = if k < 0 {
                    (-k, sign)
                } else if k > m as isize {
                    (2 * m as isize - k, sign)
                } else {
                    (k, 1.0)
                };
                buf.push(s * at_along(full, axis, src as usize, o));
            }
        }
        Self { axis, location: Location::Face, parity, m, n, start, len, buf }
    }

    /// Interior values with the ghost layers stripped.
    pub fn interior(&self) -> Mat {
        let (lo, hi) = match self.location {
            Location::Cell => (0, self.m as isize),
            Location::Face => (1, self.m as isize),
        };
        let count = (hi - lo) as usize;
        match self.axis {
            Axis::X => Mat::from_fn(count, self.n, |i, o| self.get(lo + i as isize, o)),
            Axis::Y => Mat::from_fn(self.n, count, |o, j| self.get(lo + j as isize, o)),
        }
    }
}

fn parity_sign(p: Parity) -> f64 {
    match p {
        Parity::Symmetric => 1.0,
        Parity::Antisymmetric => -1.0,
    }
}

fn along_cross(f: &Mat, axis: Axis) -> (usize, usize) {
    match axis {
        Axis::X => (f.rows(), f.cols()),
        Axis::Y => (f.cols(), f.rows()),
    }
}

#[inline]
fn at_along(f: &Mat, axis: Axis, k: usize, o: usize) -> f64 {
    match axis {
        Axis::X => f[(k, o)],
        Axis::Y => f[(o, k)],
    }
}

/// Extends `f` by reflection across the walls normal to `axis`.
///
/// Cell-centered data (`M` entries along the axis) mirrors across the wall half a cell away.
/// Face-centered data (`M - 1` interior entries) must be antisymmetric: the wall value is 0
/// and ghosts are odd mirrors around it.
pub fn reflect_extend(f: &Mat, parity: Parity, axis: Axis, location: Location) -> Result<GhostField> {
    let (along, n) = along_cross(f, axis);
    match location {
        Location::Cell => {
            let m = along;
            let start = -(GHOST as isize);
            let len = m + 2 * GHOST;
            let sign = parity_sign(parity);
            let mut buf = Vec::with_capacity(len * n);
            for o in 0..n {
                for idx in 0..len {
                    let k = start + idx as isize;
                    let (src, s) = if k < 0 {
                        (-1 - k, sign)
                    } else if k >= m as isize {
                        (2 * m as isize - 1 - k, sign)
                    } else {
                        (k, 1.0)
                    };
                    buf.push(s * at_along(f, axis, src as usize, o));
                }
            }
            Ok(GhostField { axis, location, parity, m, n, start, len, buf })
        }
        Location::Face => {
            if parity != Parity::Antisymmetric {
                return Err(Error::config(
                    "symmetric extension of face data needs wall values; use GhostField::from_full_faces",
                ));
            }
            let m = along + 1;
            let full = match axis {
                Axis::X => Mat::from_fn(m + 1, n, |k, o| if k == 0 || k == m { 0.0 } else { f[(k - 1, o)] }),
                Axis::Y => Mat::from_fn(n, m + 1, |o, k| if k == 0 || k == m { 0.0 } else { f[(o, k - 1)] }),
            };
            Ok(GhostField::from_full_faces(&full, axis, Parity::Antisymmetric))
        }
    }
}

/// Six-point weighted transfer on one line: `sum_k w_k * v(base + k)`, `k = 0..6`.
#[inline]
pub(crate) fn transfer6_at(v: impl Fn(isize) -> f64, base: isize) -> f64 {
    let w = &TRANSFER6_WEIGHTS;
    (w[0] * v(base) + w[1] * v(base + 1) + w[2] * v(base + 2) + w[3] * v(base + 3) + w[4] * v(base + 4)
        + w[5] * v(base + 5))
        / 256.0
}

/// Sixth-order transfer between primal and dual points along the extended axis.
///
/// `PrimalToDual` needs cell-centered input and returns interior faces (`M - 1` along the
/// axis); `DualToPrimal` needs face-centered input and returns the `M` cells.
pub fn transfer6(src: &GhostField, direction: Direction) -> Result<Mat> {
    let m = src.m;
    let n = src.n;
    let axis = src.axis;
    match (direction, src.location) {
        (Direction::PrimalToDual, Location::Cell) => {
            // face f takes cells f-3 .. f+2
            let val = |f: usize, o: usize| transfer6_at(|k| src.get(k, o), f as isize - 3);
            Ok(match axis {
                Axis::X => Mat::from_fn(m - 1, n, |f, o| val(f + 1, o)),
                Axis::Y => Mat::from_fn(n, m - 1, |o, g| val(g + 1, o)),
            })
        }
        (Direction::DualToPrimal, Location::Face) => {
            // cell a takes faces a-2 .. a+3
            let val = |a: usize, o: usize| transfer6_at(|k| src.get(k, o), a as isize - 2);
            Ok(match axis {
                Axis::X => Mat::from_fn(m, n, val),
                Axis::Y => Mat::from_fn(n, m, |o, a| val(a, o)),
            })
        }
        _ => Err(Error::config("transfer6 direction does not match the source location")),
    }
}

/// Transfer of cell data to every face `0..=M`, walls included.
pub fn transfer6_all_faces(src: &GhostField) -> Result<Mat> {
    if src.location != Location::Cell {
        return Err(Error::config("transfer6_all_faces needs cell-centered input"));
    }
    let m = src.m;
    let val = |f: usize, o: usize| transfer6_at(|k| src.get(k, o), f as isize - 3);
    Ok(match src.axis {
        Axis::X => Mat::from_fn(m + 1, src.n, val),
        Axis::Y => Mat::from_fn(src.n, m + 1, |o, g| val(g, o)),
    })
}

/// Primitive variables: density, face velocities and order parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct Fields {
    pub rho: Mat,
    pub v1: Mat,
    pub v2: Mat,
    pub c: Mat,
}

/// Conserved variables `[rho; rho_x * v1; rho_y * v2; rho * c]`, the unknowns of the ODE system.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub rho: Mat,
    pub m1: Mat,
    pub m2: Mat,
    pub q: Mat,
}

impl Fields {
    pub fn check_shapes(&self, grid: &MacGrid) -> Result<()> {
        self.rho.ensure_shape(grid.primal_shape(), "fields.rho")?;
        self.v1.ensure_shape(grid.xface_shape(), "fields.v1")?;
        self.v2.ensure_shape(grid.yface_shape(), "fields.v2")?;
        self.c.ensure_shape(grid.primal_shape(), "fields.c")
    }

    pub fn m1(&self) -> Mat {
        to_staggered(&self.rho, Axis::X).and_then(|r| r.hadamard(&self.v1)).expect("consistent shapes")
    }

    pub fn m2(&self) -> Mat {
        to_staggered(&self.rho, Axis::Y).and_then(|r| r.hadamard(&self.v2)).expect("consistent shapes")
    }

    pub fn q(&self) -> Mat {
        self.rho.hadamard(&self.c).expect("consistent shapes")
    }

    pub fn to_state(&self) -> State {
        State { rho: self.rho.clone(), m1: self.m1(), m2: self.m2(), q: self.q() }
    }

    pub fn is_finite(&self) -> bool {
        self.rho.is_finite() && self.v1.is_finite() && self.v2.is_finite() && self.c.is_finite()
    }

    /// Uniform state at rest.
    pub fn uniform(grid: &MacGrid, rho: f64, c: f64) -> Self {
        let (m, m1) = (grid.m(), grid.m() - 1);
        Self {
            rho: Mat::filled(m, m, rho),
            v1: Mat::zeros(m1, m),
            v2: Mat::zeros(m, m1),
            c: Mat::filled(m, m, c),
        }
    }
}

impl State {
    pub fn zeros(grid: &MacGrid) -> Self {
        let (m, m1) = (grid.m(), grid.m() - 1);
        Self { rho: Mat::zeros(m, m), m1: Mat::zeros(m1, m), m2: Mat::zeros(m, m1), q: Mat::zeros(m, m) }
    }

    /// Recovers primitives; fails if the density is not positive.
    pub fn to_fields(&self) -> Result<Fields> {
        check_positive(&self.rho, "state density")?;
        let rx = to_staggered(&self.rho, Axis::X)?;
        let ry = to_staggered(&self.rho, Axis::Y)?;
        Ok(Fields {
            v1: self.m1.zip_map(&rx, "v1", |m, r| m / r)?,
            v2: self.m2.zip_map(&ry, "v2", |m, r| m / r)?,
            c: self.q.zip_map(&self.rho, "c", |q, r| q / r)?,
            rho: self.rho.clone(),
        })
    }

    /// `self += s * other`, block by block.
    pub fn axpy(&mut self, s: f64, other: &State) -> Result<()> {
        self.rho.axpy(s, &other.rho)?;
        self.m1.axpy(s, &other.m1)?;
        self.m2.axpy(s, &other.m2)?;
        self.q.axpy(s, &other.q)
    }

    pub fn blocks(&self) -> [&Mat; 4] {
        [&self.rho, &self.m1, &self.m2, &self.q]
    }

    pub fn max_abs_diff(&self, other: &State) -> f64 {
        self.blocks().iter().zip(other.blocks()).fold(0.0, |m, (a, b)| m.max(a.max_abs_diff(b)))
    }

    /// Full-state vectorization `[vec(rho); vec(m1); vec(m2); vec(q)]`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.blocks().iter().map(|b| b.as_slice().len()).sum());
        for b in self.blocks() {
            out.extend_from_slice(b.as_slice());
        }
        out
    }

    pub fn from_vec(grid: &MacGrid, v: &[f64]) -> Result<Self> {
        let n = grid.state_len();
        if v.len() != n {
            return Err(Error::Shape { context: "state vector", expected: (n, 1), found: (v.len(), 1) });
        }
        let (m, m1) = (grid.m(), grid.m() - 1);
        let (p, f) = (m * m, m * m1);
        let take = |lo: usize, len: usize, r: usize, c: usize| Mat::from_col_major(r, c, v[lo..lo + len].to_vec());
        Ok(Self {
            rho: take(0, p, m, m)?,
            m1: take(p, f, m1, m)?,
            m2: take(p + f, f, m, m1)?,
            q: take(p + 2 * f, p, m, m)?,
        })
    }
}

pub(crate) fn check_positive(rho: &Mat, context: &'static str) -> Result<()> {
    let min = rho.min();
    if !(min > 0.0) {
        return Err(Error::Positivity { context, min });
    }
    Ok(())
}
