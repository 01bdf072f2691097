//! Diagnostics series, cell-centered snapshots (CSV and legacy VTK) and EOC tables.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use chns_core::diagnostics::Diagnostics;
use chns_core::{Fields, MacGrid, ModelParams};

use crate::error::{AppError, AppResult};
use crate::levelset::Segment;

pub const DIAGNOSTICS_HEADER: &str = "t,dt,cs,err_rho,err_q,cmin,cmax,rhomin,it_ch,it_vel";
pub const SNAPSHOT_HEADER: &str = "x,y,rho,v1c,v2c,c,p";

pub fn create_dir(dir: &Path) -> AppResult<()> {
    fs::create_dir_all(dir).map_err(|e| AppError::io(dir, e))
}

fn create(path: &Path) -> AppResult<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|e| AppError::io(path, e))
}

/// Appends rows to `diagnostics.csv`, flushing after each one.
pub struct DiagnosticsWriter {
    path: PathBuf,
    out: BufWriter<File>,
    last_t: f64,
}

impl DiagnosticsWriter {
    pub fn create(path: impl Into<PathBuf>) -> AppResult<Self> {
        let path = path.into();
        let mut out = create(&path)?;
        writeln!(out, "{DIAGNOSTICS_HEADER}").map_err(|e| AppError::io(&path, e))?;
        Ok(Self { path, out, last_t: f64::NEG_INFINITY })
    }

    pub fn append(&mut self, d: &Diagnostics) -> AppResult<()> {
        debug_assert!(d.t >= self.last_t, "diagnostics must be written in time order");
        self.last_t = d.t;
        writeln!(
            self.out,
            "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{},{}",
            d.t, d.dt, d.cs, d.err_rho, d.err_q, d.cmin, d.cmax, d.rhomin, d.it_ch, d.it_vel
        )
        .and_then(|_| self.out.flush())
        .map_err(|e| AppError::io(&self.path, e))
    }
}

/// One cell-center row of a snapshot.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SnapshotRow {
    pub x: f64,
    pub y: f64,
    pub rho: f64,
    pub v1c: f64,
    pub v2c: f64,
    pub c: f64,
    pub p: f64,
}

/// Face velocities averaged to cell centers, wall faces counted as zero.
pub fn center_velocities(f: &Fields) -> (Vec<f64>, Vec<f64>) {
    let m = f.rho.rows();
    let face1 = |k: usize, j: usize| if k == 0 || k == m { 0.0 } else { f.v1[(k - 1, j)] };
    let face2 = |i: usize, k: usize| if k == 0 || k == m { 0.0 } else { f.v2[(i, k - 1)] };
    let mut v1c = Vec::with_capacity(m * m);
    let mut v2c = Vec::with_capacity(m * m);
    for j in 0..m {
        for i in 0..m {
            v1c.push(0.5 * (face1(i, j) + face1(i + 1, j)));
            v2c.push(0.5 * (face2(i, j) + face2(i, j + 1)));
        }
    }
    (v1c, v2c)
}

pub fn snapshot_rows(grid: &MacGrid, f: &Fields, params: &ModelParams) -> Vec<SnapshotRow> {
    let m = grid.m();
    let (v1c, v2c) = center_velocities(f);
    let mut rows = Vec::with_capacity(m * m);
    for j in 0..m {
        for i in 0..m {
            let (x, y) = grid.primal_point(i, j);
            let rho = f.rho[(i, j)];
            rows.push(SnapshotRow { x, y, rho, v1c: v1c[i + m * j], v2c: v2c[i + m * j], c: f.c[(i, j)], p: params.pressure(rho) });
        }
    }
    rows
}

pub fn write_snapshot_csv(path: &Path, rows: &[SnapshotRow]) -> AppResult<()> {
    let mut out = create(path)?;
    let io = |e| AppError::io(path, e);
    writeln!(out, "{SNAPSHOT_HEADER}").map_err(io)?;
    for r in rows {
        writeln!(out, "{:e},{:e},{:e},{:e},{:e},{:e},{:e}", r.x, r.y, r.rho, r.v1c, r.v2c, r.c, r.p).map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn read_snapshot_csv(path: &Path) -> AppResult<Vec<SnapshotRow>> {
    let file = File::open(path).map_err(|e| AppError::io(path, e))?;
    let mut rows = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| AppError::io(path, e))?;
        if n == 0 {
            if line.trim() != SNAPSHOT_HEADER {
                return Err(AppError::Config(format!("{}: unexpected header `{line}`", path.display())));
            }
            continue;
        }
        let v: Vec<f64> = line
            .split(',')
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| AppError::Config(format!("{}: line {} is not numeric", path.display(), n + 1)))?;
        if v.len() != 7 {
            return Err(AppError::Config(format!("{}: line {} has {} columns", path.display(), n + 1, v.len())));
        }
        rows.push(SnapshotRow { x: v[0], y: v[1], rho: v[2], v1c: v[3], v2c: v[4], c: v[5], p: v[6] });
    }
    Ok(rows)
}

/// Legacy-VTK ASCII `STRUCTURED_POINTS` file with the primal fields and center velocity.
pub fn write_vtk(path: &Path, grid: &MacGrid, f: &Fields, params: &ModelParams, t: f64) -> AppResult<()> {
    let m = grid.m();
    let h = grid.h();
    let mut out = create(path)?;
    let io = |e| AppError::io(path, e);
    let (v1c, v2c) = center_velocities(f);
    let mut text = String::new();
    use std::fmt::Write as _;
    let _ = writeln!(text, "# vtk DataFile Version 3.0");
    let _ = writeln!(text, "chns snapshot t={t:e}");
    let _ = writeln!(text, "ASCII\nDATASET STRUCTURED_POINTS");
    let _ = writeln!(text, "DIMENSIONS {m} {m} 1");
    let _ = writeln!(text, "ORIGIN {:e} {:e} 0", 0.5 * h, 0.5 * h);
    let _ = writeln!(text, "SPACING {h:e} {h:e} 1");
    let _ = writeln!(text, "POINT_DATA {}", m * m);
    let p = f.rho.map(|r| params.pressure(r));
    for (name, val) in [("rho", &f.rho), ("c", &f.c), ("p", &p)] {
        let _ = writeln!(text, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for j in 0..m {
            for i in 0..m {
                let _ = writeln!(text, "{:e}", val[(i, j)]);
            }
        }
    }
    let _ = writeln!(text, "VECTORS velocity double");
    for k in 0..m * m {
        let _ = writeln!(text, "{:e} {:e} 0", v1c[k], v2c[k]);
    }
    out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(io)
}

/// Zero-level-set segments as `x0,y0,x1,y1` rows.
pub fn write_segments(path: &Path, segments: &[Segment]) -> AppResult<()> {
    let mut out = create(path)?;
    let io = |e| AppError::io(path, e);
    writeln!(out, "x0,y0,x1,y1").map_err(io)?;
    for s in segments {
        writeln!(out, "{:e},{:e},{:e},{:e}", s.a.0, s.a.1, s.b.0, s.b.1).map_err(io)?;
    }
    out.flush().map_err(io)
}

/// `M,e_M,EOC_M` with an empty EOC on the finest level.
pub fn write_eoc_table(path: &Path, levels: &[(usize, f64)]) -> AppResult<()> {
    let mut out = create(path)?;
    let io = |e| AppError::io(path, e);
    writeln!(out, "M,e_M,EOC_M").map_err(io)?;
    for (k, &(m, e)) in levels.iter().enumerate() {
        match levels.get(k + 1) {
            Some(&(_, fine)) => writeln!(out, "{m},{e:e},{:.4}", chns_core::scenario::eoc(e, fine)),
            None => writeln!(out, "{m},{e:e},"),
        }
        .map_err(io)?;
    }
    out.flush().map_err(io)
}

/// File stem for a snapshot at time `t`.
pub fn snapshot_stem(t: f64) -> String {
    format!("snapshot_t{t:.6}")
}
