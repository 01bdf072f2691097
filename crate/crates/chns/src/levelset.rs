//! Marching-squares extraction of the zero level set of a primal field.

use chns_core::{MacGrid, Mat};

/// A straight piece of the level set between two edge crossings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub a: (f64, f64),
    pub b: (f64, f64),
}

fn crossing(p: (f64, f64), q: (f64, f64), fp: f64, fq: f64) -> (f64, f64) {
    let s = fp / (fp - fq);
    (p.0 + s * (q.0 - p.0), p.1 + s * (q.1 - p.1))
}

/// Segments of `{c = 0}` over the squares spanned by neighbouring cell centers. Saddle
/// squares are resolved with the mean of the four corners.
pub fn zero_level_set(grid: &MacGrid, c: &Mat) -> Vec<Segment> {
    let m = grid.m();
    let mut out = Vec::new();
    for j in 0..m - 1 {
        for i in 0..m - 1 {
            let idx = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            let pts = idx.map(|(a, b)| grid.primal_point(a, b));
            let v = idx.map(|k| c[k]);
            let inside = v.map(|x| x >= 0.0);
            let mut cuts = Vec::with_capacity(4);
            for e in 0..4 {
                let n = (e + 1) % 4;
                if inside[e] != inside[n] {
                    cuts.push(crossing(pts[e], pts[n], v[e], v[n]));
                }
            }
            match cuts.len() {
                2 => out.push(Segment { a: cuts[0], b: cuts[1] }),
                4 => {
                    // cuts lie on edges 0-1, 1-2, 2-3, 3-0; pair them so the centre sign is kept
                    let centre = 0.25 * v.iter().sum::<f64>();
                    if (centre >= 0.0) == inside[0] {
                        out.push(Segment { a: cuts[0], b: cuts[1] });
                        out.push(Segment { a: cuts[2], b: cuts[3] });
                    } else {
                        out.push(Segment { a: cuts[3], b: cuts[0] });
                        out.push(Segment { a: cuts[1], b: cuts[2] });
                    }
                }
                _ => {}
            }
        }
    }
    out
}
