//! Free-boundary extraction: marching-squares level sets of a chart
//! scalar field and radial boundary measurements.

use crate::error::Result;
use crate::field::ChartField;
use crate::grid::Chart;
use num_complex::Complex64;

/// A polyline segment of a level set, in chart coordinates.
#[derive(Debug, Clone, Copy)]
pub struct Segment {
    pub a: Complex64,
    pub b: Complex64,
}

/// Marching squares on one chart: segments of `{f = level}` over cells
/// whose four corners are active.
pub fn level_segments(field: &ChartField, chart: Chart, level: f64) -> Result<Vec<Segment>> {
    let g = field.grid;
    let v = field.values(chart)?;
    let mut segs = Vec::new();
    for i in 0..g.n - 1 {
        for j in 0..g.n - 1 {
            if !(g.active(i, j)
                && g.active(i, j + 1)
                && g.active(i + 1, j)
                && g.active(i + 1, j + 1))
            {
                continue;
            }
            let d = [
                v[g.idx(i, j)] - level,
                v[g.idx(i, j + 1)] - level,
                v[g.idx(i + 1, j + 1)] - level,
                v[g.idx(i + 1, j)] - level,
            ];
            if d.iter().any(|x| !x.is_finite()) {
                continue;
            }
            let corners = [
                g.coord(i, j),
                g.coord(i, j + 1),
                g.coord(i + 1, j + 1),
                g.coord(i + 1, j),
            ];
            let mut crossings: Vec<Complex64> = Vec::with_capacity(2);
            for e in 0..4 {
                let (da, db) = (d[e], d[(e + 1) % 4]);
                if (da > 0.0) != (db > 0.0) {
                    let s = da / (da - db);
                    crossings.push(corners[e] + (corners[(e + 1) % 4] - corners[e]) * s);
                }
            }
            // saddle cells (4 crossings) are split by the mean sign
            match crossings.len() {
                2 => segs.push(Segment {
                    a: crossings[0],
                    b: crossings[1],
                }),
                4 => {
                    let mean = 0.25 * d.iter().sum::<f64>();
                    let (p, q) = if mean > 0.0 { (0, 1) } else { (1, 2) };
                    segs.push(Segment {
                        a: crossings[p],
                        b: crossings[p + 2],
                    });
                    let _ = q;
                }
                _ => {}
            }
        }
    }
    Ok(segs)
}

/// Free boundary of the flow domain `{phi - psi > 0}`, extracted from the
/// square-rooted gap: `phi - psi` vanishes quadratically at the boundary,
/// so `sqrt(phi - psi)` crosses its (tiny) threshold linearly and the
/// crossing is located to `O(h^2)`.
pub fn free_boundary(phi: &ChartField, psi: &ChartField, chart: Chart) -> Result<Vec<Segment>> {
    let g = phi.grid;
    let tol = 1e-6 * phi.oscillation().max(1.0);
    let diff = ChartField {
        grid: g,
        z: root_gap_values(phi, psi, Chart::Z)?,
        w: root_gap_values(phi, psi, Chart::W)?,
        name: "sqrt(phi-psi)".to_string(),
        time: psi.time,
    };
    level_segments(&diff, chart, tol.sqrt())
}

/// `sqrt(max(a - b, 0))` nodewise; rim nodes are voided (NaN) because their
/// values come from cross-chart interpolation, whose O(h^2) error exceeds
/// the contact threshold and would fake a contour along the rim.
fn root_gap_values(a: &ChartField, b: &ChartField, chart: Chart) -> Result<Option<Vec<f64>>> {
    let g = a.grid;
    let av = a.values(chart)?;
    let bv = b.values(chart)?;
    let mut out: Vec<f64> = av
        .iter()
        .zip(bv)
        .map(|(x, y)| (x - y).max(0.0).sqrt())
        .collect();
    for i in 0..g.n {
        for j in 0..g.n {
            if g.active(i, j) && !g.interior(i, j) {
                out[g.idx(i, j)] = f64::NAN;
            }
        }
    }
    Ok(Some(out))
}

/// Min, mean and max distance of free-boundary segment endpoints from a
/// chart point.  Used to measure the radius of a circular boundary.
pub fn boundary_radius_stats(segs: &[Segment], center: Complex64) -> Option<(f64, f64, f64)> {
    if segs.is_empty() {
        return None;
    }
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    let mut sum = 0.0;
    let mut cnt = 0usize;
    for s in segs {
        for p in [s.a, s.b] {
            let r = (p - center).norm();
            lo = lo.min(r);
            hi = hi.max(r);
            sum += r;
            cnt += 1;
        }
    }
    Some((lo, sum / cnt as f64, hi))
}

/// Total polyline length of a segment set.
pub fn total_length(segs: &[Segment]) -> f64 {
    segs.iter().map(|s| (s.b - s.a).norm()).sum()
}
