//! Real-valued grid samples of global functions on the sphere.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{Chart, SphereGrid};

/// A real-valued sample of a function on the sphere stored on one or both
/// charts.  For a genuine global function the two charts agree on the
/// overlap: `value_W(w) = value_Z(1/w)`.  Local Fubini-Study potentials
/// (see [`ChartField::fs_potential`]) are the one deliberate exception:
/// there the per-chart arrays differ by the transition `-ln|w|^2`.
#[derive(Debug, Clone)]
pub struct ChartField {
    pub grid: SphereGrid,
    pub z: Option<Vec<f64>>,
    pub w: Option<Vec<f64>>,
    pub name: String,
    pub time: Option<f64>,
}

impl ChartField {
    pub fn zeros(grid: SphereGrid, name: &str) -> Self {
        ChartField {
            grid,
            z: Some(vec![0.0; grid.len()]),
            w: Some(vec![0.0; grid.len()]),
            name: name.to_string(),
            time: None,
        }
    }

    /// Build a field from per-chart evaluation closures (each gets the
    /// chart's own coordinate).  Inactive nodes are set to 0.
    pub fn from_chart_fns(
        grid: SphereGrid,
        name: &str,
        fz: impl Fn(Complex64) -> f64,
        fw: impl Fn(Complex64) -> f64,
    ) -> Self {
        let eval = |f: &dyn Fn(Complex64) -> f64| -> Vec<f64> {
            let mut v = vec![0.0; grid.len()];
            for i in 0..grid.n {
                for j in 0..grid.n {
                    if grid.active(i, j) {
                        v[grid.idx(i, j)] = f(grid.coord(i, j));
                    }
                }
            }
            v
        };
        ChartField {
            grid,
            z: Some(eval(&fz)),
            w: Some(eval(&fw)),
            name: name.to_string(),
            time: None,
        }
    }

    /// Build a field sampling one global function `f(z)`.  On the W chart
    /// `f` is evaluated at `z = 1/w`; `f_at_infinity` supplies the value at
    /// `w = 0`.
    pub fn from_global(
        grid: SphereGrid,
        name: &str,
        f: impl Fn(Complex64) -> f64 + Copy,
        f_at_infinity: f64,
    ) -> Self {
        Self::from_chart_fns(grid, name, f, |w| {
            if w.norm() == 0.0 {
                f_at_infinity
            } else {
                f(w.inv())
            }
        })
    }

    /// Local Fubini-Study potentials: `ln(1+|z|^2)` on the Z chart and
    /// `ln(1+|w|^2)` on the W chart.  Not a global function; its chartwise
    /// `dd^c` is the Fubini-Study form with total mass 1.
    pub fn fs_potential(grid: SphereGrid) -> Self {
        Self::from_chart_fns(grid, "fs", |c| (1.0 + c.norm_sqr()).ln(), |c| (1.0 + c.norm_sqr()).ln())
    }

    pub fn values(&self, chart: Chart) -> Result<&[f64]> {
        let v = match chart {
            Chart::Z => self.z.as_deref(),
            Chart::W => self.w.as_deref(),
        };
        v.ok_or(Error::MissingChart { chart })
    }

    pub fn values_mut(&mut self, chart: Chart) -> &mut Vec<f64> {
        let slot = match chart {
            Chart::Z => &mut self.z,
            Chart::W => &mut self.w,
        };
        slot.get_or_insert_with(|| vec![0.0; self.grid.len()])
    }

    /// Evaluate the field at a global coordinate `z`, picking the owning
    /// chart and falling back to the other one near the seam.
    pub fn eval_global(&self, z: Complex64) -> Option<f64> {
        let r = z.norm();
        let (first, second) = if r <= 1.0 { (Chart::Z, Chart::W) } else { (Chart::W, Chart::Z) };
        for chart in [first, second] {
            let p = match chart {
                Chart::Z => z,
                Chart::W => {
                    if r == 0.0 {
                        continue;
                    }
                    z.inv()
                }
            };
            if let Ok(vals) = self.values(chart) {
                if let Some(v) = self.grid.interp(vals, p) {
                    return Some(v);
                }
            }
        }
        None
    }

    /// Max and oscillation of the finite entries over active nodes.
    pub fn finite_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for chart in [Chart::Z, Chart::W] {
            if let Ok(vals) = self.values(chart) {
                for i in 0..self.grid.n {
                    for j in 0..self.grid.n {
                        if self.grid.active(i, j) {
                            let v = vals[self.grid.idx(i, j)];
                            if v.is_finite() {
                                lo = lo.min(v);
                                hi = hi.max(v);
                            }
                        }
                    }
                }
            }
        }
        (lo, hi)
    }

    pub fn oscillation(&self) -> f64 {
        let (lo, hi) = self.finite_range();
        if lo.is_finite() && hi.is_finite() {
            hi - lo
        } else {
            0.0
        }
    }
}

/// Populate `target` by bilinear interpolation through `w = 1/z`.
///
/// Target nodes whose image lies inside the source chart's reach get the
/// interpolated value; nodes out of reach keep the target chart's own data
/// when present.  A node unreachable from either chart is a hard error.
pub fn chart_transfer(field: &ChartField, target: Chart) -> Result<ChartField> {
    let grid = field.grid;
    let source = target.other();
    let src = field.values(source)?.to_vec();
    let existing = match target {
        Chart::Z => field.z.clone(),
        Chart::W => field.w.clone(),
    };
    let mut out = vec![0.0; grid.len()];
    for i in 0..grid.n {
        for j in 0..grid.n {
            if !grid.active(i, j) {
                continue;
            }
            let c = grid.coord(i, j);
            let k = grid.idx(i, j);
            let image = if c.norm() == 0.0 { None } else { Some(c.inv()) };
            // Bilinear interpolation needs a complete cell; in the thin band
            // where the image lands in a rim cell of the source disc, fall
            // back to the nearest active source node (first-order accurate).
            let interpolated = image.and_then(|p| {
                grid.interp(&src, p).or_else(|| {
                    grid.nearest_node(p).and_then(|(si, sj)| {
                        if grid.active(si, sj) {
                            Some(src[grid.idx(si, sj)])
                        } else {
                            None
                        }
                    })
                })
            });
            match interpolated {
                Some(v) => out[k] = v,
                None => match &existing {
                    Some(own) => out[k] = own[k],
                    None => {
                        return Err(Error::TransferOutOfRange { z: (c.re, c.im) });
                    }
                },
            }
        }
    }
    let mut result = field.clone();
    match target {
        Chart::Z => result.z = Some(out),
        Chart::W => result.w = Some(out),
    }
    Ok(result)
}

/// Max disagreement of the two charts on the overlap annulus, as samples of
/// one global function.
pub fn overlap_disagreement(field: &ChartField) -> Result<f64> {
    let grid = field.grid;
    let vz = field.values(Chart::Z)?;
    let vw = field.values(Chart::W)?;
    let mut worst: f64 = 0.0;
    for i in 0..grid.n {
        for j in 0..grid.n {
            if !grid.active(i, j) {
                continue;
            }
            let z = grid.coord(i, j);
            let r = z.norm();
            if r < 1.0 / grid.extent + grid.h || r > grid.extent - grid.h {
                continue;
            }
            if let Some(vw_here) = grid.interp(vw, z.inv()) {
                let a = vz[grid.idx(i, j)];
                if a.is_finite() && vw_here.is_finite() {
                    worst = worst.max((a - vw_here).abs());
                }
            }
        }
    }
    Ok(worst)
}
