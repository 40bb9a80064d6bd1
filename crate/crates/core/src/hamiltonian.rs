//! The Hamiltonian `H(z, s)`: the s-derivative of the product-space
//! solution along the radial disc direction, recovered exactly from the
//! Legendre maximiser (`H = t* - 1`), plus the exit-time cross-check and
//! the product-space region where `H` stays strictly between two levels.

use crate::envelope::FlowFamily;
use crate::error::{Error, Result};
use crate::grid::{Chart, SphereGrid};
use crate::legendre::HmaeSolution;
use num_complex::Complex64;

/// `H` sampled on the same (node) x (s-grid) product as [`HmaeSolution`],
/// node-major.  Always in `[-1, 0]` and nondecreasing in `s`.
#[derive(Debug, Clone)]
pub struct HamiltonianField {
    pub grid: SphereGrid,
    pub s_grid: Vec<f64>,
    pub values: [Vec<f64>; 2],
}

fn chart_index(chart: Chart) -> usize {
    match chart {
        Chart::Z => 0,
        Chart::W => 1,
    }
}

impl HamiltonianField {
    pub fn ns(&self) -> usize {
        self.s_grid.len()
    }

    pub fn profile(&self, chart: Chart, node: usize) -> &[f64] {
        let ns = self.ns();
        &self.values[chart_index(chart)][node * ns..(node + 1) * ns]
    }

    /// Bilinear interpolation of `H(., s_grid[si])` at a point of the
    /// sphere, choosing the owning chart.
    pub fn interp_at(&self, z: Complex64, si: usize) -> Option<f64> {
        let g = self.grid;
        let (chart, c) = if z.norm() <= 1.0 {
            (Chart::Z, z)
        } else {
            (Chart::W, 1.0 / z)
        };
        let r = g.extent;
        let x = (c.re + r) / g.h;
        let y = (c.im + r) / g.h;
        let j0 = x.floor() as isize;
        let i0 = y.floor() as isize;
        if i0 < 0 || j0 < 0 || i0 + 1 >= g.n as isize || j0 + 1 >= g.n as isize {
            return None;
        }
        let (i0, j0) = (i0 as usize, j0 as usize);
        let fx = x - j0 as f64;
        let fy = y - i0 as f64;
        let ns = self.ns();
        let ci = chart_index(chart);
        let mut acc = 0.0;
        for (di, wy) in [(0usize, 1.0 - fy), (1, fy)] {
            for (dj, wx) in [(0usize, 1.0 - fx), (1, fx)] {
                if !g.active(i0 + di, j0 + dj) {
                    return None;
                }
                let node = g.idx(i0 + di, j0 + dj);
                acc += wy * wx * self.values[ci][node * ns + si];
            }
        }
        Some(acc)
    }
}

/// `H(z, s) = t_grid[argmax] - 1`.  The largest-maximiser tie rule makes
/// this the right derivative of the convex profile `s -> PhiTilde(z, s)`,
/// in particular at `s = 0`.
#[allow(non_snake_case)]
pub fn compute_H(sol: &HmaeSolution) -> HamiltonianField {
    let ns = sol.ns();
    let len = sol.grid.len();
    let mut values = [vec![f64::NAN; len * ns], vec![f64::NAN; len * ns]];
    for c in 0..2 {
        for (v, &a) in values[c].iter_mut().zip(&sol.argmax[c]) {
            *v = sol.t_grid[a as usize] - 1.0;
        }
    }
    HamiltonianField {
        grid: sol.grid,
        s_grid: sol.s_grid.clone(),
        values,
    }
}

/// `sup { t : z is not in Omega_t }`, read off the nested family masks at
/// the node nearest `z` on its owning chart; ties resolve upward.
pub fn exit_time(family: &FlowFamily, z: Complex64) -> f64 {
    let g = family.phi.grid;
    let (chart, c) = if z.norm() <= 1.0 {
        (Chart::Z, z)
    } else {
        (Chart::W, 1.0 / z)
    };
    let Some((i, j)) = g.nearest_node(c) else {
        return *family.t_grid.last().unwrap_or(&1.0);
    };
    let node = g.idx(i, j);
    let mut out = 0.0;
    for snap in &family.snapshots {
        let hit = match chart {
            Chart::Z => snap.mask.z[node],
            Chart::W => snap.mask.w[node],
        };
        if !hit {
            out = snap.t;
        }
    }
    out
}

/// Boolean mask over the (node) x (s-grid) product plus occupancy
/// counters.
#[derive(Debug, Clone)]
pub struct ProductMask {
    pub grid: SphereGrid,
    pub s_grid: Vec<f64>,
    pub mask: [Vec<bool>; 2],
    pub count: usize,
    pub meets_s0: bool,
}

impl ProductMask {
    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Fraction of sampled product points inside the mask.
    pub fn volume_fraction(&self) -> f64 {
        let total = self.mask[0].len() + self.mask[1].len();
        self.count as f64 / total as f64
    }
}

/// The region `{ (z, s) : t1 - 1 < H(tau z, s) < t2 - 1 }` with
/// `tau = e^{-s/2}` taken on the positive real axis (the equivariant
/// representative; `H` is sampled only in `|tau|`).
pub fn no_disc_region(h: &HamiltonianField, t1: f64, t2: f64) -> Result<ProductMask> {
    if !(0.0..=1.0).contains(&t1) || !(0.0..=1.0).contains(&t2) || t1 > t2 {
        return Err(Error::InvalidParam(format!(
            "levels must satisfy 0 <= t1 <= t2 <= 1, got ({t1}, {t2})"
        )));
    }
    let g = h.grid;
    let ns = h.ns();
    let mut mask = [vec![false; g.len() * ns], vec![false; g.len() * ns]];
    let mut count = 0usize;
    let mut meets_s0 = false;
    for chart in [Chart::Z, Chart::W] {
        let c = chart_index(chart);
        for i in 0..g.n {
            for j in 0..g.n {
                if !g.active(i, j) || !g.owned(chart, i, j) {
                    continue;
                }
                let node = g.idx(i, j);
                let zg = match chart {
                    Chart::Z => g.coord(i, j),
                    Chart::W => {
                        let w = g.coord(i, j);
                        if w.norm_sqr() == 0.0 {
                            continue; // tau * infinity stays at infinity; H there is sampled directly
                        }
                        1.0 / w
                    }
                };
                for si in 0..ns {
                    let tau = (-0.5 * h.s_grid[si]).exp();
                    let hv = if chart == Chart::W && h.s_grid[si] > 0.0 {
                        h.interp_at(zg * tau, si)
                    } else if chart == Chart::Z {
                        h.interp_at(zg * tau, si)
                    } else {
                        // s = 0 on the W chart: tau = 1, use the node value
                        Some(h.profile(chart, node)[si])
                    };
                    let Some(hv) = hv else { continue };
                    if t1 - 1.0 < hv && hv < t2 - 1.0 {
                        mask[c][node * ns + si] = true;
                        count += 1;
                        if si == 0 {
                            meets_s0 = true;
                        }
                    }
                }
            }
        }
    }
    Ok(ProductMask {
        grid: g,
        s_grid: h.s_grid.clone(),
        mask,
        count,
        meets_s0,
    })
}
