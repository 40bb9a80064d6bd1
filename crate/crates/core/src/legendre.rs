//! Legendre transform in time: from the envelope family `psi_t` to the
//! product-space function
//!
//!     PhiTilde(z, s) = max_t { psi_t(z) - (1 - t) s },   s >= 0,
//!
//! together with its inverse transform.  Per node the maximand is a family
//! of affine functions of `s` whose slopes `-(1 - t)` increase with `t`,
//! so the (largest) maximiser index is nondecreasing in `s`; a two-pointer
//! sweep builds each node's profile in `O(ns + nt)`.

use crate::envelope::FlowFamily;
use crate::error::{Error, Result};
use crate::field::ChartField;
use crate::grid::{Chart, SphereGrid};

pub const DEFAULT_S_MAX: f64 = 8.0;

/// Sampled `PhiTilde` on the product of the sphere grid with `[0, s_max]`.
///
/// `values[chart]` is node-major: the profile of node `k` occupies
/// `values[chart][k * ns .. (k + 1) * ns]`.  `argmax[chart]` stores the
/// index into `t_grid` of the largest maximiser.
#[derive(Debug, Clone)]
pub struct HmaeSolution {
    pub grid: SphereGrid,
    pub s_grid: Vec<f64>,
    pub t_grid: Vec<f64>,
    pub phi: ChartField,
    pub values: [Vec<f64>; 2],
    pub argmax: [Vec<u16>; 2],
}

fn chart_index(chart: Chart) -> usize {
    match chart {
        Chart::Z => 0,
        Chart::W => 1,
    }
}

impl HmaeSolution {
    pub fn ns(&self) -> usize {
        self.s_grid.len()
    }

    pub fn profile(&self, chart: Chart, node: usize) -> &[f64] {
        let ns = self.ns();
        &self.values[chart_index(chart)][node * ns..(node + 1) * ns]
    }

    pub fn argmax_profile(&self, chart: Chart, node: usize) -> &[u16] {
        let ns = self.ns();
        &self.argmax[chart_index(chart)][node * ns..(node + 1) * ns]
    }

    /// Value at a node and arbitrary `s` by exact extension of the active
    /// affine piece (`psi_t(z) - (1-t)s` with `t` taken from the sampled
    /// maximiser at the nearest grid `s`), which is a lower bound on the
    /// true maximum and exact wherever the maximiser is locally constant.
    pub fn eval(&self, chart: Chart, node: usize, s: f64) -> Result<f64> {
        let prof = self.profile(chart, node);
        let am = self.argmax_profile(chart, node);
        let ns = self.ns();
        let ds = self.s_grid[1] - self.s_grid[0];
        let si = ((s / ds).round() as usize).min(ns - 1);
        let k = am[si] as usize;
        let t = self.t_grid[k];
        Ok(prof[si] + (1.0 - t) * (self.s_grid[si] - s))
    }
}

/// Uniform `s` grid with spacing `ds` covering `[0, s_max]`.
pub fn uniform_s_grid(ds: f64, s_max: f64) -> Vec<f64> {
    let ns = (s_max / ds).round() as usize + 1;
    (0..ns).map(|k| k as f64 * ds).collect()
}

pub fn build_phi_tilde(family: &FlowFamily, s_grid: &[f64]) -> Result<HmaeSolution> {
    if s_grid.len() < 2 || s_grid[0] != 0.0 {
        return Err(Error::InvalidParam("s_grid must start at 0".to_string()));
    }
    let grid = family.phi.grid;
    let nt = family.t_grid.len();
    if nt > u16::MAX as usize {
        return Err(Error::InvalidParam("t_grid too long".to_string()));
    }
    let ns = s_grid.len();
    let len = grid.len();
    let mut values = [vec![f64::NAN; len * ns], vec![f64::NAN; len * ns]];
    let mut argmax = [vec![0u16; len * ns], vec![0u16; len * ns]];

    for chart in [Chart::Z, Chart::W] {
        let c = chart_index(chart);
        // gather psi_t per node across snapshots (nt passes over columns)
        let psis: Vec<&[f64]> = family
            .snapshots
            .iter()
            .map(|s| s.psi.values(chart))
            .collect::<Result<_>>()?;
        for i in 0..grid.n {
            for j in 0..grid.n {
                if !grid.active(i, j) {
                    continue;
                }
                let node = grid.idx(i, j);
                let out = &mut values[c][node * ns..(node + 1) * ns];
                let am = &mut argmax[c][node * ns..(node + 1) * ns];
                // two-pointer sweep: t -> psi_t(z) is concave, so the
                // maximand is concave in the index and its (largest)
                // maximiser only moves forward as s grows
                let mut k = 0usize;
                for (si, &s) in s_grid.iter().enumerate() {
                    let line = |q: usize| psis[q][node] - (1.0 - family.t_grid[q]) * s;
                    let mut best = line(k);
                    while k + 1 < nt {
                        let cand = line(k + 1);
                        if cand >= best {
                            best = cand;
                            k += 1;
                        } else {
                            break;
                        }
                    }
                    out[si] = best;
                    am[si] = k as u16;
                }
            }
        }
    }
    Ok(HmaeSolution {
        grid,
        s_grid: s_grid.to_vec(),
        t_grid: family.t_grid.clone(),
        phi: family.phi.clone(),
        values,
        argmax,
    })
}

/// Inverse transform: `psi_t(z) = min_s { PhiTilde(z, s) + (1 - t) s }`.
pub fn recover_psi(sol: &HmaeSolution, t: f64) -> Result<ChartField> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::TimeOutOfRange(t));
    }
    let grid = sol.grid;
    let ns = sol.ns();
    let mut out = ChartField::zeros(grid, "psi_recovered");
    out.time = Some(t);
    for chart in [Chart::Z, Chart::W] {
        let c = chart_index(chart);
        let v = out.values_mut(chart);
        for node in 0..grid.len() {
            let prof = &sol.values[c][node * ns..(node + 1) * ns];
            let mut best = f64::INFINITY;
            for (si, &s) in sol.s_grid.iter().enumerate() {
                let cand = prof[si] + (1.0 - t) * s;
                if cand < best {
                    best = cand;
                }
            }
            v[node] = best;
        }
    }
    Ok(out)
}

/// Restriction of `PhiTilde` to `s = 0`, which must equal `phi`.
pub fn phi_on_product(sol: &HmaeSolution) -> Result<ChartField> {
    let grid = sol.grid;
    let ns = sol.ns();
    let mut out = ChartField::zeros(grid, "phi_tilde_at_0");
    for chart in [Chart::Z, Chart::W] {
        let c = chart_index(chart);
        let v = out.values_mut(chart);
        for node in 0..grid.len() {
            v[node] = sol.values[c][node * ns];
        }
    }
    Ok(out)
}
