//! Discrete `dd^c` masses and measure integration.
//!
//! Normalization: cell mass `(1/4pi) * Delta_h u * h^2`, so that the
//! chartwise `dd^c` of the local Fubini-Study potentials has total mass 1
//! and `dd^c ln|z|^2` captures a unit Dirac mass at the origin.

use crate::error::{Error, Result};
use crate::field::ChartField;
use crate::grid::{Chart, SphereGrid};

pub const INV_4PI: f64 = 1.0 / (4.0 * std::f64::consts::PI);

/// Cell masses per chart plus an explicit point-mass slot at `z = 0`.
/// Rim cells of the active discs carry no mass (flagged by the grid); the
/// ownership rule (`Z` owns `|z| <= 1`, `W` owns `|w| < 1`) keeps totals
/// free of double counting.
#[derive(Debug, Clone)]
pub struct MeasureField {
    pub grid: SphereGrid,
    pub z: Vec<f64>,
    pub w: Vec<f64>,
    pub origin_mass: f64,
}

impl MeasureField {
    pub fn zeros(grid: SphereGrid) -> Self {
        MeasureField {
            grid,
            z: vec![0.0; grid.len()],
            w: vec![0.0; grid.len()],
            origin_mass: 0.0,
        }
    }

    pub fn masses(&self, chart: Chart) -> &[f64] {
        match chart {
            Chart::Z => &self.z,
            Chart::W => &self.w,
        }
    }

    /// Total mass over the sphere (owned cells only) including the origin
    /// point mass.
    pub fn total(&self) -> f64 {
        let g = self.grid;
        let mut sum = self.origin_mass;
        for chart in [Chart::Z, Chart::W] {
            let m = self.masses(chart);
            for i in 0..g.n {
                for j in 0..g.n {
                    if g.owned(chart, i, j) {
                        sum += m[g.idx(i, j)];
                    }
                }
            }
        }
        sum
    }

    /// Smallest cell mass over owned interior cells (Kahler check).
    pub fn min_owned(&self) -> (f64, Chart, usize, usize) {
        let g = self.grid;
        let mut best = (f64::INFINITY, Chart::Z, 0, 0);
        for chart in [Chart::Z, Chart::W] {
            let m = self.masses(chart);
            for i in 0..g.n {
                for j in 0..g.n {
                    if g.owned(chart, i, j) && g.interior(i, j) {
                        let v = m[g.idx(i, j)];
                        if v < best.0 {
                            best = (v, chart, i, j);
                        }
                    }
                }
            }
        }
        best
    }
}

/// Boolean node mask stored on both charts.
#[derive(Debug, Clone, PartialEq)]
pub struct SphereMask {
    pub grid: SphereGrid,
    pub z: Vec<bool>,
    pub w: Vec<bool>,
}

impl SphereMask {
    pub fn empty(grid: SphereGrid) -> Self {
        SphereMask {
            grid,
            z: vec![false; grid.len()],
            w: vec![false; grid.len()],
        }
    }

    pub fn full(grid: SphereGrid) -> Self {
        let mut m = Self::empty(grid);
        for i in 0..grid.n {
            for j in 0..grid.n {
                if grid.active(i, j) {
                    let k = grid.idx(i, j);
                    m.z[k] = true;
                    m.w[k] = true;
                }
            }
        }
        m
    }

    pub fn nodes(&self, chart: Chart) -> &[bool] {
        match chart {
            Chart::Z => &self.z,
            Chart::W => &self.w,
        }
    }

    pub fn contains_origin(&self) -> bool {
        let (i, j) = self.grid.origin_node();
        self.z[self.grid.idx(i, j)]
    }

    pub fn is_subset_of(&self, other: &SphereMask) -> bool {
        self.z.iter().zip(&other.z).all(|(a, b)| !a || *b)
            && self.w.iter().zip(&other.w).all(|(a, b)| !a || *b)
    }

    pub fn count_owned(&self) -> usize {
        let g = self.grid;
        let mut c = 0;
        for chart in [Chart::Z, Chart::W] {
            let m = self.nodes(chart);
            for i in 0..g.n {
                for j in 0..g.n {
                    if g.owned(chart, i, j) && m[g.idx(i, j)] {
                        c += 1;
                    }
                }
            }
        }
        c
    }
}

/// Chartwise discrete `dd^c` of a field: per-node mass
/// `(1/4pi) Delta_h u h^2`.  Rim cells are excluded (mass 0).
pub fn discrete_ddc_mass(u: &ChartField) -> Result<MeasureField> {
    let g = u.grid;
    let mut out = MeasureField::zeros(g);
    for chart in [Chart::Z, Chart::W] {
        let vals = u.values(chart)?;
        let m = match chart {
            Chart::Z => &mut out.z,
            Chart::W => &mut out.w,
        };
        for i in 1..g.n - 1 {
            for j in 1..g.n - 1 {
                if !g.interior(i, j) {
                    continue;
                }
                let k = g.idx(i, j);
                let lap = vals[k - 1] + vals[k + 1] + vals[k - g.n] + vals[k + g.n] - 4.0 * vals[k];
                m[k] = INV_4PI * lap;
            }
        }
    }
    Ok(out)
}

/// The Fubini-Study form as a discrete measure (chartwise `dd^c` of the
/// local FS potentials).  Total mass is 1 up to `O(h^2)`.
pub fn fs_measure(grid: SphereGrid) -> MeasureField {
    discrete_ddc_mass(&ChartField::fs_potential(grid)).expect("fs potential has both charts")
}

/// The Kahler form `omega_phi = omega_FS + dd^c phi` as a discrete measure.
pub fn omega_phi_measure(phi: &ChartField) -> Result<MeasureField> {
    let g = phi.grid;
    let fs = ChartField::fs_potential(g);
    let mut pot = fs;
    for chart in [Chart::Z, Chart::W] {
        let p = phi.values(chart)?.to_vec();
        let v = pot.values_mut(chart);
        for (a, b) in v.iter_mut().zip(p) {
            *a += b;
        }
    }
    discrete_ddc_mass(&pot)
}

/// Verify the Kahler condition `omega_phi > tol` cellwise.
pub fn check_kahler(phi: &ChartField, tol: f64) -> Result<MeasureField> {
    let m = omega_phi_measure(phi)?;
    let (mass, chart, i, j) = m.min_owned();
    if mass <= tol {
        return Err(Error::NotKahler { chart, i, j, mass });
    }
    Ok(m)
}

/// Mass of `m` over the masked region.  The overlap is counted once via the
/// ownership rule; the origin point mass is included iff the region
/// contains the origin node.  Masks must agree across charts away from the
/// mask's own boundary.
pub fn integrate_measure(m: &MeasureField, mask: &SphereMask) -> Result<f64> {
    check_mask_consistency(mask)?;
    let g = m.grid;
    let mut sum = 0.0;
    for chart in [Chart::Z, Chart::W] {
        let mm = m.masses(chart);
        let mk = mask.nodes(chart);
        for i in 0..g.n {
            for j in 0..g.n {
                let k = g.idx(i, j);
                if g.owned(chart, i, j) && mk[k] {
                    sum += mm[k];
                }
            }
        }
    }
    if mask.contains_origin() {
        sum += m.origin_mass;
    }
    Ok(sum)
}

/// Overlap masks must describe one region: where a Z node maps to a W node
/// (and both are away from the mask's transition band), they must agree.
pub fn check_mask_consistency(mask: &SphereMask) -> Result<()> {
    let g = mask.grid;
    for i in 0..g.n {
        for j in 0..g.n {
            if !g.active(i, j) || !g.interior(i, j) {
                continue;
            }
            let z = g.coord(i, j);
            let r = z.norm();
            if r < 1.0 / g.extent + g.h || r > g.extent - g.h {
                continue;
            }
            // skip nodes on the mask transition band in either chart
            if near_transition(&mask.z, g, i, j) {
                continue;
            }
            let w = z.inv();
            if let Some((wi, wj)) = g.nearest_node(w) {
                if !g.active(wi, wj) || near_transition(&mask.w, g, wi, wj) {
                    continue;
                }
                if mask.z[g.idx(i, j)] != mask.w[g.idx(wi, wj)] {
                    return Err(Error::MaskMismatch { chart: Chart::Z, i, j });
                }
            }
        }
    }
    Ok(())
}

fn near_transition(mask: &[bool], g: SphereGrid, i: usize, j: usize) -> bool {
    let me = mask[g.idx(i, j)];
    for di in -2i64..=2 {
        for dj in -2i64..=2 {
            let (ni, nj) = (i as i64 + di, j as i64 + dj);
            if ni < 0 || nj < 0 || ni >= g.n as i64 || nj >= g.n as i64 {
                continue;
            }
            let (ni, nj) = (ni as usize, nj as usize);
            if g.active(ni, nj) && mask[g.idx(ni, nj)] != me {
                return true;
            }
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::ChartField;

    #[test]
    fn fs_total_mass_is_one() {
        for n in [65, 129] {
            let g = SphereGrid::new(n, 1.5);
            let total = fs_measure(g).total();
            assert!(
                (total - 1.0).abs() <= 10.0 * g.h * g.h,
                "n={n}: total {total}"
            );
        }
    }

    #[test]
    fn constant_field_has_zero_mass() {
        let g = SphereGrid::new(65, 1.5);
        let c = ChartField::from_global(g, "c", |_| 7.5, 7.5);
        let m = discrete_ddc_mass(&c).unwrap();
        assert!(m.total().abs() < 1e-12);
        assert!(m.z.iter().chain(&m.w).all(|&v| v.abs() < 1e-12));
    }

    #[test]
    fn smooth_global_function_has_zero_total_mass() {
        // u0 = 1/(1+|z|^2) is smooth on the sphere; Stokes gives total 0
        let g = SphereGrid::new(129, 1.5);
        let u0 = ChartField::from_chart_fns(
            g,
            "u0",
            |z| (1.0 + z.norm_sqr()).recip(),
            |w| w.norm_sqr() / (1.0 + w.norm_sqr()),
        );
        let m = discrete_ddc_mass(&u0).unwrap();
        assert!(m.total().abs() <= 10.0 * g.h * g.h, "total {}", m.total());
    }

    #[test]
    fn fs_mass_over_unit_disc_is_half() {
        let g = SphereGrid::new(129, 1.5);
        let m = fs_measure(g);
        let mut mask = SphereMask::empty(g);
        for i in 0..g.n {
            for j in 0..g.n {
                let k = g.idx(i, j);
                if g.active(i, j) {
                    mask.z[k] = g.coord(i, j).norm() <= 1.0;
                    mask.w[k] = g.coord(i, j).norm() >= 1.0;
                }
            }
        }
        let got = integrate_measure(&m, &mask).unwrap();
        // closed form r^2/(1+r^2) at r=1; node quadrature is O(h) at the rim
        assert!((got - 0.5).abs() < 5.0 * g.h, "got {got}");
    }

    #[test]
    fn empty_mask_integrates_to_zero() {
        let g = SphereGrid::new(65, 1.5);
        let m = fs_measure(g);
        let got = integrate_measure(&m, &SphereMask::empty(g)).unwrap();
        assert_eq!(got, 0.0);
    }

    #[test]
    fn inconsistent_overlap_mask_is_rejected() {
        let g = SphereGrid::new(65, 1.5);
        let m = fs_measure(g);
        let mut mask = SphereMask::full(g);
        // flip the whole W chart: blatant overlap disagreement
        for v in mask.w.iter_mut() {
            *v = false;
        }
        assert!(matches!(
            integrate_measure(&m, &mask),
            Err(Error::MaskMismatch { .. })
        ));
    }

    #[test]
    fn log_pole_captures_unit_dirac() {
        // dd^c ln|z|^2 = delta_0.  On an even grid no node sits on the
        // pole, and the summed cell masses over a disc around 0 equal the
        // discrete flux through its boundary, which approximates 1.
        let g = SphereGrid::new(128, 1.5);
        let u = ChartField::from_chart_fns(g, "log", |z| z.norm_sqr().ln(), |_| 0.0);
        let m = discrete_ddc_mass(&u).unwrap();
        let mut sum = 0.0;
        for i in 0..g.n {
            for j in 0..g.n {
                if g.coord(i, j).norm() <= 0.5 && g.interior(i, j) {
                    sum += m.z[g.idx(i, j)];
                }
            }
        }
        assert!((sum - 1.0).abs() < 0.05, "sum {sum}");
    }
}
