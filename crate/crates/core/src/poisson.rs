//! Poisson solves on the sphere: given a balanced measure `rhs`, find
//! `phi_f` with `dd^c phi_f = rhs - omega_FS`, normalized `phi_f(0) = 0`.
//!
//! Each chart is solved as an independent Dirichlet problem: boundary
//! values on the rim come from direct summation of the spherical Green
//! kernel `ln chi(x, y)` (chi = squared chordal distance) over the owned
//! source cells, then SOR relaxes the interior.  This avoids the coupled
//! two-chart system, which is singular (constants) and, worse, mildly
//! inconsistent: the overlap annulus is discretized twice, so no grid
//! function can satisfy both charts' stencils to better than O(h^2).

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::ChartField;
use crate::grid::Chart;
use crate::measure::{fs_measure, MeasureField};
use crate::solver::{dirichlet_sor, Coupling, SorParams, NODE_INACTIVE, NODE_INTERIOR};

pub const BALANCE_TOL: f64 = 1e-6;
pub const RESIDUAL_TOL: f64 = 1e-8;

/// Net source cells of one chart: coordinates, `ln(1 + |c|^2)`, masses,
/// and the precomputed mass-weighted kernel constants.
struct SourceCloud {
    coords: Vec<Complex64>,
    masses: Vec<f64>,
    /// `sum_y m_y * ln(1 + |c_y|^2)`
    lg_moment: f64,
    /// `sum_y m_y`
    total: f64,
}

impl SourceCloud {
    fn gather(rhs: &MeasureField, fs: &MeasureField, chart: Chart) -> Self {
        let g = rhs.grid;
        let r = rhs.masses(chart);
        let f = fs.masses(chart);
        let mut coords = Vec::new();
        let mut masses = Vec::new();
        let (oi, oj) = g.origin_node();
        for i in 0..g.n {
            for j in 0..g.n {
                if !g.owned(chart, i, j) {
                    continue;
                }
                let mut m = r[g.idx(i, j)] - f[g.idx(i, j)];
                if chart == Chart::Z && (i, j) == (oi, oj) {
                    m += rhs.origin_mass;
                }
                if m != 0.0 {
                    coords.push(g.coord(i, j));
                    masses.push(m);
                }
            }
        }
        let lg_moment = coords
            .iter()
            .zip(&masses)
            .map(|(c, m)| m * (1.0 + c.norm_sqr()).ln())
            .sum();
        let total = masses.iter().sum();
        SourceCloud {
            coords,
            masses,
            lg_moment,
            total,
        }
    }

    /// `sum_y m_y * ln chi(x, y)` for `x` given in this cloud's chart
    /// coordinates.  `d2_floor` regularizes the kernel with its cell
    /// average when `x` lands inside a source cell (only possible for
    /// cross-chart evaluation points).
    fn kernel_sum(&self, x: Complex64, d2_floor: f64) -> f64 {
        let mut s = 0.0;
        for (c, m) in self.coords.iter().zip(&self.masses) {
            let d2 = (x - c).norm_sqr().max(d2_floor);
            s += m * d2.ln();
        }
        s - self.lg_moment - self.total * (1.0 + x.norm_sqr()).ln()
    }
}

pub fn solve_poisson(rhs: &MeasureField, params: &SorParams) -> Result<ChartField> {
    let grid = rhs.grid;
    let fs = fs_measure(grid);
    let defect = rhs.total() - fs.total();
    if defect.abs() > BALANCE_TOL {
        return Err(Error::UnbalancedRhs {
            defect,
            limit: BALANCE_TOL,
        });
    }

    let clouds = [
        SourceCloud::gather(rhs, &fs, Chart::Z),
        SourceCloud::gather(rhs, &fs, Chart::W),
    ];
    // midpoint rule self-cell average of ln|.|^2 over an h x h square
    let d2_floor = 0.076 * grid.h * grid.h;

    let coupling = Coupling::new(grid);
    let mut fields: Vec<Vec<f64>> = Vec::new();
    for (ci, chart) in [Chart::Z, Chart::W].into_iter().enumerate() {
        // stencil-units source: Delta_h u = 4 pi (rhs - omega_FS) per cell
        let src: Vec<f64> = rhs
            .masses(chart)
            .iter()
            .zip(fs.masses(chart))
            .map(|(r, f)| 4.0 * PI * (r - f))
            .collect();
        let input_scale = src.iter().fold(0.0f64, |a, &b| a.max(b.abs())).max(1.0);

        let mut u = vec![0.0; grid.len()];
        for i in 0..grid.n {
            for j in 0..grid.n {
                let k = grid.idx(i, j);
                if coupling.flags[k] == NODE_INACTIVE || coupling.flags[k] == NODE_INTERIOR {
                    continue;
                }
                let x = grid.coord(i, j);
                // rim nodes sit at |coord| ~ extent, never at the origin
                u[k] = clouds[ci].kernel_sum(x, d2_floor)
                    + clouds[1 - ci].kernel_sum(x.inv(), d2_floor);
            }
        }

        let mut tol = params.tol;
        loop {
            let p = SorParams {
                tol,
                ..params.clone()
            };
            let stats = dirichlet_sor(
                &grid,
                &coupling.flags,
                &mut u,
                &src,
                &p,
                input_scale,
                "solve_poisson",
            )?;
            if stats.residual <= RESIDUAL_TOL * input_scale {
                break;
            }
            tol /= 10.0;
            if tol < 1e-15 {
                return Err(Error::NoConvergence {
                    solver: "solve_poisson",
                    sweeps: stats.sweeps,
                    residual: stats.residual,
                });
            }
        }
        fields.push(u);
    }

    let mut uw = fields.pop().unwrap();
    let mut uz = fields.pop().unwrap();

    // pin the constant mode: phi_f(0) = 0
    let (oi, oj) = grid.origin_node();
    let c = uz[grid.idx(oi, oj)];
    for v in uz.iter_mut().chain(uw.iter_mut()) {
        *v -= c;
    }
    Ok(ChartField {
        grid,
        z: Some(uz),
        w: Some(uw),
        name: "phi_f".to_string(),
        time: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SphereGrid;
    use crate::measure::discrete_ddc_mass;

    #[test]
    fn fs_rhs_gives_zero_potential() {
        let g = SphereGrid::new(65, 1.5);
        let rhs = fs_measure(g);
        let phi = solve_poisson(&rhs, &SorParams::default()).unwrap();
        let (lo, hi) = phi.finite_range();
        assert!(lo.abs() < 1e-7 && hi.abs() < 1e-7, "range {lo}..{hi}");
    }

    #[test]
    fn manufactured_solution_roundtrip() {
        // u0 = 1/(1+|z|^2): solve with rhs = omega_FS + dd^c u0 and recover
        // u0 - u0(0)
        let g = SphereGrid::new(97, 1.5);
        let u0 = ChartField::from_chart_fns(
            g,
            "u0",
            |z| (1.0 + z.norm_sqr()).recip(),
            |w| w.norm_sqr() / (1.0 + w.norm_sqr()),
        );
        let ddc = discrete_ddc_mass(&u0).unwrap();
        let fs = fs_measure(g);
        let mut rhs = fs.clone();
        for (a, b) in rhs.z.iter_mut().zip(&ddc.z) {
            *a += b;
        }
        for (a, b) in rhs.w.iter_mut().zip(&ddc.w) {
            *a += b;
        }
        let phi = solve_poisson(&rhs, &SorParams::default()).unwrap();
        let tol = 20.0 * g.h * g.h;
        let expect_z = u0.values(Chart::Z).unwrap();
        let got_z = phi.values(Chart::Z).unwrap();
        let u0_at_0 = 1.0;
        for i in 0..g.n {
            for j in 0..g.n {
                if g.interior(i, j) {
                    let k = g.idx(i, j);
                    let want = expect_z[k] - u0_at_0;
                    assert!(
                        (got_z[k] - want).abs() < tol,
                        "node ({i},{j}): got {} want {want}",
                        got_z[k]
                    );
                }
            }
        }
    }

    #[test]
    fn unbalanced_rhs_rejected() {
        let g = SphereGrid::new(65, 1.5);
        let mut rhs = fs_measure(g);
        rhs.origin_mass = 0.01;
        assert!(matches!(
            solve_poisson(&rhs, &SorParams::default()),
            Err(Error::UnbalancedRhs { .. })
        ));
    }
}
