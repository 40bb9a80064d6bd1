//! The Hele-Shaw envelope `psi_t` and domain `Omega_t` as an obstacle
//! problem.
//!
//! The logarithmic singularity is handled by subtracting the explicit
//! minorant `g_t(z) = t ln(|z|^2 / (1+|z|^2))`, whose `dd^c` is
//! `t delta_0 - t omega_FS`.  Writing `psi_t = g_t + u` turns the Lelong
//! constraint into a bounded obstacle problem: `u` is the largest grid
//! function with `u <= phi - g_t` and `(1-t) omega_FS + dd^c u >= 0`,
//! solved by projected SOR with alternating-Schwarz chart coupling.

use crate::error::{Error, Result};
use crate::field::ChartField;
use crate::grid::{Chart, SphereGrid};
use crate::measure::{check_kahler, MeasureField, SphereMask};
use crate::solver::{coupled_sor, Coupling, SorParams};

/// Contact tolerance factor: `tau = CONTACT_FACTOR * max(1, osc(phi))`.
pub const CONTACT_FACTOR: f64 = 1e-6;

#[derive(Debug, Clone, Copy, Default)]
pub struct SnapshotDiagnostics {
    /// `omega_phi`-mass of `Omega_t` by sub-cell quadrature.
    pub area: f64,
    pub residual: f64,
    pub sweeps: usize,
    /// Largest monotonicity clamp applied by `compute_flow`.
    pub clamped: f64,
}

#[derive(Debug, Clone)]
pub struct FlowSnapshot {
    pub t: f64,
    pub psi: ChartField,
    pub mask: SphereMask,
    pub contact_tol: f64,
    pub diagnostics: SnapshotDiagnostics,
}

#[derive(Debug, Clone)]
pub struct FlowFamily {
    pub phi: ChartField,
    pub t_grid: Vec<f64>,
    pub snapshots: Vec<FlowSnapshot>,
    pub omega_phi: MeasureField,
}

impl FlowFamily {
    pub fn snapshot_at(&self, t: f64) -> Option<&FlowSnapshot> {
        self.snapshots
            .iter()
            .min_by(|a, b| (a.t - t).abs().partial_cmp(&(b.t - t).abs()).unwrap())
            .filter(|s| (s.t - t).abs() < 1e-9)
    }

    pub fn nearest_snapshot(&self, t: f64) -> &FlowSnapshot {
        self.snapshots
            .iter()
            .min_by(|a, b| (a.t - t).abs().partial_cmp(&(b.t - t).abs()).unwrap())
            .expect("family has snapshots")
    }
}

/// The minorant `g_t` per chart.  On the Z chart
/// `g_t(z) = t (ln|z|^2 - ln(1+|z|^2))` (`-inf` at the origin); on the W
/// chart `g_t(1/w) = -t ln(1+|w|^2)`, smooth everywhere.
pub fn minorant(grid: SphereGrid, t: f64) -> ChartField {
    ChartField::from_chart_fns(
        grid,
        "g_t",
        move |z| {
            let r2 = z.norm_sqr();
            if r2 == 0.0 {
                if t == 0.0 {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            } else {
                t * (r2.ln() - (1.0 + r2).ln())
            }
        },
        move |w| -t * (1.0 + w.norm_sqr()).ln(),
    )
}

pub fn compute_envelope(phi: &ChartField, t: f64) -> Result<FlowSnapshot> {
    compute_envelope_with(phi, t, &SorParams::default(), None)
}

pub fn compute_envelope_with(
    phi: &ChartField,
    t: f64,
    params: &SorParams,
    warm: Option<&FlowSnapshot>,
) -> Result<FlowSnapshot> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::TimeOutOfRange(t));
    }
    let grid = phi.grid;
    let omega_phi = check_kahler(phi, 0.0)?;
    compute_envelope_inner(phi, &omega_phi, t, params, warm, &Coupling::new(grid))
}

fn compute_envelope_inner(
    phi: &ChartField,
    omega_phi: &MeasureField,
    t: f64,
    params: &SorParams,
    warm: Option<&FlowSnapshot>,
    coupling: &Coupling,
) -> Result<FlowSnapshot> {
    let grid = phi.grid;
    let g_t = minorant(grid, t);
    let fs = ChartField::fs_potential(grid);

    // obstacle phi - g_t and background (1-t) * fs, per chart
    let mut obs = [Vec::new(), Vec::new()];
    let mut bg = [Vec::new(), Vec::new()];
    for (c, chart) in [Chart::Z, Chart::W].into_iter().enumerate() {
        let p = phi.values(chart)?;
        let g = g_t.values(chart)?;
        let f = fs.values(chart)?;
        obs[c] = p.iter().zip(g).map(|(a, b)| a - b).collect();
        bg[c] = f.iter().map(|v| (1.0 - t) * v).collect();
    }

    let cap = obs[0]
        .iter()
        .chain(&obs[1])
        .filter(|v| v.is_finite())
        .fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let scale = phi.oscillation().max(2.0 * t * (grid.h * grid.h).ln().abs()).max(1.0);

    // start from the previous time's psi when warm-started (psi decreases
    // in t, so it is an upper candidate), otherwise from the capped
    // obstacle
    let init = |chart: Chart, obs: &[f64]| -> Result<Vec<f64>> {
        match warm {
            Some(prev) => {
                let pv = prev.psi.values(chart)?;
                let g = g_t.values(chart)?;
                Ok(pv
                    .iter()
                    .zip(g)
                    .zip(obs)
                    .map(|((p, g), o)| (p - g).min(*o).min(cap))
                    .collect())
            }
            None => Ok(obs.iter().map(|o| o.min(cap)).collect()),
        }
    };
    let mut uz = init(Chart::Z, &obs[0])?;
    let mut uw = init(Chart::W, &obs[1])?;

    let zeros = vec![0.0; grid.len()];
    let stats = coupled_sor(
        coupling,
        &mut uz,
        &mut uw,
        &bg[0],
        &bg[1],
        &zeros,
        &zeros,
        Some((&obs[0], &obs[1])),
        params,
        scale,
        "compute_envelope",
    )?;

    // psi = g_t + u
    let psi = {
        let g_z = g_t.values(Chart::Z)?;
        let g_w = g_t.values(Chart::W)?;
        ChartField {
            grid,
            z: Some(uz.iter().zip(g_z).map(|(u, g)| u + g).collect()),
            w: Some(uw.iter().zip(g_w).map(|(u, g)| u + g).collect()),
            name: "psi".to_string(),
            time: Some(t),
        }
    };

    let contact_tol = CONTACT_FACTOR * phi.oscillation().max(1.0);
    let mask = domain_mask(phi, &psi, t, contact_tol)?;
    let area = flow_area(omega_phi, phi, &psi, contact_tol)?;
    Ok(FlowSnapshot {
        t,
        psi,
        mask,
        contact_tol,
        diagnostics: SnapshotDiagnostics {
            area,
            residual: stats.residual,
            sweeps: stats.sweeps,
            clamped: 0.0,
        },
    })
}

/// `Omega_t = { psi_t < phi - tol }`; the origin node is forced in for
/// `t > 0`.
pub fn domain_mask(phi: &ChartField, psi: &ChartField, t: f64, tol: f64) -> Result<SphereMask> {
    let grid = phi.grid;
    let mut mask = SphereMask::empty(grid);
    for chart in [Chart::Z, Chart::W] {
        let p = phi.values(chart)?;
        let s = psi.values(chart)?;
        let m = match chart {
            Chart::Z => &mut mask.z,
            Chart::W => &mut mask.w,
        };
        for i in 0..grid.n {
            for j in 0..grid.n {
                let k = grid.idx(i, j);
                if grid.active(i, j) {
                    m[k] = p[k] - s[k] > tol;
                }
            }
        }
    }
    if t > 0.0 {
        let (i, j) = grid.origin_node();
        mask.z[grid.idx(i, j)] = true;
    }
    Ok(mask)
}

pub fn extract_domain(snap: &FlowSnapshot, phi: &ChartField, tol: f64) -> Result<SphereMask> {
    domain_mask(phi, &snap.psi, snap.t, tol)
}

/// `omega_phi`-mass of `{phi - psi > tol}` by sub-cell (triangle-split)
/// quadrature.  The marker is `sqrt(phi - psi)`: the gap vanishes
/// quadratically at the (C^1) free boundary, so the square root crosses
/// zero linearly and the linear sub-cell interpolant locates the boundary
/// to `O(h^2)` instead of `O(h)`.
pub fn flow_area(
    omega_phi: &MeasureField,
    phi: &ChartField,
    psi: &ChartField,
    tol: f64,
) -> Result<f64> {
    let grid = phi.grid;
    let mut total = 0.0;
    for chart in [Chart::Z, Chart::W] {
        let p = phi.values(chart)?;
        let s = psi.values(chart)?;
        let m = omega_phi.masses(chart);
        for i in 0..grid.n - 1 {
            for j in 0..grid.n - 1 {
                // dual cell with corners (i,j),(i,j+1),(i+1,j),(i+1,j+1)
                if !(grid.active(i, j)
                    && grid.active(i, j + 1)
                    && grid.active(i + 1, j)
                    && grid.active(i + 1, j + 1))
                {
                    continue;
                }
                let center = (grid.coord(i, j) + grid.coord(i + 1, j + 1)) * 0.5;
                let owned = match chart {
                    Chart::Z => center.norm() <= 1.0,
                    Chart::W => center.norm() < 1.0,
                };
                if !owned {
                    continue;
                }
                let d = |ii: usize, jj: usize| -> f64 {
                    let k = grid.idx(ii, jj);
                    (p[k] - s[k]).max(0.0).sqrt() - tol.sqrt()
                };
                let (d00, d01, d10, d11) = (d(i, j), d(i, j + 1), d(i + 1, j), d(i + 1, j + 1));
                let frac = cell_fraction(d00, d01, d10, d11);
                if frac > 0.0 {
                    let mass = 0.25
                        * (m[grid.idx(i, j)]
                            + m[grid.idx(i, j + 1)]
                            + m[grid.idx(i + 1, j)]
                            + m[grid.idx(i + 1, j + 1)]);
                    total += frac * mass;
                }
            }
        }
    }
    Ok(total)
}

/// Fraction of the unit cell where the bilinear extension of the corner
/// values is positive, via a 4-triangle split around the cell centre.
pub fn cell_fraction(d00: f64, d01: f64, d10: f64, d11: f64) -> f64 {
    let c = 0.25 * (d00 + d01 + d10 + d11);
    0.25
        * (tri_fraction(d00, d01, c)
            + tri_fraction(d01, d11, c)
            + tri_fraction(d11, d10, c)
            + tri_fraction(d10, d00, c))
}

fn tri_fraction(a: f64, b: f64, c: f64) -> f64 {
    let mut v = [a, b, c];
    v.sort_by(|x, y| y.partial_cmp(x).unwrap());
    let [hi, mid, lo] = v;
    if lo >= 0.0 {
        return 1.0;
    }
    if hi <= 0.0 {
        return 0.0;
    }
    if mid <= 0.0 {
        // one positive vertex
        hi * hi / ((hi - mid) * (hi - lo))
    } else {
        // one negative vertex
        1.0 - lo * lo / ((hi - lo) * (mid - lo))
    }
}

pub fn compute_flow(phi: &ChartField, t_grid: &[f64], params: &SorParams) -> Result<FlowFamily> {
    if t_grid.is_empty() || t_grid[0] != 0.0 {
        return Err(Error::InvalidParam(
            "t_grid must start at 0".to_string(),
        ));
    }
    for w in t_grid.windows(2) {
        if w[1] <= w[0] || w[1] > 1.0 {
            return Err(Error::InvalidParam(
                "t_grid must be strictly increasing within [0,1]".to_string(),
            ));
        }
    }
    let omega_phi = check_kahler(phi, 0.0)?;
    let coupling = Coupling::new(phi.grid);
    let mut snapshots: Vec<FlowSnapshot> = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let warm = snapshots.last();
        let mut snap = compute_envelope_inner(phi, &omega_phi, t, params, warm, &coupling)?;
        if let Some(prev) = snapshots.last() {
            let clamped = clamp_monotone(&mut snap, prev, phi)?;
            snap.diagnostics.clamped = clamped;
        }
        snapshots.push(snap);
    }
    Ok(FlowFamily {
        phi: phi.clone(),
        t_grid: t_grid.to_vec(),
        snapshots,
        omega_phi,
    })
}

/// Enforce `psi_{t+} <= psi_t` pointwise (a projection within solver
/// tolerance) so that domain masks are exactly nested.  Returns the largest
/// clamp applied.
fn clamp_monotone(snap: &mut FlowSnapshot, prev: &FlowSnapshot, phi: &ChartField) -> Result<f64> {
    let grid = snap.psi.grid;
    let mut worst: f64 = 0.0;
    for chart in [Chart::Z, Chart::W] {
        let pv = prev.psi.values(chart)?.to_vec();
        let sv = snap.psi.values_mut(chart);
        for (s, p) in sv.iter_mut().zip(pv) {
            if *s > p {
                worst = worst.max(*s - p);
                *s = p;
            }
        }
    }
    if worst > 0.0 {
        snap.mask = domain_mask(phi, &snap.psi, snap.t, snap.contact_tol)?;
    }
    let _ = grid;
    Ok(worst)
}

/// Uniform time grid `0 = t_0 < ... < t_{nt-1} = t_max`.
pub fn uniform_t_grid(nt: usize, t_max: f64) -> Vec<f64> {
    if nt <= 1 {
        return vec![0.0];
    }
    (0..nt).map(|k| t_max * k as f64 / (nt - 1) as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::SphereGrid;

    fn zero_phi(n: usize) -> ChartField {
        ChartField::zeros(SphereGrid::new(n, 1.5), "phi")
    }

    /// Closed-form radial envelope for phi = 0:
    /// inside |z| < sqrt(t/(1-t)):
    ///   psi_t = t ln|z|^2 - t ln t - (1-t) ln(1-t) - ln(1+|z|^2),
    /// outside: 0.
    fn radial_psi(t: f64, r: f64) -> f64 {
        let rt = (t / (1.0 - t)).sqrt();
        if r < rt {
            t * (r * r).ln() - t * t.ln() - (1.0 - t) * (1.0 - t).ln() - (1.0 + r * r).ln()
        } else {
            0.0
        }
    }

    #[test]
    fn t_zero_envelope_is_phi() {
        let phi = zero_phi(65);
        let snap = compute_envelope(&phi, 0.0).unwrap();
        let (lo, hi) = snap.psi.finite_range();
        assert_eq!(lo, 0.0);
        assert_eq!(hi, 0.0);
        assert_eq!(snap.mask.count_owned(), 0);
    }

    #[test]
    fn radial_half_time_matches_closed_form() {
        let phi = zero_phi(129);
        let snap = compute_envelope(&phi, 0.5).unwrap();
        let g = phi.grid;
        let z = snap.psi.values(Chart::Z).unwrap();
        let tol = 20.0 * g.h * g.h;
        // |z| = 0.5 -> -ln(5/4); |z| = 2 is outside Omega_{1/2}
        let (i, j) = g.nearest_node(num_complex::Complex64::new(0.5, 0.0)).unwrap();
        let got = z[g.idx(i, j)];
        assert!(
            (got - (-(5.0f64 / 4.0).ln())).abs() < tol,
            "psi(0.5) = {got}"
        );
        let w = snap.psi.values(Chart::W).unwrap();
        let (i, j) = g.nearest_node(num_complex::Complex64::new(0.5, 0.0)).unwrap();
        let got = w[g.idx(i, j)]; // w = 0.5 <-> z = 2
        assert!(got.abs() < tol, "psi(z=2) = {got}");
    }

    #[test]
    fn radial_mask_radius_matches_oracle() {
        let phi = zero_phi(129);
        let snap = compute_envelope(&phi, 0.2).unwrap();
        let g = phi.grid;
        // expected boundary radius r = sqrt(0.2/0.8) = 0.5
        let mut rmax: f64 = 0.0;
        let mut rmin_out = f64::INFINITY;
        for i in 0..g.n {
            for j in 0..g.n {
                let r = g.coord(i, j).norm();
                if snap.mask.z[g.idx(i, j)] {
                    rmax = rmax.max(r);
                } else if g.active(i, j) {
                    rmin_out = rmin_out.min(r);
                }
            }
        }
        assert!((rmax - 0.5).abs() < 2.0 * g.h, "rmax {rmax}");
        assert!(rmin_out > 0.5 - 2.0 * g.h, "rmin_out {rmin_out}");
        assert!(snap.mask.contains_origin());
    }

    #[test]
    fn psi_profile_matches_radial_formula() {
        let phi = zero_phi(129);
        let g = phi.grid;
        let snap = compute_envelope(&phi, 0.35).unwrap();
        let z = snap.psi.values(Chart::Z).unwrap();
        let tol = 25.0 * g.h * g.h;
        for i in 0..g.n {
            for j in 0..g.n {
                if !g.interior(i, j) {
                    continue;
                }
                let r = g.coord(i, j).norm();
                if r < 2.0 * g.h || (r - (0.35f64 / 0.65).sqrt()).abs() < 2.0 * g.h {
                    continue; // skip the log pole and the free boundary band
                }
                let got = z[g.idx(i, j)];
                let want = radial_psi(0.35, r);
                assert!(
                    (got - want).abs() < tol,
                    "r={r}: got {got} want {want}"
                );
            }
        }
    }

    #[test]
    fn flow_family_is_monotone_and_concave() {
        let phi = zero_phi(65);
        let t_grid = uniform_t_grid(11, 1.0);
        let fam = compute_flow(&phi, &t_grid, &SorParams::default()).unwrap();
        for w in fam.snapshots.windows(2) {
            assert!(w[0].mask.is_subset_of(&w[1].mask));
        }
        // midpoint concavity of t -> psi_t(z) at every node
        let g = phi.grid;
        for k in 1..fam.snapshots.len() - 1 {
            let a = fam.snapshots[k - 1].psi.values(Chart::Z).unwrap();
            let b = fam.snapshots[k].psi.values(Chart::Z).unwrap();
            let c = fam.snapshots[k + 1].psi.values(Chart::Z).unwrap();
            for i in 0..g.n {
                for j in 0..g.n {
                    let q = g.idx(i, j);
                    if g.active(i, j) && a[q].is_finite() && c[q].is_finite() {
                        assert!(
                            b[q] >= 0.5 * (a[q] + c[q]) - 1e-6,
                            "concavity at ({i},{j}) t={}",
                            fam.t_grid[k]
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn area_tracks_time() {
        let phi = zero_phi(129);
        let t_grid = uniform_t_grid(11, 1.0);
        let fam = compute_flow(&phi, &t_grid, &SorParams::default()).unwrap();
        for s in &fam.snapshots {
            assert!(
                (s.diagnostics.area - s.t).abs() < 0.02,
                "t={}: area {}",
                s.t,
                s.diagnostics.area
            );
        }
    }

    #[test]
    fn rotation_equivariance_of_radial_mask() {
        let phi = zero_phi(97);
        let g = phi.grid;
        let snap = compute_envelope(&phi, 0.3).unwrap();
        // boundary radius constant over angles within h
        let mut rmax_per_quadrant = [0.0f64; 4];
        for i in 0..g.n {
            for j in 0..g.n {
                if snap.mask.z[g.idx(i, j)] {
                    let c = g.coord(i, j);
                    let q = match (c.re >= 0.0, c.im >= 0.0) {
                        (true, true) => 0,
                        (false, true) => 1,
                        (false, false) => 2,
                        (true, false) => 3,
                    };
                    rmax_per_quadrant[q] = rmax_per_quadrant[q].max(c.norm());
                }
            }
        }
        let lo = rmax_per_quadrant.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = rmax_per_quadrant.iter().cloned().fold(0.0, f64::max);
        assert!(hi - lo <= g.h, "quadrant radii {rmax_per_quadrant:?}");
    }

    #[test]
    fn t_out_of_range_rejected() {
        let phi = zero_phi(65);
        assert!(matches!(
            compute_envelope(&phi, 1.5),
            Err(Error::TimeOutOfRange(_))
        ));
    }
}
