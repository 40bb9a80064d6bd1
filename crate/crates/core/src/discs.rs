//! Harmonic-disc families of the product-space solution and their
//! numerical verification: the center disc, boundary-constant discs
//! through points never reached by the flow, and Riemann-map discs over
//! simply connected flow domains.
//!
//! The Riemann map of a simply connected domain containing the origin is
//! computed Green's-function style: solve the Dirichlet problem
//! `delta v = 0` on the domain with `v = ln|z|` on the boundary, build the
//! harmonic conjugate by grid path integration, and set
//! `F(z) = z exp(-v - i vtilde)`, so `F(0) = 0`, `F'(0) > 0` and
//! `|F| = e^{-G}` with `G` the Green's function with pole at 0.

use crate::envelope::FlowFamily;
use crate::error::{Error, Result};
use crate::grid::{Chart, SphereGrid};
use crate::hamiltonian::HamiltonianField;
use crate::legendre::HmaeSolution;
use crate::measure::SphereMask;
use crate::solver::auto_omega;
use crate::topology::{component_count, ConnectivityReport};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;

/// Inverse Riemann map `F` of a flow domain, sampled on Z-chart nodes of
/// the domain.  `F` maps the domain onto the unit disc with `F(0) = 0`
/// and `F'(0) > 0`.
#[derive(Debug, Clone)]
pub struct ConformalMap {
    pub grid: SphereGrid,
    pub mask: Vec<bool>,
    /// `|F|` per node (1.0 outside the domain).
    pub abs_f: Vec<f64>,
    /// `arg F` per node (0 outside the domain).
    pub arg_f: Vec<f64>,
    /// Dirichlet potential `v` (harmonic in the domain, `ln|z|` outside).
    pub v: Vec<f64>,
    /// Harmonic conjugate of `v`, normalized to 0 at the origin.
    pub vtilde: Vec<f64>,
}

impl ConformalMap {
    pub fn f(&self, i: usize, j: usize) -> Complex64 {
        let k = self.grid.idx(i, j);
        Complex64::from_polar(self.abs_f[k], self.arg_f[k])
    }

    /// Largest Cauchy-Riemann defect of `ln F - ln z = -v - i vtilde` over
    /// interior cells of the domain.
    pub fn conformality_defect(&self) -> f64 {
        let g = self.grid;
        let mut worst: f64 = 0.0;
        for i in 1..g.n - 1 {
            for j in 1..g.n - 1 {
                let k = g.idx(i, j);
                let nb = [
                    g.idx(i, j + 1),
                    g.idx(i, j.wrapping_sub(1)),
                    g.idx(i + 1, j),
                    g.idx(i - 1, j),
                ];
                if !self.mask[k] || nb.iter().any(|&q| !self.mask[q]) {
                    continue;
                }
                let d = 2.0 * g.h;
                let ux = (self.v[nb[0]] - self.v[nb[1]]) / d;
                let uy = (self.v[nb[2]] - self.v[nb[3]]) / d;
                let tx = (self.vtilde[nb[0]] - self.vtilde[nb[1]]) / d;
                let ty = (self.vtilde[nb[2]] - self.vtilde[nb[3]]) / d;
                // analytic -v - i vtilde: (-v)_x = (-vtilde)_y, (-v)_y = (vtilde)_x
                worst = worst.max((ux - ty).abs()).max((uy + tx).abs());
            }
        }
        worst
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum DiscKind {
    /// The constant map to the origin.
    Center,
    /// The constant-in-time disc through a point never engulfed by the
    /// flow; coordinates in the Z chart (re, im).
    BoundaryConstant { z: (f64, f64), chart_w: bool },
    /// Graph of the inverse Riemann map of the flow domain at time `t`.
    Riemann { t: f64 },
}

#[derive(Debug, Clone)]
pub struct DiscDescriptor {
    pub kind: DiscKind,
    /// The Hamiltonian value the disc must realize.
    pub h_value: f64,
    pub map: Option<ConformalMap>,
}

/// Enumeration result: the discs found plus explicit markers for sampled
/// times where no Riemann disc exists (multiply connected domains).
#[derive(Debug, Clone)]
pub struct DiscEnumeration {
    pub discs: Vec<DiscDescriptor>,
    pub no_riemann_times: Vec<f64>,
    /// True when the time-1 contact set carries no grid node, so no
    /// boundary-constant disc could be sampled.
    pub final_contact_empty: bool,
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct ResidualStats {
    pub max: f64,
    pub mean: f64,
    /// Sample standard deviation of `H` along the disc.
    pub h_std: f64,
    /// Largest deviation of `H` from the disc's nominal value.
    pub h_dev: f64,
    pub samples: usize,
}

const DIRICHLET_TOL: f64 = 1e-12;

/// Green's-function Riemann map of a simply connected Z-chart domain
/// containing the origin.
pub fn riemann_map(grid: SphereGrid, mask: &SphereMask) -> Result<ConformalMap> {
    if !mask.contains_origin() {
        return Err(Error::DomainRejected(
            "origin not in the domain".to_string(),
        ));
    }
    let (kd, kc) = component_count(mask);
    if kd != 1 || kc != 1 {
        return Err(Error::DomainRejected(format!(
            "domain not simply connected: {kd} components, complement {kc}"
        )));
    }
    let g = grid;
    // the method needs the whole domain inside the Z chart, away from the
    // chart edge, and not represented on the W side
    for i in 0..g.n {
        for j in 0..g.n {
            let k = g.idx(i, j);
            if mask.z[k] && (!g.interior(i, j) || g.coord(i, j).norm() > g.extent - 2.0 * g.h) {
                return Err(Error::DomainRejected(
                    "domain reaches the chart edge".to_string(),
                ));
            }
            if mask.w[k] && g.coord(i, j).norm() < 2.0 / 3.0 {
                return Err(Error::DomainRejected(
                    "domain crosses to the far chart".to_string(),
                ));
            }
        }
    }

    // Dirichlet data v = ln|z| outside the domain, relaxed on the inside
    let mut v = vec![0.0; g.len()];
    let mut inner = Vec::new();
    let mut bsum = 0.0;
    let mut bcnt = 0usize;
    for i in 0..g.n {
        for j in 0..g.n {
            let k = g.idx(i, j);
            if mask.z[k] {
                inner.push(k);
            } else if g.active(i, j) {
                v[k] = g.coord(i, j).norm().max(1e-300).ln();
                if g.rim(i, j) {
                    continue;
                }
                bsum += v[k];
                bcnt += 1;
            }
        }
    }
    let seed = if bcnt > 0 { bsum / bcnt as f64 } else { 0.0 };
    for &k in &inner {
        v[k] = seed;
    }
    let omega = auto_omega(g.n);
    let mut sweeps = 0usize;
    loop {
        let mut delta: f64 = 0.0;
        for &k in &inner {
            let target = 0.25 * (v[k - 1] + v[k + 1] + v[k - g.n] + v[k + g.n]);
            let upd = omega * (target - v[k]);
            v[k] += upd;
            delta = delta.max(upd.abs());
        }
        sweeps += 1;
        if delta < DIRICHLET_TOL {
            break;
        }
        if sweeps > 500_000 {
            return Err(Error::NoConvergence {
                solver: "riemann_map",
                sweeps,
                residual: delta,
            });
        }
    }

    // harmonic conjugate by breadth-first edge integration from the origin
    let (oi, oj) = g.origin_node();
    let start = g.idx(oi, oj);
    let mut vtilde = vec![0.0; g.len()];
    let mut seen = vec![false; g.len()];
    seen[start] = true;
    let mut queue = VecDeque::from([start]);
    let n = g.n;
    let edge = |k: usize, nk: usize| -> f64 {
        // d(vtilde) = -v_y dx + v_x dy, with v_y/v_x averaged central
        // differences over the two edge endpoints
        let dvy = |q: usize| (v[q + n] - v[q - n]) / (2.0 * g.h);
        let dvx = |q: usize| (v[q + 1] - v[q - 1]) / (2.0 * g.h);
        if nk == k + 1 {
            -0.5 * (dvy(k) + dvy(nk)) * g.h
        } else if nk + 1 == k {
            0.5 * (dvy(k) + dvy(nk)) * g.h
        } else if nk == k + n {
            0.5 * (dvx(k) + dvx(nk)) * g.h
        } else {
            -0.5 * (dvx(k) + dvx(nk)) * g.h
        }
    };
    while let Some(k) = queue.pop_front() {
        for nk in [k + 1, k - 1, k + n, k - n] {
            if nk < g.len() && mask.z[nk] && !seen[nk] {
                seen[nk] = true;
                vtilde[nk] = vtilde[k] + edge(k, nk);
                queue.push_back(nk);
            }
        }
    }

    let mut abs_f = vec![1.0; g.len()];
    let mut arg_f = vec![0.0; g.len()];
    for i in 0..g.n {
        for j in 0..g.n {
            let k = g.idx(i, j);
            if !mask.z[k] {
                continue;
            }
            let z = g.coord(i, j);
            if z.norm_sqr() == 0.0 {
                abs_f[k] = 0.0;
                arg_f[k] = 0.0;
            } else {
                abs_f[k] = (z.norm().ln() - v[k]).exp();
                arg_f[k] = (z.arg() - vtilde[k]).rem_euclid(2.0 * std::f64::consts::PI);
            }
        }
    }
    Ok(ConformalMap {
        grid: g,
        mask: mask.z.clone(),
        abs_f,
        arg_f,
        v,
        vtilde,
    })
}

/// Enumerate disc families: the center disc, boundary-constant discs at
/// the contact set of the final time, and a Riemann disc per sampled time
/// whose domain is simply connected (others get a marker).
pub fn enumerate_discs(
    family: &FlowFamily,
    report: &ConnectivityReport,
    riemann_times: &[f64],
) -> Result<DiscEnumeration> {
    let mut discs = vec![DiscDescriptor {
        kind: DiscKind::Center,
        h_value: -1.0,
        map: None,
    }];
    let mut no_riemann_times = Vec::new();

    // boundary-constant discs: nodes still in contact at the largest time
    let last = family.snapshots.last().expect("nonempty family");
    let g = family.phi.grid;
    let mut contact = Vec::new();
    for chart in [Chart::Z, Chart::W] {
        let nodes = match chart {
            Chart::Z => &last.mask.z,
            Chart::W => &last.mask.w,
        };
        for i in 0..g.n {
            for j in 0..g.n {
                let k = g.idx(i, j);
                if g.owned(chart, i, j) && !nodes[k] {
                    contact.push((chart, i, j));
                }
            }
        }
    }
    let final_contact_empty = contact.is_empty();
    let step = (contact.len() / 16).max(1);
    for &(chart, i, j) in contact.iter().step_by(step) {
        let c = g.coord(i, j);
        discs.push(DiscDescriptor {
            kind: DiscKind::BoundaryConstant {
                z: (c.re, c.im),
                chart_w: chart == Chart::W,
            },
            h_value: 0.0,
            map: None,
        });
    }

    for &t in riemann_times {
        let snap = family.nearest_snapshot(t);
        let row = report
            .rows
            .iter()
            .find(|r| (r.t - snap.t).abs() < 1e-12)
            .ok_or_else(|| Error::InvalidParam(format!("no topology row at t = {t}")))?;
        if !row.simply_connected || snap.t == 0.0 {
            no_riemann_times.push(snap.t);
            continue;
        }
        match riemann_map(g, &snap.mask) {
            Ok(map) => discs.push(DiscDescriptor {
                kind: DiscKind::Riemann { t: snap.t },
                h_value: snap.t - 1.0,
                map: Some(map),
            }),
            Err(Error::DomainRejected(_)) => no_riemann_times.push(snap.t),
            Err(e) => return Err(e),
        }
    }
    Ok(DiscEnumeration {
        discs,
        no_riemann_times,
        final_contact_empty,
    })
}

/// Verify the defining identity of a disc against the product-space
/// solution, and the constancy of `H` along it.
pub fn verify_disc(
    sol: &HmaeSolution,
    ham: &HamiltonianField,
    family: &FlowFamily,
    disc: &DiscDescriptor,
) -> Result<ResidualStats> {
    let g = sol.grid;
    let mut residuals: Vec<f64> = Vec::new();
    let mut h_samples: Vec<f64> = Vec::new();
    match &disc.kind {
        DiscKind::Center => {
            // the solution restricted to z = 0 is phi(0) - s
            let (i, j) = g.origin_node();
            let node = g.idx(i, j);
            let phi0 = family.phi.values(Chart::Z)?[node];
            let prof = sol.profile(Chart::Z, node);
            let hp = ham.profile(Chart::Z, node);
            for (si, &s) in sol.s_grid.iter().enumerate() {
                residuals.push((prof[si] - (phi0 - s)).abs());
                if si > 0 {
                    h_samples.push(hp[si]);
                }
            }
        }
        DiscKind::BoundaryConstant { z, chart_w } => {
            let chart = if *chart_w { Chart::W } else { Chart::Z };
            let c = Complex64::new(z.0, z.1);
            let (i, j) = g
                .nearest_node(c)
                .ok_or_else(|| Error::InvalidParam("disc point off grid".to_string()))?;
            let node = g.idx(i, j);
            let phi_z = family.phi.values(chart)?[node];
            let prof = sol.profile(chart, node);
            let hp = ham.profile(chart, node);
            for si in 0..sol.s_grid.len() {
                residuals.push((prof[si] - phi_z).abs());
                h_samples.push(hp[si]);
            }
        }
        DiscKind::Riemann { t } => {
            let map = disc
                .map
                .as_ref()
                .ok_or_else(|| Error::InvalidParam("Riemann disc without map".to_string()))?;
            let snap = family.nearest_snapshot(*t);
            let psi = snap.psi.values(Chart::Z)?;
            let ds = sol.s_grid[1] - sol.s_grid[0];
            let s_max = *sol.s_grid.last().unwrap();
            for i in 0..g.n {
                for j in 0..g.n {
                    let node = g.idx(i, j);
                    if !map.mask[node] {
                        continue;
                    }
                    let af = map.abs_f[node];
                    // skip the pole cell and a boundary band where |F|
                    // carries the O(h) Dirichlet error
                    if af <= 0.0 || af > 0.9 {
                        continue;
                    }
                    let s = -2.0 * af.ln();
                    if s > s_max - ds {
                        continue;
                    }
                    let val = sol.eval(Chart::Z, node, s)?;
                    residuals.push((val - (psi[node] - (1.0 - *t) * s)).abs());
                    let si = (s / ds).round() as usize;
                    h_samples.push(ham.profile(Chart::Z, node)[si]);
                }
            }
        }
    }
    if residuals.is_empty() {
        return Ok(ResidualStats::default());
    }
    let max = residuals.iter().cloned().fold(0.0, f64::max);
    let mean = residuals.iter().sum::<f64>() / residuals.len() as f64;
    let (h_std, h_dev) = if h_samples.is_empty() {
        (0.0, 0.0)
    } else {
        let m = h_samples.iter().sum::<f64>() / h_samples.len() as f64;
        let var = h_samples.iter().map(|x| (x - m) * (x - m)).sum::<f64>()
            / h_samples.len() as f64;
        let dev = h_samples
            .iter()
            .map(|x| (x - disc.h_value).abs())
            .fold(0.0, f64::max);
        (var.sqrt(), dev)
    };
    Ok(ResidualStats {
        max,
        mean,
        h_std,
        h_dev,
        samples: residuals.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::SphereMask;

    fn disc_mask(g: SphereGrid, r: f64) -> SphereMask {
        let mut m = SphereMask::empty(g);
        for i in 0..g.n {
            for j in 0..g.n {
                if g.active(i, j) && g.coord(i, j).norm() < r {
                    m.z[g.idx(i, j)] = true;
                }
            }
        }
        m
    }

    #[test]
    fn half_disc_map_is_doubling() {
        let g = SphereGrid::new(129, 1.5);
        let m = disc_mask(g, 0.5);
        let map = riemann_map(g, &m).unwrap();
        // the staircase boundary shifts the effective radius by O(h/2), so
        // the overall scale is only first-order accurate; the shape (the
        // ratio F(z)/z across points) is much better
        let mut scales = Vec::new();
        for &(re, im) in &[(0.25, 0.0), (0.0, -0.3), (0.2, 0.2), (-0.35, 0.1)] {
            let z = Complex64::new(re, im);
            let (i, j) = g.nearest_node(z).unwrap();
            let zz = g.coord(i, j);
            let f = map.f(i, j);
            let want = 2.0 * zz;
            assert!(
                (f - want).norm() <= 2.0 * g.h * want.norm().max(0.1),
                "F({zz}) = {f}, want {want}"
            );
            scales.push((f / zz).norm());
        }
        let smin = scales.iter().cloned().fold(f64::INFINITY, f64::min);
        let smax = scales.iter().cloned().fold(0.0, f64::max);
        assert!(smax - smin <= 0.01 * smax, "scale spread {scales:?}");
        assert!(map.conformality_defect() <= 10.0 * g.h);
    }

    #[test]
    fn unit_disc_map_is_identity() {
        let g = SphereGrid::new(129, 1.5);
        let m = disc_mask(g, 1.0);
        let map = riemann_map(g, &m).unwrap();
        for &(re, im) in &[(0.5, 0.0), (0.0, 0.6), (-0.4, -0.4)] {
            let (i, j) = g.nearest_node(Complex64::new(re, im)).unwrap();
            let zz = g.coord(i, j);
            let f = map.f(i, j);
            assert!((f - zz).norm() <= 0.01, "F({zz}) = {f}");
        }
    }

    #[test]
    fn boundary_modulus_near_one() {
        let g = SphereGrid::new(129, 1.5);
        let m = disc_mask(g, 0.8);
        let map = riemann_map(g, &m).unwrap();
        let mut worst: f64 = 0.0;
        for i in 0..g.n {
            for j in 0..g.n {
                let k = g.idx(i, j);
                if !map.mask[k] {
                    continue;
                }
                let r = g.coord(i, j).norm();
                if r > 0.8 - 1.5 * g.h {
                    worst = worst.max((map.abs_f[k] - 1.0).abs());
                }
            }
        }
        assert!(worst <= 5.0 * g.h, "boundary |F| off by {worst}");
    }

    #[test]
    fn annulus_rejected() {
        let g = SphereGrid::new(65, 1.5);
        let mut m = disc_mask(g, 1.0);
        for i in 0..g.n {
            for j in 0..g.n {
                if g.coord(i, j).norm() < 0.3 {
                    m.z[g.idx(i, j)] = false;
                }
            }
        }
        assert!(matches!(riemann_map(g, &m), Err(Error::DomainRejected(_))));
    }

    #[test]
    fn off_center_domain_rejected_without_origin() {
        let g = SphereGrid::new(65, 1.5);
        let mut m = SphereMask::empty(g);
        for i in 0..g.n {
            for j in 0..g.n {
                if (g.coord(i, j) - Complex64::new(0.8, 0.0)).norm() < 0.3 {
                    m.z[g.idx(i, j)] = true;
                }
            }
        }
        assert!(matches!(riemann_map(g, &m), Err(Error::DomainRejected(_))));
    }
}
