//! SOR relaxation on the two charts with alternating-Schwarz coupling.
//!
//! Rim nodes of each chart's active disc take Dirichlet data interpolated
//! from the other chart through `w = 1/z`; interior nodes are relaxed by
//! (projected) SOR.  The sweep schedule is fixed and sequential, so results
//! are deterministic.

use crate::error::{Error, Result};
use crate::grid::SphereGrid;

pub const NODE_INACTIVE: u8 = 0;
pub const NODE_RIM: u8 = 1;
pub const NODE_INTERIOR: u8 = 2;

/// Bilinear stencil pulling one rim value from the other chart.
#[derive(Debug, Clone, Copy)]
struct RimStencil {
    k: usize,
    base: usize,
    tx: f64,
    ty: f64,
}

/// Precomputed coupling tables for one grid.
pub struct Coupling {
    pub grid: SphereGrid,
    pub flags: Vec<u8>,
    rim_z: Vec<RimStencil>,
    rim_w: Vec<RimStencil>,
}

impl Coupling {
    pub fn new(grid: SphereGrid) -> Self {
        let mut flags = vec![NODE_INACTIVE; grid.len()];
        for i in 0..grid.n {
            for j in 0..grid.n {
                if grid.interior(i, j) {
                    flags[grid.idx(i, j)] = NODE_INTERIOR;
                } else if grid.active(i, j) {
                    flags[grid.idx(i, j)] = NODE_RIM;
                }
            }
        }
        // the rim geometry is the same for both charts (identical square
        // layouts related by inversion), so one stencil table serves both
        let mut rim = Vec::new();
        for i in 0..grid.n {
            for j in 0..grid.n {
                if flags[grid.idx(i, j)] != NODE_RIM {
                    continue;
                }
                let c = grid.coord(i, j);
                // rim nodes sit near |c| = R, so the image 1/c lies well
                // inside the other chart
                let p = c.inv();
                let fx = (p.re + grid.extent) / grid.h;
                let fy = (p.im + grid.extent) / grid.h;
                let jj = (fx.floor() as usize).min(grid.n - 2);
                let ii = (fy.floor() as usize).min(grid.n - 2);
                rim.push(RimStencil {
                    k: grid.idx(i, j),
                    base: grid.idx(ii, jj),
                    tx: fx - jj as f64,
                    ty: fy - ii as f64,
                });
            }
        }
        Coupling {
            grid,
            flags,
            rim_z: rim.clone(),
            rim_w: rim,
        }
    }

    /// Refresh rim values of both charts from the opposite chart's data.
    /// Returns the largest rim change.
    ///
    /// With an obstacle, the quantity transferred near contact is the gap
    /// `obstacle - u`, not `u` itself: the obstacles of the two charts
    /// represent the same function only up to their own discretization
    /// error, which is far larger than the contact tolerance, so a raw
    /// value transfer would pull rims in contact on one chart visibly
    /// below the obstacle of the other.  Gap transfer maps contact to
    /// contact exactly.  Away from contact (pulled gap above `kappa`) the
    /// transfer blends back to raw values: pure gap transfer carries a
    /// fixed obstacle-interpolation offset, which has no consistent
    /// solution when nothing is in contact and would make the iterate
    /// drift.  (Clamping to the obstacle also has to happen before the
    /// change is measured: interpolation error recurs every sweep and
    /// would stall the stopping test otherwise.)
    fn exchange(
        &self,
        uz: &mut [f64],
        uw: &mut [f64],
        obstacle: Option<(&[f64], &[f64])>,
        kappa: f64,
    ) -> f64 {
        let n = self.grid.n;
        let mut delta: f64 = 0.0;
        let pull = |s: &RimStencil, at: &dyn Fn(usize) -> f64| -> f64 {
            at(s.base) * (1.0 - s.tx) * (1.0 - s.ty)
                + at(s.base + 1) * s.tx * (1.0 - s.ty)
                + at(s.base + n) * (1.0 - s.tx) * s.ty
                + at(s.base + n + 1) * s.tx * s.ty
        };
        let mut side = |rim: &[RimStencil], u: &mut [f64], other: &[f64], obs_pair: Option<(&[f64], &[f64])>| {
            for s in rim {
                let v = match obs_pair {
                    Some((obs_here, obs_there)) => {
                        let gap = pull(s, &|k| obs_there[k] - other[k]).max(0.0);
                        let raw = pull(s, &|k| other[k]).min(obs_here[s.k]);
                        let theta = (gap / kappa).clamp(0.0, 1.0);
                        theta * raw + (1.0 - theta) * (obs_here[s.k] - gap)
                    }
                    None => pull(s, &|k| other[k]),
                };
                delta = delta.max((v - u[s.k]).abs());
                u[s.k] = v;
            }
        };
        // split borrows: each side reads the other chart and writes its own
        side(&self.rim_z, uz, uw, obstacle);
        side(&self.rim_w, uw, uz, obstacle.map(|(a, b)| (b, a)));
        delta
    }
}

/// Near-optimal SOR factor for the 5-point Laplacian on this grid.
pub fn auto_omega(n: usize) -> f64 {
    (2.0 / (1.0 + (std::f64::consts::PI / (n - 1) as f64).sin())).min(1.995)
}

#[derive(Debug, Clone, Copy)]
pub struct SorParams {
    /// Relaxation factor; `None` selects [`auto_omega`].
    pub omega: Option<f64>,
    /// Stop when the largest nodal update per sweep drops below
    /// `tol * scale`.
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for SorParams {
    fn default() -> Self {
        SorParams {
            omega: None,
            tol: 1e-10,
            max_sweeps: 1_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SolveStats {
    pub sweeps: usize,
    pub last_update: f64,
    pub residual: f64,
}

/// One chart's data for a relaxation problem in "potential form":
/// relax `u` so that `Delta_h (u + bg) = src` (unscaled stencil units)
/// subject to `u <= obstacle` where an obstacle is given.
pub struct ChartProblem<'a> {
    pub u: &'a mut [f64],
    pub bg: &'a [f64],
    pub src: &'a [f64],
    pub obstacle: Option<&'a [f64]>,
}

fn sweep(grid: &SphereGrid, flags: &[u8], p: &mut ChartProblem, omega: f64) -> f64 {
    let n = grid.n;
    let mut delta: f64 = 0.0;
    for i in 1..n - 1 {
        let row = i * n;
        for k in row + 1..row + n - 1 {
            if flags[k] != NODE_INTERIOR {
                continue;
            }
            let nb = p.u[k - 1] + p.bg[k - 1] + p.u[k + 1] + p.bg[k + 1] + p.u[k - n]
                + p.bg[k - n]
                + p.u[k + n]
                + p.bg[k + n];
            let target = 0.25 * (nb - p.src[k]) - p.bg[k];
            let mut v = p.u[k] + omega * (target - p.u[k]);
            if let Some(obs) = p.obstacle {
                if v > obs[k] {
                    v = obs[k];
                }
            }
            delta = delta.max((v - p.u[k]).abs());
            p.u[k] = v;
        }
    }
    delta
}

fn residual(grid: &SphereGrid, flags: &[u8], p: &ChartProblem) -> f64 {
    let n = grid.n;
    let mut worst: f64 = 0.0;
    for i in 1..n - 1 {
        let row = i * n;
        for k in row + 1..row + n - 1 {
            if flags[k] != NODE_INTERIOR {
                continue;
            }
            let lap = p.u[k - 1] + p.bg[k - 1] + p.u[k + 1] + p.bg[k + 1] + p.u[k - n]
                + p.bg[k - n]
                + p.u[k + n]
                + p.bg[k + n]
                - 4.0 * (p.u[k] + p.bg[k]);
            let r = lap - p.src[k];
            let r = match p.obstacle {
                // complementarity: at contact only the sign matters
                Some(obs) if p.u[k] >= obs[k] => (-r).max(0.0),
                _ => r.abs(),
            };
            worst = worst.max(r);
        }
    }
    worst
}

/// Single-chart SOR with fixed rim values: the Dirichlet data must already
/// be written into `u` at the rim nodes before the call.
pub fn dirichlet_sor(
    grid: &SphereGrid,
    flags: &[u8],
    u: &mut [f64],
    src: &[f64],
    params: &SorParams,
    scale: f64,
    solver: &'static str,
) -> Result<SolveStats> {
    let omega = params.omega.unwrap_or_else(|| auto_omega(grid.n));
    let stop = params.tol * scale.max(1.0);
    let zeros = vec![0.0; u.len()];
    let mut stats = SolveStats::default();
    for sweep_no in 1..=params.max_sweeps {
        let mut p = ChartProblem {
            u: &mut *u,
            bg: &zeros,
            src,
            obstacle: None,
        };
        let delta = sweep(grid, flags, &mut p, omega);
        stats.sweeps = sweep_no;
        stats.last_update = delta;
        if delta < stop {
            let p = ChartProblem {
                u: &mut *u,
                bg: &zeros,
                src,
                obstacle: None,
            };
            stats.residual = residual(grid, flags, &p);
            return Ok(stats);
        }
    }
    Err(Error::NoConvergence {
        solver,
        sweeps: params.max_sweeps,
        residual: stats.last_update,
    })
}

/// Coupled projected-SOR solve over both charts.
///
/// `scale` normalizes the stopping test.  Returns solver statistics;
/// errors out when the sweep cap is exceeded.
#[allow(clippy::too_many_arguments)]
pub fn coupled_sor(
    coupling: &Coupling,
    uz: &mut Vec<f64>,
    uw: &mut Vec<f64>,
    bg_z: &[f64],
    bg_w: &[f64],
    src_z: &[f64],
    src_w: &[f64],
    obstacle: Option<(&[f64], &[f64])>,
    params: &SorParams,
    scale: f64,
    solver: &'static str,
) -> Result<SolveStats> {
    let grid = coupling.grid;
    let omega = params.omega.unwrap_or_else(|| auto_omega(grid.n));
    let stop = params.tol * scale.max(1.0);
    let mut stats = SolveStats::default();
    for sweep_no in 1..=params.max_sweeps {
        let mut delta = coupling.exchange(uz, uw, obstacle, 0.01 * scale.max(1.0));
        let mut pz = ChartProblem {
            u: uz,
            bg: bg_z,
            src: src_z,
            obstacle: obstacle.map(|o| o.0),
        };
        delta = delta.max(sweep(&grid, &coupling.flags, &mut pz, omega));
        let mut pw = ChartProblem {
            u: uw,
            bg: bg_w,
            src: src_w,
            obstacle: obstacle.map(|o| o.1),
        };
        delta = delta.max(sweep(&grid, &coupling.flags, &mut pw, omega));
        stats.sweeps = sweep_no;
        stats.last_update = delta;
        if delta < stop {
            let pz = ChartProblem {
                u: uz,
                bg: bg_z,
                src: src_z,
                obstacle: obstacle.map(|o| o.0),
            };
            let pw = ChartProblem {
                u: uw,
                bg: bg_w,
                src: src_w,
                obstacle: obstacle.map(|o| o.1),
            };
            stats.residual = residual(&grid, &coupling.flags, &pz)
                .max(residual(&grid, &coupling.flags, &pw));
            return Ok(stats);
        }
    }
    Err(Error::NoConvergence {
        solver,
        sweeps: params.max_sweeps,
        residual: stats.last_update,
    })
}
