//! Example Kähler potentials: zero, radial bumps with a 1-D oracle, the
//! dumbbell density that drives the flow around an annular ridge, and
//! seeded smooth perturbations with a measured C^2 amplitude.
//!
//! The dumbbell density is `f >= 0` vanishing on a tube around the circle
//! `gamma = {|z - a| = a}` through the origin, with one cosine-squared
//! lobe inside `gamma` and one outside, each carrying half the total
//! mass; the potential is `phi = phi_f / (1 + eps)` with
//! `omega_{phi_f} = f omega_FS`, so `omega_phi = (eps + f)/(1 + eps)
//! omega_FS` is Kähler but nearly degenerate on the tube, which pins the
//! advancing front there long enough for it to close around the inner
//! lobe.

use crate::error::{Error, Result};
use crate::field::ChartField;
use crate::grid::{Chart, SphereGrid};
use crate::measure::{check_kahler, fs_measure, MeasureField};
use crate::poisson::solve_poisson;
use crate::solver::SorParams;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub const DUMBBELL_BALANCE_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum PotentialSpec {
    Zero,
    /// Radial density `f(r) = (1 + a b(r)) / norm` with a cosine-squared
    /// bump `b` centred at radius `center` of half-width `width`.
    Radial {
        amplitude: f64,
        center: f64,
        width: f64,
    },
    /// The two-lobe construction around the circle `|z - a| = a`.
    Dumbbell {
        a: f64,
        eps: f64,
        lobe_in: (f64, f64),
        lobe_out: (f64, f64),
    },
    /// Field loaded from a grid file (handled by the caller).
    CustomGrid { path: String },
}

impl PotentialSpec {
    pub fn radial_default() -> Self {
        PotentialSpec::Radial {
            amplitude: 0.4,
            center: 0.7,
            width: 0.4,
        }
    }

    pub fn dumbbell_default() -> Self {
        PotentialSpec::Dumbbell {
            a: 0.6,
            eps: 0.05,
            lobe_in: (0.55, 0.30),
            lobe_out: (-0.80, 0.35),
        }
    }
}

/// Smooth compactly supported bump: `cos^2(pi d / 2w)` for `d < w`.
fn cos2_bump(d: f64, w: f64) -> f64 {
    if d >= w {
        0.0
    } else {
        let c = (std::f64::consts::FRAC_PI_2 * d / w).cos();
        c * c
    }
}

/// Fubini-Study area of `{|z| <= r}`: `r^2 / (1 + r^2)`.
fn fs_area(r: f64) -> f64 {
    r * r / (1.0 + r * r)
}

/// 1-D description of a radial density: `f(r)` against `omega_FS`.
#[derive(Debug, Clone, Copy)]
pub struct RadialProfile {
    pub amplitude: f64,
    pub center: f64,
    pub width: f64,
    norm: f64,
}

impl RadialProfile {
    pub fn new(amplitude: f64, center: f64, width: f64) -> Result<Self> {
        if amplitude <= -1.0 || width <= 0.0 || center < 0.0 {
            return Err(Error::InvalidParam(format!(
                "radial profile (a={amplitude}, c={center}, w={width})"
            )));
        }
        let mut p = RadialProfile {
            amplitude,
            center,
            width,
            norm: 1.0,
        };
        p.norm = p.mass_upto(f64::INFINITY);
        if p.norm <= 0.0 {
            return Err(Error::InvalidParam("degenerate radial density".to_string()));
        }
        Ok(p)
    }

    pub fn density(&self, r: f64) -> f64 {
        (1.0 + self.amplitude * cos2_bump((r - self.center).abs(), self.width)) / self.norm
    }

    /// `integral_{|z| <= r} f omega_FS` by substitution `u = fs_area(rho)`
    /// and composite Simpson quadrature.
    pub fn mass_upto(&self, r: f64) -> f64 {
        let u_hi = if r.is_finite() { fs_area(r) } else { 1.0 };
        let m = 4096usize;
        let du = u_hi / m as f64;
        let dens_u = |u: f64| {
            // rho(u) with u = rho^2/(1+rho^2)
            let rho = (u / (1.0 - u).max(1e-300)).sqrt();
            self.density(rho) * self.norm // unnormalized here
        };
        let mut acc = dens_u(0.0) + dens_u(u_hi);
        for k in 1..m {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * dens_u(k as f64 * du);
        }
        acc * du / 3.0 / self.norm
    }

    /// Flow radius at time `t`: solve `mass_upto(r) = t` by bisection.
    pub fn flow_radius(&self, t: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::TimeOutOfRange(t));
        }
        if t == 0.0 {
            return Ok(0.0);
        }
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        while self.mass_upto(hi) < t {
            hi *= 2.0;
            if hi > 1e12 {
                return Ok(f64::INFINITY);
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.mass_upto(mid) < t {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Potential value at radius `r`: `phi(r) = int_0^r 2 m(rho)/rho drho
    /// - ln(1+r^2)`, normalized to `phi(0) = 0`.  (Radially,
    /// `omega_FS + dd^c phi = f omega_FS` integrates to
    /// `r phi_fs'(r)/2 = m(r)` for the full potential `phi_fs = ln(1+r^2)
    /// + phi`.)
    pub fn potential(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        let m = 2048usize;
        let dr = r / m as f64;
        let integrand = |rho: f64| {
            if rho <= 0.0 {
                0.0
            } else {
                2.0 * self.mass_upto(rho) / rho
            }
        };
        let mut acc = integrand(0.0) + integrand(r);
        for k in 1..m {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * integrand(k as f64 * dr);
        }
        acc * dr / 3.0 - (1.0 + r * r).ln()
    }

    /// Closed-form flow profile at time `t`: inside the flow radius the
    /// potential is `t ln r^2 + C - ln(1+r^2)` relative to the chart's FS
    /// potential, matched continuously to `phi` at the boundary.
    pub fn flow_profile(&self, t: f64) -> Result<(f64, impl Fn(f64) -> f64 + '_)> {
        let rt = self.flow_radius(t)?;
        let c = if rt > 0.0 && rt.is_finite() {
            self.potential(rt) + (1.0 + rt * rt).ln() - t * (rt * rt).ln()
        } else {
            0.0
        };
        let profile = move |r: f64| -> f64 {
            if r >= rt || rt == 0.0 {
                self.potential(r)
            } else if r == 0.0 {
                f64::NEG_INFINITY
            } else {
                t * (r * r).ln() + c - (1.0 + r * r).ln()
            }
        };
        Ok((rt, profile))
    }
}

/// Memoized radial potential, tabulated separately in `r = |z|` on the Z
/// chart and in `s = |w| = 1/r` on the W chart so no clamping near
/// infinity is needed.  Both tables integrate the same flux balance
/// `r (d/dr)(ln(1+r^2) + phi) = 2 m(r)`; the W table is anchored to the Z
/// table at the overlap radius `r = 1/s_max`.
struct RadialTable {
    dr: f64,
    phi_r: Vec<f64>,
    ds: f64,
    phi_s: Vec<f64>,
}

impl RadialTable {
    fn build(p: &RadialProfile, r_max: f64) -> Self {
        let m = 20_000usize;
        let dens_da = |r: f64| p.density(r) * 2.0 * r / ((1.0 + r * r) * (1.0 + r * r));

        // Z chart: phi'(r) = 2 m(r)/r - 2r/(1+r^2), phi(0) = 0
        let dr = r_max / m as f64;
        let mut phi_r = Vec::with_capacity(m + 1);
        phi_r.push(0.0);
        let mut mass = 0.0;
        let mut val = 0.0;
        for k in 0..m {
            let rm = (k as f64 + 0.5) * dr;
            let mass_mid = mass + 0.5 * dr * dens_da(rm);
            let s_mid = 2.0 * mass_mid / rm - 2.0 * rm / (1.0 + rm * rm);
            mass += dr * dens_da(rm);
            val += dr * s_mid;
            phi_r.push(val);
        }

        // W chart: with q(s) = phi(1/s) and tail(s) the mass beyond radius
        // 1/s, q'(s) = (2/s) (tail(s) - s^2/(1+s^2)); the FS area element
        // is inversion-symmetric, so tail accumulates like a mass in s
        let ds = r_max / m as f64; // table covers s in [0, r_max]
        let dens_da_w = |s: f64| {
            if s <= 0.0 {
                0.0
            } else {
                p.density(1.0 / s) * 2.0 * s / ((1.0 + s * s) * (1.0 + s * s))
            }
        };
        let mut phi_s = Vec::with_capacity(m + 1);
        phi_s.push(0.0);
        let mut tail = 0.0;
        let mut qval = 0.0;
        for k in 0..m {
            let sm = (k as f64 + 0.5) * ds;
            let tail_mid = tail + 0.5 * ds * dens_da_w(sm);
            let slope = (2.0 / sm) * (tail_mid - sm * sm / (1.0 + sm * sm));
            tail += ds * dens_da_w(sm);
            qval += ds * slope;
            phi_s.push(qval);
        }
        // anchor: q(1) must equal phi(1)
        let mut table = RadialTable {
            dr,
            phi_r,
            ds,
            phi_s,
        };
        let offset = table.eval_r(1.0) - table.raw_s(1.0);
        for v in &mut table.phi_s {
            *v += offset;
        }
        table
    }

    fn lerp(vals: &[f64], step: f64, x: f64) -> f64 {
        let t = (x / step).clamp(0.0, (vals.len() - 1) as f64 - 1e-9);
        let k = t.floor() as usize;
        let f = t - k as f64;
        vals[k] * (1.0 - f) + vals[k + 1] * f
    }

    fn eval_r(&self, r: f64) -> f64 {
        Self::lerp(&self.phi_r, self.dr, r)
    }

    fn raw_s(&self, s: f64) -> f64 {
        Self::lerp(&self.phi_s, self.ds, s)
    }

    /// `phi` at the point with `|w| = s` (i.e. `|z| = 1/s`), valid down to
    /// `s = 0` (infinity).
    fn eval_s(&self, s: f64) -> f64 {
        self.raw_s(s)
    }
}

/// The dumbbell density `f` at a global Z-chart point (finite part; `f`
/// at infinity is 0 for the shipped defaults).
fn dumbbell_density(
    z: Complex64,
    a: f64,
    lobe_in: (f64, f64),
    lobe_out: (f64, f64),
    scale_in: f64,
    scale_out: f64,
) -> f64 {
    let _ = a;
    let din = (z - Complex64::new(lobe_in.0, 0.0)).norm();
    let dout = (z - Complex64::new(lobe_out.0, 0.0)).norm();
    scale_in * cos2_bump(din, lobe_in.1) + scale_out * cos2_bump(dout, lobe_out.1)
}

pub fn make_potential(spec: &PotentialSpec, grid: SphereGrid) -> Result<ChartField> {
    let phi = match spec {
        PotentialSpec::Zero => ChartField::zeros(grid, "phi_zero"),
        PotentialSpec::Radial {
            amplitude,
            center,
            width,
        } => {
            let p = RadialProfile::new(*amplitude, *center, *width)?;
            let table = RadialTable::build(&p, 2.0 * grid.extent);
            ChartField::from_chart_fns(
                grid,
                "phi_radial",
                |z| table.eval_r(z.norm()),
                |w| table.eval_s(w.norm()),
            )
        }
        PotentialSpec::Dumbbell {
            a,
            eps,
            lobe_in,
            lobe_out,
        } => dumbbell_potential(grid, *a, *eps, *lobe_in, *lobe_out)?,
        PotentialSpec::CustomGrid { path } => {
            return Err(Error::InvalidParam(format!(
                "custom grid potentials are loaded by the caller, got path {path}"
            )))
        }
    };
    check_kahler(&phi, 1e-10)?;
    Ok(phi)
}

fn dumbbell_potential(
    grid: SphereGrid,
    a: f64,
    eps: f64,
    lobe_in: (f64, f64),
    lobe_out: (f64, f64),
) -> Result<ChartField> {
    // geometric sanity: both lobes keep a positive distance from gamma
    let gap_in = (a - (lobe_in.0 - a).abs()) - lobe_in.1;
    let gap_out = ((lobe_out.0 - a).abs() - a) - lobe_out.1;
    if gap_in <= 0.0 || gap_out <= 0.0 {
        return Err(Error::InvalidParam(format!(
            "lobes touch the separating circle (gaps {gap_in}, {gap_out})"
        )));
    }

    let fs = fs_measure(grid);
    // raw lobe masses, computed on owned cells so each counts once
    let lobe_mass = |scale_in: f64, scale_out: f64| -> MeasureField {
        let mut m = MeasureField::zeros(grid);
        for chart in [Chart::Z, Chart::W] {
            let fsv = fs.masses(chart);
            let out = match chart {
                Chart::Z => &mut m.z,
                Chart::W => &mut m.w,
            };
            for i in 0..grid.n {
                for j in 0..grid.n {
                    if !grid.active(i, j) {
                        continue;
                    }
                    let c = grid.coord(i, j);
                    let z = match chart {
                        Chart::Z => c,
                        Chart::W => {
                            if c.norm_sqr() == 0.0 {
                                continue; // f(infinity) = 0
                            }
                            1.0 / c
                        }
                    };
                    let k = grid.idx(i, j);
                    out[k] = dumbbell_density(z, a, lobe_in, lobe_out, scale_in, scale_out)
                        * fsv[k];
                }
            }
        }
        m
    };
    let raw_in = lobe_mass(1.0, 0.0).total();
    let raw_out = lobe_mass(0.0, 1.0).total();
    if raw_in <= 0.0 || raw_out <= 0.0 {
        return Err(Error::LobeNormalization(format!(
            "lobe masses {raw_in}, {raw_out}"
        )));
    }
    // rescale each lobe to half the discrete FS total so the Poisson
    // balance holds to rounding
    let half = 0.5 * fs.total();
    let rhs = lobe_mass(half / raw_in, half / raw_out);
    let check_in = lobe_mass(half / raw_in, 0.0).total();
    let check_out = lobe_mass(0.0, half / raw_out).total();
    if (check_in - half).abs() > DUMBBELL_BALANCE_TOL
        || (check_out - half).abs() > DUMBBELL_BALANCE_TOL
    {
        return Err(Error::LobeNormalization(format!(
            "normalized lobe masses {check_in}, {check_out}"
        )));
    }
    let phi_f = solve_poisson(&rhs, &SorParams::default())?;
    let mut phi = phi_f;
    for chart in [Chart::Z, Chart::W] {
        for v in phi.values_mut(chart) {
            *v /= 1.0 + eps;
        }
    }
    phi.name = "phi_dumbbell".to_string();
    Ok(phi)
}

/// Smooth sphere bump centred at a Z-chart point, expressed in the
/// chordal metric so it is smooth across both charts.
fn chordal_bump(z: Complex64, p: Complex64, sigma: f64) -> f64 {
    let d2 = (z - p).norm_sqr() / ((1.0 + z.norm_sqr()) * (1.0 + p.norm_sqr()));
    (-d2 / (sigma * sigma)).exp()
}

/// Measured discrete C^2 size: max over owned nodes of
/// `|u| + |grad u| + |hess u|` by central differences on the owning
/// chart.
pub fn c2_norm(field: &ChartField) -> Result<f64> {
    let g = field.grid;
    let mut worst: f64 = 0.0;
    for chart in [Chart::Z, Chart::W] {
        let v = field.values(chart)?;
        for i in 1..g.n - 1 {
            for j in 1..g.n - 1 {
                if !g.owned(chart, i, j) || !g.interior(i, j) {
                    continue;
                }
                let k = g.idx(i, j);
                let (e, w, no, s) = (v[k + 1], v[k - 1], v[k + g.n], v[k - g.n]);
                let gx = (e - w) / (2.0 * g.h);
                let gy = (no - s) / (2.0 * g.h);
                let hxx = (e - 2.0 * v[k] + w) / (g.h * g.h);
                let hyy = (no - 2.0 * v[k] + s) / (g.h * g.h);
                let hxy = (v[k + g.n + 1] - v[k + g.n - 1] - v[k - g.n + 1] + v[k - g.n - 1])
                    / (4.0 * g.h * g.h);
                let size = v[k].abs()
                    + (gx * gx + gy * gy).sqrt()
                    + (hxx * hxx + 2.0 * hxy * hxy + hyy * hyy).sqrt();
                if size > worst {
                    worst = size;
                }
            }
        }
    }
    Ok(worst)
}

/// Add a deterministic sum of smooth bumps, scaled so the measured C^2
/// size of the increment is at most `amplitude`; the result must stay
/// Kähler.
pub fn perturb(phi: &ChartField, amplitude: f64, seed: u64) -> Result<ChartField> {
    if amplitude < 0.0 {
        return Err(Error::InvalidParam(format!(
            "negative amplitude {amplitude}"
        )));
    }
    if amplitude == 0.0 {
        return Ok(phi.clone());
    }
    let grid = phi.grid;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bumps: Vec<(Complex64, f64, f64)> = (0..6)
        .map(|_| {
            let re = rng.gen_range(-1.2..1.2);
            let im = rng.gen_range(-1.2..1.2);
            let sigma = rng.gen_range(0.25..0.6);
            let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            (Complex64::new(re, im), sigma, sign)
        })
        .collect();
    let raw = ChartField::from_global(
        grid,
        "perturbation",
        |z| {
            bumps
                .iter()
                .map(|&(p, s, sg)| sg * chordal_bump(z, p, s))
                .sum()
        },
        bumps
            .iter()
            .map(|&(p, s, sg)| sg * chordal_bump(Complex64::new(1e12, 0.0), p, s))
            .sum(),
    );
    let size = c2_norm(&raw)?;
    if size <= 0.0 {
        return Ok(phi.clone());
    }
    let scale = amplitude / size;
    let mut out = phi.clone();
    for chart in [Chart::Z, Chart::W] {
        let r = raw.values(chart)?.to_vec();
        for (v, d) in out.values_mut(chart).iter_mut().zip(r) {
            *v += scale * d;
        }
    }
    out.name = format!("{}_perturbed", phi.name);
    check_kahler(&out, 1e-10).map_err(|_| Error::PerturbationTooLarge { amplitude })?;
    Ok(out)
}
