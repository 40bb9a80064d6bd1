//! Deterministic renderings of flow families: P6 pixmaps on the Z chart
//! plus a CSV profile along the positive real axis.

use crate::RenderStyle;
use hsflow_core::discs::riemann_map;
use hsflow_core::envelope::FlowFamily;
use hsflow_core::hamiltonian::compute_H;
use hsflow_core::legendre::{build_phi_tilde, uniform_s_grid};
use hsflow_core::{Chart, Result};
use std::io::Write;
use std::path::Path;

pub fn render(family: &FlowFamily, style: RenderStyle, prefix: &Path) -> Result<()> {
    match style {
        RenderStyle::Fronts => fronts(family, prefix),
        RenderStyle::Hamiltonian => hamiltonian(family, prefix),
        RenderStyle::Discs => discs(family, prefix),
    }?;
    profile_csv(family, prefix)
}

fn write_ppm(path: &Path, n: usize, rgb: &[u8]) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    write!(out, "P6\n{n} {n}\n255\n")?;
    out.write_all(rgb)?;
    Ok(())
}

fn heat(v: f64) -> [u8; 3] {
    // blue (0) -> white (0.5) -> red (1)
    let v = v.clamp(0.0, 1.0);
    if v < 0.5 {
        let f = v / 0.5;
        [(255.0 * f) as u8, (255.0 * f) as u8, 255]
    } else {
        let f = (v - 0.5) / 0.5;
        [255, (255.0 * (1.0 - f)) as u8, (255.0 * (1.0 - f)) as u8]
    }
}

/// Nested fronts: shade each node by the first time it is engulfed; the
/// free boundaries show as iso-lines of the shading, the never-engulfed
/// region stays white.
fn fronts(family: &FlowFamily, prefix: &Path) -> Result<()> {
    let g = family.phi.grid;
    let nt = family.snapshots.len().max(1);
    let mut rgb = vec![255u8; g.len() * 3];
    for i in 0..g.n {
        for j in 0..g.n {
            let k = g.idx(i, j);
            if !g.active(i, j) {
                rgb[3 * k..3 * k + 3].copy_from_slice(&[32, 32, 32]);
                continue;
            }
            let hit = family
                .snapshots
                .iter()
                .position(|s| s.mask.z[k])
                .map(|p| p as f64 / nt as f64);
            if let Some(f) = hit {
                // earlier arrival = darker; band the value to make the
                // individual fronts visible
                let banded = (f * nt as f64).floor() / nt as f64;
                let c = heat(banded);
                rgb[3 * k..3 * k + 3].copy_from_slice(&c);
            }
        }
    }
    // image rows top-down: flip i
    let flipped = flip_rows(&rgb, g.n);
    write_ppm(&prefix.with_extension("fronts.ppm"), g.n, &flipped)
}

fn hamiltonian(family: &FlowFamily, prefix: &Path) -> Result<()> {
    let g = family.phi.grid;
    let sol = build_phi_tilde(family, &uniform_s_grid(0.1, 6.0))?;
    let ham = compute_H(&sol);
    let mut rgb = vec![255u8; g.len() * 3];
    for i in 0..g.n {
        for j in 0..g.n {
            let k = g.idx(i, j);
            if !g.active(i, j) {
                rgb[3 * k..3 * k + 3].copy_from_slice(&[32, 32, 32]);
                continue;
            }
            let h = ham.profile(Chart::Z, k)[0]; // s = 0 slice
            let c = heat(h + 1.0);
            rgb[3 * k..3 * k + 3].copy_from_slice(&c);
        }
    }
    let flipped = flip_rows(&rgb, g.n);
    write_ppm(&prefix.with_extension("hamiltonian.ppm"), g.n, &flipped)
}

/// Riemann-map portrait at the middle sampled time: rings of `|F|` and
/// rays of `arg F` over the flow domain.
fn discs(family: &FlowFamily, prefix: &Path) -> Result<()> {
    let g = family.phi.grid;
    let mid = family.snapshots.len() / 2;
    let snap = &family.snapshots[mid.max(1).min(family.snapshots.len() - 1)];
    let mut rgb = vec![255u8; g.len() * 3];
    if let Ok(map) = riemann_map(g, &snap.mask) {
        for k in 0..g.len() {
            if !map.mask[k] {
                continue;
            }
            let rings = ((map.abs_f[k] * 8.0).floor() as u32) % 2;
            let rays = ((map.arg_f[k] / std::f64::consts::PI * 6.0).floor() as u32) % 2;
            let shade = match (rings, rays) {
                (0, 0) => 230,
                (0, 1) => 180,
                (1, 0) => 120,
                _ => 70,
            };
            rgb[3 * k..3 * k + 3].copy_from_slice(&[shade, shade, 255]);
        }
    } else {
        // multiply connected: show the bare domain
        for k in 0..g.len() {
            if snap.mask.z[k] {
                rgb[3 * k..3 * k + 3].copy_from_slice(&[120, 120, 255]);
            }
        }
    }
    let flipped = flip_rows(&rgb, g.n);
    write_ppm(&prefix.with_extension("discs.ppm"), g.n, &flipped)
}

fn flip_rows(rgb: &[u8], n: usize) -> Vec<u8> {
    let mut out = vec![0u8; rgb.len()];
    for i in 0..n {
        let src = (n - 1 - i) * n * 3;
        let dst = i * n * 3;
        out[dst..dst + n * 3].copy_from_slice(&rgb[src..src + n * 3]);
    }
    out
}

/// CSV of `psi_t` along the positive real axis, one column per time.
fn profile_csv(family: &FlowFamily, prefix: &Path) -> Result<()> {
    let g = family.phi.grid;
    let mut out = std::io::BufWriter::new(std::fs::File::create(
        prefix.with_extension("profile.csv"),
    )?);
    write!(out, "r,phi")?;
    for s in &family.snapshots {
        write!(out, ",psi_t{:.4}", s.t)?;
    }
    writeln!(out)?;
    let (oi, oj) = g.origin_node();
    let phi = family.phi.values(Chart::Z)?;
    for j in oj..g.n {
        if !g.active(oi, j) {
            break;
        }
        let k = g.idx(oi, j);
        write!(out, "{},{}", g.coord(oi, j).re, phi[k])?;
        for s in &family.snapshots {
            write!(out, ",{}", s.psi.values(Chart::Z)?[k])?;
        }
        writeln!(out)?;
    }
    Ok(())
}
