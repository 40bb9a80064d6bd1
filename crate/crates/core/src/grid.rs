//! Discretization of the Riemann sphere by two overlapping square charts.
//!
//! The Z chart carries the coordinate `z`, the W chart carries `w = 1/z`.
//! Each chart is an `n x n` grid over `[-R, R]^2`; nodes with `|coord| > R`
//! are inactive, so the active region of each chart is the disc of radius
//! `R`.  With `R >= 1.5` the two active discs overlap on the annulus
//! `1/R <= |z| <= R`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Chart {
    Z,
    W,
}

impl Chart {
    pub fn other(self) -> Chart {
        match self {
            Chart::Z => Chart::W,
            Chart::W => Chart::Z,
        }
    }
}

pub const DEFAULT_EXTENT: f64 = 1.5;

/// Shared layout of the two chart grids (same `n` and extent on both).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphereGrid {
    pub n: usize,
    pub extent: f64,
    pub h: f64,
}

impl SphereGrid {
    pub fn new(n: usize, extent: f64) -> Self {
        assert!(n >= 16, "grid must have at least 16 nodes per side");
        assert!(extent >= 1.5, "charts must overlap: extent >= 1.5");
        let h = 2.0 * extent / (n - 1) as f64;
        SphereGrid { n, extent, h }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    #[inline]
    pub fn idx(&self, i: usize, j: usize) -> usize {
        i * self.n + j
    }

    /// Chart coordinate of node `(i, j)`: `(-R + j h) + i_unit (-R + i h)`.
    #[inline]
    pub fn coord(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(-self.extent + j as f64 * self.h, -self.extent + i as f64 * self.h)
    }

    #[inline]
    pub fn active(&self, i: usize, j: usize) -> bool {
        self.coord(i, j).norm() <= self.extent + 1e-12
    }

    /// Active node on the rim of the active disc (some 4-neighbour inactive
    /// or on the grid edge).  These nodes take Schwarz boundary data.
    pub fn rim(&self, i: usize, j: usize) -> bool {
        if !self.active(i, j) {
            return false;
        }
        if i == 0 || j == 0 || i + 1 == self.n || j + 1 == self.n {
            return true;
        }
        !(self.active(i - 1, j)
            && self.active(i + 1, j)
            && self.active(i, j - 1)
            && self.active(i, j + 1))
    }

    /// Interior node: active and relaxed by the solvers.
    #[inline]
    pub fn interior(&self, i: usize, j: usize) -> bool {
        self.active(i, j) && !self.rim(i, j)
    }

    /// Node index nearest to chart coordinate 0 (exact when `n` is odd).
    pub fn origin_node(&self) -> (usize, usize) {
        let k = (self.n - 1) / 2;
        // for even n both candidates are at distance h/2; pick the lower one
        (k, k)
    }

    /// True when the chart coordinate 0 is exactly a grid node.
    pub fn has_exact_origin(&self) -> bool {
        self.n % 2 == 1
    }

    /// Bilinear interpolation of `values` at chart coordinate `p`.
    /// Returns `None` if any of the four surrounding nodes is inactive or
    /// `p` lies outside the grid.
    pub fn interp(&self, values: &[f64], p: Complex64) -> Option<f64> {
        let fx = (p.re + self.extent) / self.h;
        let fy = (p.im + self.extent) / self.h;
        if fx < 0.0 || fy < 0.0 {
            return None;
        }
        let j = (fx.floor() as usize).min(self.n.saturating_sub(2));
        let i = (fy.floor() as usize).min(self.n.saturating_sub(2));
        let tx = fx - j as f64;
        let ty = fy - i as f64;
        if !(0.0..=1.0 + 1e-9).contains(&tx) || !(0.0..=1.0 + 1e-9).contains(&ty) {
            return None;
        }
        if !(self.active(i, j)
            && self.active(i, j + 1)
            && self.active(i + 1, j)
            && self.active(i + 1, j + 1))
        {
            return None;
        }
        let v00 = values[self.idx(i, j)];
        let v01 = values[self.idx(i, j + 1)];
        let v10 = values[self.idx(i + 1, j)];
        let v11 = values[self.idx(i + 1, j + 1)];
        Some(v00 * (1.0 - tx) * (1.0 - ty) + v01 * tx * (1.0 - ty) + v10 * (1.0 - tx) * ty + v11 * tx * ty)
    }

    /// Nearest grid node to chart coordinate `p`, if inside the grid box.
    pub fn nearest_node(&self, p: Complex64) -> Option<(usize, usize)> {
        let j = ((p.re + self.extent) / self.h).round();
        let i = ((p.im + self.extent) / self.h).round();
        if i < 0.0 || j < 0.0 || i >= self.n as f64 || j >= self.n as f64 {
            return None;
        }
        Some((i as usize, j as usize))
    }

    /// Measure-integration ownership: the Z chart owns `|z| <= 1`, the W
    /// chart owns `|w| < 1`.  Every point of the sphere is owned by exactly
    /// one chart.
    #[inline]
    pub fn owned(&self, chart: Chart, i: usize, j: usize) -> bool {
        let r = self.coord(i, j).norm();
        match chart {
            Chart::Z => r <= 1.0,
            Chart::W => r < 1.0,
        }
    }
}

/// Global `z`-coordinate of a node of the given chart (`w = 1/z`).
/// Returns `None` for the W-chart node at `w = 0` (the point at infinity).
pub fn global_z(grid: &SphereGrid, chart: Chart, i: usize, j: usize) -> Option<Complex64> {
    let c = grid.coord(i, j);
    match chart {
        Chart::Z => Some(c),
        Chart::W => {
            if c.norm() == 0.0 {
                None
            } else {
                Some(c.inv())
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn node_layout_is_row_major_and_deterministic() {
        let g = SphereGrid::new(17, 1.5);
        assert_eq!(g.h, 3.0 / 16.0);
        let c = g.coord(2, 5);
        assert!((c.re - (-1.5 + 5.0 * g.h)).abs() < 1e-15);
        assert!((c.im - (-1.5 + 2.0 * g.h)).abs() < 1e-15);
        assert_eq!(g.idx(2, 5), 2 * 17 + 5);
    }

    #[test]
    fn corners_inactive_axis_active() {
        let g = SphereGrid::new(33, 1.5);
        assert!(!g.active(0, 0));
        assert!(g.active(16, 0));
        assert!(g.rim(16, 0));
        assert!(g.interior(16, 16));
    }

    #[test]
    fn interp_recovers_bilinear_function() {
        let g = SphereGrid::new(33, 1.5);
        let vals: Vec<f64> = (0..g.len())
            .map(|k| {
                let c = g.coord(k / g.n, k % g.n);
                2.0 * c.re - 3.0 * c.im + 0.5
            })
            .collect();
        let p = Complex64::new(0.3141, -0.2718);
        let v = g.interp(&vals, p).unwrap();
        assert!((v - (2.0 * p.re - 3.0 * p.im + 0.5)).abs() < 1e-12);
    }

    #[test]
    fn odd_grid_has_exact_origin() {
        let g = SphereGrid::new(33, 1.5);
        assert!(g.has_exact_origin());
        let (i, j) = g.origin_node();
        assert_eq!(g.coord(i, j).norm(), 0.0);
    }
}
