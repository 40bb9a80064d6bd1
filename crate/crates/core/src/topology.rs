//! Connectivity of flow domains on the sphere: component counts for a
//! two-chart mask (stitched across the overlap so components are counted
//! on the sphere, with infinity living on the W chart), per-time rows,
//! and detection of the time window where the complement splits.

use crate::envelope::FlowFamily;
use crate::error::Result;
use crate::grid::Chart;
use crate::measure::SphereMask;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TopologyRow {
    pub t: f64,
    pub domain_components: usize,
    pub complement_components: usize,
    pub simply_connected: bool,
    pub area: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConnectivityReport {
    pub rows: Vec<TopologyRow>,
    /// Maximal `(t1, t2)` with complement split over at least 2
    /// consecutive time rows, if any.
    pub window: Option<(f64, f64)>,
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra] = rb;
        }
    }
}

/// Count connected components of the mask (4-connectivity) and of its
/// active complement (8-connectivity) on the sphere.
pub fn component_count(mask: &SphereMask) -> (usize, usize) {
    let g = mask.grid;
    let len = g.len();
    // one union-find over both charts: index = chart * len + node
    let mut uf_dom = UnionFind::new(2 * len);
    let mut uf_comp = UnionFind::new(2 * len);

    let state = |chart: Chart, k: usize| -> Option<bool> {
        let (nodes, i, j) = match chart {
            Chart::Z => (&mask.z, k / g.n, k % g.n),
            Chart::W => (&mask.w, k / g.n, k % g.n),
        };
        if g.active(i, j) {
            Some(nodes[k])
        } else {
            None
        }
    };

    for (c, chart) in [Chart::Z, Chart::W].into_iter().enumerate() {
        for i in 0..g.n {
            for j in 0..g.n {
                let k = g.idx(i, j);
                let Some(here) = state(chart, k) else { continue };
                // 4-neighbours for the domain, diagonals added for the
                // complement
                let straight: [(isize, isize); 2] = [(0, 1), (1, 0)];
                let diag: [(isize, isize); 2] = [(1, 1), (1, -1)];
                for (di, dj) in straight {
                    let (ni, nj) = (i as isize + di, j as isize + dj);
                    if ni < 0 || nj < 0 || ni >= g.n as isize || nj >= g.n as isize {
                        continue;
                    }
                    let nk = g.idx(ni as usize, nj as usize);
                    if state(chart, nk) == Some(here) {
                        if here {
                            uf_dom.union(c * len + k, c * len + nk);
                        } else {
                            uf_comp.union(c * len + k, c * len + nk);
                        }
                    }
                }
                if !here {
                    for (di, dj) in diag {
                        let (ni, nj) = (i as isize + di, j as isize + dj);
                        if ni < 0 || nj < 0 || ni >= g.n as isize || nj >= g.n as isize {
                            continue;
                        }
                        let nk = g.idx(ni as usize, nj as usize);
                        if state(chart, nk) == Some(false) {
                            uf_comp.union(c * len + k, c * len + nk);
                        }
                    }
                }
                // seam: a node outside its chart's owned disc is also
                // represented on the other chart; glue to the nearest
                // other-chart node when the mask states agree
                let coord = g.coord(i, j);
                let r = coord.norm();
                if r > 1.0 && r > 0.0 {
                    let other = chart.other();
                    if let Some((oi, oj)) = g.nearest_node(1.0 / coord) {
                        let ok = g.idx(oi, oj);
                        if state(other, ok) == Some(here) {
                            let oc = 1 - c;
                            if here {
                                uf_dom.union(c * len + k, oc * len + ok);
                            } else {
                                uf_comp.union(c * len + k, oc * len + ok);
                            }
                        }
                    }
                }
            }
        }
    }

    // count roots over owned nodes only, so each sphere point is counted
    // on exactly one chart
    let mut dom_roots = Vec::new();
    let mut comp_roots = Vec::new();
    for (c, chart) in [Chart::Z, Chart::W].into_iter().enumerate() {
        for i in 0..g.n {
            for j in 0..g.n {
                if !g.owned(chart, i, j) {
                    continue;
                }
                let k = g.idx(i, j);
                match state(chart, k) {
                    Some(true) => {
                        let r = uf_dom.find(c * len + k);
                        if !dom_roots.contains(&r) {
                            dom_roots.push(r);
                        }
                    }
                    Some(false) => {
                        let r = uf_comp.find(c * len + k);
                        if !comp_roots.contains(&r) {
                            comp_roots.push(r);
                        }
                    }
                    None => {}
                }
            }
        }
    }
    (dom_roots.len(), comp_roots.len())
}

pub fn connectivity_report(family: &FlowFamily) -> Result<ConnectivityReport> {
    let rows: Vec<TopologyRow> = family
        .snapshots
        .iter()
        .map(|snap| {
            let (kd, kc) = component_count(&snap.mask);
            TopologyRow {
                t: snap.t,
                domain_components: kd,
                complement_components: kc,
                simply_connected: kd <= 1 && kc <= 1,
                area: snap.diagnostics.area,
            }
        })
        .collect();
    Ok(ConnectivityReport {
        window: detect_window(&rows),
        rows,
    })
}

/// Longest run of at least 2 consecutive rows whose complement has 2 or
/// more components (single-row hits are treated as grid noise).
pub fn detect_window(rows: &[TopologyRow]) -> Option<(f64, f64)> {
    let mut best: Option<(usize, usize)> = None;
    let mut run_start: Option<usize> = None;
    for (k, row) in rows.iter().enumerate() {
        if row.complement_components >= 2 && row.t > 0.0 {
            run_start.get_or_insert(k);
        } else if let Some(s) = run_start.take() {
            if k - s >= 2 && best.map_or(true, |(a, b)| k - 1 - s > b - a) {
                best = Some((s, k - 1));
            }
        }
    }
    if let Some(s) = run_start {
        let k = rows.len();
        if k - s >= 2 && best.map_or(true, |(a, b)| k - 1 - s > b - a) {
            best = Some((s, k - 1));
        }
    }
    best.map(|(a, b)| (rows[a].t, rows[b].t))
}
