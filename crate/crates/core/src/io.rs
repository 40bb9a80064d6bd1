//! File formats: the `HSG1` binary grid container (magic line, JSON
//! header line, raw little-endian f64 payloads per field and chart) and
//! the JSON analysis report.

use crate::discs::ResidualStats;
use crate::envelope::{domain_mask, flow_area, FlowFamily, FlowSnapshot, SnapshotDiagnostics};
use crate::error::{Error, Result};
use crate::field::ChartField;
use crate::grid::{Chart, SphereGrid};
use crate::measure::check_kahler;
use crate::topology::TopologyRow;
use serde::{Deserialize, Serialize};
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

pub const GRID_MAGIC: &str = "HSG1";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridHeader {
    pub n: usize,
    pub extent: f64,
    /// Chart payload order; always `["z", "w"]`.
    pub charts: Vec<String>,
    pub fields: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_grid: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s_grid: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub contact_tol: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct GridFile {
    pub header: GridHeader,
    /// One entry per header field name: (Z payload, W payload), row-major.
    pub payloads: Vec<(Vec<f64>, Vec<f64>)>,
}

impl GridFile {
    pub fn grid(&self) -> SphereGrid {
        SphereGrid::new(self.header.n, self.header.extent)
    }

    pub fn field(&self, name: &str) -> Result<ChartField> {
        let k = self
            .header
            .fields
            .iter()
            .position(|f| f == name)
            .ok_or_else(|| Error::Format(format!("field {name} not in grid file")))?;
        Ok(ChartField {
            grid: self.grid(),
            z: Some(self.payloads[k].0.clone()),
            w: Some(self.payloads[k].1.clone()),
            name: name.to_string(),
            time: None,
        })
    }

    pub fn write_to(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "{GRID_MAGIC}")?;
        serde_json::to_writer(&mut out, &self.header).map_err(|e| Error::Format(e.to_string()))?;
        writeln!(out)?;
        for (z, w) in &self.payloads {
            for payload in [z, w] {
                if payload.len() != self.header.n * self.header.n {
                    return Err(Error::Format("payload size mismatch".to_string()));
                }
                for v in payload {
                    out.write_all(&v.to_le_bytes())?;
                }
            }
        }
        Ok(())
    }

    pub fn read_from(path: &Path) -> Result<GridFile> {
        let mut reader = BufReader::new(std::fs::File::open(path)?);
        let mut magic = String::new();
        reader.read_line(&mut magic)?;
        if magic.trim_end() != GRID_MAGIC {
            return Err(Error::Format(format!(
                "bad magic {:?}, expected {GRID_MAGIC}",
                magic.trim_end()
            )));
        }
        let mut header_line = String::new();
        reader.read_line(&mut header_line)?;
        let header: GridHeader =
            serde_json::from_str(&header_line).map_err(|e| Error::Format(e.to_string()))?;
        let len = header.n * header.n;
        let mut payloads = Vec::with_capacity(header.fields.len());
        let mut buf = vec![0u8; len * 8];
        for _ in &header.fields {
            let mut pair = (Vec::new(), Vec::new());
            for slot in [&mut pair.0, &mut pair.1] {
                reader.read_exact(&mut buf).map_err(|e| {
                    Error::Format(format!("truncated payload: {e}"))
                })?;
                *slot = buf
                    .chunks_exact(8)
                    .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                    .collect();
            }
            payloads.push(pair);
        }
        Ok(GridFile { header, payloads })
    }
}

/// Serialize a flow family: field "phi" followed by one "psi_k" per time.
pub fn family_to_grid_file(family: &FlowFamily) -> Result<GridFile> {
    let g = family.phi.grid;
    let mut fields = vec!["phi".to_string()];
    let mut payloads = vec![(
        family.phi.values(Chart::Z)?.to_vec(),
        family.phi.values(Chart::W)?.to_vec(),
    )];
    for (k, snap) in family.snapshots.iter().enumerate() {
        fields.push(format!("psi_{k}"));
        payloads.push((
            snap.psi.values(Chart::Z)?.to_vec(),
            snap.psi.values(Chart::W)?.to_vec(),
        ));
    }
    let contact_tol = family.snapshots.first().map(|s| s.contact_tol);
    Ok(GridFile {
        header: GridHeader {
            n: g.n,
            extent: g.extent,
            charts: vec!["z".to_string(), "w".to_string()],
            fields,
            t_grid: Some(family.t_grid.clone()),
            s_grid: None,
            contact_tol,
        },
        payloads,
    })
}

/// Rebuild a flow family from a grid file written by
/// [`family_to_grid_file`]; masks and areas are recomputed from the
/// stored potentials.
pub fn family_from_grid_file(gf: &GridFile) -> Result<FlowFamily> {
    let t_grid = gf
        .header
        .t_grid
        .clone()
        .ok_or_else(|| Error::Format("grid file has no t grid".to_string()))?;
    let phi = gf.field("phi")?;
    let omega_phi = check_kahler(&phi, 0.0)?;
    let tol = gf
        .header
        .contact_tol
        .unwrap_or(1e-6 * phi.oscillation().max(1.0));
    let mut snapshots = Vec::with_capacity(t_grid.len());
    for (k, &t) in t_grid.iter().enumerate() {
        let mut psi = gf.field(&format!("psi_{k}"))?;
        psi.time = Some(t);
        let mask = domain_mask(&phi, &psi, t, tol)?;
        let area = flow_area(&omega_phi, &phi, &psi, tol)?;
        snapshots.push(FlowSnapshot {
            t,
            psi,
            mask,
            contact_tol: tol,
            diagnostics: SnapshotDiagnostics {
                area,
                ..Default::default()
            },
        });
    }
    Ok(FlowFamily {
        phi,
        t_grid,
        snapshots,
        omega_phi,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiscReport {
    pub kind: String,
    pub h_value: f64,
    pub residual: ResidualStats,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct HChecks {
    pub exit_time_max_dev: f64,
    pub exit_time_samples: usize,
    pub h_min: f64,
    pub h_max: f64,
    pub monotone_in_s: bool,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct NoDiscSummary {
    pub t1: f64,
    pub t2: f64,
    pub volume_fraction: f64,
    pub meets_s0: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportFile {
    pub t: Vec<f64>,
    pub area: Vec<f64>,
    pub domain_components: Vec<usize>,
    pub complement_components: Vec<usize>,
    pub window: Option<(f64, f64)>,
    pub discs: Vec<DiscReport>,
    pub residuals: std::collections::BTreeMap<String, f64>,
    #[serde(rename = "H_checks")]
    pub h_checks: HChecks,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub no_disc_region: Option<NoDiscSummary>,
}

impl ReportFile {
    pub fn from_rows(rows: &[TopologyRow], window: Option<(f64, f64)>) -> Self {
        ReportFile {
            t: rows.iter().map(|r| r.t).collect(),
            area: rows.iter().map(|r| r.area).collect(),
            domain_components: rows.iter().map(|r| r.domain_components).collect(),
            complement_components: rows.iter().map(|r| r.complement_components).collect(),
            window,
            discs: Vec::new(),
            residuals: Default::default(),
            h_checks: Default::default(),
            no_disc_region: None,
        }
    }

    pub fn write_to(&self, path: &Path) -> Result<()> {
        let out = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer_pretty(out, self).map_err(|e| Error::Format(e.to_string()))?;
        Ok(())
    }

    pub fn read_from(path: &Path) -> Result<ReportFile> {
        let f = std::fs::File::open(path)?;
        serde_json::from_reader(BufReader::new(f)).map_err(|e| Error::Format(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envelope::{compute_flow, uniform_t_grid};
    use crate::solver::SorParams;

    #[test]
    fn grid_file_roundtrip_bit_exact() {
        let g = SphereGrid::new(33, 1.5);
        let phi = ChartField::zeros(g, "phi");
        let fam = compute_flow(&phi, &uniform_t_grid(4, 0.6), &SorParams::default()).unwrap();
        let gf = family_to_grid_file(&fam).unwrap();
        let dir = std::env::temp_dir().join("hsflow_io_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("flow.hsg");
        gf.write_to(&path).unwrap();
        let back = GridFile::read_from(&path).unwrap();
        assert_eq!(gf.header.fields, back.header.fields);
        for (a, b) in gf.payloads.iter().zip(&back.payloads) {
            let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(&a.0), bits(&b.0));
            assert_eq!(bits(&a.1), bits(&b.1));
        }
        // write again: byte-identical files
        let path2 = dir.join("flow2.hsg");
        back.write_to(&path2).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&path2).unwrap());
    }

    #[test]
    fn family_reconstruction_matches() {
        let g = SphereGrid::new(65, 1.5);
        let phi = ChartField::zeros(g, "phi");
        let fam = compute_flow(&phi, &uniform_t_grid(5, 0.6), &SorParams::default()).unwrap();
        let gf = family_to_grid_file(&fam).unwrap();
        let back = family_from_grid_file(&gf).unwrap();
        for (a, b) in fam.snapshots.iter().zip(&back.snapshots) {
            assert_eq!(a.mask.z, b.mask.z);
            assert_eq!(a.mask.w, b.mask.w);
            assert!((a.diagnostics.area - b.diagnostics.area).abs() < 1e-12);
        }
    }

    #[test]
    fn bad_magic_rejected() {
        let dir = std::env::temp_dir().join("hsflow_io_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.hsg");
        std::fs::write(&path, b"NOPE\n{}\n").unwrap();
        assert!(matches!(
            GridFile::read_from(&path),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn report_roundtrip() {
        let rows = vec![TopologyRow {
            t: 0.1,
            domain_components: 1,
            complement_components: 1,
            simply_connected: true,
            area: 0.1,
        }];
        let mut rep = ReportFile::from_rows(&rows, None);
        rep.residuals.insert("center_max".to_string(), 1e-9);
        let dir = std::env::temp_dir().join("hsflow_io_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("report.json");
        rep.write_to(&path).unwrap();
        let back = ReportFile::read_from(&path).unwrap();
        assert_eq!(back.t, rep.t);
        assert_eq!(back.residuals["center_max"], 1e-9);
    }
}
