//! `hsflow`: drive the Hele-Shaw flow laboratory from the command line.
//!
//! Exit codes: 0 success, 1 numeric/analysis failure, 2 usage or input
//! failure.

mod render;

use clap::{Parser, Subcommand, ValueEnum};
use hsflow_core::envelope::{compute_flow, uniform_t_grid};
use hsflow_core::hamiltonian::{compute_H, exit_time, no_disc_region};
use hsflow_core::io::{
    family_from_grid_file, family_to_grid_file, DiscReport, GridFile, HChecks, NoDiscSummary,
    ReportFile,
};
use hsflow_core::legendre::{build_phi_tilde, uniform_s_grid};
use hsflow_core::discs::{enumerate_discs, verify_disc, DiscKind};
use hsflow_core::potentials::{make_potential, PotentialSpec};
use hsflow_core::solver::SorParams;
use hsflow_core::topology::connectivity_report;
use hsflow_core::{Chart, SphereGrid};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "hsflow", about = "Weighted Hele-Shaw flow on the sphere", version)]
struct Cli {
    /// Worker thread cap (also HSFLOW_JOBS).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute a flow family from a potential spec and write a grid file.
    Flow {
        /// JSON potential spec path.
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = 129)]
        n: usize,
        /// Number of time samples on [0, t_max].
        #[arg(long, default_value_t = 33)]
        nt: usize,
        #[arg(long, default_value_t = 1.0)]
        t_max: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Analyze a flow file: duality, Hamiltonian, topology, discs.
    Analyze {
        #[arg(long)]
        flow: PathBuf,
        #[arg(long, default_value_t = 8.0)]
        smax: f64,
        /// Spacing of the s grid.
        #[arg(long, default_value_t = 0.05)]
        ds: f64,
        /// Override the no-disc level band (defaults to the detected
        /// window).
        #[arg(long)]
        t1: Option<f64>,
        #[arg(long)]
        t2: Option<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Render a flow file to PPM images (and a CSV profile).
    Render {
        #[arg(long)]
        flow: PathBuf,
        #[arg(long, value_enum, default_value_t = RenderStyle::Fronts)]
        style: RenderStyle,
        /// Output path prefix.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a named self-check suite.
    Verify {
        #[arg(long, value_enum)]
        suite: Suite,
        #[arg(long, default_value_t = 129)]
        n: usize,
        #[arg(long, default_value_t = 51)]
        nt: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum RenderStyle {
    Fronts,
    Hamiltonian,
    Discs,
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Radial,
    Dumbbell,
    Duality,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    hsflow_core::configure_jobs(cli.jobs);
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_for(&e))
        }
    }
}

/// Input/usage problems exit 2, numeric failures exit 1.
fn exit_for(e: &anyhow::Error) -> u8 {
    if let Some(err) = e.downcast_ref::<hsflow_core::Error>() {
        match err {
            hsflow_core::Error::Io(_)
            | hsflow_core::Error::Format(_)
            | hsflow_core::Error::InvalidParam(_)
            | hsflow_core::Error::TimeOutOfRange(_) => 2,
            _ => 1,
        }
    } else if e.downcast_ref::<std::io::Error>().is_some()
        || e.downcast_ref::<serde_json::Error>().is_some()
    {
        2
    } else {
        1
    }
}

fn run(cmd: Command) -> anyhow::Result<ExitCode> {
    match cmd {
        Command::Flow {
            spec,
            n,
            nt,
            t_max,
            out,
        } => cmd_flow(&spec, n, nt, t_max, &out),
        Command::Analyze {
            flow,
            smax,
            ds,
            t1,
            t2,
            out,
        } => cmd_analyze(&flow, smax, ds, t1, t2, &out),
        Command::Render { flow, style, out } => {
            let gf = GridFile::read_from(&flow)?;
            let family = family_from_grid_file(&gf)?;
            render::render(&family, style, &out)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { suite, n, nt } => cmd_verify(suite, n, nt),
    }
}

fn cmd_flow(
    spec_path: &PathBuf,
    n: usize,
    nt: usize,
    t_max: f64,
    out: &PathBuf,
) -> anyhow::Result<ExitCode> {
    let text = std::fs::read_to_string(spec_path)?;
    let spec: PotentialSpec = serde_json::from_str(&text)?;
    let grid = SphereGrid::new(n, 1.5);
    let phi = match &spec {
        PotentialSpec::CustomGrid { path } => {
            let gf = GridFile::read_from(std::path::Path::new(path))?;
            gf.field("phi")?
        }
        other => make_potential(other, grid)?,
    };
    let family = compute_flow(&phi, &uniform_t_grid(nt, t_max), &SorParams::default())?;
    println!("{:>8}  {:>10}  {:>10}  {:>8}", "t", "area", "residual", "sweeps");
    for s in &family.snapshots {
        println!(
            "{:8.4}  {:10.6}  {:10.2e}  {:8}",
            s.t, s.diagnostics.area, s.diagnostics.residual, s.diagnostics.sweeps
        );
    }
    family_to_grid_file(&family)?.write_to(out)?;
    println!("wrote {}", out.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_analyze(
    flow: &PathBuf,
    smax: f64,
    ds: f64,
    t1: Option<f64>,
    t2: Option<f64>,
    out: &PathBuf,
) -> anyhow::Result<ExitCode> {
    let gf = GridFile::read_from(flow)?;
    let family = family_from_grid_file(&gf)?;
    let grid = family.phi.grid;

    let report_topo = connectivity_report(&family)?;
    let sol = build_phi_tilde(&family, &uniform_s_grid(ds, smax))?;
    let ham = compute_H(&sol);

    let mut report = ReportFile::from_rows(&report_topo.rows, report_topo.window);

    // Hamiltonian checks: exit-time consistency over a deterministic
    // sample, bounds, monotonicity
    let dt = if family.t_grid.len() > 1 {
        family.t_grid[1] - family.t_grid[0]
    } else {
        1.0
    };
    let mut h_checks = HChecks {
        h_min: f64::INFINITY,
        h_max: f64::NEG_INFINITY,
        monotone_in_s: true,
        ..Default::default()
    };
    let mut samples = 0usize;
    for k in 0..200 {
        let r = 0.05 + 1.2 * (k as f64 / 200.0);
        let z = num_complex::Complex64::from_polar(r, 0.37 * k as f64);
        let Some((i, j)) = grid.nearest_node(z) else { continue };
        let node = grid.idx(i, j);
        let prof = ham.profile(Chart::Z, node);
        let hv = prof[0];
        let et = exit_time(&family, grid.coord(i, j));
        h_checks.exit_time_max_dev = h_checks.exit_time_max_dev.max(((hv + 1.0) - et).abs());
        for (a, b) in prof.iter().zip(prof.iter().skip(1)) {
            if b < a {
                h_checks.monotone_in_s = false;
            }
        }
        h_checks.h_min = h_checks.h_min.min(prof.iter().cloned().fold(0.0, f64::min));
        h_checks.h_max = h_checks.h_max.max(prof.iter().cloned().fold(-1.0, f64::max));
        samples += 1;
    }
    h_checks.exit_time_samples = samples;
    report.h_checks = h_checks;

    // discs at sampled times (skippable when multiply connected)
    let riemann_times: Vec<f64> = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7]
        .iter()
        .map(|&t| family.nearest_snapshot(t).t)
        .collect();
    let enumeration = enumerate_discs(&family, &report_topo, &riemann_times)?;
    let mut center_max = 0.0f64;
    let mut boundary_max = 0.0f64;
    let mut riemann_max = 0.0f64;
    let mut h_std_max = 0.0f64;
    for d in &enumeration.discs {
        let stats = verify_disc(&sol, &ham, &family, d)?;
        let kind = match &d.kind {
            DiscKind::Center => {
                center_max = center_max.max(stats.max);
                "center".to_string()
            }
            DiscKind::BoundaryConstant { .. } => {
                boundary_max = boundary_max.max(stats.max);
                "boundary_constant".to_string()
            }
            DiscKind::Riemann { t } => {
                riemann_max = riemann_max.max(stats.max);
                format!("riemann_t{t:.3}")
            }
        };
        h_std_max = h_std_max.max(stats.h_std);
        report.discs.push(DiscReport {
            kind,
            h_value: d.h_value,
            residual: stats,
        });
    }
    report.residuals.insert("center_max".to_string(), center_max);
    report
        .residuals
        .insert("boundary_constant_max".to_string(), boundary_max);
    report.residuals.insert("riemann_max".to_string(), riemann_max);
    report.residuals.insert("h_std_max".to_string(), h_std_max);
    report
        .residuals
        .insert("exit_time_tolerance".to_string(), dt + 1e-3);

    // no-disc region over the requested or detected level band
    let band = match (t1, t2) {
        (Some(a), Some(b)) => Some((a, b)),
        _ => report_topo.window,
    };
    if let Some((a, b)) = band {
        let u = no_disc_region(&ham, a, b)?;
        report.no_disc_region = Some(NoDiscSummary {
            t1: a,
            t2: b,
            volume_fraction: u.volume_fraction(),
            meets_s0: u.meets_s0,
        });
    }

    report.write_to(out)?;
    println!("wrote {}", out.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(suite: Suite, n: usize, nt: usize) -> anyhow::Result<ExitCode> {
    let checks = match suite {
        Suite::Radial => {
            let mut c = hsflow_core::verify::radial_suite(n, nt)?;
            c.extend(hsflow_core::verify::radial_bump_suite(n, nt)?);
            c
        }
        Suite::Dumbbell => hsflow_core::verify::dumbbell_suite(n, nt)?,
        Suite::Duality => hsflow_core::verify::duality_suite(n, nt, 0.02, 12.0)?,
    };
    for c in &checks {
        println!("{}", c.line());
    }
    if hsflow_core::verify::all_passed(&checks) {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(1))
    }
}
