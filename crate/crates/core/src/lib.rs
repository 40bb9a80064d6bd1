//! Numerical laboratory for weighted Hele-Shaw flow on the Riemann
//! sphere: envelope (obstacle-problem) solves of the flow potentials,
//! the Legendre-transform reconstruction of the associated product-space
//! solution, its Hamiltonian, harmonic-disc enumeration/verification,
//! and topology of the flow domains.
//!
//! The sphere is covered by two overlapping square charts related by
//! `w = 1/z`; fields, measures and masks all carry both charts and are
//! coupled by an alternating-Schwarz rim exchange in the solvers.

pub mod contour;
pub mod discs;
pub mod envelope;
pub mod error;
pub mod field;
pub mod grid;
pub mod hamiltonian;
pub mod io;
pub mod legendre;
pub mod measure;
pub mod poisson;
pub mod potentials;
pub mod solver;
pub mod topology;
pub mod verify;

pub use error::{Error, Result};
pub use field::ChartField;
pub use grid::{Chart, SphereGrid};
pub use measure::{MeasureField, SphereMask};

/// Worker-thread cap honoring the `HSFLOW_JOBS` environment variable with
/// an explicit override taking precedence.
pub fn configure_jobs(explicit: Option<usize>) -> usize {
    let jobs = explicit
        .or_else(|| {
            std::env::var("HSFLOW_JOBS")
                .ok()
                .and_then(|v| v.parse().ok())
        })
        .filter(|&j| j > 0)
        .unwrap_or_else(|| {
            std::thread::available_parallelism()
                .map(|n| n.get())
                .unwrap_or(1)
        });
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build_global();
    jobs
}
