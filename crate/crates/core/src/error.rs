use thiserror::Error;

use crate::grid::Chart;

#[derive(Debug, Error)]
pub enum Error {
    #[error("chart transfer failed: point z={z:?} maps outside both active regions")]
    TransferOutOfRange { z: (f64, f64) },

    #[error("chart {chart:?} has no stored values")]
    MissingChart { chart: Chart },

    #[error("overlap masks disagree at chart {chart:?} node ({i},{j})")]
    MaskMismatch { chart: Chart, i: usize, j: usize },

    #[error("right-hand side is not balanced: total mass defect {defect:e} exceeds {limit:e}")]
    UnbalancedRhs { defect: f64, limit: f64 },

    #[error("{solver} did not converge after {sweeps} sweeps (residual {residual:e})")]
    NoConvergence {
        solver: &'static str,
        sweeps: usize,
        residual: f64,
    },

    #[error("potential is not Kahler: cell mass {mass:e} at chart {chart:?} node ({i},{j})")]
    NotKahler {
        chart: Chart,
        i: usize,
        j: usize,
        mass: f64,
    },

    #[error("flow time t={0} outside [0,1]")]
    TimeOutOfRange(f64),

    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("domain rejected for Riemann mapping: {0}")]
    DomainRejected(String),

    #[error("lobe mass normalization failed: {0}")]
    LobeNormalization(String),

    #[error("perturbation of amplitude {amplitude} breaks the Kahler condition; use a smaller amplitude")]
    PerturbationTooLarge { amplitude: f64 },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, Error>;
