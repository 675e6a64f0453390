//! Areas of sublevel sets `{G < t}` and bands `{t_lo < G < t_hi}`.
//!
//! [`certified_area`] is the rigorous engine: a breadth-first quadtree whose
//! cells are classified with interval enclosures of `G`. [`monte_carlo_area`]
//! is an independent statistical cross-check.

mod montecarlo;
mod quadtree;

pub use montecarlo::{monte_carlo_area, monte_carlo_partition, McEstimate, McPartition, MC_CHUNK, MC_MIN_SAMPLES};
pub use quadtree::{
    certified_area, classify_cell, verified_bbox, AreaQuery, BboxCertificate, CellClass, CertifiedArea, Termination,
    DEFAULT_BAND_TOL, DEFAULT_CELL_BUDGET, DEFAULT_MAX_DEPTH, DEFAULT_SUBLEVEL_TOL, MAX_SUPPORTED_DEPTH,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AreaError {
    #[error("empty band: need t_lo < t_hi, got ({t_lo}, {t_hi})")]
    EmptyBand { t_lo: f64, t_hi: f64 },
    #[error("level {0} > 0 is not contained in the certified bounding box")]
    LevelOutsideDomain(f64),
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error("max depth {0} exceeds the supported maximum")]
    DepthTooLarge(u32),
    #[error("cell budget must be positive")]
    ZeroBudget,
    #[error("need at least 1000 Monte Carlo samples, got {0}")]
    TooFewSamples(u64),
    #[error("bounding-box certificate failed near ({x}, {y})")]
    CertificationFailed { x: f64, y: f64 },
}
