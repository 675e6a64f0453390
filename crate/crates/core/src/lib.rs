//! Numerical and certified analysis of the Green function
//! `G(w) = (1/3) ln|w^3 / (3w^2 - 3w + 1)| + (1/3) ln r` of a triply connected
//! planar domain, and of the area function `s(t) = |{G < t}|`.
//!
//! * [`green`]: point and interval evaluation, derivatives, the critical point
//!   and the construction chain of the domain.
//! * [`area`]: certified quadtree areas and a Monte Carlo cross-check.
//! * [`trace`]: level-curve continuation, signed areas and `s'(t)`.
//! * [`analysis`]: the sector inclusion, the area-gap inequality and the
//!   convexity checks, each producing a [`Report`].

pub mod analysis;
pub mod area;
pub mod green;
pub mod interval;
pub mod trace;

pub use analysis::{CheckStatus, ConvexityViolation, Report, ViolationKind};
pub use area::{certified_area, monte_carlo_area, verified_bbox, AreaQuery, CertifiedArea, McEstimate};
pub use green::{eval_g, eval_g_interval, ComplexPoint, GreenParams, Membership};
pub use interval::{Interval, PlaneBox};
pub use trace::{level_measure, LevelMeasure, LevelSetComponent, TraceOptions};

/// Version string embedded in every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
