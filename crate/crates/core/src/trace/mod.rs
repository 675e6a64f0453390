//! Level curves `{G = t}` by predictor-corrector continuation.
//!
//! Each traced component carries its signed area, arclength and the co-area
//! integral `∮ |∇G|^-1 ds`; [`level_measure`] sums them into `s(t)` and
//! `s'(t)`. Integrals are taken over the exact curve rather than the traced
//! polygon: on every chord the curve is written as a graph over the chord and
//! integrated by Gauss-Legendre quadrature, so the polygon only serves as a
//! scaffold.

mod measure;
mod seeds;
mod tracer;

pub use measure::{area_profile, level_measure, LevelMeasure};
pub use seeds::find_seeds;
pub use tracer::{trace_component, LevelSetComponent};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::green::{ComplexPoint, GreenError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TraceError {
    #[error("no seeds found for t = {0}")]
    NoSeeds(f64),
    #[error("tracing stalled near {at} (|grad G| = {grad:e})")]
    Stalled { at: ComplexPoint, grad: f64 },
    #[error("exceeded {0} continuation steps")]
    MaxStepsExceeded(usize),
    #[error("t = {t} is within {delta_crit:e} of the critical value")]
    NearCritical { t: f64, delta_crit: f64 },
    #[error("level must be negative, got {0}")]
    LevelNotNegative(f64),
    #[error("seed {seed} is off the level curve (|G - t| = {residual:e})")]
    SeedOffCurve { seed: ComplexPoint, residual: f64 },
    #[error("grid must have at least 64 cells per side, got {0}")]
    GridTooCoarse(usize),
    #[error(transparent)]
    Green(#[from] GreenError),
}

/// Tuning of the tracer. Step bounds are relative to the size of the curve,
/// which is 1 unless the level set is a small disc around the pole.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceOptions {
    /// On-curve tolerance `|G(v) - t|` for every vertex.
    pub tau_on: f64,
    /// Maximal turning angle per step, radians.
    pub theta_max: f64,
    pub h_min: f64,
    pub h_max: f64,
    pub grad_min: f64,
    pub max_steps: usize,
    pub closure_tol: f64,
    pub grid_n: usize,
    pub delta_crit: f64,
    /// Offset along the left normal used for the orientation probe.
    pub probe_h: f64,
    /// Below this level the seed scan is localized around the pole.
    pub localize_below: f64,
}

impl Default for TraceOptions {
    fn default() -> Self {
        TraceOptions {
            tau_on: 1e-12,
            theta_max: 0.2,
            h_min: 1e-7,
            h_max: 0.05,
            grad_min: 1e-8,
            max_steps: 200_000,
            closure_tol: 1e-9,
            grid_n: 512,
            delta_crit: 1e-9,
            probe_h: 1e-6,
            localize_below: -2.0,
        }
    }
}

/// Rough radius of `{G = t}` when it is a small curve around the pole:
/// `G(w) ≈ ln|w| + t0` there.
pub(crate) fn pole_radius(t: f64, t0: f64) -> f64 {
    (t - t0).exp()
}

/// Length scale for step sizes and the seed scan.
pub(crate) fn curve_scale(t: f64, t0: f64, opts: &TraceOptions) -> f64 {
    if t < opts.localize_below {
        pole_radius(t, t0).min(1.0)
    } else {
        1.0
    }
}

/// `G(w) - t` evaluated as `(G - t0) - (t - t0)`, accurate near the critical
/// level.
#[inline]
pub(crate) fn residual(w: ComplexPoint, dt: f64) -> f64 {
    crate::green::critical_excess(w) - dt
}

/// `∇G` as the complex number `dG/dx + i dG/dy`.
#[inline]
pub(crate) fn grad(w: ComplexPoint) -> Result<ComplexPoint, GreenError> {
    let (gx, gy) = crate::green::grad_g(w)?;
    Ok(ComplexPoint::new(gx, gy))
}

/// Newton projection onto `{G = t}` along the gradient.
pub(crate) fn project(w: ComplexPoint, dt: f64, tau_on: f64) -> Option<ComplexPoint> {
    let mut w = w;
    for _ in 0..40 {
        let r = residual(w, dt);
        if !r.is_finite() {
            return None;
        }
        if r.abs() <= tau_on {
            return Some(w);
        }
        let g = grad(w).ok()?;
        let n2 = g.norm_sqr();
        if n2 == 0.0 || !n2.is_finite() {
            return None;
        }
        let step = g * (r / n2);
        w -= step;
        if step.norm() <= 4.0 * f64::EPSILON * w.norm().max(f64::MIN_POSITIVE) {
            // Stagnated at rounding level; accept only if on the curve.
            let r = residual(w, dt);
            return (r.abs() <= tau_on).then_some(w);
        }
    }
    None
}
