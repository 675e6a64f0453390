use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{curve_scale, find_seeds, trace_component, LevelSetComponent, TraceError, TraceOptions};
use crate::green::GreenParams;

/// Seeds closer than this (relative to the curve scale) to a traced curve
/// belong to it.
const SAME_CURVE_TOL: f64 = 1e-6;

/// `s(t)` and `s'(t)` from the traced level curves.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelMeasure {
    pub t: f64,
    /// Sum of the signed areas of all components.
    pub area: f64,
    /// Co-area integral `∮ |∇G|^-1 ds` over all components.
    pub d_area_dt: f64,
    pub n_components: usize,
    /// Error estimate of `area`.
    pub error_estimate: f64,
    pub d_area_dt_error: f64,
    pub engine: String,
    /// Components sorted by their leftmost-lowest vertex.
    #[serde(skip)]
    pub components: Vec<LevelSetComponent>,
}

/// Traces every component of `{G = t}` and sums their contributions.
pub fn level_measure(t: f64, p: &GreenParams, opts: &TraceOptions) -> Result<LevelMeasure, TraceError> {
    if !(t < 0.0) {
        return Err(TraceError::LevelNotNegative(t));
    }
    let t0 = p.critical_value();
    if (t - t0).abs() < opts.delta_crit {
        return Err(TraceError::NearCritical {
            t,
            delta_crit: opts.delta_crit,
        });
    }
    let tol = SAME_CURVE_TOL * curve_scale(t, t0, opts);
    let seeds = find_seeds(t, p, opts)?;
    let mut components: Vec<LevelSetComponent> = Vec::new();
    for seed in seeds {
        if components.iter().any(|c| c.passes_through(seed, t, p, tol)) {
            continue;
        }
        components.push(trace_component(seed, t, p, opts)?);
    }
    components.sort_by(|a, b| {
        let (ka, kb) = (a.anchor(), b.anchor());
        ka.re.total_cmp(&kb.re).then(ka.im.total_cmp(&kb.im))
    });

    Ok(LevelMeasure {
        t,
        area: components.iter().map(|c| c.signed_area).sum(),
        d_area_dt: components.iter().map(|c| c.co_area).sum(),
        n_components: components.len(),
        error_estimate: components.iter().map(|c| c.area_error).sum(),
        d_area_dt_error: components.iter().map(|c| c.co_area_error).sum(),
        engine: "trace".to_string(),
        components,
    })
}

/// [`level_measure`] for each `t`, computed in parallel; a failing entry
/// does not stop the others.
pub fn area_profile(ts: &[f64], p: &GreenParams, opts: &TraceOptions) -> Vec<Result<LevelMeasure, TraceError>> {
    ts.par_iter().map(|&t| level_measure(t, p, opts)).collect()
}
