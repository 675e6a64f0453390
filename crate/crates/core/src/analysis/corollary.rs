use serde::{Deserialize, Serialize};

use super::{sector_area, AnalysisError, CheckStatus, Report};
use crate::area::{certified_area, verified_bbox, AreaQuery, DEFAULT_BAND_TOL, DEFAULT_CELL_BUDGET, DEFAULT_MAX_DEPTH};
use crate::green::GreenParams;
use crate::interval::Interval;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorollaryConfig {
    pub tol: f64,
    pub max_depth: u32,
    pub cell_budget: u64,
}

impl Default for CorollaryConfig {
    fn default() -> Self {
        CorollaryConfig {
            tol: DEFAULT_BAND_TOL,
            max_depth: DEFAULT_MAX_DEPTH,
            cell_budget: DEFAULT_CELL_BUDGET,
        }
    }
}

/// Relative slack on the closed-form threshold, covering the rounding of
/// `cbrt` and the products.
const THRESHOLD_SLACK: f64 = 1e-12;

/// Certified lower bound of `s(t0) - s(t0 - ε)`, the area of the band
/// `{t0 - ε < G < t0}`, against `π ε^{2/3} / 48`.
///
/// The band handed to the quadtree is shrunk inwards by the rounding of
/// `t0 - ε`, so its lower bound is a lower bound for the true band.
pub fn corollary_check(eps: f64, p: &GreenParams, cfg: &CorollaryConfig) -> Result<Report, AnalysisError> {
    if !(eps > 0.0 && eps <= 0.05) {
        return Err(AnalysisError::Precondition(format!(
            "eps must lie in (0, 0.05], got {eps}"
        )));
    }
    let t0 = p.critical_value_enclosure();
    let t_hi = t0.lo();
    let t_lo = (t0 - Interval::point(eps)).hi();
    let bbox = verified_bbox(p)?.bbox;
    let q = AreaQuery::band(t_lo, t_hi, bbox)
        .with_tol(cfg.tol)
        .with_max_depth(cfg.max_depth)
        .with_cell_budget(cfg.cell_budget);
    let band = certified_area(&q, p)?;
    let target = sector_area(eps);
    let target_hi = target * (1.0 + THRESHOLD_SLACK);
    let target_lo = target * (1.0 - THRESHOLD_SLACK);

    let mut rep = Report::new("corollary");
    rep.param("eps", eps);
    rep.param("band_t_lo", t_lo);
    rep.param("band_t_hi", t_hi);
    rep.param("tol", cfg.tol);
    rep.param("cell_budget", cfg.cell_budget as f64);
    rep.margin("band_lower", band.lower);
    rep.margin("band_upper", band.upper);
    rep.margin("sector_area", target);
    rep.margin("margin", band.lower - target_hi);
    rep.margin("cells_classified", band.cells_classified as f64);
    rep.margin("max_depth_reached", band.max_depth_reached as f64);
    rep.status = if band.lower >= target_hi {
        CheckStatus::Pass
    } else if band.upper < target_lo {
        CheckStatus::Fail
    } else {
        rep.notes.push(format!(
            "certified band [{}, {}] does not separate from {target}",
            band.lower, band.upper
        ));
        CheckStatus::Inconclusive
    };
    if !band.tol_met() {
        rep.notes.push(format!(
            "quadtree stopped on {:?} before reaching tol {}",
            band.termination, cfg.tol
        ));
    }
    Ok(rep)
}
