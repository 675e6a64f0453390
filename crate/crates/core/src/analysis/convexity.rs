use serde::{Deserialize, Serialize};

use super::{AnalysisError, CheckStatus, ConvexityViolation, Report, ViolationKind};
use crate::area::{
    certified_area, monte_carlo_partition, verified_bbox, AreaQuery, CertifiedArea, DEFAULT_CELL_BUDGET,
    DEFAULT_MAX_DEPTH, DEFAULT_SUBLEVEL_TOL,
};
use crate::green::GreenParams;
use crate::interval::{ln_lower, Interval};
use crate::trace::{level_measure, LevelMeasure, TraceOptions};

/// Where a violation was observed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Evidence {
    /// Decreasing derivative: `s'(t_a) > s'(t_b)` with `t_a < t_b`.
    Slope { t_a: f64, t_b: f64 },
    /// The middle value lies above the chord through the outer two.
    Secant { t1: f64, t2: f64, t3: f64 },
}

/// Slope safety factor on the tracer's error estimates.
const SLOPE_SAFETY: f64 = 3.0;

fn check_slope_level(t: f64, p: &GreenParams, opts: &TraceOptions) -> Result<(), AnalysisError> {
    if !(t > -3.0 && t < -0.01) {
        return Err(AnalysisError::Precondition(format!("t = {t} outside (-3, -0.01)")));
    }
    if (t - p.critical_value()).abs() < opts.delta_crit {
        return Err(AnalysisError::Precondition(format!("t = {t} is near-critical")));
    }
    Ok(())
}

/// Compares `s'` (plain) and `s'/s` (log) at `t_a < t_b`; a convex function
/// cannot have a larger derivative at the left point.
pub fn slope_violation(
    t_a: f64,
    t_b: f64,
    p: &GreenParams,
    opts: &TraceOptions,
) -> Result<Vec<ConvexityViolation>, AnalysisError> {
    if !(t_a < t_b) {
        return Err(AnalysisError::Precondition(format!("need t_a < t_b, got {t_a}, {t_b}")));
    }
    check_slope_level(t_a, p, opts)?;
    check_slope_level(t_b, p, opts)?;
    let a = level_measure(t_a, p, opts)?;
    let b = level_measure(t_b, p, opts)?;
    Ok(slope_records(&a, &b))
}

fn slope_records(a: &LevelMeasure, b: &LevelMeasure) -> Vec<ConvexityViolation> {
    let evidence = Evidence::Slope { t_a: a.t, t_b: b.t };
    let mut out = Vec::new();

    let rhs = b.d_area_dt + SLOPE_SAFETY * (a.d_area_dt_error + b.d_area_dt_error);
    if a.d_area_dt > rhs {
        out.push(ConvexityViolation {
            kind: ViolationKind::Plain,
            evidence,
            lhs: a.d_area_dt,
            rhs,
            margin: a.d_area_dt - rhs,
            certified: false,
        });
    }

    // d/dt ln s = s'/s, with first-order error propagation.
    let log_slope = |m: &LevelMeasure| {
        let q = m.d_area_dt / m.area;
        let err = q * (m.d_area_dt_error / m.d_area_dt + m.error_estimate / m.area);
        (q, err)
    };
    let (qa, ea) = log_slope(a);
    let (qb, eb) = log_slope(b);
    let rhs = qb + SLOPE_SAFETY * (ea + eb);
    if qa > rhs {
        out.push(ConvexityViolation {
            kind: ViolationKind::Log,
            evidence,
            lhs: qa,
            rhs,
            margin: qa - rhs,
            certified: false,
        });
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecantConfig {
    pub tol: f64,
    pub max_depth: u32,
    pub cell_budget: u64,
    /// Samples for the Monte Carlo cross-check of a certified violation.
    pub mc_samples: u64,
    pub seed: u64,
    /// Middle level `t2`; `None` means the critical value.
    pub center: Option<f64>,
}

impl Default for SecantConfig {
    fn default() -> Self {
        SecantConfig {
            tol: DEFAULT_SUBLEVEL_TOL,
            max_depth: DEFAULT_MAX_DEPTH,
            cell_budget: DEFAULT_CELL_BUDGET,
            mc_samples: 10_000_000,
            seed: 7,
            center: None,
        }
    }
}

/// The six certified bounds and the two chord margins for one `ε`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecantAttempt {
    pub eps: f64,
    pub delta: f64,
    /// Levels actually queried, rounded so the bounds stay valid.
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
    pub s1: [f64; 2],
    pub s2: [f64; 2],
    pub s3: [f64; 2],
    /// `lower(s(t2))` minus the upper bound of the chord.
    pub plain_margin: f64,
    pub log_margin: f64,
    /// Whether Monte Carlo estimates at ±4σ still show the violation; only
    /// run for certified violations.
    pub mc_confirms: Option<bool>,
    /// Monte Carlo chord defects `[estimate, stderr]`, plain and log.
    pub mc_plain: Option<[f64; 2]>,
    pub mc_log: Option<[f64; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecantSearch {
    pub attempts: Vec<SecantAttempt>,
    pub violations: Vec<ConvexityViolation>,
    /// Why a kind was not certified, when one was not.
    pub wall: Option<String>,
}

fn sublevel(t: f64, p: &GreenParams, cfg: &SecantConfig) -> Result<CertifiedArea, AnalysisError> {
    let bbox = verified_bbox(p)?.bbox;
    let q = AreaQuery::sublevel(t, bbox)
        .with_tol(cfg.tol)
        .with_max_depth(cfg.max_depth)
        .with_cell_budget(cfg.cell_budget);
    Ok(certified_area(&q, p)?)
}

fn has_kind(v: &[ConvexityViolation], kind: ViolationKind) -> bool {
    v.iter().any(|v| v.kind == kind)
}

/// `(wd * a + we * b).hi` for the chord weights `δ/(ε+δ)`, `ε/(ε+δ)`.
fn chord_upper(eps: f64, delta: f64, a: Interval, b: Interval) -> f64 {
    let (e, d) = (Interval::point(eps), Interval::point(delta));
    let sum = e + d;
    (d.div(sum) * a + e.div(sum) * b).hi()
}

/// Searches `ε` in order for a certified chord violation at
/// `t1 = t2 - ε, t2, t3 = t2 + δ`, with `t2` the critical value unless
/// `cfg.center` says otherwise. Each kind is recorded at the first `ε`
/// that certifies it; the search stops once both are found.
pub fn secant_violation_search(
    p: &GreenParams,
    eps_list: &[f64],
    delta: f64,
    cfg: &SecantConfig,
) -> Result<SecantSearch, AnalysisError> {
    if !(delta > 0.0 && delta <= 0.1) {
        return Err(AnalysisError::Precondition(format!(
            "delta must lie in (0, 0.1], got {delta}"
        )));
    }
    if eps_list.iter().any(|&e| !(e > 0.0)) {
        return Err(AnalysisError::Precondition("eps values must be positive".into()));
    }
    let center = match cfg.center {
        Some(c) => Interval::point(c),
        None => p.critical_value_enclosure(),
    };
    let t2 = center.lo();
    let t3 = (center + Interval::point(delta)).hi();
    if !(t3 < 0.0) {
        return Err(AnalysisError::Precondition(format!(
            "t2 + delta = {t3} is not negative"
        )));
    }
    let s2 = sublevel(t2, p, cfg)?;
    let s3 = sublevel(t3, p, cfg)?;

    let mut attempts = Vec::new();
    let mut violations = Vec::new();
    for &eps in eps_list {
        let t1 = (center - Interval::point(eps)).hi();
        let s1 = sublevel(t1, p, cfg)?;
        let up1 = Interval::point(s1.upper);
        let up3 = Interval::point(s3.upper);
        let plain_rhs = chord_upper(eps, delta, up1, up3);
        let plain_margin = s2.lower - plain_rhs;
        let log_lhs = ln_lower(s2.lower);
        let log_rhs = chord_upper(eps, delta, up1.ln(), up3.ln());
        let log_margin = log_lhs - log_rhs;
        let mut attempt = SecantAttempt {
            eps,
            delta,
            t1,
            t2,
            t3,
            s1: [s1.lower, s1.upper],
            s2: [s2.lower, s2.upper],
            s3: [s3.lower, s3.upper],
            plain_margin,
            log_margin,
            mc_confirms: None,
            mc_plain: None,
            mc_log: None,
        };
        let evidence = Evidence::Secant { t1, t2, t3 };
        let new_plain = plain_margin > 0.0 && !has_kind(&violations, ViolationKind::Plain);
        let new_log = log_margin > 0.0 && !has_kind(&violations, ViolationKind::Log);
        if new_plain {
            violations.push(ConvexityViolation {
                kind: ViolationKind::Plain,
                evidence,
                lhs: s2.lower,
                rhs: plain_rhs,
                margin: plain_margin,
                certified: true,
            });
        }
        if new_log {
            violations.push(ConvexityViolation {
                kind: ViolationKind::Log,
                evidence,
                lhs: log_lhs,
                rhs: log_rhs,
                margin: log_margin,
                certified: true,
            });
        }
        if new_plain || new_log {
            mc_cross_check(&mut attempt, p, cfg)?;
        }
        attempts.push(attempt);
        if has_kind(&violations, ViolationKind::Plain) && has_kind(&violations, ViolationKind::Log) {
            break;
        }
    }

    let missing: Vec<&str> = [(ViolationKind::Plain, "plain"), (ViolationKind::Log, "log")]
        .into_iter()
        .filter(|(k, _)| !violations.iter().any(|v| v.kind == *k))
        .map(|(_, name)| name)
        .collect();
    let wall = if missing.is_empty() {
        None
    } else {
        let best = attempts.iter().max_by(|a, b| a.plain_margin.total_cmp(&b.plain_margin));
        Some(match best {
            Some(a) => format!(
                "no certified {} violation; best plain margin {:.6e}, log margin {:.6e} at eps {:e} with certified widths {:.3e}, {:.3e}, {:.3e}",
                missing.join(" or "),
                a.plain_margin,
                a.log_margin,
                a.eps,
                a.s1[1] - a.s1[0],
                a.s2[1] - a.s2[0],
                a.s3[1] - a.s3[0]
            ),
            None => "no eps values given".to_string(),
        })
    };
    Ok(SecantSearch {
        attempts,
        violations,
        wall,
    })
}

/// Re-tests the violation with Monte Carlo areas from one shared sample.
///
/// The chord defects are estimated from a single partition of the samples,
/// so the large common part of the three areas cancels in the variance. The
/// plain defect `s2 - wd s1 - we s3` is linear in the slot counts; the log
/// defect `ln s2 - wd ln s1 - we ln s3` is linearized around the estimates.
/// Each must stay positive at `-4σ`.
fn mc_cross_check(a: &mut SecantAttempt, p: &GreenParams, cfg: &SecantConfig) -> Result<(), AnalysisError> {
    let part = monte_carlo_partition(&[a.t1, a.t2, a.t3], cfg.mc_samples, cfg.seed, p)?;
    let k = 4.0;
    let wd = a.delta / (a.eps + a.delta);
    let we = a.eps / (a.eps + a.delta);
    let (defect, sd) = part.combination(&[-wd, 1.0, -we]);
    let plain_ok = defect - k * sd > 0.0;

    let (m1, m2, m3) = (part.area(0).estimate, part.area(1).estimate, part.area(2).estimate);
    let (log_defect, log_sd) = if m1 > 0.0 {
        let (_, sd) = part.combination(&[-wd / m1, 1.0 / m2, -we / m3]);
        (m2.ln() - wd * m1.ln() - we * m3.ln(), sd)
    } else {
        (f64::NEG_INFINITY, f64::INFINITY)
    };
    let log_ok = log_defect - k * log_sd > 0.0;
    a.mc_plain = Some([defect, sd]);
    a.mc_log = Some([log_defect, log_sd]);
    let plain_needed = a.plain_margin > 0.0;
    let log_needed = a.log_margin > 0.0;
    a.mc_confirms = Some((!plain_needed || plain_ok) && (!log_needed || log_ok));
    Ok(())
}

/// Slope test at `(t0 - 1e-4, t0 + 0.05)` (the gate) plus the certified
/// secant search (best effort).
pub fn nonconvexity_check(
    p: &GreenParams,
    trace_opts: &TraceOptions,
    eps_list: &[f64],
    delta: f64,
    cfg: &SecantConfig,
) -> Result<Report, AnalysisError> {
    let t0 = p.critical_value();
    let (t_a, t_b) = (t0 - 1e-4, t0 + 0.05);
    let slope = slope_violation(t_a, t_b, p, trace_opts)?;
    let mut rep = Report::new("nonconvexity");
    rep.param("slope_t_a", t_a);
    rep.param("slope_t_b", t_b);
    rep.param("secant_delta", delta);
    rep.param("mc_samples", cfg.mc_samples as f64);
    rep.param("seed", cfg.seed as f64);
    rep.param("cell_budget", cfg.cell_budget as f64);
    rep.param("tol", cfg.tol);
    for kind in [ViolationKind::Plain, ViolationKind::Log] {
        let name = match kind {
            ViolationKind::Plain => "plain",
            ViolationKind::Log => "log",
        };
        match slope.iter().find(|v| v.kind == kind) {
            Some(v) => rep.margin(&format!("slope_{name}_margin"), v.margin),
            None => {
                rep.status = rep.status.and(CheckStatus::Inconclusive);
                rep.notes
                    .push(format!("no {name} slope violation after error accounting"));
            }
        }
    }
    rep.violations.extend(slope);

    let search = secant_violation_search(p, eps_list, delta, cfg)?;
    for a in &search.attempts {
        let key = format!("secant_eps_{:e}", a.eps);
        rep.margin(&format!("{key}_plain_margin"), a.plain_margin);
        rep.margin(&format!("{key}_log_margin"), a.log_margin);
        for (name, s) in [("s1", a.s1), ("s2", a.s2), ("s3", a.s3)] {
            rep.margin(&format!("{key}_{name}_lower"), s[0]);
            rep.margin(&format!("{key}_{name}_upper"), s[1]);
        }
        for (name, m) in [("plain", a.mc_plain), ("log", a.mc_log)] {
            if let Some([est, sd]) = m {
                rep.margin(&format!("{key}_mc_{name}_defect"), est);
                rep.margin(&format!("{key}_mc_{name}_stderr"), sd);
            }
        }
        if let Some(ok) = a.mc_confirms {
            rep.margin(&format!("{key}_mc_confirms"), if ok { 1.0 } else { 0.0 });
            if !ok {
                rep.notes.push(format!(
                    "Monte Carlo at 4 sigma does not confirm the secant violation at eps {:e}",
                    a.eps
                ));
            }
        }
    }
    rep.violations.extend(search.violations);
    if let Some(w) = search.wall {
        rep.notes.push(format!("secant tolerance wall: {w}"));
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chord_weights() {
        let a = Interval::point(1.0);
        let b = Interval::point(3.0);
        let c = chord_upper(1.0, 1.0, a, b);
        assert!(c >= 2.0 && c - 2.0 < 1e-14);
    }

    #[test]
    fn slope_preconditions() {
        let p = GreenParams::default();
        let o = TraceOptions::default();
        assert!(slope_violation(-0.4, -0.5, &p, &o).is_err());
        assert!(slope_violation(-0.4, -0.4, &p, &o).is_err());
        assert!(slope_violation(-4.0, -0.5, &p, &o).is_err());
        assert!(slope_violation(-0.5, -0.001, &p, &o).is_err());
    }

    #[test]
    fn no_slope_violation_far_left() {
        let p = GreenParams::default();
        let o = TraceOptions::default();
        assert!(slope_violation(-0.5, -0.4, &p, &o).unwrap().is_empty());
        assert!(slope_violation(-1.0, -0.3, &p, &o).unwrap().is_empty());
    }

    #[test]
    fn slope_violation_across_critical_value() {
        let p = GreenParams::default();
        let o = TraceOptions::default();
        let t0 = p.critical_value();
        let v = slope_violation(t0 - 1e-4, t0 + 0.05, &p, &o).unwrap();
        assert!(v.iter().any(|v| v.kind == ViolationKind::Plain && v.margin > 0.0));
        assert!(v.iter().any(|v| v.kind == ViolationKind::Log && v.margin > 0.0));
    }
}
