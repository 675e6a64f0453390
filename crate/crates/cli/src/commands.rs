use serde_json::{json, Map, Value};
use sublevel::analysis::{
    corollary_check, empirical_eps0, lemma1_check, nonconvexity_check, sector_check, CorollaryConfig, SecantConfig,
};
use sublevel::area::{DEFAULT_BAND_TOL, DEFAULT_SUBLEVEL_TOL};
use sublevel::green::{critical_excess, eval_f_derivs, grad_g, membership};
use sublevel::trace::area_profile;
use sublevel::{
    certified_area, eval_g, level_measure, monte_carlo_area, verified_bbox, AreaQuery, ComplexPoint, Membership,
    Report, TraceOptions,
};

use crate::output::{cell, num, opt_num, report_json, Sink, SWEEP_HEADER};
use crate::{CliError, Engine, Format, Settings, Which};

/// Sector sizes tried, largest first, when recording the empirical `ε0`.
const EPS0_CANDIDATES: [f64; 8] = [0.9, 0.5, 0.2, 0.1, 0.05, 0.02, 1e-2, 1e-3];

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn membership_name(m: Membership) -> &'static str {
    match m {
        Membership::Inside => "inside",
        Membership::Outside => "outside",
        Membership::NearBoundary { .. } => "near_boundary",
    }
}

pub fn eval(s: &Settings, sink: &Sink, w: ComplexPoint, tau_b: f64) -> Result<i32, CliError> {
    let p = &s.params;
    let g = eval_g(w, p);
    let m = membership(w, p, tau_b).map_err(|e| CliError::Usage(e.to_string()))?;
    let derivs = eval_f_derivs(w).ok();
    let grad = grad_g(w).ok();
    let pole = w == p.pole();
    let singular = derivs.is_none() && !pole;
    match s.format(Format::Json) {
        Format::Json => {
            let mut o = Map::new();
            o.insert("w".into(), json!({ "re": num(w.re), "im": num(w.im) }));
            o.insert("g".into(), num(g));
            o.insert("critical_excess".into(), num(critical_excess(w)));
            o.insert("critical_value".into(), num(p.critical_value()));
            o.insert(
                "f_prime".into(),
                derivs.map_or(Value::Null, |(f1, _)| json!({ "re": num(f1.re), "im": num(f1.im) })),
            );
            o.insert(
                "f_second".into(),
                derivs.map_or(Value::Null, |(_, f2)| json!({ "re": num(f2.re), "im": num(f2.im) })),
            );
            o.insert(
                "grad".into(),
                grad.map_or(Value::Null, |(gx, gy)| json!([num(gx), num(gy)])),
            );
            o.insert("membership".into(), Value::from(membership_name(m)));
            o.insert("tau_b".into(), num(tau_b));
            o.insert("pole".into(), Value::Bool(pole));
            o.insert("singular".into(), Value::Bool(singular));
            sink.json(o)?;
        }
        Format::Csv => {
            let header = [
                "w_re",
                "w_im",
                "g",
                "fprime_re",
                "fprime_im",
                "grad_x",
                "grad_y",
                "membership",
                "pole",
                "singular",
            ];
            let row = vec![
                cell(Some(w.re)),
                cell(Some(w.im)),
                cell(Some(g)),
                cell(derivs.map(|d| d.0.re)),
                cell(derivs.map(|d| d.0.im)),
                cell(grad.map(|d| d.0)),
                cell(grad.map(|d| d.1)),
                membership_name(m).into(),
                pole.to_string(),
                singular.to_string(),
            ];
            sink.csv(&header, &[row])?;
        }
    }
    Ok(0)
}

/// One area result in the sweep layout, plus whether it met its tolerance.
struct Row {
    t: f64,
    lower: Option<f64>,
    upper: Option<f64>,
    est: Option<f64>,
    ds_dt: Option<f64>,
    n_components: Option<usize>,
    engine: Engine,
    detail: Map<String, Value>,
    exhausted: bool,
}

impl Row {
    fn empty(t: f64, engine: Engine) -> Row {
        Row {
            t,
            lower: None,
            upper: None,
            est: None,
            ds_dt: None,
            n_components: None,
            engine,
            detail: Map::new(),
            exhausted: false,
        }
    }

    fn csv(&self) -> Vec<String> {
        vec![
            cell(Some(self.t)),
            cell(self.lower),
            cell(self.upper),
            cell(self.est),
            cell(self.ds_dt),
            self.n_components.map_or(String::new(), |n| n.to_string()),
            self.engine.name().into(),
        ]
    }

    fn json(&self) -> Map<String, Value> {
        let mut o = Map::new();
        o.insert("t".into(), num(self.t));
        o.insert("area_lower".into(), opt_num(self.lower));
        o.insert("area_upper".into(), opt_num(self.upper));
        o.insert("area_est".into(), opt_num(self.est));
        o.insert("ds_dt".into(), opt_num(self.ds_dt));
        o.insert(
            "n_components".into(),
            self.n_components.map_or(Value::Null, Value::from),
        );
        o.insert("engine".into(), Value::from(self.engine.name()));
        o
    }
}

fn quadtree_row(s: &Settings, t_lo: Option<f64>, t_hi: f64) -> Result<Row, CliError> {
    let bbox = verified_bbox(&s.params).map_err(runtime)?.bbox;
    let q = match t_lo {
        Some(lo) => AreaQuery::band(lo, t_hi, bbox).with_tol(s.tol.unwrap_or(DEFAULT_BAND_TOL)),
        None => AreaQuery::sublevel(t_hi, bbox).with_tol(s.tol.unwrap_or(DEFAULT_SUBLEVEL_TOL)),
    };
    let q = q.with_max_depth(s.max_depth).with_cell_budget(s.cell_budget);
    q.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    let a = certified_area(&q, &s.params).map_err(runtime)?;
    let mut row = Row::empty(t_hi, Engine::Quadtree);
    row.lower = Some(a.lower);
    row.upper = Some(a.upper);
    row.est = Some(a.midpoint());
    row.exhausted = !a.tol_met();
    let d = &mut row.detail;
    d.insert("width".into(), num(a.width()));
    d.insert("tol".into(), num(q.tol));
    d.insert("certified".into(), Value::Bool(a.certified));
    d.insert(
        "termination".into(),
        serde_json::to_value(a.termination).expect("termination serializes"),
    );
    d.insert("cells_inside".into(), Value::from(a.cells_inside));
    d.insert("cells_boundary".into(), Value::from(a.cells_boundary));
    d.insert("cells_classified".into(), Value::from(a.cells_classified));
    d.insert("max_depth_reached".into(), Value::from(a.max_depth_reached));
    Ok(row)
}

fn trace_row(s: &Settings, t_lo: Option<f64>, t_hi: f64) -> Result<Row, CliError> {
    let opts = TraceOptions::default();
    let hi = level_measure(t_hi, &s.params, &opts).map_err(runtime)?;
    let mut row = Row::empty(t_hi, Engine::Trace);
    let comps: Vec<Value> = hi
        .components
        .iter()
        .map(|c| {
            json!({
                "signed_area": num(c.signed_area),
                "arclength": num(c.arclength),
                "co_area": num(c.co_area),
                "min_grad": num(c.min_grad),
                "closure_gap": num(c.closure_gap),
                "vertices": c.vertices.len(),
                "steps": c.steps,
            })
        })
        .collect();
    match t_lo {
        None => {
            row.est = Some(hi.area);
            row.ds_dt = Some(hi.d_area_dt);
            row.n_components = Some(hi.n_components);
            row.detail.insert("error_estimate".into(), num(hi.error_estimate));
            row.detail.insert("ds_dt_error".into(), num(hi.d_area_dt_error));
            row.detail.insert("components".into(), Value::Array(comps));
        }
        Some(lo) => {
            let low = level_measure(lo, &s.params, &opts).map_err(runtime)?;
            row.est = Some(hi.area - low.area);
            row.detail
                .insert("error_estimate".into(), num(hi.error_estimate + low.error_estimate));
        }
    }
    Ok(row)
}

fn mc_row(s: &Settings, t_lo: Option<f64>, t_hi: f64, n: u64) -> Result<Row, CliError> {
    let m = monte_carlo_area(t_lo.unwrap_or(f64::NEG_INFINITY), t_hi, n, s.seed, &s.params)
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let mut row = Row::empty(t_hi, Engine::Mc);
    row.est = Some(m.estimate);
    let d = &mut row.detail;
    d.insert("stderr".into(), num(m.stderr));
    d.insert("hits".into(), Value::from(m.hits));
    d.insert("n".into(), Value::from(m.n));
    d.insert("seed".into(), Value::from(m.seed));
    Ok(row)
}

fn area_row(s: &Settings, engine: Engine, t_lo: Option<f64>, t_hi: f64, n: u64) -> Result<Row, CliError> {
    match engine {
        Engine::Quadtree => quadtree_row(s, t_lo, t_hi),
        Engine::Trace => trace_row(s, t_lo, t_hi),
        Engine::Mc => mc_row(s, t_lo, t_hi, n),
    }
}

/// Exit code 3 when the quadtree stopped on its budget or depth before
/// reaching the tolerance; the bounds are still valid.
pub fn area(s: &Settings, sink: &Sink, engine: Engine, t_lo: Option<f64>, t_hi: f64, n: u64) -> Result<i32, CliError> {
    let row = area_row(s, engine, t_lo, t_hi, n)?;
    match s.format(Format::Json) {
        Format::Json => {
            let mut o = row.json();
            o.insert("t_lo".into(), opt_num(t_lo));
            o.insert("t_hi".into(), num(t_hi));
            o.extend(row.detail.clone());
            sink.json(o)?;
        }
        Format::Csv => sink.csv(&SWEEP_HEADER, &[row.csv()])?,
    }
    Ok(if row.exhausted { 3 } else { 0 })
}

/// Evenly spaced levels, endpoints included.
pub fn sweep_levels(t_min: f64, t_max: f64, steps: usize) -> Vec<f64> {
    if steps == 1 {
        return vec![t_min];
    }
    (0..steps)
        .map(|i| {
            if i == steps - 1 {
                t_max
            } else {
                t_min + i as f64 * (t_max - t_min) / (steps - 1) as f64
            }
        })
        .collect()
}

/// Failing levels are written as rows with empty values and reported on
/// stderr; the exit code is then 1.
pub fn sweep(s: &Settings, sink: &Sink, engine: Engine, ts: &[f64], n: u64) -> Result<i32, CliError> {
    let results: Vec<Result<Row, CliError>> = match engine {
        Engine::Trace => area_profile(ts, &s.params, &TraceOptions::default())
            .into_iter()
            .zip(ts)
            .map(|(r, &t)| {
                let m = r.map_err(runtime)?;
                let mut row = Row::empty(t, Engine::Trace);
                row.est = Some(m.area);
                row.ds_dt = Some(m.d_area_dt);
                row.n_components = Some(m.n_components);
                Ok(row)
            })
            .collect(),
        _ => ts.iter().map(|&t| area_row(s, engine, None, t, n)).collect(),
    };
    let (mut failed, mut exhausted) = (false, false);
    let mut rows = Vec::with_capacity(ts.len());
    for (r, &t) in results.into_iter().zip(ts) {
        match r {
            Ok(row) => {
                exhausted |= row.exhausted;
                rows.push(row);
            }
            Err(CliError::Usage(e)) => return Err(CliError::Usage(e)),
            Err(e) => {
                eprintln!("sublevel: t = {t}: {e}");
                failed = true;
                rows.push(Row::empty(t, engine));
            }
        }
    }
    match s.format(Format::Csv) {
        Format::Csv => {
            let body: Vec<Vec<String>> = rows.iter().map(Row::csv).collect();
            sink.csv(&SWEEP_HEADER, &body)?;
        }
        Format::Json => {
            let mut o = Map::new();
            o.insert(
                "rows".into(),
                Value::Array(rows.iter().map(|r| Value::Object(r.json())).collect()),
            );
            sink.json(o)?;
        }
    }
    // A runtime error outranks an exhausted budget.
    Ok(if failed {
        1
    } else if exhausted {
        3
    } else {
        0
    })
}

/// Verification options that are not part of the shared run configuration.
pub struct VerifyArgs {
    pub eps: Option<Vec<f64>>,
    pub n_samples: usize,
    pub mc_samples: u64,
    pub delta: f64,
}

fn eps_or(v: &VerifyArgs, default: &[f64]) -> Vec<f64> {
    v.eps.clone().unwrap_or_else(|| default.to_vec())
}

/// Folds per-ε reports of one check into a single report with keys
/// prefixed by `eps_<ε>.`.
fn merge(check: &str, parts: Vec<(f64, Report)>) -> Report {
    let mut out = Report::new(check);
    for (eps, rep) in parts {
        let prefix = format!("eps_{eps:e}");
        out.status = out.status.and(rep.status);
        for (k, v) in rep.margins {
            out.margins.insert(format!("{prefix}.{k}"), v);
        }
        for (k, v) in rep.params {
            out.params.insert(format!("{prefix}.{k}"), v);
        }
        out.notes
            .extend(rep.notes.into_iter().map(|n| format!("eps {eps:e}: {n}")));
        out.violations.extend(rep.violations);
    }
    out
}

fn lemma2(s: &Settings, v: &VerifyArgs) -> Result<Report, CliError> {
    let eps = eps_or(v, &[1e-2, 1e-3, 1e-4]);
    let parts = eps
        .iter()
        .map(|&e| sector_check(e, v.n_samples, &s.params).map(|r| (e, r)))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let mut rep = merge("lemma2", parts);
    match empirical_eps0(&EPS0_CANDIDATES, v.n_samples, &s.params).map_err(runtime)? {
        Some(e0) => {
            rep.margins.insert("eps0_largest_passing".into(), e0);
            rep.params.insert("eps0_largest_candidate".into(), EPS0_CANDIDATES[0]);
        }
        None => rep.notes.push("no candidate eps passes the sector check".into()),
    }
    Ok(rep)
}

fn corollary(s: &Settings, v: &VerifyArgs) -> Result<Report, CliError> {
    let cfg = CorollaryConfig {
        tol: s.tol.unwrap_or(DEFAULT_BAND_TOL),
        max_depth: s.max_depth,
        cell_budget: s.cell_budget,
    };
    let mut parts = Vec::new();
    for e in eps_or(v, &[1e-2, 1e-3]) {
        let rep = corollary_check(e, &s.params, &cfg).map_err(|e| CliError::Usage(e.to_string()))?;
        parts.push((e, rep));
    }
    Ok(merge("corollary", parts))
}

fn nonconvexity(s: &Settings, v: &VerifyArgs) -> Result<Report, CliError> {
    let cfg = SecantConfig {
        tol: s.tol.unwrap_or(DEFAULT_SUBLEVEL_TOL),
        max_depth: s.max_depth,
        cell_budget: s.cell_budget,
        mc_samples: v.mc_samples,
        seed: s.seed,
        center: None,
    };
    let eps = eps_or(v, &[1e-2, 1e-3, 1e-4]);
    nonconvexity_check(&s.params, &TraceOptions::default(), &eps, v.delta, &cfg).map_err(runtime)
}

fn run_check(which: Which, s: &Settings, v: &VerifyArgs) -> Result<Report, CliError> {
    match which {
        Which::Lemma1 => Ok(lemma1_check(&s.params)),
        Which::Lemma2 => lemma2(s, v),
        Which::Corollary => corollary(s, v),
        Which::Nonconvexity => nonconvexity(s, v),
        Which::All => unreachable!("expanded by the caller"),
    }
}

/// Exit code from the combined status: 0 pass, 2 fail, 3 inconclusive.
pub fn verify(s: &Settings, sink: &Sink, which: Which, v: &VerifyArgs) -> Result<i32, CliError> {
    let (top, subs) = if which == Which::All {
        let subs = [Which::Lemma1, Which::Lemma2, Which::Corollary, Which::Nonconvexity]
            .into_iter()
            .map(|w| run_check(w, s, v))
            .collect::<Result<Vec<_>, _>>()?;
        let mut top = Report::new("all");
        for r in &subs {
            top.status = top.status.and(r.status);
            let code = r.status.exit_code() as f64;
            top.margins.insert(format!("{}.exit_code", r.check), code);
        }
        (top, subs)
    } else {
        (run_check(which, s, v)?, Vec::new())
    };
    let status = top.status;
    match s.format(Format::Json) {
        Format::Json => {
            let Value::Object(mut o) = report_json(&top) else {
                unreachable!()
            };
            if !subs.is_empty() {
                o.insert("reports".into(), Value::Array(subs.iter().map(report_json).collect()));
            }
            sink.json(o)?;
        }
        Format::Csv => {
            let mut rows = Vec::new();
            for r in std::iter::once(&top).chain(&subs) {
                let status = serde_json::to_value(r.status).expect("status serializes");
                let status = status.as_str().unwrap_or_default().to_string();
                for (k, val) in &r.margins {
                    rows.push(vec![r.check.clone(), status.clone(), k.clone(), cell(Some(*val))]);
                }
            }
            sink.csv(&["check", "status", "margin", "value"], &rows)?;
        }
    }
    Ok(status.exit_code())
}

#[cfg(test)]
mod tests {
    use super::*;
    use sublevel::CheckStatus;

    #[test]
    fn sweep_levels_hit_both_ends() {
        let ts = sweep_levels(-2.0, -0.02, 100);
        assert_eq!(ts.len(), 100);
        assert_eq!(ts[0], -2.0);
        assert_eq!(ts[99], -0.02);
        assert!(ts.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(sweep_levels(-0.5, -0.1, 1), vec![-0.5]);
    }

    #[test]
    fn merge_prefixes_keys() {
        let mut a = Report::new("x");
        a.margins.insert("m".into(), 1.0);
        let mut b = Report::new("x");
        b.status = CheckStatus::Inconclusive;
        b.notes.push("starved".into());
        let m = merge("x", vec![(1e-2, a), (1e-3, b)]);
        assert_eq!(m.margins["eps_1e-2.m"], 1.0);
        assert_eq!(m.status, CheckStatus::Inconclusive);
        assert_eq!(m.notes, vec!["eps 1e-3: starved".to_string()]);
    }
}
