use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::AreaError;
use crate::green::{eval_g_interval, excess_ratio_interval, g_interval_mean_value, GreenParams};
use crate::interval::{down, ln_lower, ln_upper, up, Interval, PlaneBox};

pub const DEFAULT_SUBLEVEL_TOL: f64 = 1e-5;
pub const DEFAULT_BAND_TOL: f64 = 1e-6;
pub const DEFAULT_MAX_DEPTH: u32 = 40;
pub const DEFAULT_CELL_BUDGET: u64 = 20_000_000;

/// Deepest subdivision level whose inside-cell tally fits the exact
/// `u128` accumulator.
pub const MAX_SUPPORTED_DEPTH: u32 = 44;

const CHUNK: usize = 2048;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CellClass {
    Inside,
    Outside,
    Boundary,
}

/// Classify a cell against the band `(t_lo, t_hi)`. Pass `f64::NEG_INFINITY`
/// as `t_lo` for a plain sublevel set.
pub fn classify_cell(bx: &PlaneBox, t_lo: f64, t_hi: f64, p: &GreenParams) -> CellClass {
    Classifier::new(t_lo, t_hi, p).classify(bx)
}

/// Level thresholds translated to the ratio `exp(6 (G - t0))`, so that the
/// first test on each cell needs no logarithm.
struct Classifier<'a> {
    t_lo: f64,
    t_hi: f64,
    p: &'a GreenParams,
    /// `ratio < in_hi` implies `G < t_hi`; `ratio > out_hi` implies `G > t_hi`.
    in_hi: f64,
    out_hi: f64,
    /// Same for `t_lo`; unused for sublevel queries.
    in_lo: f64,
    out_lo: f64,
}

/// Largest convenient `c` with `ln c < u`, or 0.
fn exp_below(u: f64) -> f64 {
    let mut c = u.exp();
    for _ in 0..64 {
        if c <= 0.0 || ln_upper(c) < u {
            return c.max(0.0);
        }
        c = down(down(c) * (1.0 - 1e-15));
    }
    0.0
}

/// Smallest convenient `c` with `ln c > u`, or infinity.
fn exp_above(u: f64) -> f64 {
    let mut c = u.exp();
    for _ in 0..64 {
        if c.is_infinite() || (c > 0.0 && ln_lower(c) > u) {
            return c;
        }
        c = up(up(c.max(f64::MIN_POSITIVE)) * (1.0 + 1e-15));
    }
    f64::INFINITY
}

impl<'a> Classifier<'a> {
    fn new(t_lo: f64, t_hi: f64, p: &'a GreenParams) -> Self {
        let t0 = p.critical_value_enclosure();
        let six = Interval::point(6.0);
        let u_hi = six * (Interval::point(t_hi) - t0);
        let (in_lo, out_lo) = if t_lo == f64::NEG_INFINITY {
            (0.0, 0.0)
        } else {
            let u_lo = six * (Interval::point(t_lo) - t0);
            (exp_above(u_lo.hi()), exp_below(u_lo.lo()))
        };
        Classifier {
            t_lo,
            t_hi,
            p,
            in_hi: exp_below(u_hi.lo()),
            out_hi: exp_above(u_hi.hi()),
            in_lo,
            out_lo,
        }
    }

    fn decide(&self, g: Interval) -> Option<CellClass> {
        // A plain sublevel query has no lower constraint; the pole is a null set.
        if (self.t_lo == f64::NEG_INFINITY || g.lo() > self.t_lo) && g.hi() < self.t_hi {
            Some(CellClass::Inside)
        } else if g.lo() > self.t_hi || g.hi() < self.t_lo {
            Some(CellClass::Outside)
        } else {
            None
        }
    }

    fn classify(&self, bx: &PlaneBox) -> CellClass {
        let q = excess_ratio_interval(bx, self.p);
        let sub = self.t_lo == f64::NEG_INFINITY;
        if (sub || q.lo() > self.in_lo) && q.hi() < self.in_hi {
            return CellClass::Inside;
        }
        if q.lo() > self.out_hi || (!sub && q.hi() < self.out_lo) {
            return CellClass::Outside;
        }
        match g_interval_mean_value(bx, self.p) {
            Some(mv) => self.decide(mv).unwrap_or(CellClass::Boundary),
            None => CellClass::Boundary,
        }
    }
}

/// Area of `{t_lo < G < t_hi}` inside `bbox`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AreaQuery {
    pub t_lo: f64,
    pub t_hi: f64,
    pub bbox: PlaneBox,
    pub tol: f64,
    pub max_depth: u32,
    pub cell_budget: u64,
}

impl AreaQuery {
    pub fn sublevel(t: f64, bbox: PlaneBox) -> Self {
        AreaQuery {
            t_lo: f64::NEG_INFINITY,
            t_hi: t,
            bbox,
            tol: DEFAULT_SUBLEVEL_TOL,
            max_depth: DEFAULT_MAX_DEPTH,
            cell_budget: DEFAULT_CELL_BUDGET,
        }
    }

    pub fn band(t_lo: f64, t_hi: f64, bbox: PlaneBox) -> Self {
        AreaQuery {
            t_lo,
            t_hi,
            bbox,
            tol: DEFAULT_BAND_TOL,
            max_depth: DEFAULT_MAX_DEPTH,
            cell_budget: DEFAULT_CELL_BUDGET,
        }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn with_max_depth(mut self, max_depth: u32) -> Self {
        self.max_depth = max_depth;
        self
    }

    pub fn with_cell_budget(mut self, cell_budget: u64) -> Self {
        self.cell_budget = cell_budget;
        self
    }

    pub fn validate(&self) -> Result<(), AreaError> {
        if self.t_lo.is_nan() || self.t_hi.is_nan() || !(self.t_lo < self.t_hi) {
            return Err(AreaError::EmptyBand {
                t_lo: self.t_lo,
                t_hi: self.t_hi,
            });
        }
        if self.t_hi > 0.0 {
            return Err(AreaError::LevelOutsideDomain(self.t_hi));
        }
        if !(self.tol > 0.0) {
            return Err(AreaError::InvalidTolerance(self.tol));
        }
        if self.max_depth > MAX_SUPPORTED_DEPTH {
            return Err(AreaError::DepthTooLarge(self.max_depth));
        }
        if self.cell_budget == 0 {
            return Err(AreaError::ZeroBudget);
        }
        Ok(())
    }

    pub fn is_band(&self) -> bool {
        self.t_lo > f64::NEG_INFINITY
    }
}

/// Why the subdivision stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Termination {
    Tolerance,
    CellBudget,
    MaxDepth,
}

/// Rigorous bounds `lower <= area <= upper`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CertifiedArea {
    pub lower: f64,
    pub upper: f64,
    pub cells_inside: u64,
    pub cells_boundary: u64,
    pub cells_classified: u64,
    pub max_depth_reached: u32,
    /// Outward rounding throughout, including the logarithm.
    pub certified: bool,
    pub termination: Termination,
    pub query: AreaQuery,
}

impl CertifiedArea {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }

    pub fn contains(&self, a: f64) -> bool {
        self.lower <= a && a <= self.upper
    }

    pub fn tol_met(&self) -> bool {
        self.termination == Termination::Tolerance
    }
}

struct Grid {
    x_lo: Interval,
    y_lo: Interval,
    width: Interval,
    height: Interval,
}

impl Grid {
    fn new(bbox: &PlaneBox) -> Self {
        let x_lo = Interval::point(bbox.x.lo());
        let y_lo = Interval::point(bbox.y.lo());
        Grid {
            x_lo,
            y_lo,
            width: Interval::point(bbox.x.hi()) - x_lo,
            height: Interval::point(bbox.y.hi()) - y_lo,
        }
    }

    /// Box enclosing cell `(i, j)` at `depth`; coordinates are enclosures so
    /// neighbouring cells always overlap rather than leave gaps.
    fn cell(&self, i: u64, j: u64, depth: u32) -> PlaneBox {
        let scale = (-(depth as i32) as f64).exp2();
        let x0 = self.x_lo + self.width * Interval::point(i as f64 * scale);
        let x1 = self.x_lo + self.width * Interval::point((i + 1) as f64 * scale);
        let y0 = self.y_lo + self.height * Interval::point(j as f64 * scale);
        let y1 = self.y_lo + self.height * Interval::point((j + 1) as f64 * scale);
        PlaneBox::new(Interval::new(x0.lo(), x1.hi()), Interval::new(y0.lo(), y1.hi()))
    }

    fn area(&self) -> Interval {
        self.width * self.height
    }
}

/// `units * area / 4^depth`, rounded down or up.
fn scaled_area(units: u128, area: Interval, depth: u32, round_up: bool) -> f64 {
    let mut u = units as f64;
    if round_up && (u as u128) < units {
        u = up(u);
    }
    if !round_up && (u as u128) > units {
        u = down(u);
    }
    let scale = (-(2 * depth as i32) as f64).exp2();
    if round_up {
        up(up(u * area.hi()) * scale)
    } else {
        down(down(u * area.lo()) * scale).max(0.0)
    }
}

/// Breadth-first quadtree subdivision of the boundary cells.
///
/// Inside-cell counts are accumulated exactly as integers in units of the
/// deepest admissible cell, so the bounds do not depend on summation order
/// or on the number of worker threads.
pub fn certified_area(q: &AreaQuery, p: &GreenParams) -> Result<CertifiedArea, AreaError> {
    q.validate()?;
    let grid = Grid::new(&q.bbox);
    let area = grid.area();
    let depth_cap = q.max_depth;
    let classifier = Classifier::new(q.t_lo, q.t_hi, p);

    let mut inside_units: u128 = 0;
    let mut cells_inside: u64 = 0;
    let mut classified: u64 = 1;
    let mut depth: u32 = 0;
    let mut frontier: Vec<(u64, u64)> = match classifier.classify(&grid.cell(0, 0, 0)) {
        CellClass::Inside => {
            inside_units += 1u128 << (2 * depth_cap);
            cells_inside += 1;
            Vec::new()
        }
        CellClass::Outside => Vec::new(),
        CellClass::Boundary => vec![(0, 0)],
    };

    let termination = loop {
        let boundary_units = (frontier.len() as u128) << (2 * (depth_cap - depth));
        let lower = scaled_area(inside_units, area, depth_cap, false);
        let upper = scaled_area(inside_units + boundary_units, area, depth_cap, true);
        if upper - lower <= q.tol {
            break Termination::Tolerance;
        }
        if classified + 4 * frontier.len() as u64 > q.cell_budget {
            break Termination::CellBudget;
        }
        if depth == depth_cap {
            break Termination::MaxDepth;
        }

        let child_depth = depth + 1;
        let classifier = &classifier;
        let parts: Vec<(u64, Vec<(u64, u64)>)> = frontier
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut inside = 0u64;
                let mut next = Vec::with_capacity(chunk.len() * 2);
                for &(i, j) in chunk {
                    for (di, dj) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
                        let (ci, cj) = (2 * i + di, 2 * j + dj);
                        match classifier.classify(&grid.cell(ci, cj, child_depth)) {
                            CellClass::Inside => inside += 1,
                            CellClass::Outside => {}
                            CellClass::Boundary => next.push((ci, cj)),
                        }
                    }
                }
                (inside, next)
            })
            .collect();

        classified += 4 * frontier.len() as u64;
        let next_len = parts.iter().map(|(_, v)| v.len()).sum();
        let mut next = Vec::with_capacity(next_len);
        for (inside, cells) in parts {
            cells_inside += inside;
            inside_units += (inside as u128) << (2 * (depth_cap - child_depth));
            next.extend(cells);
        }
        frontier = next;
        depth = child_depth;
    };

    let boundary_units = (frontier.len() as u128) << (2 * (depth_cap - depth));
    Ok(CertifiedArea {
        lower: scaled_area(inside_units, area, depth_cap, false),
        upper: scaled_area(inside_units + boundary_units, area, depth_cap, true),
        cells_inside,
        cells_boundary: frontier.len() as u64,
        cells_classified: classified,
        max_depth_reached: depth,
        certified: true,
        termination,
        query: *q,
    })
}

/// The bounding box together with the tiling that certifies `G > 0` on its
/// outer frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BboxCertificate {
    pub bbox: PlaneBox,
    /// Inner half-width of the certified frame `inner <= max(|x|,|y|) <= half_width`.
    pub frame_inner: f64,
    pub tiles_checked: u64,
}

/// Smallest frame radius (in steps of 0.5 from 5.5) where the crude bound
/// `r |w|^3 > 3|w|^2 + 3|w| + 1` already separates `|w|^3` from `|q(w)|/r`.
fn frame_radius(p: &GreenParams) -> f64 {
    let mut l = 5.5f64;
    while p.r() * l.powi(3) <= 1.01 * (3.0 * l * l + 3.0 * l + 1.0) {
        l += 0.5;
    }
    l
}

fn certify_tile(bx: PlaneBox, p: &GreenParams, depth: u32, tiles: &mut u64) -> bool {
    *tiles += 1;
    if eval_g_interval(&bx, p).lo() > 0.0 {
        return true;
    }
    if depth == 0 {
        return false;
    }
    let (xm, ym) = bx.center();
    let (x0, x1, y0, y1) = (bx.x.lo(), bx.x.hi(), bx.y.lo(), bx.y.hi());
    [
        PlaneBox::from_bounds(x0, xm, y0, ym),
        PlaneBox::from_bounds(xm, x1, y0, ym),
        PlaneBox::from_bounds(x0, xm, ym, y1),
        PlaneBox::from_bounds(xm, x1, ym, y1),
    ]
    .into_iter()
    .all(|b| certify_tile(b, p, depth - 1, tiles))
}

/// `[-L, L]^2` with `L = 6` for the default radius, certified by proving
/// `G > 0` on the frame `L - 1/2 <= max(|x|, |y|) <= L`. Since the domain is
/// connected and contains the origin, it cannot cross the frame.
pub fn verified_bbox(p: &GreenParams) -> Result<BboxCertificate, AreaError> {
    let inner = frame_radius(p);
    let outer = inner + 0.5;
    let strips = [
        PlaneBox::from_bounds(-outer, outer, inner, outer),
        PlaneBox::from_bounds(-outer, outer, -outer, -inner),
        PlaneBox::from_bounds(-outer, -inner, -inner, inner),
        PlaneBox::from_bounds(inner, outer, -inner, inner),
    ];
    let tile = 0.25;
    let mut tiles = 0u64;
    for s in strips {
        let nx = ((s.x.hi() - s.x.lo()) / tile).ceil() as usize;
        let ny = ((s.y.hi() - s.y.lo()) / tile).ceil() as usize;
        for a in 0..nx {
            for b in 0..ny {
                let x0 = s.x.lo() + a as f64 * tile;
                let y0 = s.y.lo() + b as f64 * tile;
                let bx = PlaneBox::from_bounds(x0, (x0 + tile).min(s.x.hi()), y0, (y0 + tile).min(s.y.hi()));
                if !certify_tile(bx, p, 8, &mut tiles) {
                    return Err(AreaError::CertificationFailed { x: x0, y: y0 });
                }
            }
        }
    }
    Ok(BboxCertificate {
        bbox: PlaneBox::from_bounds(-outer, outer, -outer, outer),
        frame_inner: inner,
        tiles_checked: tiles,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::green::{eval_g, ComplexPoint};

    fn bbox() -> PlaneBox {
        verified_bbox(&GreenParams::default()).unwrap().bbox
    }

    #[test]
    fn default_bbox_is_six() {
        let cert = verified_bbox(&GreenParams::default()).unwrap();
        assert_eq!(cert.bbox, PlaneBox::from_bounds(-6.0, 6.0, -6.0, 6.0));
        assert_eq!(cert.frame_inner, 5.5);
        let p = GreenParams::default();
        // The domain reaches past -5 on the real axis but not -6.
        assert!(eval_g(ComplexPoint::new(-5.0, 0.0), &p) < 0.0);
        assert!((eval_g(ComplexPoint::new(-5.0, 0.0), &p) + 0.0053).abs() < 1e-4);
        assert!(eval_g(ComplexPoint::new(-6.0, 0.0), &p) > 0.0);
        assert!((eval_g(ComplexPoint::new(-6.0, 0.0), &p) - 0.066).abs() < 1e-3);
    }

    #[test]
    fn other_radius_gets_a_larger_box() {
        let p = GreenParams::with_radius(0.5).unwrap();
        let cert = verified_bbox(&p).unwrap();
        assert!(cert.bbox.x.hi() > 6.0);
    }

    #[test]
    fn classify_examples() {
        let p = GreenParams::default();
        let far = PlaneBox::from_bounds(5.0, 6.0, 5.0, 6.0);
        assert_eq!(classify_cell(&far, f64::NEG_INFINITY, -0.01, &p), CellClass::Outside);
        let pole = PlaneBox::from_bounds(-0.1, 0.1, -0.1, 0.1);
        assert_eq!(classify_cell(&pole, f64::NEG_INFINITY, -0.5, &p), CellClass::Inside);
        // The critical point sits on the level t0 exactly.
        let crit = PlaneBox::from_bounds(0.99, 1.01, -0.01, 0.01);
        let t0 = p.critical_value();
        assert_eq!(classify_cell(&crit, t0 - 1e-3, t0, &p), CellClass::Boundary);
    }

    #[test]
    fn query_validation() {
        let b = bbox();
        assert!(matches!(
            AreaQuery::band(-0.1, -0.1, b).validate(),
            Err(AreaError::EmptyBand { .. })
        ));
        assert!(AreaQuery::sublevel(0.5, b).validate().is_err());
        assert!(AreaQuery::sublevel(-0.5, b).with_tol(0.0).validate().is_err());
        assert!(AreaQuery::sublevel(-0.5, b).with_max_depth(60).validate().is_err());
        assert!(AreaQuery::sublevel(-0.5, b).validate().is_ok());
    }

    #[test]
    fn bounds_are_ordered_and_tight_enough() {
        let p = GreenParams::default();
        let q = AreaQuery::sublevel(-0.5, bbox()).with_tol(1e-2);
        let a = certified_area(&q, &p).unwrap();
        assert!(a.lower <= a.upper);
        assert!(a.width() <= 1e-2);
        assert_eq!(a.termination, Termination::Tolerance);
        assert!(a.certified);
    }

    #[test]
    fn tiny_sublevel_set_near_pole() {
        let p = GreenParams::default();
        let q = AreaQuery::sublevel(-10.0, bbox()).with_tol(1e-9);
        let a = certified_area(&q, &p).unwrap();
        let t0 = p.critical_value();
        let approx = std::f64::consts::PI * (2.0 * (-10.0 - t0)).exp();
        assert!(a.lower >= 0.0);
        assert!(
            a.lower <= approx * 1.01 && a.upper >= approx * 0.99,
            "{a:?} vs {approx}"
        );
    }

    #[test]
    fn budget_exhaustion_still_bounds() {
        let p = GreenParams::default();
        let q = AreaQuery::sublevel(-0.2, bbox())
            .with_tol(1e-12)
            .with_cell_budget(20_000);
        let a = certified_area(&q, &p).unwrap();
        assert_eq!(a.termination, Termination::CellBudget);
        assert!(a.cells_classified <= 20_000);
        let loose = certified_area(&q.with_cell_budget(200_000), &p).unwrap();
        assert!(loose.lower >= a.lower && loose.upper <= a.upper);
    }

    #[test]
    fn depth_cap_stops_subdivision() {
        let p = GreenParams::default();
        let q = AreaQuery::sublevel(-0.2, bbox()).with_tol(1e-12).with_max_depth(5);
        let a = certified_area(&q, &p).unwrap();
        assert_eq!(a.termination, Termination::MaxDepth);
        assert_eq!(a.max_depth_reached, 5);
        let cell = 144.0 / 4f64.powi(5);
        assert!((a.width() - a.cells_boundary as f64 * cell).abs() < 1e-9);
    }
}
