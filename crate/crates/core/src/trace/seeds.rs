use super::{curve_scale, pole_radius, project, residual, TraceError, TraceOptions};
use crate::area::verified_bbox;
use crate::green::{ComplexPoint, GreenParams};

/// Below this radius the localized scan box would be subnormal.
const MIN_SCAN_RADIUS: f64 = 1e-280;

/// Points on `{G = t}` found as sign changes of `G - t` along the edges of a
/// `grid_n x grid_n` grid, bisected and then Newton-polished.
///
/// The grid covers the verified bounding box, or for `t` below
/// `opts.localize_below` the box `[-4R, 4R]^2` with `R = e^(t - t0)`.
pub fn find_seeds(t: f64, p: &GreenParams, opts: &TraceOptions) -> Result<Vec<ComplexPoint>, TraceError> {
    if !(t < 0.0) {
        return Err(TraceError::LevelNotNegative(t));
    }
    if opts.grid_n < 64 {
        return Err(TraceError::GridTooCoarse(opts.grid_n));
    }
    let t0 = p.critical_value();
    let dt = t - t0;
    let (x0, y0, side) = if t < opts.localize_below {
        let r = pole_radius(t, t0);
        if !(r >= MIN_SCAN_RADIUS) {
            return Err(TraceError::NoSeeds(t));
        }
        (-4.0 * r, -4.0 * r, 8.0 * r)
    } else {
        let b = verified_bbox(p).map_err(|_| TraceError::NoSeeds(t))?.bbox;
        (b.x.lo(), b.y.lo(), b.x.hi() - b.x.lo())
    };
    let n = opts.grid_n;
    let hstep = side / n as f64;
    let node = |i: usize, j: usize| ComplexPoint::new(x0 + i as f64 * hstep, y0 + j as f64 * hstep);
    let vals: Vec<f64> = (0..=n)
        .flat_map(|j| (0..=n).map(move |i| (i, j)))
        .map(|(i, j)| residual(node(i, j), dt))
        .collect();
    let val = |i: usize, j: usize| vals[j * (n + 1) + i];
    // A node exactly on the curve counts as below, so each crossing is seen once.
    let below = |v: f64| v <= 0.0;

    let tau = opts.tau_on;
    let scale = curve_scale(t, t0, opts);
    let mut seeds = Vec::new();
    let mut try_edge = |a: ComplexPoint, va: f64, b: ComplexPoint, vb: f64| {
        if va.is_nan() || vb.is_nan() || below(va) == below(vb) {
            return;
        }
        if va.is_infinite() || vb.is_infinite() {
            return;
        }
        let (mut lo, mut hi) = if below(va) { (a, b) } else { (b, a) };
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if (hi - lo).norm() <= 1e-3 * hstep {
                break;
            }
            let vm = residual(mid, dt);
            if below(vm) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let guess = 0.5 * (lo + hi);
        if let Some(s) = project(guess, dt, tau) {
            // Polishing must not jump to another curve.
            if (s - guess).norm() <= hstep.max(1e-3 * scale) {
                seeds.push(s);
            }
        }
    };
    for j in 0..=n {
        for i in 0..=n {
            if i < n {
                try_edge(node(i, j), val(i, j), node(i + 1, j), val(i + 1, j));
            }
            if j < n {
                try_edge(node(i, j), val(i, j), node(i, j + 1), val(i, j + 1));
            }
        }
    }
    seeds.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    seeds.dedup_by(|a, b| (*a - *b).norm() <= 1e-12 * scale);
    if seeds.is_empty() {
        return Err(TraceError::NoSeeds(t));
    }
    Ok(seeds)
}
