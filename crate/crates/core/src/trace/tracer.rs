use serde::{Deserialize, Serialize};

use super::{curve_scale, grad, project, residual, TraceError, TraceOptions};
use crate::green::{eval_f_derivs, ComplexPoint, GreenParams};

/// One closed curve of `{G = t}`, traversed with `{G < t}` on its left.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelSetComponent {
    /// Vertices on the curve; for a closed curve the last one repeats the first.
    pub vertices: Vec<ComplexPoint>,
    pub closed: bool,
    /// Positive for outer boundaries of `{G < t}`, negative for holes.
    pub signed_area: f64,
    pub arclength: f64,
    /// `∮ |∇G|^-1 ds`, this curve's share of `s'(t)`.
    pub co_area: f64,
    /// Smallest `|∇G|` met at vertices and quadrature nodes.
    pub min_grad: f64,
    pub area_error: f64,
    pub co_area_error: f64,
    pub closure_gap: f64,
    pub steps: usize,
}

impl LevelSetComponent {
    /// Leftmost, then lowest, vertex: the canonical sort key.
    pub fn anchor(&self) -> ComplexPoint {
        self.vertices
            .iter()
            .copied()
            .min_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)))
            .unwrap_or_default()
    }

    /// Largest `|G(v) - t|` over the vertices.
    pub fn max_residual(&self, t: f64, p: &GreenParams) -> f64 {
        let dt = t - p.critical_value();
        self.vertices.iter().map(|&v| residual(v, dt).abs()).fold(0.0, f64::max)
    }

    /// Whether `z` lies on this curve: the curve point on the normal line of
    /// the nearest chord through `z` must be within `tol` of `z`.
    pub fn passes_through(&self, z: ComplexPoint, t: f64, p: &GreenParams, tol: f64) -> bool {
        let dt = t - p.critical_value();
        self.vertices.windows(2).any(|e| {
            let Some(ch) = Chord::new(e[0], e[1]) else {
                return false;
            };
            let rel = z - ch.a;
            let x = rel.re * ch.d.re + rel.im * ch.d.im;
            let y = rel.re * ch.n.re + rel.im * ch.n.im;
            if x < -tol || x > ch.len + tol || y.abs() > ch.len + tol {
                return false;
            }
            match ch.offset(x.clamp(0.0, ch.len), y, dt, 0.0, 1e-3 * tol) {
                Some((s, _)) => (s - y).abs() <= tol,
                None => false,
            }
        })
    }
}

// Gauss-Legendre nodes and weights on [-1, 1].
const GL_X: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664,
];
const GL_W: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

/// A chord `a -> b` with unit direction `d` and left normal `n = i d`.
struct Chord {
    a: ComplexPoint,
    d: ComplexPoint,
    n: ComplexPoint,
    len: f64,
}

#[derive(Clone, Copy, Default)]
struct ChordSums {
    /// `∫ s dx`, the curve's offset to the left of the chord.
    bulge: f64,
    length: f64,
    co_area: f64,
    min_grad: f64,
}

impl Chord {
    fn new(a: ComplexPoint, b: ComplexPoint) -> Option<Chord> {
        let len = (b - a).norm();
        if !(len > 0.0) {
            return None;
        }
        let d = (b - a) / len;
        Some(Chord {
            a,
            d,
            n: ComplexPoint::new(-d.im, d.re),
            len,
        })
    }

    /// Newton solve for the offset `s` with `G(a + x d + s n) = t`, starting
    /// from `s0`; stops once `|G - t| <= tau` or the update is below
    /// `step_tol`. Returns `s` and the gradient at the solution.
    fn offset(&self, x: f64, s0: f64, dt: f64, tau: f64, step_tol: f64) -> Option<(f64, ComplexPoint)> {
        let mut s = s0;
        for _ in 0..50 {
            let w = self.a + self.d * x + self.n * s;
            let r = residual(w, dt);
            let g = grad(w).ok()?;
            let gn = g.re * self.n.re + g.im * self.n.im;
            if !r.is_finite() || gn == 0.0 {
                return None;
            }
            let ds = r / gn;
            if r.abs() <= tau || ds.abs() <= step_tol {
                return Some((s, g));
            }
            s -= ds;
            if s.abs() > self.len {
                return None;
            }
        }
        None
    }

    /// Integrals over `[x0, x1]` by five-point Gauss-Legendre.
    fn integrate(&self, x0: f64, x1: f64, dt: f64, tau: f64) -> Option<ChordSums> {
        let half = 0.5 * (x1 - x0);
        let mid = 0.5 * (x1 + x0);
        let mut out = ChordSums {
            min_grad: f64::INFINITY,
            ..Default::default()
        };
        for (xi, wi) in GL_X.iter().zip(GL_W) {
            let x = mid + half * xi;
            let noise = 64.0 * f64::EPSILON * (self.a.norm() + self.len);
            let (s, g) = self.offset(x, 0.0, dt, tau, noise)?;
            let gd = g.re * self.d.re + g.im * self.d.im;
            let gn = g.re * self.n.re + g.im * self.n.im;
            let slope = -gd / gn;
            let ds = (1.0 + slope * slope).sqrt();
            let gnorm = g.norm();
            out.bulge += wi * half * s;
            out.length += wi * half * ds;
            out.co_area += wi * half * ds / gnorm;
            out.min_grad = out.min_grad.min(gnorm);
        }
        Some(out)
    }

    /// Two-panel value together with its difference from the one-panel value.
    fn sums_with_error(&self, dt: f64, tau: f64) -> Option<(ChordSums, ChordSums)> {
        let whole = self.integrate(0.0, self.len, dt, tau)?;
        let l = self.integrate(0.0, 0.5 * self.len, dt, tau)?;
        let r = self.integrate(0.5 * self.len, self.len, dt, tau)?;
        let fine = ChordSums {
            bulge: l.bulge + r.bulge,
            length: l.length + r.length,
            co_area: l.co_area + r.co_area,
            min_grad: l.min_grad.min(r.min_grad).min(whole.min_grad),
        };
        let err = ChordSums {
            bulge: (fine.bulge - whole.bulge).abs(),
            length: (fine.length - whole.length).abs(),
            co_area: (fine.co_area - whole.co_area).abs(),
            min_grad: 0.0,
        };
        Some((fine, err))
    }
}

/// Unit tangent with `{G < t}` on the left: `∇G` turned by +90 degrees.
fn tangent(g: ComplexPoint, sign: f64) -> ComplexPoint {
    ComplexPoint::new(-g.im, g.re) * (sign / g.norm())
}

/// Gradient over Hessian scale, `|f'| / |f''|`; steps are kept well below
/// it so that the tracer slows down near the degenerate critical point.
fn gradient_scale(w: ComplexPoint) -> f64 {
    match eval_f_derivs(w) {
        Ok((f1, f2)) if f2.norm() > 0.0 => f1.norm() / f2.norm(),
        _ => f64::INFINITY,
    }
}

fn angle_between(a: ComplexPoint, b: ComplexPoint) -> f64 {
    (a.conj() * b).arg().abs()
}

/// Predictor-corrector continuation of `{G = t}` from `seed` until the curve
/// closes.
pub fn trace_component(
    seed: ComplexPoint,
    t: f64,
    p: &GreenParams,
    opts: &TraceOptions,
) -> Result<LevelSetComponent, TraceError> {
    let t0 = p.critical_value();
    let dt = t - t0;
    let tau = opts.tau_on;
    let r0 = residual(seed, dt);
    if !(r0.abs() <= tau) {
        return Err(TraceError::SeedOffCurve {
            seed,
            residual: r0.abs(),
        });
    }
    let scale = curve_scale(t, t0, opts);
    let h_min = opts.h_min * scale;
    let h_max = opts.h_max * scale;

    let g0 = grad(seed)?;
    let mut min_grad = g0.norm();
    if !(min_grad >= opts.grad_min) {
        return Err(TraceError::Stalled {
            at: seed,
            grad: min_grad,
        });
    }
    // Orientation probe along the left normal; reverse if it lands above t.
    let mut sign = 1.0;
    let nu = ComplexPoint::new(0.0, 1.0) * tangent(g0, sign);
    if residual(seed + nu * (opts.probe_h * scale), dt) >= 0.0 {
        sign = -1.0;
    }

    let tan_seed = tangent(g0, sign);
    let mut w = seed;
    let mut tan = tan_seed;
    let mut vertices = vec![seed];
    let mut h = 0.25 * h_max.min(0.5 * gradient_scale(seed));
    let mut steps = 0usize;
    let closed = loop {
        if steps >= opts.max_steps {
            return Err(TraceError::MaxStepsExceeded(opts.max_steps));
        }
        steps += 1;
        let h_try = h.min(0.5 * gradient_scale(w));
        if h_try < h_min {
            return Err(TraceError::Stalled {
                at: w,
                grad: grad(w).map(|g| g.norm()).unwrap_or(0.0),
            });
        }
        if vertices.len() > 10 {
            let back = seed - w;
            let dist = back.norm();
            if dist <= h_try
                && angle_between(tan, back / dist) <= opts.theta_max
                && angle_between(tan_seed, back / dist) <= opts.theta_max
            {
                vertices.push(seed);
                break true;
            }
        }
        let pred = w + tan * h_try;
        let accepted = project(pred, dt, tau).and_then(|c| {
            if (c - pred).norm() > 0.5 * h_try {
                return None;
            }
            let gc = grad(c).ok()?;
            let tan_c = tangent(gc, sign);
            (angle_between(tan, tan_c) <= opts.theta_max).then_some((c, gc, tan_c))
        });
        match accepted {
            Some((c, gc, tan_c)) => {
                let gn = gc.norm();
                if gn < opts.grad_min {
                    return Err(TraceError::Stalled { at: c, grad: gn });
                }
                min_grad = min_grad.min(gn);
                w = c;
                tan = tan_c;
                vertices.push(c);
                h = (1.5 * h_try).min(h_max);
            }
            None => h = 0.5 * h_try,
        }
    };

    let mut shoelace = 0.0;
    let mut bulge = 0.0;
    let mut arclength = 0.0;
    let mut co_area = 0.0;
    let mut err = ChordSums::default();
    for e in vertices.windows(2) {
        shoelace += e[0].re * e[1].im - e[1].re * e[0].im;
        let Some(ch) = Chord::new(e[0], e[1]) else {
            continue;
        };
        let (s, de) = ch.sums_with_error(dt, tau).ok_or(TraceError::Stalled {
            at: e[0],
            grad: grad(e[0]).map(|g| g.norm()).unwrap_or(0.0),
        })?;
        bulge += s.bulge;
        arclength += s.length;
        co_area += s.co_area;
        min_grad = min_grad.min(s.min_grad);
        err.bulge += de.bulge;
        err.co_area += de.co_area;
    }
    // Vertices and nodes are only known to lie within tau / |∇G| of the curve.
    let position_floor = arclength * tau / min_grad;
    let closure_gap = (vertices[vertices.len() - 1] - vertices[0]).norm();
    Ok(LevelSetComponent {
        vertices,
        closed,
        signed_area: 0.5 * shoelace - bulge,
        arclength,
        co_area,
        min_grad,
        area_error: err.bulge + position_floor,
        co_area_error: err.co_area + position_floor / min_grad,
        closure_gap,
        steps,
    })
}
