//! The Green function of the triply connected domain
//!
//! ```text
//! G(w) = (1/3) ln |w^3 / (3w^2 - 3w + 1)| + (1/3) ln r
//! ```
//!
//! with pole at the origin. The domain is `{G < 0}`; its complement consists
//! of an unbounded piece and two holes around the roots `1/2 ± i sqrt(3)/6` of
//! the denominator. `G` has a single critical point, `w = 1`, where it
//! vanishes to third order.
//!
//! Only moduli are ever logged, so no branch cut appears anywhere. Near
//! `w = 1` the function is evaluated through `w^3/q(w) = 1/(1 + ((1-w)/w)^3)`
//! with `ln_1p`, which keeps `G(w) - G(1)` accurate to full relative
//! precision.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::interval::{Interval, PlaneBox};

pub type ComplexPoint = Complex64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GreenError {
    #[error("radius must lie in (0, 1), got {0}")]
    InvalidRadius(f64),
    #[error("point {0} is a singularity of G")]
    Singular(ComplexPoint),
    #[error("the pole w = 0 has no image under the construction chain")]
    Pole,
    #[error("rho must lie in (0, 0.5), got {0}")]
    RhoOutOfRange(f64),
    #[error("boundary tolerance must be non-negative, got {0}")]
    NegativeTolerance(f64),
}

/// Parameters of the domain: the hole radius `r` of the construction.
///
/// The pole is fixed at the origin and the exponent at 3. The critical value
/// `t0 = (1/3) ln r` is always derived from `r`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GreenParams {
    r: f64,
    log_r: f64,
    log_r_enclosure: Interval,
    /// Enclosure of `sqrt(3)/6`, the imaginary part of the denominator roots.
    hole_im: Interval,
}

impl Default for GreenParams {
    /// `r = e^(-1/3)`, so that `ln r = -1/3` and `t0 = -1/9`.
    fn default() -> Self {
        let log_r: f64 = -1.0 / 3.0;
        GreenParams {
            r: log_r.exp(),
            log_r,
            log_r_enclosure: Interval::around(log_r),
            hole_im: hole_im_enclosure(),
        }
    }
}

fn hole_im_enclosure() -> Interval {
    Interval::around(3f64.sqrt()).div(Interval::point(6.0))
}

impl GreenParams {
    pub fn with_radius(r: f64) -> Result<Self, GreenError> {
        if !(r > 0.0 && r < 1.0) {
            return Err(GreenError::InvalidRadius(r));
        }
        Ok(GreenParams {
            r,
            log_r: r.ln(),
            log_r_enclosure: Interval::point(r).ln(),
            hole_im: hole_im_enclosure(),
        })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn pole(&self) -> ComplexPoint {
        ComplexPoint::new(0.0, 0.0)
    }

    pub fn exponent(&self) -> u32 {
        3
    }

    /// `t0 = G(1) = (1/3) ln r`.
    pub fn critical_value(&self) -> f64 {
        self.log_r / 3.0
    }

    /// Rigorous enclosure of `t0`.
    pub fn critical_value_enclosure(&self) -> Interval {
        self.log_r_enclosure.div(Interval::point(3.0))
    }
}

/// Roots of `3w^2 - 3w + 1` (centres of the two holes), rounded to nearest.
pub fn denominator_roots() -> [ComplexPoint; 2] {
    let im = 3f64.sqrt() / 6.0;
    [ComplexPoint::new(0.5, im), ComplexPoint::new(0.5, -im)]
}

#[inline]
fn denominator(w: ComplexPoint) -> ComplexPoint {
    3.0 * w * (w - 1.0) + 1.0
}

/// `G(w) - t0`, which does not depend on `r`.
///
/// Accurate to full relative precision near the critical point.
pub fn critical_excess(w: ComplexPoint) -> f64 {
    if w.re == 0.0 && w.im == 0.0 {
        return f64::NEG_INFINITY;
    }
    if (w - 1.0).norm_sqr() < 0.25 {
        let u = (1.0 - w) / w;
        let v = u * u * u;
        -(2.0 * v.re + v.norm_sqr()).ln_1p() / 6.0
    } else {
        let [a, b] = denominator_roots();
        let da = (w - a).norm();
        let db = (w - b).norm();
        if da == 0.0 || db == 0.0 {
            return f64::INFINITY;
        }
        // |q(w)| = 3 |w - a| |w - b|; factored to avoid overflow. The pair sum
        // is formed first so that conjugate points give identical results.
        w.norm().ln() - (3f64.ln() + (da.ln() + db.ln())) / 3.0
    }
}

/// Point value of `G`, with `-inf` at the pole and `+inf` at the (rounded)
/// denominator roots.
pub fn eval_g(w: ComplexPoint, p: &GreenParams) -> f64 {
    p.critical_value() + critical_excess(w)
}

/// `f'` and `f''` for the local holomorphic logarithm
/// `f(w) = log(w^3 / (3w^2 - 3w + 1))`, from the factored rational form
/// `f'(w) = 3 (w - 1)^2 / (w q(w))`, so both vanish exactly at `w = 1`.
pub fn eval_f_derivs(w: ComplexPoint) -> Result<(Complex64, Complex64), GreenError> {
    let q = denominator(w);
    if (w.re == 0.0 && w.im == 0.0) || (q.re == 0.0 && q.im == 0.0) {
        return Err(GreenError::Singular(w));
    }
    let dq = 6.0 * w - 3.0;
    let rat = 3.0 / (w * q);
    let d_rat = -rat * (1.0 / w + dq / q);
    let e = w - 1.0;
    let f1 = e * e * rat;
    let f2 = 2.0 * e * rat + e * e * d_rat;
    Ok((f1, f2))
}

/// Gradient `(dG/dx, dG/dy) = (1/3)(Re f', -Im f')`.
pub fn grad_g(w: ComplexPoint) -> Result<(f64, f64), GreenError> {
    let (f1, _) = eval_f_derivs(w)?;
    Ok((f1.re / 3.0, -f1.im / 3.0))
}

/// Finite zeros of `f'` with multiplicities.
///
/// The numerator of `f'` is `3q(w) - w q'(w)`; it is formed from the integer
/// coefficients of `q` and solved exactly as a quadratic, then roots that are
/// singular points of `G` are discarded.
pub fn critical_points(p: &GreenParams) -> Vec<(ComplexPoint, u32)> {
    // q(w) = 1 - 3w + 3w^2, lowest degree first.
    let q: [i64; 3] = [1, -3, 3];
    let dq: [i64; 2] = [q[1], 2 * q[2]];
    // 3q - w q'
    let num: [i64; 3] = [3 * q[0], 3 * q[1] - dq[0], 3 * q[2] - dq[1]];
    let (c, b, a) = (num[0], num[1], num[2]);
    let disc = b * b - 4 * a * c;
    let roots: Vec<(ComplexPoint, u32)> = if a == 0 {
        if b == 0 {
            vec![]
        } else {
            vec![(ComplexPoint::new(-(c as f64) / b as f64, 0.0), 1)]
        }
    } else if disc == 0 {
        vec![(ComplexPoint::new(-(b as f64) / (2 * a) as f64, 0.0), 2)]
    } else if disc > 0 {
        let s = (disc as f64).sqrt();
        vec![
            (ComplexPoint::new((-(b as f64) - s) / (2 * a) as f64, 0.0), 1),
            (ComplexPoint::new((-(b as f64) + s) / (2 * a) as f64, 0.0), 1),
        ]
    } else {
        let s = ((-disc) as f64).sqrt();
        let re = -(b as f64) / (2 * a) as f64;
        let im = s / (2 * a) as f64;
        vec![(ComplexPoint::new(re, -im), 1), (ComplexPoint::new(re, im), 1)]
    };
    roots
        .into_iter()
        .filter(|(w, _)| {
            let g = eval_g(*w, p);
            eval_f_derivs(*w).is_ok() && g.is_finite()
        })
        .collect()
}

/// Classification of a point against the domain with a tolerance band.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Membership {
    Inside,
    Outside,
    NearBoundary { tolerance: f64 },
}

pub fn membership(w: ComplexPoint, p: &GreenParams, tau_b: f64) -> Result<Membership, GreenError> {
    if !(tau_b >= 0.0) {
        return Err(GreenError::NegativeTolerance(tau_b));
    }
    let g = eval_g(w, p);
    Ok(if g < -tau_b {
        Membership::Inside
    } else if g > tau_b {
        Membership::Outside
    } else {
        Membership::NearBoundary { tolerance: tau_b }
    })
}

/// `eta` in the first domain: `|eta + 1| > r`.
pub fn in_omega1(eta: ComplexPoint, r: f64) -> bool {
    (eta + 1.0).norm() > r
}

/// `tau` in the second domain: `|tau^3 + 1| > r`.
pub fn in_omega2(tau: ComplexPoint, r: f64) -> bool {
    (tau.powi(3) + 1.0).norm() > r
}

/// `sigma` in the third domain: `|(sigma - 1)^3 + 1| > r`.
pub fn in_omega3(sigma: ComplexPoint, r: f64) -> bool {
    let s = sigma - 1.0;
    (s * s * s + 1.0).norm() > r
}

/// `w` in the final domain, with the denominator cleared:
/// `|(1 - w)^3 + w^3| > r |w|^3`.
pub fn in_omega4(w: ComplexPoint, r: f64) -> bool {
    let v = 1.0 - w;
    (v * v * v + w * w * w).norm() > r * w.norm().powi(3)
}

/// Membership of `w` in each of the four domains of the construction,
/// evaluated at the chained coordinates `eta = (1/w - 1)^3`,
/// `tau = 1/w - 1`, `sigma = 1/w` and `w`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainMembership {
    pub omega1: bool,
    pub omega2: bool,
    pub omega3: bool,
    pub omega4: bool,
}

impl ChainMembership {
    pub fn all_agree(&self) -> bool {
        self.omega1 == self.omega2 && self.omega2 == self.omega3 && self.omega3 == self.omega4
    }
}

pub fn construction_chain(w: ComplexPoint, p: &GreenParams) -> Result<ChainMembership, GreenError> {
    if w.re == 0.0 && w.im == 0.0 {
        return Err(GreenError::Pole);
    }
    let r = p.r();
    let sigma = w.inv();
    let tau = sigma - 1.0;
    let eta = tau * tau * tau;
    Ok(ChainMembership {
        omega1: in_omega1(eta, r),
        omega2: in_omega2(tau, r),
        omega3: in_omega3(sigma, r),
        omega4: in_omega4(w, r),
    })
}

/// `(G(1 + rho e^{i theta}) - G(1)) / rho^3`, which tends to `(1/3) cos 3 theta`.
pub fn taylor_ratio(rho: f64, theta: f64, _p: &GreenParams) -> Result<f64, GreenError> {
    if !(rho > 0.0 && rho < 0.5) {
        return Err(GreenError::RhoOutOfRange(rho));
    }
    let w = 1.0 + ComplexPoint::from_polar(rho, theta);
    let d = critical_excess(w);
    if !d.is_finite() {
        return Err(GreenError::Singular(w));
    }
    Ok(d / (rho * rho * rho))
}

/// Enclosure of `G` over a box.
///
/// Two enclosures are intersected. The first writes
/// `G = (1/6) ln(|w|^6 / (9 |w-a|^2 |w-b|^2)) + (1/3) ln r` and uses the exact
/// ranges of the three squared distances over the box. The second is the
/// mean-value form `G(c) + grad G(box) . (box - c)`, which is much tighter on
/// small boxes and is only available when the box avoids the singularities.
pub fn eval_g_interval(bx: &PlaneBox, p: &GreenParams) -> Interval {
    let direct = g_interval_direct(bx, p);
    match g_interval_mean_value(bx, p) {
        Some(mv) => direct.intersect(&mv).unwrap_or(mv),
        None => direct,
    }
}

/// Enclosure of `|w|^6 / (9 |w - a|^2 |w - conj(a)|^2) = exp(6 (G - t0))`.
pub(crate) fn excess_ratio_interval(bx: &PlaneBox, p: &GreenParams) -> Interval {
    let d0 = bx.sq_dist_range(Interval::point(0.0), Interval::point(0.0));
    let half = Interval::point(0.5);
    let da = bx.sq_dist_range(half, p.hole_im);
    let db = bx.sq_dist_range(half, -p.hole_im);
    let num = d0.cube();
    let den = Interval::point(9.0) * da * db;
    num.div(den)
}

pub(crate) fn g_interval_direct(bx: &PlaneBox, p: &GreenParams) -> Interval {
    let sixth = Interval::around(1.0 / 6.0);
    excess_ratio_interval(bx, p).ln() * sixth + p.critical_value_enclosure()
}

/// Returns `None` when the box touches a singularity.
pub(crate) fn g_interval_mean_value(bx: &PlaneBox, p: &GreenParams) -> Option<Interval> {
    let half = Interval::point(0.5);
    let zero = Interval::point(0.0);
    let charges = [
        (zero, zero, 1.0),
        (half, p.hole_im, -1.0 / 3.0),
        (half, -p.hole_im, -1.0 / 3.0),
    ];
    let mut gx = Interval::point(0.0);
    let mut gy = Interval::point(0.0);
    for (cx, cy, weight) in charges {
        let dx = bx.x - cx;
        let dy = bx.y - cy;
        let d2 = dx.sqr() + dy.sqr();
        if d2.lo() <= 0.0 {
            return None;
        }
        let w = if weight == 1.0 {
            Interval::point(1.0)
        } else {
            Interval::around(weight)
        };
        gx = gx + w * dx.div(d2);
        gy = gy + w * dy.div(d2);
    }
    let (cx, cy) = bx.center();
    let center = g_interval_direct(&PlaneBox::point(cx, cy), p);
    let ox = bx.x - Interval::point(cx);
    let oy = bx.y - Interval::point(cy);
    Some(center + gx * ox + gy * oy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> ComplexPoint {
        ComplexPoint::new(re, im)
    }

    #[test]
    fn value_at_critical_point() {
        let p = GreenParams::default();
        assert_abs_diff_eq!(eval_g(c(1.0, 0.0), &p), -1.0 / 9.0, epsilon = 1e-15);
    }

    #[test]
    fn value_at_half() {
        let p = GreenParams::default();
        // h(0.5) = 0.125 / 0.25
        let expected = (0.5f64).ln() / 3.0 - 1.0 / 9.0;
        assert_abs_diff_eq!(eval_g(c(0.5, 0.0), &p), expected, epsilon = 1e-14);
        assert_abs_diff_eq!(eval_g(c(0.5, 0.0), &p), -0.3421601713, epsilon = 1e-9);
    }

    #[test]
    fn singularities() {
        let p = GreenParams::default();
        assert_eq!(eval_g(c(0.0, 0.0), &p), f64::NEG_INFINITY);
        let im = 3f64.sqrt() / 6.0;
        assert_eq!(eval_g(c(0.5, im), &p), f64::INFINITY);
        assert_eq!(eval_g(c(0.5, -im), &p), f64::INFINITY);
    }

    #[test]
    fn denominator_root_is_exact_root_of_quadratic() {
        // 3w^2 - 3w + 1 at w = 1/2 + i s with s^2 = 1/12:
        // 3(1/4 - s^2) - 3/2 + 1 = 0 and imaginary part 3 s - 3 s = 0.
        let s2 = 1.0 / 12.0;
        let re = 3.0 * (0.25 - s2) - 1.5 + 1.0;
        assert_abs_diff_eq!(re, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn derivatives_at_two_and_i() {
        let (f1, _) = eval_f_derivs(c(2.0, 0.0)).unwrap();
        assert_abs_diff_eq!(f1.re, 3.0 / 14.0, epsilon = 1e-15);
        assert_abs_diff_eq!(f1.im, 0.0, epsilon = 1e-15);

        // 3/i - (6i - 3)/(-2 - 3i) = -3i - (6i - 3)(-2 + 3i)/13 = -3i - (-12 - 21i)/13
        // = 12/13 - 18/13 i
        let (f1, _) = eval_f_derivs(c(0.0, 1.0)).unwrap();
        assert_abs_diff_eq!(f1.re, 12.0 / 13.0, epsilon = 1e-15);
        assert_abs_diff_eq!(f1.im, -18.0 / 13.0, epsilon = 1e-15);
    }

    #[test]
    fn derivatives_vanish_at_one() {
        let (f1, f2) = eval_f_derivs(c(1.0, 0.0)).unwrap();
        assert_eq!(f1, c(0.0, 0.0));
        assert_eq!(f2, c(0.0, 0.0));
        assert_eq!(grad_g(c(1.0, 0.0)).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn derivatives_are_singular_at_pole_and_roots() {
        assert!(eval_f_derivs(c(0.0, 0.0)).is_err());
        // q(w) exactly zero is not reachable in binary64, but w = 0 is.
        assert!(matches!(eval_f_derivs(c(0.0, 0.0)), Err(GreenError::Singular(_))));
    }

    #[test]
    fn second_derivative_matches_difference_quotient() {
        let w = c(0.3, 0.7);
        let h = 1e-6;
        let (_, f2) = eval_f_derivs(w).unwrap();
        let fp = eval_f_derivs(w + h).unwrap().0;
        let fm = eval_f_derivs(w - h).unwrap().0;
        let fd = (fp - fm) / (2.0 * h);
        assert!((fd - f2).norm() < 1e-7);
    }

    #[test]
    fn single_double_critical_point() {
        for p in [GreenParams::default(), GreenParams::with_radius(0.5).unwrap()] {
            let cps = critical_points(&p);
            assert_eq!(cps.len(), 1);
            let (w, m) = cps[0];
            assert_eq!(m, 2);
            assert!((w - 1.0).norm() <= 1e-10);
            assert!(eval_f_derivs(w).unwrap().0.norm() <= 1e-10);
            assert!(eval_g(w, &p) < 0.0);
        }
        let p = GreenParams::with_radius(0.5).unwrap();
        assert_abs_diff_eq!(p.critical_value(), 0.5f64.ln() / 3.0, epsilon = 1e-16);
    }

    #[test]
    fn radius_validation() {
        assert!(GreenParams::with_radius(0.0).is_err());
        assert!(GreenParams::with_radius(1.0).is_err());
        assert!(GreenParams::with_radius(f64::NAN).is_err());
    }

    #[test]
    fn membership_examples() {
        let p = GreenParams::default();
        assert_eq!(membership(c(1.0, 0.0), &p, 1e-9).unwrap(), Membership::Inside);
        let im = 3f64.sqrt() / 6.0;
        assert_eq!(membership(c(0.5, -im), &p, 1e-9).unwrap(), Membership::Outside);
        assert_eq!(membership(c(3.0, 0.0), &p, 1e-9).unwrap(), Membership::Outside);
        assert_eq!(membership(c(2.9, 0.0), &p, 1e-9).unwrap(), Membership::Inside);
        assert!(matches!(
            membership(c(3.0, 0.0), &p, 1.0).unwrap(),
            Membership::NearBoundary { .. }
        ));
        assert!(membership(c(3.0, 0.0), &p, -1.0).is_err());
    }

    #[test]
    fn values_on_real_axis() {
        let p = GreenParams::default();
        // Independent evaluation of the closed form.
        let g = |x: f64| (x.powi(3) / (3.0 * x * x - 3.0 * x + 1.0)).abs().ln() / 3.0 - 1.0 / 9.0;
        for x in [3.0, 2.9, -5.0, -6.0, 0.25, 1.7] {
            assert_abs_diff_eq!(eval_g(c(x, 0.0), &p), g(x), epsilon = 1e-14);
        }
        assert!((eval_g(c(3.0, 0.0), &p) - 0.0061).abs() < 1e-4);
        assert!((eval_g(c(2.9, 0.0), &p) + 0.0010).abs() < 1e-4);
    }

    #[test]
    fn chain_base_points() {
        let r = (-1.0f64 / 3.0).exp();
        assert!(in_omega1(c(0.0, 0.0), r));
        assert!(in_omega3(c(1.0, 0.0), r));
        let p = GreenParams::default();
        let ch = construction_chain(c(2.0, 0.0), &p).unwrap();
        assert!(ch.all_agree());
        assert!(ch.omega4);
        assert_eq!(construction_chain(c(0.0, 0.0), &p), Err(GreenError::Pole));
    }

    #[test]
    fn taylor_ratio_examples() {
        let p = GreenParams::default();
        use std::f64::consts::PI;
        assert_abs_diff_eq!(taylor_ratio(1e-4, 0.0, &p).unwrap(), 1.0 / 3.0, epsilon = 1e-3);
        assert_abs_diff_eq!(taylor_ratio(1e-4, PI / 3.0, &p).unwrap(), -1.0 / 3.0, epsilon = 1e-3);
        assert_abs_diff_eq!(taylor_ratio(1e-4, PI / 6.0, &p).unwrap(), 0.0, epsilon = 1e-3);
        assert!(taylor_ratio(0.5, 0.0, &p).is_err());
        assert!(taylor_ratio(0.0, 0.0, &p).is_err());
    }

    #[test]
    fn interval_of_degenerate_box() {
        let p = GreenParams::default();
        let i = eval_g_interval(&PlaneBox::point(0.5, 0.0), &p);
        assert!(i.contains(eval_g(c(0.5, 0.0), &p)));
        assert!(i.width() <= 1e-12);
    }

    #[test]
    fn interval_of_pole_box() {
        let p = GreenParams::default();
        let i = eval_g_interval(&PlaneBox::from_bounds(-0.1, 0.1, -0.1, 0.1), &p);
        assert_eq!(i.lo(), f64::NEG_INFINITY);
        assert!(i.hi() < -0.5);
        // Sampling oracle: sup over the box lies below the enclosure's upper end.
        let mut sup = f64::NEG_INFINITY;
        for k in 0..=200 {
            let s = -0.1 + 0.2 * k as f64 / 200.0;
            for w in [c(s, 0.1), c(s, -0.1), c(0.1, s), c(-0.1, s)] {
                sup = sup.max(eval_g(w, &p));
            }
        }
        assert!(sup <= i.hi());
    }

    #[test]
    fn interval_of_far_box() {
        let p = GreenParams::default();
        let i = eval_g_interval(&PlaneBox::from_bounds(5.0, 6.0, 5.0, 6.0), &p);
        assert!(i.lo() > 0.0);
        let mut inf = f64::INFINITY;
        for a in 0..=50 {
            for b in 0..=50 {
                inf = inf.min(eval_g(c(5.0 + a as f64 / 50.0, 5.0 + b as f64 / 50.0), &p));
            }
        }
        assert!(inf >= i.lo());
    }
}
