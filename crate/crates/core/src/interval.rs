//! Closed real intervals with outward rounding.
//!
//! Every arithmetic result is computed in round-to-nearest and then pushed one
//! step outward with `next_down`/`next_up`. IEEE 754 guarantees the basic
//! operations (`+ - * /` and `sqrt`) are correctly rounded, so the stepped
//! result always encloses the exact value. The logarithm is evaluated from an
//! `atanh` series built only from those operations plus an explicit
//! truncation bound, so it never relies on the accuracy of the platform libm.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

#[inline]
pub(crate) fn down(x: f64) -> f64 {
    if x.is_finite() {
        x.next_down()
    } else {
        x
    }
}

#[inline]
pub(crate) fn up(x: f64) -> f64 {
    if x.is_finite() {
        x.next_up()
    } else {
        x
    }
}

/// Product where `0 * inf` is taken as `0`, the interval convention.
#[inline]
fn mul0(a: f64, b: f64) -> f64 {
    if a == 0.0 || b == 0.0 {
        0.0
    } else {
        a * b
    }
}

/// A closed interval `[lo, hi]`, possibly with infinite endpoints.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    /// Panics if `lo > hi` or either endpoint is NaN.
    pub fn new(lo: f64, hi: f64) -> Self {
        assert!(lo <= hi, "invalid interval [{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub const fn point(x: f64) -> Self {
        Interval { lo: x, hi: x }
    }

    /// Interval enclosing a value that was rounded to nearest once.
    pub fn around(x: f64) -> Self {
        Interval { lo: down(x), hi: up(x) }
    }

    pub const ENTIRE: Interval = Interval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    #[inline]
    pub fn lo(&self) -> f64 {
        self.lo
    }

    #[inline]
    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        up(self.hi - self.lo)
    }

    pub fn mid(&self) -> f64 {
        if self.lo.is_finite() && self.hi.is_finite() {
            0.5 * self.lo + 0.5 * self.hi
        } else if self.lo.is_finite() {
            f64::INFINITY
        } else if self.hi.is_finite() {
            f64::NEG_INFINITY
        } else {
            0.0
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(0.0)
    }

    /// Intersection; `None` when disjoint.
    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    pub fn sqr(self) -> Interval {
        let (a, b) = (self.lo * self.lo, self.hi * self.hi);
        if self.lo >= 0.0 {
            Interval {
                lo: down(a).max(0.0),
                hi: up(b),
            }
        } else if self.hi <= 0.0 {
            Interval {
                lo: down(b).max(0.0),
                hi: up(a),
            }
        } else {
            Interval {
                lo: 0.0,
                hi: up(a.max(b)),
            }
        }
    }

    /// Cube (monotone).
    pub fn cube(self) -> Interval {
        let cube_down = |x: f64| {
            if x >= 0.0 {
                down(down(x * x) * x)
            } else {
                down(up(x * x) * x)
            }
        };
        let cube_up = |x: f64| {
            if x >= 0.0 {
                up(up(x * x) * x)
            } else {
                up(down(x * x) * x)
            }
        };
        Interval {
            lo: cube_down(self.lo),
            hi: cube_up(self.hi),
        }
    }

    /// Division. A divisor containing zero yields the entire line unless the
    /// dividend is non-negative and the divisor is `[0, d]` with `d > 0`.
    pub fn div(self, rhs: Interval) -> Interval {
        if rhs.lo > 0.0 || rhs.hi < 0.0 {
            let q = [self.lo / rhs.lo, self.lo / rhs.hi, self.hi / rhs.lo, self.hi / rhs.hi];
            let lo = q.iter().copied().filter(|v| !v.is_nan()).fold(f64::INFINITY, f64::min);
            let hi = q
                .iter()
                .copied()
                .filter(|v| !v.is_nan())
                .fold(f64::NEG_INFINITY, f64::max);
            Interval {
                lo: down(lo),
                hi: up(hi),
            }
        } else if self.lo >= 0.0 && rhs.lo == 0.0 && rhs.hi > 0.0 {
            Interval {
                lo: down(self.lo / rhs.hi),
                hi: f64::INFINITY,
            }
        } else {
            Interval::ENTIRE
        }
    }

    pub fn sqrt(self) -> Interval {
        let lo = if self.lo <= 0.0 {
            0.0
        } else {
            down(self.lo.sqrt()).max(0.0)
        };
        Interval {
            lo,
            hi: up(self.hi.max(0.0).sqrt()),
        }
    }

    /// Natural logarithm. Negative parts of the argument are clipped to zero,
    /// so `ln([0, x]) = [-inf, ln x]`.
    pub fn ln(self) -> Interval {
        let lo = self.lo.max(0.0);
        let hi = self.hi.max(0.0);
        if lo > 0.0 && hi.is_finite() {
            let (l_lo, l_hi) = ln_enclosure(lo);
            let rel = up((hi - lo) / lo);
            // ln(hi) <= ln(lo) + (hi - lo) / lo saves a second series.
            if rel <= 1e-3 {
                return Interval {
                    lo: l_lo,
                    hi: up(l_hi + rel),
                };
            }
            return Interval {
                lo: l_lo,
                hi: ln_upper(hi),
            };
        }
        Interval {
            lo: ln_lower(lo),
            hi: ln_upper(hi),
        }
    }

    pub fn scale(self, k: f64) -> Interval {
        self * Interval::point(k)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:e}, {:e}]", self.lo, self.hi)
    }
}

impl Add for Interval {
    type Output = Interval;

    #[inline]
    fn add(self, rhs: Interval) -> Interval {
        Interval {
            lo: down(self.lo + rhs.lo),
            hi: up(self.hi + rhs.hi),
        }
    }
}

impl Sub for Interval {
    type Output = Interval;

    #[inline]
    fn sub(self, rhs: Interval) -> Interval {
        Interval {
            lo: down(self.lo - rhs.hi),
            hi: up(self.hi - rhs.lo),
        }
    }
}

impl Neg for Interval {
    type Output = Interval;

    fn neg(self) -> Interval {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }
}

impl Mul for Interval {
    type Output = Interval;

    fn mul(self, rhs: Interval) -> Interval {
        if self.lo >= 0.0 && rhs.lo >= 0.0 {
            return Interval {
                lo: down(mul0(self.lo, rhs.lo)).max(0.0),
                hi: up(mul0(self.hi, rhs.hi)),
            };
        }
        let p = [
            mul0(self.lo, rhs.lo),
            mul0(self.lo, rhs.hi),
            mul0(self.hi, rhs.lo),
            mul0(self.hi, rhs.hi),
        ];
        let lo = p.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Interval {
            lo: down(lo),
            hi: up(hi),
        }
    }
}

/// Axis-aligned box in the plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlaneBox {
    pub x: Interval,
    pub y: Interval,
}

impl PlaneBox {
    pub fn new(x: Interval, y: Interval) -> Self {
        PlaneBox { x, y }
    }

    pub fn from_bounds(x_lo: f64, x_hi: f64, y_lo: f64, y_hi: f64) -> Self {
        PlaneBox {
            x: Interval::new(x_lo, x_hi),
            y: Interval::new(y_lo, y_hi),
        }
    }

    pub fn point(x: f64, y: f64) -> Self {
        PlaneBox {
            x: Interval::point(x),
            y: Interval::point(y),
        }
    }

    /// Nominal area (round to nearest).
    pub fn area(&self) -> f64 {
        (self.x.hi - self.x.lo) * (self.y.hi - self.y.lo)
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        self.x.contains(x) && self.y.contains(y)
    }

    pub fn center(&self) -> (f64, f64) {
        (self.x.mid(), self.y.mid())
    }

    /// Squared distance range `[min, max]` from this box to a point known
    /// only up to the enclosures `px`, `py`.
    pub fn sq_dist_range(&self, px: Interval, py: Interval) -> Interval {
        let gap = |b: Interval, p: Interval| -> (f64, f64) {
            let near = down(b.lo - p.hi).max(down(p.lo - b.hi)).max(0.0);
            let far = up(b.hi - p.lo).max(up(p.hi - b.lo));
            (near, far)
        };
        let (nx, fx) = gap(self.x, px);
        let (ny, fy) = gap(self.y, py);
        Interval {
            lo: down(down(nx * nx) + down(ny * ny)).max(0.0),
            hi: up(up(fx * fx) + up(fy * fy)),
        }
    }
}

// 1/(2k+1) rounded to nearest; each is stepped outward before use.
const ATANH_COEFFS: [f64; 12] = [
    1.0,
    1.0 / 3.0,
    1.0 / 5.0,
    1.0 / 7.0,
    1.0 / 9.0,
    1.0 / 11.0,
    1.0 / 13.0,
    1.0 / 15.0,
    1.0 / 17.0,
    1.0 / 19.0,
    1.0 / 21.0,
    1.0 / 23.0,
];

/// Split `x > 0` (finite) as `m * 2^e` with `m` in `[sqrt(1/2), sqrt(2))`.
fn split_exponent(x: f64) -> (f64, i32) {
    let (x, bias) = if x < f64::MIN_POSITIVE {
        (x * 2f64.powi(64), -64)
    } else {
        (x, 0)
    };
    let bits = x.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i32 - 1023;
    let mant = f64::from_bits((bits & 0x000f_ffff_ffff_ffff) | 0x3ff0_0000_0000_0000);
    if mant > std::f64::consts::SQRT_2 {
        (mant * 0.5, exp + 1 + bias)
    } else {
        (mant, exp + bias)
    }
}

/// Enclosure of `ln(x)` for finite `x > 0`.
fn ln_enclosure(x: f64) -> (f64, f64) {
    let (m, e) = split_exponent(x);
    // m - 1 is exact (Sterbenz); m + 1 is not.
    let num = Interval::point(m - 1.0);
    let den = Interval::around(m + 1.0);
    let s = num.div(den);
    let z = s.sqr();

    let n = ATANH_COEFFS.len();
    let mut p_lo = down(ATANH_COEFFS[n - 1]);
    let mut p_hi = up(ATANH_COEFFS[n - 1]);
    for c in ATANH_COEFFS[..n - 1].iter().rev() {
        p_lo = down(down(p_lo * z.lo) + down(*c));
        p_hi = up(up(p_hi * z.hi) + up(*c));
    }
    // Tail: sum_{k>=n} z^k/(2k+1) <= z^n / ((2n+1)(1-z)).
    let zn = (0..n).fold(1.0, |acc, _| up(acc * z.hi));
    let tail = up(zn / down(down((2 * n + 1) as f64) * down(1.0 - z.hi)));
    p_hi = up(p_hi + tail);

    let series = Interval { lo: p_lo, hi: p_hi };
    let ln_m = (s * series).scale(2.0);
    let ln2 = Interval::around(std::f64::consts::LN_2);
    let r = Interval::point(e as f64) * ln2 + ln_m;
    (r.lo, r.hi)
}

/// Rigorous lower bound of `ln(x)`; `x` must be `>= 0`.
pub fn ln_lower(x: f64) -> f64 {
    if x == 0.0 {
        f64::NEG_INFINITY
    } else if x == f64::INFINITY {
        f64::INFINITY
    } else {
        ln_enclosure(x).0
    }
}

/// Rigorous upper bound of `ln(x)`; `x` must be `>= 0`.
pub fn ln_upper(x: f64) -> f64 {
    if x == 0.0 {
        f64::NEG_INFINITY
    } else if x == f64::INFINITY {
        f64::INFINITY
    } else {
        ln_enclosure(x).1
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn ln_of_one_contains_zero() {
        let i = Interval::point(1.0).ln();
        assert!(i.contains(0.0));
        assert!(i.width() < 1e-300);
    }

    #[test]
    fn ln_matches_libm_closely() {
        for &x in &[1e-300, 1e-10, 0.1, 0.5, 0.75, 1.0 + 1e-15, 2.0, 3.0, 10.0, 1e10, 1e300] {
            let (lo, hi) = ln_enclosure(x);
            let v = x.ln();
            assert!(lo <= v && v <= hi, "{x}: [{lo}, {hi}] vs {v}");
            assert!(
                hi - lo <= 16.0 * f64::EPSILON * v.abs().max(1e-300),
                "{x}: width {}",
                hi - lo
            );
        }
    }

    #[test]
    fn ln_handles_subnormal_and_limits() {
        let x = 5e-320;
        let (lo, hi) = ln_enclosure(x);
        assert!(lo <= x.ln() && x.ln() <= hi);
        assert_eq!(ln_lower(0.0), f64::NEG_INFINITY);
        assert_eq!(ln_upper(f64::INFINITY), f64::INFINITY);
    }

    #[test]
    fn ln2_and_e_enclosures() {
        let (lo, hi) = ln_enclosure(2.0);
        assert!(lo <= std::f64::consts::LN_2 && std::f64::consts::LN_2 <= hi);
        let (lo, hi) = ln_enclosure(std::f64::consts::E);
        assert!(lo <= 1.0 && 1.0 <= hi);
    }

    #[test]
    fn division_by_interval_with_zero() {
        let a = Interval::new(1.0, 2.0);
        assert_eq!(a.div(Interval::new(-1.0, 1.0)), Interval::ENTIRE);
        let q = a.div(Interval::new(0.0, 4.0));
        assert_eq!(q.hi(), f64::INFINITY);
        assert!(q.lo() <= 0.25);
    }

    #[test]
    fn sq_dist_range_of_box_to_point() {
        let b = PlaneBox::from_bounds(1.0, 2.0, -1.0, 1.0);
        let d = b.sq_dist_range(Interval::point(0.0), Interval::point(0.0));
        assert!(d.lo() <= 1.0 && d.lo() > 0.999);
        assert!(d.hi() >= 5.0 && d.hi() < 5.001);
        let inside = b.sq_dist_range(Interval::point(1.5), Interval::point(0.0));
        assert_eq!(inside.lo(), 0.0);
    }

    fn small_interval() -> impl Strategy<Value = Interval> {
        (-1e3f64..1e3, 0f64..10.0).prop_map(|(a, w)| Interval::new(a, a + w))
    }

    proptest! {
        #[test]
        fn arithmetic_inclusion(a in small_interval(), b in small_interval(), u in 0f64..1.0, v in 0f64..1.0) {
            let x = a.lo() + u * (a.hi() - a.lo());
            let y = b.lo() + v * (b.hi() - b.lo());
            prop_assume!(a.contains(x) && b.contains(y));
            prop_assert!((a + b).contains(x + y));
            prop_assert!((a - b).contains(x - y));
            prop_assert!((a * b).contains(x * y));
            prop_assert!(a.sqr().contains(x * x));
            prop_assert!(a.cube().contains(x * x * x));
            if !b.contains_zero() {
                prop_assert!(a.div(b).contains(x / y));
            }
        }

        #[test]
        fn ln_inclusion(lo in 1e-12f64..1e6, w in 0f64..1e3, u in 0f64..1.0) {
            let i = Interval::new(lo, lo + w);
            let x = lo + u * w;
            prop_assume!(i.contains(x));
            let l = i.ln();
            prop_assert!(l.contains(x.ln()));
        }
    }
}
