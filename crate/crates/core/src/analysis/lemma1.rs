use std::f64::consts::PI;

use super::Report;
use crate::green::{critical_points, eval_f_derivs, eval_g, taylor_ratio, ComplexPoint, GreenParams};

/// `f'''(1)` from `D(h) = (f'(1 + h) + f'(1 - h)) / h^2 = f''' + O(h^2)`,
/// extrapolated once: `(4 D(h/2) - D(h)) / 3`.
pub fn divided_third_derivative(h: f64) -> f64 {
    let d = |h: f64| {
        let plus = eval_f_derivs(ComplexPoint::new(1.0 + h, 0.0))
            .map(|v| v.0.re)
            .unwrap_or(f64::NAN);
        let minus = eval_f_derivs(ComplexPoint::new(1.0 - h, 0.0))
            .map(|v| v.0.re)
            .unwrap_or(f64::NAN);
        (plus + minus) / (h * h)
    };
    (4.0 * d(0.5 * h) - d(h)) / 3.0
}

/// Empirical `K` with `|taylor_ratio(ρ, θ) - cos(3θ)/3| <= K ρ`, maximized
/// over a grid of angles and the given radii.
pub fn taylor_constant(rhos: &[f64], n_theta: usize, p: &GreenParams) -> f64 {
    let mut k: f64 = 0.0;
    for &rho in rhos {
        for j in 0..n_theta {
            let th = 2.0 * PI * j as f64 / n_theta as f64;
            if let Ok(ratio) = taylor_ratio(rho, th, p) {
                k = k.max((ratio - (3.0 * th).cos() / 3.0).abs() / rho);
            }
        }
    }
    k
}

/// The critical point certificates at `w = 1`.
pub fn lemma1_check(p: &GreenParams) -> Report {
    let mut rep = Report::new("lemma1");
    let one = ComplexPoint::new(1.0, 0.0);
    let t0 = p.critical_value();
    let g1 = eval_g(one, p);
    rep.margin("g1", g1);
    rep.margin("g1_minus_t0", (g1 - t0).abs());
    rep.require((g1 - t0).abs() <= 1e-12, "G(1) = (1/3) ln r");
    if *p == GreenParams::default() {
        rep.margin("g1_plus_one_ninth", (g1 + 1.0 / 9.0).abs());
        rep.require((g1 + 1.0 / 9.0).abs() <= 1e-12, "G(1) = -1/9");
    }

    let cps = critical_points(p);
    let single = cps.len() == 1 && cps[0].1 == 2 && (cps[0].0 - one).norm() <= 1e-10;
    rep.margin("n_critical_points", cps.len() as f64);
    if let Some((w, m)) = cps.first() {
        rep.margin("critical_point_distance", (w - one).norm());
        rep.margin("critical_point_multiplicity", *m as f64);
    }
    rep.require(single, "exactly one critical point, w = 1 with multiplicity 2");

    match eval_f_derivs(one) {
        Ok((f1, f2)) => {
            rep.margin("f1_residual", f1.norm());
            rep.margin("f2_residual", f2.norm());
            rep.require(f1.norm() <= 1e-12 && f2.norm() <= 1e-12, "f'(1) = f''(1) = 0");
        }
        Err(_) => rep.require(false, "f', f'' defined at 1"),
    }

    let f3 = divided_third_derivative(1e-3);
    rep.margin("f3_divided_difference", f3);
    rep.margin("f3_error", (f3 - 6.0).abs());
    rep.require((f3 - 6.0).abs() <= 1e-6, "f'''(1) = 6");

    let rhos = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3];
    let k = taylor_constant(&rhos, 360, p);
    rep.margin("taylor_k", k);
    rep.param("taylor_rho_max", rhos[0]);
    rep.param("taylor_rho_min", rhos[rhos.len() - 1]);
    rep.require(
        k.is_finite() && k < 10.0,
        "(G - G(1)) / rho^3 = cos(3 theta)/3 + O(rho)",
    );
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::CheckStatus;

    #[test]
    fn third_derivative_is_six() {
        assert!((divided_third_derivative(1e-3) - 6.0).abs() < 1e-6);
    }

    #[test]
    fn default_passes() {
        let rep = lemma1_check(&GreenParams::default());
        assert_eq!(rep.status, CheckStatus::Pass, "{rep:?}");
        assert!(rep.margins["taylor_k"] > 0.1);
    }

    #[test]
    fn other_radius_passes_without_one_ninth() {
        let p = GreenParams::with_radius(0.5).unwrap();
        let rep = lemma1_check(&p);
        assert_eq!(rep.status, CheckStatus::Pass);
        assert!(!rep.margins.contains_key("g1_plus_one_ninth"));
    }
}
