use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{AnalysisError, CheckStatus, Report};
use crate::green::{critical_excess, membership, ComplexPoint, GreenParams, Membership};

/// The sector `{1 + r e^{iθ} : 0 < r < ε^{1/3}/2, 11π/12 < θ < 13π/12}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectorSpec {
    pub eps: f64,
}

impl SectorSpec {
    pub fn new(eps: f64) -> Result<SectorSpec, AnalysisError> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(AnalysisError::Precondition(format!(
                "eps must lie in (0, 1), got {eps}"
            )));
        }
        Ok(SectorSpec { eps })
    }

    pub fn center(&self) -> ComplexPoint {
        ComplexPoint::new(1.0, 0.0)
    }

    pub fn r_max(&self) -> f64 {
        0.5 * self.eps.cbrt()
    }

    pub fn theta_range(&self) -> (f64, f64) {
        (11.0 * PI / 12.0, 13.0 * PI / 12.0)
    }

    pub fn area(&self) -> f64 {
        sector_area(self.eps)
    }

    pub fn point(&self, r: f64, theta: f64) -> ComplexPoint {
        self.center() + ComplexPoint::from_polar(r, theta)
    }
}

/// `π (ε^{1/3}/2)^2 / 12 = π ε^{2/3} / 48`.
pub fn sector_area(eps: f64) -> f64 {
    let r = 0.5 * eps.cbrt();
    PI * r * r / 12.0
}

/// Samples of the open sector: a midpoint grid that is uniform in `r^2` and
/// `θ`, plus points pushed towards the rim and the two edges.
fn sector_samples(spec: &SectorSpec, n: usize) -> Vec<(f64, f64)> {
    let n_theta = ((n as f64).sqrt().ceil() as usize).max(1);
    let n_r = n.div_ceil(n_theta).max(1);
    let r_max = spec.r_max();
    let (th_lo, th_hi) = spec.theta_range();
    let mut out = Vec::with_capacity(n_r * n_theta + 5);
    for i in 0..n_r {
        let r = r_max * ((i as f64 + 0.5) / n_r as f64).sqrt();
        for j in 0..n_theta {
            let th = th_lo + (th_hi - th_lo) * (j as f64 + 0.5) / n_theta as f64;
            out.push((r, th));
        }
    }
    let rim = r_max * (1.0 - 1e-12);
    let edge = 1e-12;
    out.extend([
        (rim, th_lo + edge),
        (rim, th_hi - edge),
        (rim, PI),
        (r_max * 1e-6, th_lo + edge),
        (r_max * 1e-6, th_hi - edge),
    ]);
    out
}

/// Checks `S_ε ⊂ {w ∈ Ω : -ε < G(w) - G(1) < 0}` on `n` stratified samples.
pub fn sector_check(eps: f64, n: usize, p: &GreenParams) -> Result<Report, AnalysisError> {
    let spec = SectorSpec::new(eps)?;
    if n == 0 {
        return Err(AnalysisError::Precondition("need at least one sample".into()));
    }
    let samples = sector_samples(&spec, n);
    let mut worst_upper = f64::NEG_INFINITY;
    let mut worst_lower = f64::INFINITY;
    let mut outside = 0usize;
    let mut bad = 0usize;
    for &(r, th) in &samples {
        let w = spec.point(r, th);
        let e = critical_excess(w);
        worst_upper = worst_upper.max(e);
        worst_lower = worst_lower.min(e + eps);
        if !(e < 0.0 && e > -eps) {
            bad += 1;
        }
        if !matches!(membership(w, p, 0.0), Ok(Membership::Inside)) {
            outside += 1;
        }
    }
    // On the rim the cubic term alone gives at most -sqrt(2) ε / 48.
    let n_rim = 2001;
    let (th_lo, th_hi) = spec.theta_range();
    let rim_upper = (0..n_rim)
        .map(|j| {
            let th = th_lo + (th_hi - th_lo) * j as f64 / (n_rim - 1) as f64;
            critical_excess(spec.point(spec.r_max(), th))
        })
        .fold(f64::NEG_INFINITY, f64::max);

    let mut rep = Report::new("lemma2");
    rep.param("eps", eps);
    rep.param("n_samples", samples.len() as f64);
    rep.param("r_max", spec.r_max());
    rep.margin("worst_upper", worst_upper);
    rep.margin("worst_lower_margin", worst_lower);
    rep.margin("rim_worst_upper", rim_upper);
    rep.margin("rim_bound", -2f64.sqrt() * eps / 48.0);
    rep.margin("violations", bad as f64);
    rep.margin("outside_omega", outside as f64);
    rep.require(bad == 0, "-eps < G - G(1) < 0 at every sample");
    rep.require(outside == 0, "every sample inside the domain");
    Ok(rep)
}

/// Largest `ε` in the descending list for which [`sector_check`] passes.
pub fn empirical_eps0(candidates: &[f64], n: usize, p: &GreenParams) -> Result<Option<f64>, AnalysisError> {
    for &eps in candidates {
        if sector_check(eps, n, p)?.status == CheckStatus::Pass {
            return Ok(Some(eps));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn area_examples() {
        assert!((sector_area(1e-3) - PI / 4800.0).abs() < 1e-18);
        assert!((sector_area(1.0) - PI / 48.0).abs() < 1e-16);
        assert!(sector_area(1e-30) < 1e-20);
    }

    #[test]
    fn midpoint_sample_sign() {
        let spec = SectorSpec::new(1e-3).unwrap();
        let r = spec.r_max() / 2.0;
        let e = critical_excess(spec.point(r, PI));
        let cubic = (3.0 * PI).cos() * r.powi(3) / 3.0;
        assert!(e < 0.0);
        assert!((e - cubic).abs() < 2.0 * r.powi(4));
    }

    #[test]
    fn small_sectors_pass() {
        let p = GreenParams::default();
        for eps in [1e-2, 1e-3, 1e-4] {
            let rep = sector_check(eps, 10_000, &p).unwrap();
            assert_eq!(rep.status, CheckStatus::Pass, "{rep:?}");
            assert!(rep.margins["worst_upper"] < 0.0);
            assert!(rep.margins["worst_lower_margin"] > 0.0);
        }
    }

    #[test]
    fn rim_matches_cubic_bound() {
        let p = GreenParams::default();
        let eps = 1e-4;
        let rep = sector_check(eps, 1_000, &p).unwrap();
        let bound = -2f64.sqrt() * eps / 48.0;
        let rim = rep.margins["rim_worst_upper"];
        // Fourth-order terms shift the rim value by O(ε^{4/3}).
        assert!((rim - bound).abs() <= 0.1 * bound.abs(), "{rim} vs {bound}");
    }

    #[test]
    fn rejects_bad_eps() {
        let p = GreenParams::default();
        assert!(sector_check(0.0, 10, &p).is_err());
        assert!(sector_check(2.0, 10, &p).is_err());
    }
}
