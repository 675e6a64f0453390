use proptest::prelude::*;

use sublevel::analysis::{
    corollary_check, empirical_eps0, secant_violation_search, sector_area, sector_check, CorollaryConfig, SecantConfig,
    SectorSpec,
};
use sublevel::green::{membership, Membership};
use sublevel::{CheckStatus, GreenParams};

#[test]
fn corollary_passes_with_a_modest_budget() {
    let p = GreenParams::default();
    let cfg = CorollaryConfig {
        cell_budget: 1_000_000,
        ..Default::default()
    };
    for eps in [1e-2, 1e-3] {
        let rep = corollary_check(eps, &p, &cfg).unwrap();
        assert_eq!(rep.status, CheckStatus::Pass, "{rep:?}");
        // The band contains the sector, so its lower bound dominates the sector area.
        assert!(rep.margins["band_lower"] >= sector_area(eps));
    }
}

#[test]
fn corollary_is_inconclusive_when_starved() {
    let p = GreenParams::default();
    let cfg = CorollaryConfig {
        cell_budget: 200,
        ..Default::default()
    };
    let rep = corollary_check(1e-3, &p, &cfg).unwrap();
    assert_eq!(rep.status, CheckStatus::Inconclusive);
}

#[test]
fn corollary_rejects_large_eps() {
    let p = GreenParams::default();
    assert!(corollary_check(0.2, &p, &CorollaryConfig::default()).is_err());
}

#[test]
fn empirical_eps0_is_recorded() {
    let p = GreenParams::default();
    let eps0 = empirical_eps0(&[0.9, 0.5, 0.2, 0.1, 0.05, 1e-2], 2_000, &p).unwrap();
    assert!(eps0.is_some());
    assert!(eps0.unwrap() >= 1e-2);
}

#[test]
fn no_secant_violation_away_from_the_critical_value() {
    let p = GreenParams::default();
    let cfg = SecantConfig {
        center: Some(-0.5),
        cell_budget: 2_000_000,
        ..Default::default()
    };
    let s = secant_violation_search(&p, &[1e-2, 1e-3], 0.05, &cfg).unwrap();
    assert!(s.violations.is_empty());
    assert!(s.wall.is_some());
    assert!(s.attempts.iter().all(|a| a.plain_margin < 0.0 && a.log_margin < 0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn sector_points_lie_in_the_domain(u in 1e-9f64..1.0, v in 0.0f64..1.0, k in 0usize..3) {
        let eps = [1e-2, 1e-3, 1e-4][k];
        let spec = SectorSpec::new(eps).unwrap();
        let (lo, hi) = spec.theta_range();
        let w = spec.point(spec.r_max() * u.sqrt(), lo + (hi - lo) * v);
        let p = GreenParams::default();
        prop_assert_eq!(membership(w, &p, 0.0).unwrap(), Membership::Inside);
        let e = sublevel::green::critical_excess(w);
        prop_assert!(e < 0.0 && e > -eps);
    }
}

#[test]
fn sector_check_reports_margins() {
    let p = GreenParams::default();
    let rep = sector_check(1e-3, 10_000, &p).unwrap();
    assert_eq!(rep.status, CheckStatus::Pass);
    for key in ["worst_upper", "worst_lower_margin", "rim_worst_upper", "rim_bound"] {
        assert!(rep.margins.contains_key(key), "{key}");
    }
}
