use proptest::prelude::*;

use sublevel::area::{classify_cell, CellClass, Termination};
use sublevel::{
    certified_area, eval_g, level_measure, monte_carlo_area, verified_bbox, AreaQuery, ComplexPoint, GreenParams,
    PlaneBox, TraceOptions,
};

fn bbox() -> PlaneBox {
    verified_bbox(&GreenParams::default()).unwrap().bbox
}

#[test]
fn quadtree_contains_tracer_and_agrees_with_monte_carlo() {
    let p = GreenParams::default();
    let o = TraceOptions::default();
    for t in [-1.5, -0.4, -0.06] {
        let q = AreaQuery::sublevel(t, bbox()).with_tol(1e-2);
        let a = certified_area(&q, &p).unwrap();
        let m = level_measure(t, &p, &o).unwrap();
        assert!(a.contains(m.area), "t = {t}: {a:?} vs {}", m.area);
        let mc = monte_carlo_area(f64::NEG_INFINITY, t, 1_000_000, 5, &p).unwrap();
        assert!(mc.agrees_with(m.area, 4.0), "t = {t}: {mc:?} vs {}", m.area);
    }
}

#[test]
fn band_bounds_are_consistent_with_sublevel_bounds() {
    let p = GreenParams::default();
    let (lo, hi) = (-0.4, -0.2);
    let band = certified_area(&AreaQuery::band(lo, hi, bbox()).with_tol(1e-2), &p).unwrap();
    let a = certified_area(&AreaQuery::sublevel(lo, bbox()).with_tol(1e-2), &p).unwrap();
    let b = certified_area(&AreaQuery::sublevel(hi, bbox()).with_tol(1e-2), &p).unwrap();
    assert!(band.lower <= b.upper - a.lower);
    assert!(band.upper >= b.lower - a.upper);
}

#[test]
fn thread_count_does_not_change_bounds() {
    let p = GreenParams::default();
    let q = AreaQuery::sublevel(-0.3, bbox()).with_tol(1e-3);
    let run = |n| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .unwrap()
            .install(|| certified_area(&q, &p).unwrap())
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn termination_reasons() {
    let p = GreenParams::default();
    let tight = AreaQuery::sublevel(-0.3, bbox()).with_tol(1e-12);
    assert_eq!(
        certified_area(&tight.with_cell_budget(10_000), &p).unwrap().termination,
        Termination::CellBudget
    );
    let shallow = certified_area(&tight.with_max_depth(6), &p).unwrap();
    assert_eq!(shallow.termination, Termination::MaxDepth);
    assert_eq!(shallow.max_depth_reached, 6);
}

#[test]
fn more_budget_never_loosens_bounds() {
    let p = GreenParams::default();
    let q = AreaQuery::sublevel(-0.2, bbox()).with_tol(1e-12);
    let small = certified_area(&q.with_cell_budget(50_000), &p).unwrap();
    let large = certified_area(&q.with_cell_budget(400_000), &p).unwrap();
    assert!(large.lower >= small.lower && large.upper <= small.upper);
}

#[test]
fn asymptotic_disc_near_the_pole() {
    let p = GreenParams::default();
    let t0 = p.critical_value();
    let o = TraceOptions::default();
    for t in [-3.0, -4.0, -5.0] {
        let disc = std::f64::consts::PI * (2.0 * (t - t0)).exp();
        let q = AreaQuery::sublevel(t, bbox()).with_tol(disc * 1e-3);
        let a = certified_area(&q, &p).unwrap();
        let m = level_measure(t, &p, &o).unwrap();
        assert!(a.contains(m.area));
        let ratio = m.area / disc;
        assert!((ratio - 1.0).abs() < 0.05, "t = {t}: {ratio}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn classified_cells_agree_with_samples(
        x in -6.0f64..5.9, y in -6.0f64..5.9, h in 1e-6f64..0.1, t in -3.0f64..-0.01,
        u in 0.0f64..1.0, v in 0.0f64..1.0,
    ) {
        let p = GreenParams::default();
        let bx = PlaneBox::from_bounds(x, x + h, y, y + h);
        let g = eval_g(ComplexPoint::new(x + u * h, y + v * h), &p);
        match classify_cell(&bx, f64::NEG_INFINITY, t, &p) {
            CellClass::Inside => prop_assert!(g < t),
            CellClass::Outside => prop_assert!(g > t),
            CellClass::Boundary => {}
        }
        match classify_cell(&bx, t - 0.05, t, &p) {
            CellClass::Inside => prop_assert!(g < t && g > t - 0.05),
            CellClass::Outside => prop_assert!(g > t || g < t - 0.05),
            CellClass::Boundary => {}
        }
    }
}
