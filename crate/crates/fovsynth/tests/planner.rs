use std::f64::consts::{FRAC_PI_2, PI};

use fovsynth::synthesis::{language_graph, Cell};
use fovsynth::{PolarPoint, Synthesis, Word};
use proptest::prelude::*;
use proptest::test_runner::RngSeed;

/// Seeded so that every run draws the same cases.
fn fixed(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        rng_seed: RngSeed::Fixed(0x5eed),
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

/// `w` arises from `m` by deleting letters (arcs of zero length).
fn is_subsequence(w: &Word, m: &Word) -> bool {
    let mut it = m.0.iter();
    w.0.iter().all(|s| it.any(|x| x == s))
}

/// Any caller offset: the planner reduces it to [0, π/2] itself.
fn offset() -> impl Strategy<Value = (f64, f64)> {
    (-PI..PI, 0.05f64..FRAC_PI_2)
}

fn query() -> impl Strategy<Value = PolarPoint> {
    (-3.0f64..1.2, -PI..PI).prop_map(|(l, a)| PolarPoint::new(l.exp(), a))
}

fn length(s: &Synthesis, q: &PolarPoint) -> f64 {
    s.plan(q).unwrap().path.total_length
}

#[test]
fn goal_is_reached_by_the_empty_word() {
    let s = Synthesis::new(0.3, 0.9, 2.0).unwrap();
    let plan = s.plan(&PolarPoint::new(2.0, 0.0)).unwrap();
    assert!(plan.path.arcs.is_empty());
    assert_eq!(plan.path.total_length, 0.0);
    assert_eq!(plan.label.cell, Cell::I);
}

#[test]
fn frontal_run_along_the_axis_is_straight() {
    let s = Synthesis::new(0.0, 0.8, 1.0).unwrap();
    for r in [1.5, 2.0, 7.25] {
        let l = length(&s, &PolarPoint::new(r, 0.0));
        assert!((l - (r - 1.0)).abs() < 1e-12, "ρ = {r}: {l}");
    }
}

#[test]
fn side_word_above_the_second_threshold() {
    let s = Synthesis::new(PI / 4.0, PI / 6.0, 1.0).unwrap();
    let plan = s.plan(&PolarPoint::new(1.0, 2.0)).unwrap();
    assert_eq!(plan.path.word().to_string(), "E1+*E1-");
}

proptest! {
    #![proptest_config(fixed(192))]

    #[test]
    fn paths_join_query_to_goal((gamma, delta) in offset(), q in query(), rho_p in 0.5f64..2.0) {
        let s = Synthesis::new(gamma, delta, rho_p).unwrap();
        let q = PolarPoint::new(q.rho * rho_p, q.psi);
        let plan = s.plan(&q).unwrap();
        let tol = 1e-9 * rho_p.max(q.rho);
        if let (Some(a), Some(b)) = (plan.path.start(), plan.path.end()) {
            prop_assert!(a.distance(&q) < tol, "start {a:?} vs {q:?}");
            prop_assert!(b.distance(&s.goal()) < tol, "end {b:?}");
        } else {
            prop_assert!(q.distance(&s.goal()) < tol);
        }
        prop_assert!(plan.path.max_gap() < tol);
        let arcs: f64 = plan.path.arcs.iter().map(|a| a.length).sum();
        prop_assert!((arcs - plan.path.total_length).abs() <= 1e-12 * arcs.max(1.0));
    }

    #[test]
    fn words_belong_to_the_language((gamma, delta) in offset(), q in query()) {
        let s = Synthesis::new(gamma, delta, 1.0).unwrap();
        let plan = s.plan(&q).unwrap();
        let lang = language_graph(s.geom.case);
        let w = plan.reduced.word();
        let w = if plan.label.exterior { w.transformed() } else { w };
        let ok = lang.accepts(&w) || lang.maximal.iter().any(|m| is_subsequence(&w, m));
        prop_assert!(ok, "{} at {q:?} ({})", w, plan.label);
    }

    #[test]
    fn exterior_is_the_scaled_fold_of_the_interior((gamma, delta) in offset(), q in query()) {
        let s = Synthesis::new(gamma, delta, 1.0).unwrap();
        let folded = PolarPoint::new(1.0 / q.rho, -q.psi);
        let (l, lf) = (length(&s, &q), length(&s, &folded));
        prop_assert!((l - q.rho * lf).abs() <= 1e-9 * l.max(1.0), "{l} vs {}", q.rho * lf);
    }

    #[test]
    fn witness_bounds_the_optimum((gamma, delta) in offset(), q in query()) {
        let s = Synthesis::new(gamma, delta, 1.0).unwrap();
        let ub = s.upper_bound(&q).unwrap();
        prop_assert!(length(&s, &q) <= ub + 1e-9 * ub.max(1.0));
    }

    #[test]
    fn scaling_the_goal_scales_lengths((gamma, delta) in offset(), q in query(), k in 0.2f64..5.0) {
        let (a, b) = (Synthesis::new(gamma, delta, 1.0).unwrap(), Synthesis::new(gamma, delta, k).unwrap());
        let (l, lk) = (length(&a, &q), length(&b, &PolarPoint::new(k * q.rho, q.psi)));
        prop_assert!((lk - k * l).abs() <= 1e-9 * lk.max(1.0));
    }
}

proptest! {
    // each case plans some 70 queries
    #![proptest_config(fixed(48))]

    /// Walks a chord until the label changes, then bisects the change.
    #[test]
    fn value_is_continuous_across_borders((gamma, delta) in offset(), q in query(), dir in -PI..PI) {
        let s = Synthesis::new(gamma, delta, 1.0).unwrap();
        let h = 0.5 * q.rho.min(1.0);
        let (x, y) = q.to_xy();
        let at = |t: f64| PolarPoint::from_xy(x + t * h * dir.cos(), y + t * h * dir.sin());
        let label = |p: &PolarPoint| s.plan(p).unwrap().label;
        let la = label(&q);
        let Some(k) = (1..=24).find(|&k| label(&at(k as f64 / 24.0)) != la) else {
            return Ok(());
        };
        let (mut a, mut b) = ((k - 1) as f64 / 24.0, k as f64 / 24.0);
        let la = label(&at(a));
        for _ in 0..45 {
            let m = 0.5 * (a + b);
            if label(&at(m)) == la { a = m } else { b = m }
        }
        let (l0, l1) = (length(&s, &at(a)), length(&s, &at(b)));
        prop_assert!((l0 - l1).abs() < 1e-5, "{l0} vs {l1} at {:?}", at(a));
    }
}
