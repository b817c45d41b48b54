use std::f64::consts::PI;

use fovsynth::oracle::exclusion::representative;
use fovsynth::oracle::graph::GRAPH_SLACK;
use fovsynth::oracle::{exclusion_probe, exclusion_probe_with, family_minimize, GraphField, GraphGrid};
use fovsynth::{PolarPoint, SensorCase, Synthesis};

/// A lattice coarse enough to run in a test yet already converging.
/// Lateral optima pass close to the landmark, so the annulus reaches in further.
fn small(case: SensorCase) -> GraphGrid {
    let base = GraphGrid {
        n_rho: 40,
        n_psi: 80,
        n_theta: 48,
        rho_min: 0.01,
        rho_max: 3.0,
    };
    match case {
        SensorCase::Lateral => GraphGrid {
            rho_min: 5e-4,
            ..base.refined(2.0)
        },
        _ => base,
    }
}

/// Deterministic scatter over the annulus [0.2, 2.5] × (−π, π].
fn queries(n: usize) -> Vec<PolarPoint> {
    (0..n)
        .map(|i| {
            let u = (i as f64 + 0.5) / n as f64;
            let v = (i as f64 * 0.618_033_988_749_895).fract();
            PolarPoint::new(0.2 * (12.5f64).powf(u), PI * (2.0 * v - 1.0))
        })
        .collect()
}

fn planner(case: SensorCase) -> Synthesis {
    let g = representative(case);
    Synthesis::new(g.gamma, g.delta, 1.0).unwrap()
}

/// Mean of (lattice − optimum) / optimum at the snapped nodes.
fn mean_excess(s: &Synthesis, grid: GraphGrid, qs: &[PolarPoint]) -> f64 {
    let field = GraphField::build(&s.geom, 1.0, grid).unwrap();
    let mut total = 0.0;
    for q in qs {
        let a = field.query(q).unwrap();
        let opt = s.plan(&a.node).unwrap().path.total_length;
        assert!(a.length >= opt - GRAPH_SLACK, "lattice {} under optimum {opt} at {:?}", a.length, a.node);
        total += (a.length - opt) / opt.max(1e-3);
    }
    total / qs.len() as f64
}

#[test]
fn lattice_bounds_the_planner_and_tightens_when_refined() {
    let qs = queries(24);
    for case in [SensorCase::Frontal, SensorCase::BorderlineFrontal, SensorCase::Side, SensorCase::Lateral] {
        let s = planner(case);
        let coarse = mean_excess(&s, small(case), &qs);
        let fine = mean_excess(&s, small(case).refined(2.0), &qs);
        assert!(fine < coarse, "{case}: {coarse} -> {fine}");
    }
}

#[test]
fn family_search_agrees_with_the_planner() {
    for case in SensorCase::ALL {
        let s = planner(case);
        for q in queries(12) {
            let fam = family_minimize(&q, &s.geom, 1.0).unwrap();
            let plan = s.plan(&q).unwrap().path.total_length;
            assert!((fam.length - plan).abs() <= 1e-6 * plan.max(1.0), "{case} at {q:?}: family {} ({}) vs planner {plan}", fam.length, fam.word);
        }
    }
}

#[test]
fn family_search_at_the_goal_is_empty() {
    let s = planner(SensorCase::Side);
    let r = family_minimize(&s.goal(), &s.geom, 1.0).unwrap();
    assert!(r.word.is_empty());
    assert_eq!(r.length, 0.0);
}

#[test]
fn exclusion_probes_find_nothing_and_repeat() {
    for case in SensorCase::ALL {
        let rep = exclusion_probe(case, 150);
        assert!(rep.ok(), "{case}: {} counterexamples", rep.counterexamples());
    }
    let g = representative(SensorCase::Frontal);
    let (a, b) = (exclusion_probe_with(&g, 60, 11), exclusion_probe_with(&g, 60, 11));
    assert_eq!(format!("{a:?}"), format!("{b:?}"));
}
