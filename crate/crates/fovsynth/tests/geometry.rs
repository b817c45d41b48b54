use std::f64::consts::{FRAC_PI_2, PI};

use fovsynth::geometry::{f_map, rotate_scale, spiral_arc_length, spiral_intersection, spiral_radius_at, Spiral};
use fovsynth::PolarPoint;
use proptest::prelude::*;
use proptest::test_runner::RngSeed;

fn fixed(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        rng_seed: RngSeed::Fixed(0x5eed),
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

fn point() -> impl Strategy<Value = PolarPoint> {
    (-2.0f64..2.0, -PI..PI).prop_map(|(l, a)| PolarPoint::new(l.exp(), a))
}

/// Bearings of genuine log spirals, clear of the line and circle limits.
fn bearing() -> impl Strategy<Value = f64> {
    (0.05f64..FRAC_PI_2 - 0.05, prop::bool::ANY).prop_map(|(b, neg)| if neg { -b } else { b })
}

proptest! {
    #![proptest_config(fixed(256))]

    #[test]
    fn f_map_sends_the_query_to_the_goal(q in point(), rho_p in 0.1f64..5.0) {
        let p = f_map(&q, rho_p, &q).unwrap();
        prop_assert!(p.distance(&PolarPoint::new(rho_p, 0.0)) < 1e-12 * rho_p);
    }

    #[test]
    fn rotation_scaling_scales_distances(a in point(), b in point(), dpsi in -PI..PI, k in 0.1f64..10.0) {
        let (ra, rb) = (rotate_scale(&a, dpsi, k), rotate_scale(&b, dpsi, k));
        prop_assert!((ra.distance(&rb) - k * a.distance(&b)).abs() < 1e-12 * k * (a.rho + b.rho));
    }

    #[test]
    fn spiral_crossing_lies_on_both(a in point(), b in point(), pa in bearing(), pb in bearing()) {
        prop_assume!((1.0 / pa.tan() - 1.0 / pb.tan()).abs() > 1e-3);
        let (sa, sb) = (Spiral::new(a, pa), Spiral::new(b, pb));
        let x = spiral_intersection(&sa, &sb).unwrap();
        // each spiral reaches ρ_x a whole number of turns from ψ_x; the
        // leftover angle times cot φ is the radial miss in ln ρ
        let on = |s: &Spiral| {
            let turns = (s.psi_at_radius(x.rho).unwrap() - x.psi) / (2.0 * PI);
            2.0 * PI * (turns - turns.round()).abs() * (1.0 / s.phi.tan()).abs()
        };
        prop_assert!(on(&sa) < 1e-9 && on(&sb) < 1e-9, "{x:?}");
    }

    /// Length along a spiral is |Δρ| / |cos φ|; check it against a fine polyline.
    #[test]
    fn spiral_length_matches_its_polyline(a in point(), phi in bearing(), turn in 0.05f64..3.0) {
        let s = Spiral::new(a, phi);
        let n = 4000;
        let pts: Vec<PolarPoint> = (0..=n)
            .map(|i| {
                let psi = a.psi + turn * i as f64 / n as f64;
                PolarPoint::new(spiral_radius_at(&s, psi).unwrap(), psi)
            })
            .collect();
        let poly: f64 = pts.windows(2).map(|w| w[0].distance(&w[1])).sum();
        let exact = spiral_arc_length(a.rho, pts[n].rho, phi);
        prop_assert!((poly - exact).abs() < 1e-6 * exact, "{poly} vs {exact}");
    }
}
