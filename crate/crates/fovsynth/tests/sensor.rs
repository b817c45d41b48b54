use std::f64::consts::{FRAC_PI_2, PI};

use fovsynth::sensor::{bearing, fov_ok, segment_bearings, segment_feasible, straight_region, Extremal};
use fovsynth::synthesis::Dir;
use fovsynth::{classify, PolarPoint, SensorCase};
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

#[test]
fn figure_two_configurations() {
    assert_eq!(classify(0.0, 0.8).unwrap().case, SensorCase::Frontal);
    assert_eq!(classify(0.4, 0.8).unwrap().case, SensorCase::BorderlineFrontal);
    assert_eq!(classify(PI / 4.0, PI / 6.0).unwrap().case, SensorCase::Side);
    assert_eq!(classify((PI - 0.6) / 2.0, 0.6).unwrap().case, SensorCase::BorderlineSide);
    assert_eq!(classify(FRAC_PI_2, 0.6).unwrap().case, SensorCase::Lateral);
}

#[test]
fn degenerate_edges_are_named() {
    let bf = classify(0.4, 0.8).unwrap();
    assert_eq!(bf.e1, Extremal::HalfLine);
    let bs = classify((PI - 0.6) / 2.0, 0.6).unwrap();
    assert_eq!(bs.e2, Extremal::Circle);
    assert_eq!(bs.phi2, FRAC_PI_2);
}

#[test]
fn straight_region_far_point_sits_on_both_borders() {
    let g = classify(PI / 4.0, PI / 6.0).unwrap();
    let p = PolarPoint::new(1.0, 0.0);
    let sf = straight_region(&p, &g, Dir::Forward).unwrap();
    let far = sf.far_point.unwrap();
    assert!(sf.boundary_1.distance(&far) < 1e-14);
    assert!(sf.boundary_2.distance(&far) < 1e-14);
    // P_F = (ρ_P sin φ1 / sin φ2, φ2 − φ1)
    assert!((far.rho - (PI / 6.0).sin() / (PI / 3.0).sin()).abs() < 1e-15);
}

fn sensor() -> impl Strategy<Value = (f64, f64)> {
    (0.05f64..FRAC_PI_2, 0.0f64..1.0).prop_map(|(d, t)| (t * FRAC_PI_2, d))
}

fn point() -> impl Strategy<Value = PolarPoint> {
    (0.05f64..4.0, -PI..PI).prop_map(|(r, a)| PolarPoint::new(r, a))
}

proptest! {
    #![proptest_config(fixed(256))]

    #[test]
    fn cone_has_the_aperture((gamma, delta) in sensor()) {
        let g = classify(gamma, delta).unwrap();
        prop_assert!((g.phi2 - g.phi1 - delta).abs() < 1e-12);
        prop_assert!(fov_ok(0.5 * (g.phi1 + g.phi2), &g, 0.0));
        prop_assert!(!fov_ok(g.phi2 + 1e-6, &g, 0.0));
    }

    #[test]
    fn bearing_turns_against_heading(p in point(), theta in -PI..PI, d in -1.0f64..1.0) {
        let b0 = bearing(&p, theta).unwrap();
        let b1 = bearing(&p, theta + d).unwrap();
        let diff = (b0 - d - b1 + PI).rem_euclid(2.0 * PI) - PI;
        prop_assert!(diff.abs() < 1e-12);
    }

    /// Driving a segment backward from its far end keeps the heading of the
    /// forward run, so both see the landmark at the same bearings.
    #[test]
    fn reversed_segment_has_same_feasibility((gamma, delta) in sensor(), a in point(), b in point()) {
        let g = classify(gamma, delta).unwrap();
        prop_assert_eq!(
            segment_feasible(&a, &b, Dir::Forward, &g, 1e-12),
            segment_feasible(&b, &a, Dir::Backward, &g, 1e-12)
        );
        if let (Some(f), Some(r)) = (segment_bearings(&a, &b, Dir::Forward), segment_bearings(&b, &a, Dir::Backward)) {
            prop_assert!((f.0 - r.1).abs() < 1e-9 && (f.1 - r.0).abs() < 1e-9);
        }
    }
}
