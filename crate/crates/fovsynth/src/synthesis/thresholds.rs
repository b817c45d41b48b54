//! Closed forms on the upper semicircle CS of C(P): the two-branch length of
//! the E1+*E2-S-E1- family, the thresholds ψ_R1 < ψ_R2, and points M, Z.
//!
//! α is the polar angle of the last switching point on C_2(P); the family
//! constants are t_i = cot φ_i, c = t1·t2/(t2 − t1), d = t1/(t2 − t1) and
//! K = (cos φ1 + cos φ2)/(cos φ1 · cos φ2).

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::PolarPoint;
use crate::sensor::{SensorCase, SensorGeometry};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ThresholdError {
    #[error("alpha = {alpha} outside branch domain [{lo}, {hi}]")]
    BranchDomain { alpha: f64, lo: f64, hi: f64 },
    #[error("family length needs spiral edges on both sides; got {0}")]
    Degenerate(SensorCase),
}

/// Threshold angles and special points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub psi_r1: f64,
    /// Clamped to π; `psi_r2_raw` keeps the unclamped value.
    pub psi_r2: f64,
    pub psi_r2_raw: f64,
    /// Intersection of E1 through R1 with E2 through P; absent when φ1 + φ2 = π.
    pub m: Option<PolarPoint>,
    /// Far point P_F of SF(P); absent in the Frontal case where SF(P) reaches the landmark.
    pub z: Option<PolarPoint>,
}

/// ψ_R1 for general spiral edges.
pub fn psi_r1_general(phi1: f64, phi2: f64) -> f64 {
    let (c1, c2) = (phi1.cos(), phi2.cos());
    (phi2 - phi1).sin() / (c1 * c2) * ((c1 + c2) / (phi2.sin() * (phi2 - phi1).sin())).ln()
}

/// ψ_R1 when E2 is the circle (φ2 = π/2).
pub fn psi_r1_circle(phi1: f64) -> f64 {
    (1.0 + phi1.sin()) / phi1.cos()
}

/// Phase of Z along E1 relative to P: (φ2 − φ1) + tan φ1 · ln(sin φ1 / sin φ2).
///
/// Uses |sin φ1| when φ1 < 0 and tends to φ2 as φ1 → 0.
pub fn z_phase(phi1: f64, phi2: f64) -> f64 {
    let tail = if phi1 == 0.0 {
        0.0
    } else {
        phi1.tan() * (phi1.sin().abs() / phi2.sin()).ln()
    };
    (phi2 - phi1) + tail
}

pub fn thresholds(geom: &SensorGeometry, rho_p: f64) -> Thresholds {
    let (p1, p2) = (geom.phi1, geom.phi2);
    let psi_r1 = if geom.case == SensorCase::BorderlineSide {
        psi_r1_circle(p1)
    } else {
        psi_r1_general(p1, p2)
    };
    let psi_r2_raw = psi_r1 + z_phase(p1, p2);
    let m = if geom.case == SensorCase::BorderlineSide {
        // M coincides with R1 on C(P)
        Some(PolarPoint::new(rho_p, psi_r1))
    } else {
        let denom = p1.cos() + p2.cos();
        (denom > 1e-12).then(|| {
            let rho_m = rho_p * p2.sin() * (p2 - p1).sin() / denom;
            PolarPoint::new(rho_m, p2.tan() * (rho_p / rho_m).ln())
        })
    };
    let z = (p1 >= 0.0).then(|| PolarPoint::new(rho_p * p1.sin() / p2.sin(), p2 - p1));
    Thresholds {
        psi_r1,
        psi_r2: psi_r2_raw.min(PI),
        psi_r2_raw,
        m,
        z,
    }
}

/// Constants of the family length, or an error when an edge is H or C.
fn family_constants(geom: &SensorGeometry) -> Result<(f64, f64, f64, f64, f64), ThresholdError> {
    let (p1, p2) = (geom.phi1, geom.phi2);
    if p1 == 0.0 || (p2.abs() - FRAC_PI_2).abs() < 1e-12 {
        return Err(ThresholdError::Degenerate(geom.case));
    }
    let (t1, t2) = (1.0 / p1.tan(), 1.0 / p2.tan());
    let c = t1 * t2 / (t2 - t1);
    let d = t1 / (t2 - t1);
    let k = (p1.cos() + p2.cos()) / (p1.cos() * p2.cos());
    Ok((t1, t2, c, d, k))
}

/// First branch, 0 ≤ α ≤ φ2 − φ1 (the trailing E1 arc has zero length).
pub fn family_length_near(alpha: f64, psi_q: f64, geom: &SensorGeometry, rho_p: f64) -> Result<f64, ThresholdError> {
    let (p1, p2) = (geom.phi1, geom.phi2);
    let (_, _, c, d, k) = family_constants(geom)?;
    let hi = p2 - p1;
    if !(-1e-12..=hi + 1e-12).contains(&alpha) {
        return Err(ThresholdError::BranchDomain { alpha, lo: 0.0, hi });
    }
    let s = (p2 - alpha).sin() / p2.sin();
    Ok(rho_p * (alpha.cos() / p2.cos() + 1.0 / p1.cos() - k * ((psi_q - alpha) * c).exp() * s.powf(-d)))
}

/// Second branch, α ≥ φ2 − φ1: the switch slides past Z towards the landmark
/// and the trailing E1 arc grows. The exponent runs from Z, so both branches
/// meet at α = φ2 − φ1.
pub fn family_length_far(alpha: f64, psi_q: f64, geom: &SensorGeometry, rho_p: f64) -> Result<f64, ThresholdError> {
    let (p1, p2) = (geom.phi1, geom.phi2);
    let (t1, ..) = family_constants(geom)?;
    let lo = p2 - p1;
    if alpha < lo - 1e-12 {
        return Err(ThresholdError::BranchDomain {
            alpha,
            lo,
            hi: f64::INFINITY,
        });
    }
    let at_z = family_length_near(lo, psi_q, geom, rho_p)?;
    let w = (-(alpha - lo) * t1).exp();
    Ok(2.0 * rho_p / p1.cos() * (1.0 - w) + w * at_z)
}

/// The length theorem, dispatching on the branch.
pub fn family_length(alpha: f64, psi_q: f64, geom: &SensorGeometry, rho_p: f64) -> Result<f64, ThresholdError> {
    if alpha <= geom.phi2 - geom.phi1 {
        family_length_near(alpha, psi_q, geom, rho_p)
    } else {
        family_length_far(alpha, psi_q, geom, rho_p)
    }
}

/// Interior stationary point of the first branch.
///
/// α = 0 is always stationary; the factor sin α is divided out, leaving
/// 1/cos φ2 + K·d·E(α)/(sin φ2·sin(φ2 − α)) = 0 with
/// E(α) = exp((ψ − α)c)·(sin(φ2 − α)/sin φ2)^(−d). Returns `None` when the
/// reduced condition has no root in (0, φ2 − φ1], i.e. for ψ ≤ ψ_R1.
pub fn optimal_alpha(psi_q: f64, geom: &SensorGeometry) -> Option<f64> {
    let (p1, p2) = (geom.phi1, geom.phi2);
    let (_, _, c, d, k) = family_constants(geom).ok()?;
    let g = |a: f64| {
        let s = (p2 - a).sin() / p2.sin();
        let e = ((psi_q - a) * c - d * s.ln()).exp();
        1.0 / p2.cos() + k * d * e / (p2.sin() * (p2 - a).sin())
    };
    let (mut lo, mut hi) = (0.0, p2 - p1);
    let (glo, ghi) = (g(lo), g(hi));
    if glo == 0.0 {
        return Some(0.0);
    }
    if glo * ghi > 0.0 {
        // at ψ_R2 the root sits on the branch end and rounding may hide it
        return (ghi.abs() < 1e-10 * (1.0 / p2.cos()).abs()).then_some(hi);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let gm = g(mid);
        if gm == 0.0 || hi - lo < 1e-16 {
            return Some(mid);
        }
        if (gm > 0.0) == (glo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensor::classify;

    fn side() -> SensorGeometry {
        // Γ = π/4, δ = π/6 gives φ1 = π/6, φ2 = π/3
        classify(PI / 4.0, PI / 6.0).unwrap()
    }

    #[test]
    fn psi_r1_frozen_value() {
        let g = side();
        assert!((psi_r1_general(g.phi1, g.phi2) - 1.326_628_029_556_326).abs() < 1e-12);
    }

    #[test]
    fn psi_r2_frozen_value() {
        let t = thresholds(&side(), 1.0);
        assert!((t.psi_r2 - 1.533_084_754_855_9).abs() < 1e-9);
    }

    #[test]
    fn m_radius_matches_closed_form() {
        let t = thresholds(&side(), 1.0);
        let m = t.m.unwrap();
        let expect = (PI / 3.0).sin() * (PI / 6.0).sin() / ((PI / 6.0).cos() + (PI / 3.0).cos());
        assert!((m.rho - expect).abs() < 1e-15);
        assert!((m.rho - 0.3170).abs() < 1e-4);
    }

    #[test]
    fn z_is_far_point() {
        let z = thresholds(&side(), 2.0).z.unwrap();
        assert!((z.rho - 2.0 * 0.5 / (PI / 3.0).sin()).abs() < 1e-15);
        assert!((z.psi - PI / 6.0).abs() < 1e-15);
    }

    #[test]
    fn branches_meet_at_z() {
        let g = side();
        let a = g.phi2 - g.phi1;
        for psi in [0.3, 1.0, 1.4, 2.0, 3.0] {
            let near = family_length_near(a, psi, &g, 1.0).unwrap();
            let far = family_length_far(a, psi, &g, 1.0).unwrap();
            assert!((near - far).abs() <= 1e-12 * near.abs());
        }
    }

    #[test]
    fn far_branch_tends_to_origin_passage() {
        let g = side();
        let l = family_length_far(60.0, 1.0, &g, 1.0).unwrap();
        assert!((l - 2.0 / g.phi1.cos()).abs() < 1e-9);
    }

    #[test]
    fn optimal_alpha_vanishes_below_r1() {
        let g = side();
        assert_eq!(optimal_alpha(1.0, &g), None);
        let a = optimal_alpha(1.45, &g).unwrap();
        assert!(a > 0.0 && a < g.phi2 - g.phi1);
    }

    #[test]
    fn optimal_alpha_beats_dense_grid() {
        let g = side();
        let psi = 1.45;
        let a = optimal_alpha(psi, &g).unwrap();
        let best = family_length_near(a, psi, &g, 1.0).unwrap();
        let hi = g.phi2 - g.phi1;
        let grid = (0..=100_000)
            .map(|i| family_length_near(hi * i as f64 / 1e5, psi, &g, 1.0).unwrap())
            .fold(f64::INFINITY, f64::min);
        assert!(best <= grid + 1e-12);
        assert!(grid - best < 1e-6);
    }

    #[test]
    fn r2_ties_with_origin_passage() {
        let g = side();
        let t = thresholds(&g, 1.0);
        let a = optimal_alpha(t.psi_r2, &g).unwrap();
        let l = family_length_near(a, t.psi_r2, &g, 1.0).unwrap();
        assert!((l - 2.0 / g.phi1.cos()).abs() < 1e-9);
    }

    #[test]
    fn borderline_side_r1_is_limit_of_general() {
        let p1 = 0.3;
        let lim = psi_r1_general(p1, FRAC_PI_2 - 1e-6);
        assert!((lim - psi_r1_circle(p1)).abs() < 1e-5);
    }

    #[test]
    fn degenerate_edges_are_rejected() {
        let bf = classify(0.4, 0.8).unwrap();
        assert!(family_length(0.1, 1.0, &bf, 1.0).is_err());
    }
}
