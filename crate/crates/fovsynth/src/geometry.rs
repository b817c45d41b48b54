//! Polar primitives around the landmark: logarithmic spirals, their arc
//! lengths and intersections, and the rotation-scaling maps f_Q / F_Q.
//!
//! Angles ψ stay unwrapped. A spiral with characteristic angle φ obeys
//! ρ(ψ) = ρ₀·exp(−(ψ − ψ₀)/tan φ).

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::synthesis::{Arc, Path};

/// |φ| below this is the half-line H; |π/2 − |φ|| below it is the circle C.
pub const DEGENERATE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("degenerate spiral with characteristic angle {0}")]
    DegenerateSpiral(f64),
    #[error("curves do not intersect")]
    NoIntersection,
    #[error("point coincides with the landmark")]
    AtOrigin,
}

/// Position relative to the landmark.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolarPoint {
    pub rho: f64,
    pub psi: f64,
}

impl PolarPoint {
    pub const fn new(rho: f64, psi: f64) -> PolarPoint {
        PolarPoint { rho, psi }
    }

    pub const fn origin() -> PolarPoint {
        PolarPoint { rho: 0.0, psi: 0.0 }
    }

    pub fn is_origin(&self) -> bool {
        self.rho == 0.0
    }

    pub fn from_xy(x: f64, y: f64) -> PolarPoint {
        PolarPoint::new(x.hypot(y), y.atan2(x))
    }

    pub fn to_xy(&self) -> (f64, f64) {
        (self.rho * self.psi.cos(), self.rho * self.psi.sin())
    }

    pub fn distance(&self, other: &PolarPoint) -> f64 {
        let (ax, ay) = self.to_xy();
        let (bx, by) = other.to_xy();
        (ax - bx).hypot(ay - by)
    }

    /// ψ reduced to (−π, π].
    pub fn wrapped_psi(&self) -> f64 {
        wrap_angle(self.psi)
    }

    pub fn mirrored(&self) -> PolarPoint {
        PolarPoint::new(self.rho, -self.psi)
    }
}

/// Reduces an angle to (−π, π].
pub fn wrap_angle(a: f64) -> f64 {
    let r = a.rem_euclid(TAU);
    if r > PI {
        r - TAU
    } else {
        r
    }
}

/// Shape of a spiral once its degenerations are resolved.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SpiralShape {
    /// φ = 0: the half-line from the landmark through the anchor.
    HalfLine,
    /// |φ| = π/2: the circle through the anchor.
    Circle,
    /// General case; `t = cot φ` is the log-radius decay per radian.
    Log { t: f64 },
}

/// Logarithmic spiral through `anchor` holding bearing `phi`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spiral {
    pub anchor: PolarPoint,
    pub phi: f64,
}

impl Spiral {
    pub fn new(anchor: PolarPoint, phi: f64) -> Spiral {
        Spiral { anchor, phi }
    }

    pub fn shape(&self) -> SpiralShape {
        shape_of(self.phi)
    }

    /// Inverse of the radius law: the ψ nearest the anchor at which the spiral has radius `rho`.
    pub fn psi_at_radius(&self, rho: f64) -> Result<f64, GeometryError> {
        match self.shape() {
            SpiralShape::Log { t } => Ok(self.anchor.psi + (self.anchor.rho / rho).ln() / t),
            _ => Err(GeometryError::DegenerateSpiral(self.phi)),
        }
    }
}

pub fn shape_of(phi: f64) -> SpiralShape {
    if phi.abs() < DEGENERATE_EPS {
        SpiralShape::HalfLine
    } else if (FRAC_PI_2 - phi.abs()).abs() < DEGENERATE_EPS {
        SpiralShape::Circle
    } else {
        SpiralShape::Log { t: 1.0 / phi.tan() }
    }
}

/// Radius of a general spiral at polar angle `psi`.
pub fn spiral_radius_at(s: &Spiral, psi: f64) -> Result<f64, GeometryError> {
    match s.shape() {
        SpiralShape::Log { t } => Ok(s.anchor.rho * (-(psi - s.anchor.psi) * t).exp()),
        _ => Err(GeometryError::DegenerateSpiral(s.phi)),
    }
}

/// Length of a non-circular spiral arc between two radii: |Δρ| / |cos φ|.
pub fn spiral_arc_length(rho_from: f64, rho_to: f64, phi: f64) -> f64 {
    (rho_from - rho_to).abs() / phi.cos().abs()
}

/// Intersection of two spirals nearest in ψ to the first anchor.
pub fn spiral_intersection(a: &Spiral, b: &Spiral) -> Result<PolarPoint, GeometryError> {
    use SpiralShape::*;
    let (pa, pb) = (a.anchor, b.anchor);
    let nearest = |base: f64, step: f64, target: f64| {
        let k = ((target - base) / step).round();
        base + k * step
    };
    match (a.shape(), b.shape()) {
        (Log { t: ta }, Log { t: tb }) => {
            if (ta - tb).abs() < 1e-15 {
                return Err(GeometryError::NoIntersection);
            }
            // ln ρ_a − (ψ−ψ_a)t_a = ln ρ_b − (ψ−ψ_b−2πk)t_b
            let psi0 = ((pb.rho.ln() - pa.rho.ln()) + pb.psi * tb - pa.psi * ta) / (tb - ta);
            let step = TAU * tb / (tb - ta);
            let psi = nearest(psi0, step, pa.psi);
            Ok(PolarPoint::new(spiral_radius_at(a, psi)?, psi))
        }
        (Log { t }, Circle) => {
            let psi = pa.psi + (pa.rho / pb.rho).ln() / t;
            Ok(PolarPoint::new(pb.rho, psi))
        }
        (Circle, Log { t }) => {
            let psi_b = pb.psi + (pb.rho / pa.rho).ln() / t;
            Ok(PolarPoint::new(pa.rho, nearest(psi_b, TAU, pa.psi)))
        }
        (Log { .. }, HalfLine) => {
            let psi = nearest(pb.psi, TAU, pa.psi);
            Ok(PolarPoint::new(spiral_radius_at(a, psi)?, psi))
        }
        (HalfLine, Log { t }) => {
            // the turn of b nearest its own anchor crosses the ray
            let psi_b = nearest(pa.psi, TAU, pb.psi);
            let rho = pb.rho * (-(psi_b - pb.psi) * t).exp();
            Ok(PolarPoint::new(rho, pa.psi))
        }
        (Circle, HalfLine) => Ok(PolarPoint::new(pa.rho, nearest(pb.psi, TAU, pa.psi))),
        (HalfLine, Circle) => Ok(PolarPoint::new(pb.rho, pa.psi)),
        _ => Err(GeometryError::NoIntersection),
    }
}

/// f_Q: rotation by −ψ_Q and scaling by ρ_P/ρ_Q, sending Q to P = (ρ_P, 0).
pub fn f_map(q: &PolarPoint, rho_p: f64, g: &PolarPoint) -> Result<PolarPoint, GeometryError> {
    if q.rho <= 0.0 {
        return Err(GeometryError::AtOrigin);
    }
    if g.is_origin() {
        return Ok(PolarPoint::origin());
    }
    Ok(PolarPoint::new(g.rho * rho_p / q.rho, g.psi - q.psi))
}

/// Scales radius by `k` and rotates by `dpsi`.
pub fn rotate_scale(p: &PolarPoint, dpsi: f64, k: f64) -> PolarPoint {
    if p.is_origin() {
        return *p;
    }
    PolarPoint::new(k * p.rho, p.psi + dpsi)
}

/// F_Q: maps a path from Q to P onto the path t ↦ f_Q(γ(1−t)),
/// which runs from f_Q(P) to P with every direction flipped.
pub fn transform_path(gamma: &Path, q: &PolarPoint, rho_p: f64) -> Result<Path, GeometryError> {
    let k = rho_p / q.rho;
    let mut arcs = Vec::with_capacity(gamma.arcs.len());
    for a in gamma.arcs.iter().rev() {
        arcs.push(Arc {
            symbol: a.symbol.flipped(),
            start: f_map(q, rho_p, &a.end)?,
            end: f_map(q, rho_p, &a.start)?,
            length: a.length * k,
            phi: a.phi,
        });
    }
    Ok(Path::new(arcs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn radius_law_hits_anchor() {
        let s = Spiral::new(PolarPoint::new(1.7, 0.4), 0.6);
        assert_eq!(spiral_radius_at(&s, 0.4).unwrap(), 1.7);
    }

    #[test]
    fn radius_law_at_derived_point() {
        // dρ/dψ = −ρ cot φ integrated from (2, 0) at φ = π/4 reaches ρ = 1 at ψ = ln 2
        let s = Spiral::new(PolarPoint::new(2.0, 0.0), FRAC_PI_4);
        let r = spiral_radius_at(&s, 2f64.ln()).unwrap();
        assert!((r - 1.0).abs() < 1e-14);
    }

    #[test]
    fn radius_law_matches_switch_point_m() {
        let (p1, p2) = (PI / 6.0, PI / 3.0);
        let rho_m = p2.sin() * (p2 - p1).sin() / (p1.cos() + p2.cos());
        let psi_m = p2.tan() * (1.0 / rho_m).ln();
        let s = Spiral::new(PolarPoint::new(1.0, 0.0), p2);
        assert!((spiral_radius_at(&s, psi_m).unwrap() - rho_m).abs() < 1e-14);
    }

    #[test]
    fn degenerate_spirals_are_rejected() {
        let h = Spiral::new(PolarPoint::new(1.0, 0.0), 0.0);
        let c = Spiral::new(PolarPoint::new(1.0, 0.0), FRAC_PI_2);
        assert!(spiral_radius_at(&h, 1.0).is_err());
        assert!(spiral_radius_at(&c, 1.0).is_err());
    }

    #[test]
    fn arc_length_examples() {
        assert_eq!(spiral_arc_length(1.3, 1.3, 0.4), 0.0);
        assert!((spiral_arc_length(2.0, 1.0, PI / 3.0) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn arc_length_matches_quadrature() {
        // ds = sqrt(dρ² + ρ² dψ²) along ρ = 2·exp(−ψ cot φ)
        let phi = PI / 3.0;
        let s = Spiral::new(PolarPoint::new(2.0, 0.0), phi);
        let psi_end = s.psi_at_radius(1.0).unwrap();
        let n = 200_000;
        let mut acc = 0.0;
        let mut prev = PolarPoint::new(2.0, 0.0);
        for i in 1..=n {
            let psi = psi_end * i as f64 / n as f64;
            let p = PolarPoint::new(spiral_radius_at(&s, psi).unwrap(), psi);
            acc += prev.distance(&p);
            prev = p;
        }
        assert!((acc - 2.0).abs() < 1e-8);
    }

    #[test]
    fn intersection_of_opposite_spirals() {
        let a = Spiral::new(PolarPoint::new(2.0, 0.0), FRAC_PI_4);
        let b = Spiral::new(PolarPoint::new(1.0, 0.0), -FRAC_PI_4);
        let x = spiral_intersection(&a, &b).unwrap();
        assert!((x.rho - 2f64.sqrt()).abs() < 1e-14);
        assert!((x.psi - 2f64.sqrt().ln()).abs() < 1e-14);
    }

    #[test]
    fn intersection_at_shared_anchor() {
        let p = PolarPoint::new(1.0, 0.0);
        let x = spiral_intersection(&Spiral::new(p, 0.3), &Spiral::new(p, 0.9)).unwrap();
        assert!((x.rho - 1.0).abs() < 1e-15 && x.psi.abs() < 1e-15);
    }

    #[test]
    fn spiral_meets_circle_on_the_circle() {
        let q = PolarPoint::new(2.5, 0.7);
        let x = spiral_intersection(
            &Spiral::new(q, 0.4),
            &Spiral::new(PolarPoint::new(1.0, 0.0), FRAC_PI_2),
        )
        .unwrap();
        assert!((x.rho - 1.0).abs() < 1e-15);
        let s = Spiral::new(q, 0.4);
        assert!((spiral_radius_at(&s, x.psi).unwrap() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn parallel_degenerate_pairs_fail() {
        let c1 = Spiral::new(PolarPoint::new(1.0, 0.0), FRAC_PI_2);
        let c2 = Spiral::new(PolarPoint::new(2.0, 0.0), FRAC_PI_2);
        assert_eq!(spiral_intersection(&c1, &c2), Err(GeometryError::NoIntersection));
        let h1 = Spiral::new(PolarPoint::new(1.0, 0.0), 0.0);
        let h2 = Spiral::new(PolarPoint::new(1.0, 1.0), 0.0);
        assert_eq!(spiral_intersection(&h1, &h2), Err(GeometryError::NoIntersection));
    }

    #[test]
    fn f_map_examples() {
        let q = PolarPoint::new(1.3, 0.8);
        let p = f_map(&q, 1.0, &q).unwrap();
        assert!((p.rho - 1.0).abs() < 1e-15 && p.psi == 0.0);
        let on_c = PolarPoint::new(1.0, 0.8);
        let img = f_map(&on_c, 1.0, &PolarPoint::new(1.0, 0.0)).unwrap();
        assert_eq!(img, PolarPoint::new(1.0, -0.8));
        assert_eq!(f_map(&q, 1.0, &PolarPoint::origin()).unwrap(), PolarPoint::origin());
        assert_eq!(f_map(&PolarPoint::origin(), 1.0, &q), Err(GeometryError::AtOrigin));
    }

    #[test]
    fn f_map_is_a_rotate_scale() {
        let q = PolarPoint::new(0.7, -1.1);
        let g = PolarPoint::new(2.2, 0.3);
        let a = f_map(&q, 1.4, &g).unwrap();
        let b = rotate_scale(&g, -q.psi, 1.4 / q.rho);
        assert!((a.rho - b.rho).abs() < 1e-15 && (a.psi - b.psi).abs() < 1e-15);
        assert_eq!(rotate_scale(&g, 0.0, 1.0), g);
    }
}
