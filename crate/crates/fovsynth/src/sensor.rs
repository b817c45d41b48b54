//! Sensor cone model: case classification, bearing, FOV feasibility, and the
//! regions SF(G) / SB(G) reachable from G by one forward / backward segment.
//!
//! Bearings β are measured from the vehicle heading to the line of sight and
//! must stay in [φ1, φ2] with φ1 = Γ − δ/2, φ2 = Γ + δ/2.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{wrap_angle, PolarPoint};
use crate::synthesis::Dir;

/// Distance from a borderline configuration below which it snaps onto it.
pub const BORDERLINE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SensorError {
    #[error("aperture delta = {0} outside (0, pi/2]")]
    Aperture(f64),
    #[error("offset gamma = {0} outside [0, pi/2]; reduce it first")]
    Offset(f64),
    #[error("bearing is undefined at the landmark")]
    AtOrigin,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SensorCase {
    Frontal,
    BorderlineFrontal,
    Side,
    BorderlineSide,
    Lateral,
}

impl SensorCase {
    pub const ALL: [SensorCase; 5] = [
        SensorCase::Frontal,
        SensorCase::BorderlineFrontal,
        SensorCase::Side,
        SensorCase::BorderlineSide,
        SensorCase::Lateral,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SensorCase::Frontal => "frontal",
            SensorCase::BorderlineFrontal => "borderline-frontal",
            SensorCase::Side => "side",
            SensorCase::BorderlineSide => "borderline-side",
            SensorCase::Lateral => "lateral",
        }
    }
}

impl fmt::Display for SensorCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Geometric identity of an edge extremal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Extremal {
    /// Spiral with cot φ < 0.
    SpiralLeft,
    /// Spiral with cot φ > 0.
    SpiralRight,
    /// φ = 0.
    HalfLine,
    /// |φ| = π/2.
    Circle,
}

impl Extremal {
    fn of(phi: f64) -> Extremal {
        if phi == 0.0 {
            Extremal::HalfLine
        } else if phi.abs() == FRAC_PI_2 {
            Extremal::Circle
        } else if phi.tan() > 0.0 {
            Extremal::SpiralRight
        } else {
            Extremal::SpiralLeft
        }
    }

    pub fn label(self, index: u8) -> String {
        match self {
            Extremal::SpiralLeft => format!("T{index}L"),
            Extremal::SpiralRight => format!("T{index}R"),
            Extremal::HalfLine => "H".to_string(),
            Extremal::Circle => "C".to_string(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensorGeometry {
    pub gamma: f64,
    pub delta: f64,
    pub phi1: f64,
    pub phi2: f64,
    pub case: SensorCase,
    pub e1: Extremal,
    pub e2: Extremal,
}

impl SensorGeometry {
    /// Characteristic angle of E1 (`i == 1`) or E2.
    pub fn phi(&self, i: u8) -> f64 {
        if i == 1 {
            self.phi1
        } else {
            self.phi2
        }
    }

    /// Whether the radial direction (β = 0) lies inside the cone.
    pub fn sees_ahead(&self) -> bool {
        self.phi1 <= 0.0
    }
}

/// Classifies (Γ, δ) with 0 ≤ Γ ≤ π/2 into one of the five sensor cases.
pub fn classify(gamma: f64, delta: f64) -> Result<SensorGeometry, SensorError> {
    if !(delta > 0.0 && delta <= FRAC_PI_2 + BORDERLINE_EPS) {
        return Err(SensorError::Aperture(delta));
    }
    if !(-BORDERLINE_EPS..=FRAC_PI_2 + BORDERLINE_EPS).contains(&gamma) {
        return Err(SensorError::Offset(gamma));
    }
    let half = delta / 2.0;
    let side_edge = (PI - delta) / 2.0;
    let (case, mut phi1, mut phi2) = if (gamma - half).abs() <= BORDERLINE_EPS {
        (SensorCase::BorderlineFrontal, 0.0, delta)
    } else if gamma < half {
        (SensorCase::Frontal, gamma - half, gamma + half)
    } else if (gamma - side_edge).abs() <= BORDERLINE_EPS {
        (SensorCase::BorderlineSide, FRAC_PI_2 - delta, FRAC_PI_2)
    } else if gamma < side_edge {
        (SensorCase::Side, gamma - half, gamma + half)
    } else {
        (SensorCase::Lateral, gamma - half, gamma + half)
    };
    // δ = π/2 with Γ = π/4 is both borderlines; the frontal one wins above
    if case == SensorCase::BorderlineFrontal && (phi2 - FRAC_PI_2).abs() <= BORDERLINE_EPS {
        phi2 = FRAC_PI_2;
    }
    if phi1.abs() <= BORDERLINE_EPS {
        phi1 = 0.0;
    }
    Ok(SensorGeometry {
        gamma,
        delta,
        phi1,
        phi2,
        case,
        e1: Extremal::of(phi1),
        e2: Extremal::of(phi2),
    })
}

/// Bearing of the landmark seen from `position` with heading `theta`, in (−π, π].
pub fn bearing(position: &PolarPoint, theta: f64) -> Result<f64, SensorError> {
    if position.rho <= 0.0 {
        return Err(SensorError::AtOrigin);
    }
    Ok(wrap_angle(position.psi + PI - theta))
}

/// φ1 − tol ≤ β ≤ φ2 + tol.
pub fn fov_ok(beta: f64, geom: &SensorGeometry, tol: f64) -> bool {
    geom.phi1 - tol <= beta && beta <= geom.phi2 + tol
}

/// Bearings at both ends of the straight segment a → b driven in `dir`.
///
/// An endpoint at the landmark borrows the other end's bearing (radial motion).
pub fn segment_bearings(a: &PolarPoint, b: &PolarPoint, dir: Dir) -> Option<(f64, f64)> {
    let (ax, ay) = a.to_xy();
    let (bx, by) = b.to_xy();
    let (dx, dy) = (bx - ax, by - ay);
    if dx == 0.0 && dy == 0.0 {
        return None;
    }
    let theta = match dir {
        Dir::Forward => dy.atan2(dx),
        Dir::Backward => (-dy).atan2(-dx),
    };
    let ba = bearing(a, theta).ok();
    let bb = bearing(b, theta).ok();
    match (ba, bb) {
        (Some(x), Some(y)) => Some((x, y)),
        (Some(x), None) => Some((x, x)),
        (None, Some(y)) => Some((y, y)),
        (None, None) => None,
    }
}

/// Exact test that the segment a → b keeps the landmark in view when driven in `dir`.
///
/// |β| is monotone along a line and its sign can only change through the
/// landmark, so the two endpoint bearings decide feasibility.
pub fn segment_feasible(
    a: &PolarPoint,
    b: &PolarPoint,
    dir: Dir,
    geom: &SensorGeometry,
    tol: f64,
) -> bool {
    match segment_bearings(a, b, dir) {
        None => true,
        Some((b0, b1)) => {
            fov_ok(b0, geom, tol)
                && fov_ok(b1, geom, tol)
                && !(b0 * b1 < 0.0 && b0.abs() > tol && b1.abs() > tol)
        }
    }
}

/// End point of a straight arc leaving `g` with bearing `b0` and reaching bearing `b1`.
pub fn straight_endpoint(g: &PolarPoint, b0: f64, b1: f64) -> PolarPoint {
    PolarPoint::new(g.rho * b0.sin() / b1.sin(), g.psi + b1 - b0)
}

/// A boundary piece of SF(G) or SB(G).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Locus {
    /// End points of segments from `from` whose final bearing is `end_bearing`,
    /// for start bearings between `start_lo` and `start_hi`: an arc of a circle
    /// through `from` and the landmark.
    EndBearing {
        from: PolarPoint,
        end_bearing: f64,
        start_lo: f64,
        start_hi: f64,
    },
    /// End points of the segment leaving `from` with bearing `start_bearing`,
    /// for final bearings between `end_lo` and `end_hi`: a chord, or a
    /// half-line when the range reaches 0.
    StartBearing {
        from: PolarPoint,
        start_bearing: f64,
        end_lo: f64,
        end_hi: f64,
    },
    /// Radial segment to the landmark (`inward`) or radial half-line away from it.
    Radial { from: PolarPoint, inward: bool },
}

impl Locus {
    /// Point at parameter `s ∈ [0, 1]`; half-lines are cut at radius `far`.
    pub fn point(&self, s: f64, far: f64) -> PolarPoint {
        match *self {
            Locus::EndBearing {
                from,
                end_bearing,
                start_lo,
                start_hi,
            } => {
                let b0 = start_lo + s * (start_hi - start_lo);
                if b0 == 0.0 {
                    return PolarPoint::origin();
                }
                straight_endpoint(&from, b0, end_bearing)
            }
            Locus::StartBearing {
                from,
                start_bearing,
                end_lo,
                end_hi,
            } => {
                let b1 = end_lo + s * (end_hi - end_lo);
                let p = if b1 == 0.0 {
                    PolarPoint::new(f64::INFINITY, from.psi - start_bearing)
                } else {
                    straight_endpoint(&from, start_bearing, b1)
                };
                if p.rho > far {
                    // clip along the line at radius `far`
                    clip_ray(&from, &p, far)
                } else {
                    p
                }
            }
            Locus::Radial { from, inward } => {
                if inward {
                    PolarPoint::new(from.rho * (1.0 - s), from.psi)
                } else {
                    PolarPoint::new(from.rho + s * (far - from.rho).max(0.0), from.psi)
                }
            }
        }
    }

    pub fn sample(&self, n: usize, far: f64) -> Vec<PolarPoint> {
        (0..=n).map(|i| self.point(i as f64 / n as f64, far)).collect()
    }

    /// Distance from `v` to the supporting circle or line of this piece.
    pub fn distance(&self, v: &PolarPoint) -> f64 {
        let (vx, vy) = v.to_xy();
        match *self {
            Locus::EndBearing {
                from, end_bearing, ..
            } => {
                // circle through O and `from` on which the inscribed angle is fixed
                let (gx, gy) = from.to_xy();
                let r = from.rho / (2.0 * end_bearing.sin().abs());
                let mid = (gx / 2.0, gy / 2.0);
                let h = (r * r - from.rho * from.rho / 4.0).max(0.0).sqrt();
                // the centre sits on the side given by a mid-range sample
                let probe = self.point(0.5, f64::INFINITY);
                let (px, py) = probe.to_xy();
                let nx = -gy / from.rho;
                let ny = gx / from.rho;
                let c1 = (mid.0 + h * nx, mid.1 + h * ny);
                let c2 = (mid.0 - h * nx, mid.1 - h * ny);
                let err = |c: (f64, f64)| ((px - c.0).hypot(py - c.1) - r).abs();
                let c = if err(c1) <= err(c2) { c1 } else { c2 };
                ((vx - c.0).hypot(vy - c.1) - r).abs()
            }
            Locus::StartBearing {
                from, start_bearing, ..
            } => {
                let (gx, gy) = from.to_xy();
                // direction of travel from G leaving with bearing b0 (forward sense)
                let theta = from.psi + PI - start_bearing;
                let (ux, uy) = (theta.cos(), theta.sin());
                ((vx - gx) * uy - (vy - gy) * ux).abs()
            }
            Locus::Radial { from, .. } => {
                let (ux, uy) = (from.psi.cos(), from.psi.sin());
                (vx * uy - vy * ux).abs()
            }
        }
    }
}

fn clip_ray(from: &PolarPoint, toward: &PolarPoint, far: f64) -> PolarPoint {
    let (gx, gy) = from.to_xy();
    let (ux, uy) = if toward.rho.is_finite() {
        let (tx, ty) = toward.to_xy();
        let n = (tx - gx).hypot(ty - gy);
        ((tx - gx) / n, (ty - gy) / n)
    } else {
        (toward.psi.cos(), toward.psi.sin())
    };
    // |g + s u| = far
    let b = gx * ux + gy * uy;
    let c = gx * gx + gy * gy - far * far;
    let s = -b + (b * b - c).max(0.0).sqrt();
    PolarPoint::from_xy(gx + s * ux, gy + s * uy)
}

/// SF(G) or SB(G) with its boundary pieces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StraightRegion {
    pub origin: PolarPoint,
    pub kind: Dir,
    pub boundary_1: Locus,
    pub boundary_2: Locus,
    /// G_F (forward) or G_B (backward) when the region is bounded away from the landmark.
    pub far_point: Option<PolarPoint>,
    phi1: f64,
    phi2: f64,
}

impl StraightRegion {
    /// Exact membership: the segment from the origin to `v` is feasible in `kind`.
    pub fn contains(&self, v: &PolarPoint, geom: &SensorGeometry, tol: f64) -> bool {
        debug_assert!(self.phi1 == geom.phi1 && self.phi2 == geom.phi2);
        if v.distance(&self.origin) <= tol {
            return true;
        }
        segment_feasible(&self.origin, v, self.kind, geom, tol)
    }
}

/// Builds SF(G) (`Dir::Forward`) or SB(G) (`Dir::Backward`).
pub fn straight_region(
    g: &PolarPoint,
    geom: &SensorGeometry,
    kind: Dir,
) -> Result<StraightRegion, SensorError> {
    if g.rho <= 0.0 {
        return Err(SensorError::AtOrigin);
    }
    let (p1, p2) = (geom.phi1, geom.phi2);
    let end_arc = |end_bearing: f64, lo: f64, hi: f64| Locus::EndBearing {
        from: *g,
        end_bearing,
        start_lo: lo,
        start_hi: hi,
    };
    let chord = |start_bearing: f64, lo: f64, hi: f64| Locus::StartBearing {
        from: *g,
        start_bearing,
        end_lo: lo,
        end_hi: hi,
    };
    let (b1, b2, far) = match (kind, p1 > 0.0, p1 == 0.0) {
        // forward: |β| grows, so the far boundary is where β reaches φ2
        (Dir::Forward, true, _) => (
            chord(p1, p1, p2),
            end_arc(p2, p2, p1),
            Some(straight_endpoint(g, p1, p2)),
        ),
        (Dir::Forward, false, true) => (
            Locus::Radial {
                from: *g,
                inward: true,
            },
            end_arc(p2, p2, 0.0),
            None,
        ),
        (Dir::Forward, false, false) => (end_arc(p1, p1, 0.0), end_arc(p2, p2, 0.0), None),
        // backward: |β| shrinks towards φ1 (or towards 0 when the cone sees ahead)
        (Dir::Backward, true, _) => (
            end_arc(p1, p1, p2),
            chord(p2, p2, p1),
            Some(straight_endpoint(g, p2, p1)),
        ),
        (Dir::Backward, false, true) => (
            Locus::Radial {
                from: *g,
                inward: false,
            },
            chord(p2, p2, 0.0),
            None,
        ),
        (Dir::Backward, false, false) => (chord(p1, p1, 0.0), chord(p2, p2, 0.0), None),
    };
    Ok(StraightRegion {
        origin: *g,
        kind,
        boundary_1: b1,
        boundary_2: b2,
        far_point: far,
        phi1: p1,
        phi2: p2,
    })
}

/// The far boundary on which optimal straight arcs from `g` end: the piece
/// where the bearing reaches the cone edge (φ2 forward, φ1 backward).
pub fn straight_endpoint_locus(
    g: &PolarPoint,
    geom: &SensorGeometry,
    kind: Dir,
) -> Result<Locus, SensorError> {
    let r = straight_region(g, geom, kind)?;
    Ok(match kind {
        Dir::Forward => r.boundary_2,
        Dir::Backward => r.boundary_1,
    })
}
