//! Executes paths under the unicycle model and checks what the planner claims.
//!
//! Traces interpolate each arc in closed form: spirals hold β ≡ φ, straight
//! arcs hold θ, rotations turn θ on the spot through the cone. Bearings on
//! straight arcs and the direction of motion between samples are recomputed
//! from positions, so a wrong arc shows up as a bearing or heading error.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{wrap_angle, PolarPoint};
use crate::sensor::{bearing, fov_ok, SensorGeometry};
use crate::synthesis::{Arc, Dir, Path, Symbol};

/// Samples closer than this to the landmark carry no bearing (relative to the path scale).
pub const ORIGIN_CUTOFF: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error("step must be positive, got {0}")]
    Step(f64),
    #[error("arcs {index} and {next} are {gap} apart", next = .index + 1)]
    Gap { index: usize, gap: f64 },
    #[error("arc {0} is malformed")]
    Malformed(usize),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub point: PolarPoint,
    /// Heading; NaN at the landmark.
    pub theta: f64,
    /// Landmark bearing; NaN within the cutoff around the landmark.
    pub beta: f64,
    /// Arc length travelled so far.
    pub s: f64,
    pub arc: usize,
    /// +1 forward, −1 backward, 0 during rotations.
    pub nu: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub samples: Vec<Sample>,
    pub step: f64,
}

impl Trace {
    pub fn length(&self) -> f64 {
        self.samples.last().map_or(0.0, |s| s.s)
    }

    /// Length recomputed from sample positions (chords between samples).
    pub fn polyline_length(&self) -> f64 {
        self.samples
            .windows(2)
            .filter(|w| w[0].arc == w[1].arc)
            .map(|w| w[0].point.distance(&w[1].point))
            .sum()
    }
}

/// Samples every arc of `p` at spacing at most `step`.
pub fn trace_path(p: &Path, geom: &SensorGeometry, step: f64) -> Result<Trace, VerifyError> {
    if !(step > 0.0) {
        return Err(VerifyError::Step(step));
    }
    let scale = p.max_rho().max(f64::MIN_POSITIVE);
    for (i, w) in p.arcs.windows(2).enumerate() {
        let gap = w[0].end.distance(&w[1].start);
        if gap > 1e-9 * scale {
            return Err(VerifyError::Gap { index: i, gap });
        }
    }
    let cutoff = ORIGIN_CUTOFF * scale;
    let mut samples = Vec::new();
    let mut s0 = 0.0;
    let mut last_beta = f64::NAN;
    for (i, a) in p.arcs.iter().enumerate() {
        match a.symbol {
            Symbol::Rot => {
                let next = p.arcs.get(i + 1).map_or(f64::NAN, |n| entry_bearing(n));
                let from = if last_beta.is_finite() { last_beta } else { next };
                let to = if next.is_finite() { next } else { from };
                let n = 16;
                for k in 0..=n {
                    let beta = if a.start.rho <= cutoff {
                        f64::NAN
                    } else {
                        from + (to - from) * k as f64 / n as f64
                    };
                    samples.push(Sample {
                        point: a.start,
                        theta: a.start.psi + PI - beta,
                        beta,
                        s: s0,
                        arc: i,
                        nu: 0.0,
                    });
                }
            }
            Symbol::S(d) => {
                let (ax, ay) = a.start.to_xy();
                let (bx, by) = a.end.to_xy();
                let (dx, dy) = (bx - ax, by - ay);
                let theta = match d {
                    Dir::Forward => dy.atan2(dx),
                    Dir::Backward => (-dy).atan2(-dx),
                };
                let n = ((a.length / step).ceil() as usize).max(1);
                for k in 0..=n {
                    let f = k as f64 / n as f64;
                    let pt = PolarPoint::from_xy(ax + f * dx, ay + f * dy);
                    let beta = if pt.rho <= cutoff {
                        f64::NAN
                    } else {
                        bearing(&pt, theta).map_or(f64::NAN, |b| b)
                    };
                    samples.push(Sample {
                        point: pt,
                        theta,
                        beta,
                        s: s0 + f * a.length,
                        arc: i,
                        nu: d.nu(),
                    });
                }
                if let Some(b) = samples.last().map(|s| s.beta).filter(|b| b.is_finite()) {
                    last_beta = b;
                }
            }
            Symbol::E1(d) | Symbol::E2(d) => {
                // arcs without a stored bearing hold their cone edge
                let edge = if matches!(a.symbol, Symbol::E1(_)) { 1 } else { 2 };
                let phi = a.phi.unwrap_or(geom.phi(edge));
                let n = ((a.length / step).ceil() as usize).max(1);
                for k in 0..=n {
                    let f = k as f64 / n as f64;
                    let Some(pt) = spiral_point(a, phi, f) else {
                        continue;
                    };
                    let near = pt.rho <= cutoff;
                    let theta = pt.psi + PI - phi;
                    samples.push(Sample {
                        point: pt,
                        theta: if near { f64::NAN } else { theta },
                        beta: if near {
                            f64::NAN
                        } else {
                            bearing(&pt, theta).map_or(f64::NAN, |b| b)
                        },
                        s: s0 + f * a.length,
                        arc: i,
                        nu: d.nu(),
                    });
                }
                last_beta = phi;
            }
        }
        s0 += a.length;
    }
    Ok(Trace { samples, step })
}

/// Bearing with which an arc starts (its held φ, or the straight arc's initial bearing).
fn entry_bearing(a: &Arc) -> f64 {
    match a.symbol {
        Symbol::E1(_) | Symbol::E2(_) => a.phi.unwrap_or(f64::NAN),
        Symbol::S(d) => crate::sensor::segment_bearings(&a.start, &a.end, d).map_or(f64::NAN, |b| b.0),
        Symbol::Rot => f64::NAN,
    }
}

/// Point at fraction `f` of a spiral arc's length. Log spirals and H are
/// linear in ρ along their length; circles are linear in ψ.
fn spiral_point(a: &Arc, phi: f64, f: f64) -> Option<PolarPoint> {
    if (phi.abs() - PI / 2.0).abs() < 1e-12 {
        return Some(PolarPoint::new(a.start.rho, a.start.psi + f * (a.end.psi - a.start.psi)));
    }
    let rho = a.start.rho + f * (a.end.rho - a.start.rho);
    if rho <= 0.0 {
        return Some(PolarPoint::origin());
    }
    // arcs out of the landmark are anchored at their far end
    let anchor = if a.start.rho > 0.0 { a.start } else { a.end };
    let psi = if phi == 0.0 {
        anchor.psi
    } else {
        anchor.psi - phi.tan() * (rho / anchor.rho).ln()
    };
    Some(PolarPoint::new(rho, psi))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub ok: bool,
    /// Largest excursion of β outside [φ1, φ2].
    pub worst_violation: f64,
    /// Index of the worst sample, if any sample violates.
    pub at: Option<usize>,
}

/// Checks φ1 − tol ≤ β ≤ φ2 + tol on every sample that has a bearing.
pub fn check_feasible(t: &Trace, geom: &SensorGeometry, tol: f64) -> FeasibilityReport {
    let mut worst = 0.0f64;
    let mut at = None;
    for (i, s) in t.samples.iter().enumerate() {
        if !s.beta.is_finite() {
            continue;
        }
        let v = (geom.phi1 - s.beta).max(s.beta - geom.phi2).max(0.0);
        if v > worst {
            worst = v;
            at = Some(i);
        }
        debug_assert!(v > 0.0 || fov_ok(s.beta, geom, 0.0));
    }
    FeasibilityReport {
        ok: worst <= tol,
        worst_violation: worst,
        at: at.filter(|_| worst > tol),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotoneReport {
    pub ok: bool,
    pub violations: usize,
    pub first: Option<usize>,
}

/// Checks that ρ moves as ρ̇ = −ν cos β dictates between consecutive samples:
/// falling on forward arcs and rising on backward ones while |β| < π/2,
/// constant on circles, and the other way round beyond π/2 (Lateral E2).
pub fn check_monotone(t: &Trace) -> MonotoneReport {
    let mut violations = 0;
    let mut first = None;
    for (i, w) in t.samples.windows(2).enumerate() {
        let (a, b) = (&w[0], &w[1]);
        if a.arc != b.arc || a.nu == 0.0 || !a.beta.is_finite() || !b.beta.is_finite() {
            continue;
        }
        let drho = b.point.rho - a.point.rho;
        let scale = a.point.rho.max(b.point.rho);
        let c = (0.5 * (a.beta + b.beta)).cos();
        let expect = -a.nu * c;
        let bad = if c.abs() < 1e-9 {
            drho.abs() > 1e-9 * scale
        } else {
            drho * expect < 0.0 || drho == 0.0 && a.point.distance(&b.point) > 0.0
        };
        if bad {
            violations += 1;
            first.get_or_insert(i);
        }
    }
    MonotoneReport {
        ok: violations == 0,
        violations,
        first,
    }
}

/// Largest angle between the heading (signed by ν) and the displacement
/// between consecutive samples of a motion arc. It is O(step/ρ) on spirals
/// and zero on straight arcs; a large value means an arc runs the wrong way.
/// Sample pairs whose chord exceeds 5% of the radius are skipped.
pub fn heading_mismatch(t: &Trace) -> f64 {
    t.samples
        .windows(2)
        .filter(|w| w[0].arc == w[1].arc && w[0].nu != 0.0)
        .filter(|w| w[0].theta.is_finite() && w[1].theta.is_finite())
        .filter_map(|w| {
            let (ax, ay) = w[0].point.to_xy();
            let (bx, by) = w[1].point.to_xy();
            let (dx, dy) = (bx - ax, by - ay);
            // chords long against the radius measure sampling, not the path
            let chord = dx.hypot(dy);
            if chord == 0.0 || chord > 0.05 * w[0].point.rho.min(w[1].point.rho) {
                return None;
            }
            let mean = w[0].theta + 0.5 * wrap_angle(w[1].theta - w[0].theta);
            let dir = if w[0].nu > 0.0 { mean } else { mean + PI };
            Some(wrap_angle(dy.atan2(dx) - dir).abs())
        })
        .fold(0.0, f64::max)
}

/// Integrates ẋ = ν cos θ, ẏ = ν sin θ, θ̇ = ω with the explicit midpoint
/// rule, one arc at a time from its exact start, with ω = ν sin φ/ρ on
/// spirals and ω = 0 on straight arcs. Returns the largest distance between
/// an integrated arc end and the stored one; arcs touching the landmark are skipped.
pub fn ode_endpoint_error(p: &Path, step: f64) -> Result<f64, VerifyError> {
    if !(step > 0.0) {
        return Err(VerifyError::Step(step));
    }
    let mut worst = 0.0f64;
    for (i, a) in p.arcs.iter().enumerate() {
        let nu = match a.symbol.dir() {
            Some(d) => d.nu(),
            None => continue,
        };
        if a.start.is_origin() || a.end.is_origin() || a.length == 0.0 {
            continue;
        }
        let (mut x, mut y) = a.start.to_xy();
        let (mut theta, phi) = match a.symbol {
            Symbol::S(_) => {
                let (bx, by) = a.end.to_xy();
                let th = (by - y).atan2(bx - x);
                (if nu > 0.0 { th } else { th + PI }, None)
            }
            _ => {
                let phi = a.phi.ok_or(VerifyError::Malformed(i))?;
                (a.start.psi + PI - phi, Some(phi))
            }
        };
        let omega = |x: f64, y: f64| phi.map_or(0.0, |f: f64| nu * f.sin() / x.hypot(y));
        let n = ((a.length / step).ceil() as usize).max(1);
        let h = a.length / n as f64;
        for _ in 0..n {
            let xm = x + 0.5 * h * nu * theta.cos();
            let ym = y + 0.5 * h * nu * theta.sin();
            let tm = theta + 0.5 * h * omega(x, y);
            x += h * nu * tm.cos();
            y += h * nu * tm.sin();
            theta += h * omega(xm, ym);
        }
        let (ex, ey) = a.end.to_xy();
        worst = worst.max((x - ex).hypot(y - ey));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensor::classify;

    fn side() -> SensorGeometry {
        classify(PI / 4.0, PI / 6.0).unwrap()
    }

    #[test]
    fn straight_trace_length_is_distance() {
        let g = side();
        let q = PolarPoint::new(0.8, 0.3);
        let v = PolarPoint::new(1.0, 0.0);
        let p = Path::new(vec![Arc::straight(Dir::Backward, q, v)]);
        let t = trace_path(&p, &g, 0.01).unwrap();
        assert!((t.length() - q.distance(&v)).abs() < 1e-15);
        assert!((t.polyline_length() - t.length()).abs() < 1e-12);
    }

    #[test]
    fn spiral_trace_holds_bearing() {
        let g = side();
        let a = Arc {
            symbol: Symbol::E1(Dir::Forward),
            start: PolarPoint::new(1.0, 0.0),
            end: PolarPoint::new(0.5, -g.phi1.tan() * 0.5f64.ln()),
            length: 0.5 / g.phi1.cos(),
            phi: Some(g.phi1),
        };
        let t = trace_path(&Path::new(vec![a]), &g, 1e-3).unwrap();
        for s in &t.samples {
            assert!((s.beta - g.phi1).abs() < 1e-12);
        }
        assert!(check_monotone(&t).ok);
        assert!(heading_mismatch(&t) < 1e-2);
        assert!(ode_endpoint_error(&Path::new(vec![a]), 1e-3).unwrap() < 1e-6);
    }

    #[test]
    fn gaps_are_rejected() {
        let g = side();
        let a = Arc::straight(Dir::Forward, PolarPoint::new(1.0, 0.0), PolarPoint::new(0.9, 0.0));
        let b = Arc::straight(Dir::Forward, PolarPoint::new(0.8, 0.0), PolarPoint::new(0.7, 0.0));
        assert!(matches!(
            trace_path(&Path::new(vec![a, b]), &g, 0.1),
            Err(VerifyError::Gap { index: 0, .. })
        ));
        assert!(trace_path(&Path::new(vec![a]), &g, 0.0).is_err());
    }

    #[test]
    fn chord_leaving_cone_is_infeasible() {
        let g = side();
        // radial motion has β = 0, outside [π/6, π/3]
        let a = Arc::straight(Dir::Forward, PolarPoint::new(1.0, 0.0), PolarPoint::new(0.5, 0.0));
        let t = trace_path(&Path::new(vec![a]), &g, 0.01).unwrap();
        let r = check_feasible(&t, &g, 1e-9);
        assert!(!r.ok);
        assert!((r.worst_violation - g.phi1).abs() < 1e-12);
    }

    #[test]
    fn backward_straight_arc_moves_outward() {
        let g = side();
        let q = PolarPoint::new(0.8, 0.3);
        let p = Path::new(vec![Arc::straight(Dir::Backward, q, PolarPoint::new(1.0, 0.0))]);
        let t = trace_path(&p, &g, 0.01).unwrap();
        assert!(check_monotone(&t).ok);
        assert!(heading_mismatch(&t) < 1e-12);
    }

    #[test]
    fn circle_arc_is_constant_radius() {
        let g = classify(1.3208, 0.5).unwrap();
        let a = Arc {
            symbol: Symbol::E2(Dir::Backward),
            start: PolarPoint::new(1.0, 1.0),
            end: PolarPoint::new(1.0, 0.0),
            length: 1.0,
            phi: Some(g.phi2),
        };
        let t = trace_path(&Path::new(vec![a]), &g, 0.01).unwrap();
        assert!(check_monotone(&t).ok);
        assert!(t.samples.iter().all(|s| (s.point.rho - 1.0).abs() < 1e-15));
    }
}
