//! Lattice shortest paths that assume only the kinematics and the cone.
//!
//! Nodes sit on a log-polar lattice over the annulus [ρ_min, ρ_max]; edges
//! join nodes whose index offset is a primitive vector of the stencil and
//! whose straight segment keeps the landmark in view in one of the two
//! driving directions. A segment is feasible exactly when both endpoint
//! bearings are in the cone with one sign, so every lattice path is a real
//! feasible path (straight arcs joined by rotations in place).
//!
//! The heading need not be a search dimension: rotations cost nothing and
//! stay in view, because both headings at a vertex see the landmark inside
//! the same interval of bearings. The heading resolution instead sets the
//! stencil: the smallest square stencil with at least `n_theta` primitive
//! directions.
//!
//! Slack: a lattice path to node q̂ is feasible, so its length is never below
//! the optimum from q̂. Comparisons against the planner therefore evaluate
//! the planner at the snapped node, and the only slack is rounding,
//! [`GRAPH_SLACK`]·ρ_P.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use super::OracleError;
use crate::geometry::{wrap_angle, PolarPoint};
use crate::sensor::SensorGeometry;

/// Relative amount by which a lattice length may undercut the optimum at its node.
pub const GRAPH_SLACK: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphGrid {
    pub n_rho: usize,
    pub n_psi: usize,
    pub n_theta: usize,
    /// Annulus radii as multiples of ρ_P.
    pub rho_min: f64,
    pub rho_max: f64,
}

impl Default for GraphGrid {
    fn default() -> Self {
        GraphGrid {
            n_rho: 200,
            n_psi: 400,
            n_theta: 720,
            rho_min: 0.01,
            rho_max: 3.0,
        }
    }
}

impl GraphGrid {
    /// Same annulus with every resolution scaled by `f`.
    pub fn refined(&self, f: f64) -> GraphGrid {
        let scale = |n: usize| ((n as f64 * f).round() as usize).max(2);
        GraphGrid {
            n_rho: scale(self.n_rho),
            n_psi: scale(self.n_psi),
            n_theta: scale(self.n_theta),
            ..*self
        }
    }

    /// Primitive index offsets (Δi, Δj) of the smallest square stencil with
    /// at least `n_theta` of them.
    pub fn stencil(&self) -> Vec<(i64, i64)> {
        let mut k = 1i64;
        loop {
            let mut out = Vec::new();
            for di in -k..=k {
                for dj in -k..=k {
                    if (di, dj) != (0, 0) && gcd(di.unsigned_abs(), dj.unsigned_abs()) == 1 {
                        out.push((di, dj));
                    }
                }
            }
            if out.len() >= self.n_theta || k >= 64 {
                return out;
            }
            k += 1;
        }
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Distances from P to every lattice node.
#[derive(Clone, Debug)]
pub struct GraphField {
    pub grid: GraphGrid,
    rho_p: f64,
    log_rho: Vec<f64>,
    dist: Vec<f64>,
}

/// A lattice answer: the snapped node and the lattice length from it to P.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphAnswer {
    pub node: PolarPoint,
    pub length: f64,
}

impl GraphField {
    pub fn build(geom: &SensorGeometry, rho_p: f64, grid: GraphGrid) -> Result<GraphField, OracleError> {
        if grid.n_rho < 2 || grid.n_psi < 3 || grid.n_theta < 1 {
            return Err(OracleError::Grid(format!("{grid:?}")));
        }
        if !(grid.rho_min > 0.0 && grid.rho_max > 1.0 && grid.rho_min < 1.0) {
            return Err(OracleError::Grid("annulus must contain C(P) strictly".into()));
        }
        let (nr, np) = (grid.n_rho, grid.n_psi);
        let (l0, l1) = ((grid.rho_min * rho_p).ln(), (grid.rho_max * rho_p).ln());
        let dl = (l1 - l0) / (nr - 1) as f64;
        // shift the radial lattice so that ρ_P is a node
        let i_p = ((rho_p.ln() - l0) / dl).round() as usize;
        let shift = rho_p.ln() - (l0 + dl * i_p as f64);
        let log_rho: Vec<f64> = (0..nr).map(|i| l0 + shift + dl * i as f64).collect();
        let node = |i: usize, j: usize| {
            let rho = log_rho[i].exp();
            let psi = TAU * j as f64 / np as f64;
            (rho * psi.cos(), rho * psi.sin(), psi)
        };
        let pts: Vec<(f64, f64, f64)> = (0..nr).flat_map(|i| (0..np).map(move |j| (i, j))).map(|(i, j)| node(i, j)).collect();
        let stencil = grid.stencil();
        let (phi1, phi2) = (geom.phi1, geom.phi2);
        let in_view = |psi: f64, theta: f64| {
            let b = wrap_angle(psi + PI - theta);
            (phi1 <= b && b <= phi2).then_some(b)
        };
        let feasible = |a: &(f64, f64, f64), b: &(f64, f64, f64)| {
            let theta = (b.1 - a.1).atan2(b.0 - a.0);
            [theta, theta + PI].into_iter().any(|t| match (in_view(a.2, t), in_view(b.2, t)) {
                (Some(x), Some(y)) => x * y >= 0.0,
                _ => false,
            })
        };
        let mut dist = vec![f64::INFINITY; nr * np];
        let start = i_p * np;
        dist[start] = 0.0;
        let mut heap = BinaryHeap::new();
        heap.push(Reverse((0u64, start)));
        while let Some(Reverse((bits, u))) = heap.pop() {
            let d = f64::from_bits(bits);
            if d > dist[u] {
                continue;
            }
            let (ui, uj) = ((u / np) as i64, (u % np) as i64);
            let a = &pts[u];
            for &(di, dj) in &stencil {
                let vi = ui + di;
                if vi < 0 || vi >= nr as i64 {
                    continue;
                }
                let vj = (uj + dj).rem_euclid(np as i64);
                let v = vi as usize * np + vj as usize;
                let b = &pts[v];
                let nd = d + (b.0 - a.0).hypot(b.1 - a.1);
                if nd < dist[v] && feasible(a, b) {
                    dist[v] = nd;
                    heap.push(Reverse((nd.to_bits(), v)));
                }
            }
        }
        Ok(GraphField {
            grid,
            rho_p,
            log_rho,
            dist,
        })
    }

    /// Node nearest to `q` in lattice coordinates.
    pub fn snap(&self, q: &PolarPoint) -> (usize, usize) {
        let np = self.grid.n_psi;
        let (l0, l1) = (self.log_rho[0], self.log_rho[self.log_rho.len() - 1]);
        let dl = (l1 - l0) / (self.log_rho.len() - 1) as f64;
        let i = ((q.rho.ln() - l0) / dl).round().clamp(0.0, (self.log_rho.len() - 1) as f64) as usize;
        let j = (q.psi.rem_euclid(TAU) / TAU * np as f64).round() as usize % np;
        (i, j)
    }

    pub fn node(&self, i: usize, j: usize) -> PolarPoint {
        PolarPoint::new(self.log_rho[i].exp(), wrap_angle(TAU * j as f64 / self.grid.n_psi as f64))
    }

    /// Lattice length from the node nearest to `q`.
    pub fn query(&self, q: &PolarPoint) -> Result<GraphAnswer, OracleError> {
        let (i, j) = self.snap(q);
        let length = self.dist[i * self.grid.n_psi + j];
        if !length.is_finite() {
            return Err(OracleError::Unreachable);
        }
        Ok(GraphAnswer {
            node: self.node(i, j),
            length,
        })
    }

    pub fn rho_p(&self) -> f64 {
        self.rho_p
    }
}

/// One-shot lattice search from `q`; build a [`GraphField`] to answer many queries.
pub fn graph_shortest(
    q: &PolarPoint,
    geom: &SensorGeometry,
    rho_p: f64,
    grid: GraphGrid,
) -> Result<GraphAnswer, OracleError> {
    GraphField::build(geom, rho_p, grid)?.query(q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensor::classify;

    fn small() -> GraphGrid {
        GraphGrid {
            n_rho: 40,
            n_psi: 80,
            n_theta: 48,
            rho_min: 0.05,
            rho_max: 3.0,
        }
    }

    #[test]
    fn stencil_meets_heading_resolution() {
        let g = GraphGrid::default();
        let s = g.stencil();
        assert!(s.len() >= 720);
        assert!(s.iter().all(|&(a, b)| gcd(a.unsigned_abs(), b.unsigned_abs()) == 1));
    }

    #[test]
    fn goal_node_is_at_zero() {
        let g = classify(0.1, 0.8).unwrap();
        let f = GraphField::build(&g, 1.0, small()).unwrap();
        let a = f.query(&PolarPoint::new(1.0, 0.0)).unwrap();
        assert_eq!(a.length, 0.0);
        assert!((a.node.rho - 1.0).abs() < 1e-12);
    }

    #[test]
    fn frontal_backs_straight_out_along_the_axis() {
        let g = classify(0.1, 0.8).unwrap();
        let f = GraphField::build(&g, 1.0, small()).unwrap();
        let a = f.query(&PolarPoint::new(2.0, 0.0)).unwrap();
        assert!((a.length - (a.node.rho - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn rejects_annulus_missing_goal() {
        let g = classify(0.1, 0.8).unwrap();
        let grid = GraphGrid { rho_min: 1.5, ..small() };
        assert!(GraphField::build(&g, 1.0, grid).is_err());
    }
}
