//! Shortest unicycle paths that keep a landmark inside an offset sensor cone.
//!
//! Positions are polar coordinates (ρ, ψ) about the landmark; the goal is
//! P = (ρ_P, 0). The cone spans bearings [φ1, φ2] = [Γ − δ/2, Γ + δ/2].

pub mod geometry;
pub mod oracle;
pub mod sensor;
pub mod synthesis;
pub mod verify;

pub use geometry::PolarPoint;
pub use sensor::{classify, SensorCase, SensorGeometry};
pub use synthesis::{Cell, Path, Plan, RegionLabel, Synthesis, Word};
