//! Optimal synthesis: for every start Q the shortest feasible path to P.
//!
//! Inside D(P) each partition cell has a fixed word with at most two scalar
//! unknowns; the engine closes the word at P exactly and the cell with the
//! shortest instance labels Q. Outside D(P) the query is folded onto
//! Q̃ = (ρ_P²/ρ_Q, −ψ_Q) and the interior path of Q̃ is carried back by F_Q̃.
//! Offsets Γ outside [0, π/2] are reduced by a mirror about the X axis and
//! a heading flip that swaps forward and backward.

pub mod engine;
pub mod path;
pub mod thresholds;

use std::collections::BTreeSet;
use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{transform_path, wrap_angle, GeometryError, PolarPoint};
use crate::sensor::{
    classify, segment_bearings, segment_feasible, straight_region, SensorCase, SensorError,
    SensorGeometry,
};

pub use engine::{Bear, Engine, Instance, Leg};
pub use path::{Arc, Dir, Path, Symbol, Word, WordParseError};
pub use thresholds::{
    family_length, family_length_far, family_length_near, optimal_alpha, psi_r1_circle,
    psi_r1_general, thresholds, z_phase, ThresholdError, Thresholds,
};

use Dir::{Backward as B, Forward as F};

/// Scan resolution of the engine's one-parameter searches.
const SCAN: usize = 48;
/// Candidates closer than this (relative to ρ_P) count as tied.
const TIE: f64 = 1e-12;
/// Arcs shorter than this fraction of ρ_P are numerical residue of a closure.
const PRUNE: f64 = 1e-10;
/// Bearing slack for the single straight arc. Just past the border of its
/// region the competing words need spiral arcs of vanishing length, which
/// exist only on a set of zero width.
const DIRECT_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthesisError {
    #[error(transparent)]
    Sensor(#[from] SensorError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("offset {0} outside [-pi, pi]")]
    Offset(f64),
    #[error("goal radius must be positive, got {0}")]
    GoalRadius(f64),
    #[error("query coincides with the landmark")]
    AtOrigin,
    #[error("no candidate word closes at the goal")]
    NoPath,
}

/// Result of folding Γ into [0, π/2].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reduction {
    pub gamma: f64,
    /// Forward and backward are swapped (heading flipped by π).
    pub reverse_time: bool,
    /// ψ ↦ −ψ on inputs and outputs; E1 and E2 trade places.
    pub mirror: bool,
}

/// Folds any offset in [−π, π] onto [0, π/2].
///
/// Flipping the heading turns a cone at Γ into one at Γ − π with every
/// direction reversed; mirroring about the X axis sends Γ to −Γ.
pub fn reduce_gamma(gamma: f64, delta: f64) -> Result<Reduction, SynthesisError> {
    if !(delta > 0.0 && delta <= FRAC_PI_2 + 1e-12) {
        return Err(SensorError::Aperture(delta).into());
    }
    if !(-PI..=PI).contains(&gamma) {
        return Err(SynthesisError::Offset(gamma));
    }
    let (g, reverse_time, mirror) = if gamma > FRAC_PI_2 {
        (PI - gamma, true, true)
    } else if gamma >= 0.0 {
        (gamma, false, false)
    } else if gamma >= -FRAC_PI_2 {
        (-gamma, false, true)
    } else {
        (PI + gamma, true, false)
    };
    Ok(Reduction {
        gamma: g,
        reverse_time,
        mirror,
    })
}

/// Cells of the interior partition. Primed cells carry the F-image word of
/// their unprimed partner; `IVa` is the E2⁻S⁻ tail of IV.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Cell {
    I,
    IPrime,
    II,
    IIPrime,
    III,
    IV,
    IVPrime,
    IVa,
    IVaPrime,
    V,
    VPrime,
    VI,
    VIPrime,
    VII,
    VIIPrime,
    VIII,
    VIIIPrime,
}

impl Cell {
    pub const ALL: [Cell; 17] = [
        Cell::I,
        Cell::IPrime,
        Cell::II,
        Cell::IIPrime,
        Cell::III,
        Cell::IV,
        Cell::IVPrime,
        Cell::IVa,
        Cell::IVaPrime,
        Cell::V,
        Cell::VPrime,
        Cell::VI,
        Cell::VIPrime,
        Cell::VII,
        Cell::VIIPrime,
        Cell::VIII,
        Cell::VIIIPrime,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Cell::I => "I",
            Cell::IPrime => "I'",
            Cell::II => "II",
            Cell::IIPrime => "II'",
            Cell::III => "III",
            Cell::IV => "IV",
            Cell::IVPrime => "IV'",
            Cell::IVa => "IVa",
            Cell::IVaPrime => "IVa'",
            Cell::V => "V",
            Cell::VPrime => "V'",
            Cell::VI => "VI",
            Cell::VIPrime => "VI'",
            Cell::VII => "VII",
            Cell::VIIPrime => "VII'",
            Cell::VIII => "VIII",
            Cell::VIIIPrime => "VIII'",
        }
    }

    /// The word realized in this cell. Region III passes through the
    /// landmark: radially in the cases that see straight ahead, along E1
    /// otherwise.
    pub fn word(self, case: SensorCase) -> Word {
        let text = match self {
            Cell::I => "S-",
            Cell::IPrime => "S+",
            Cell::II => "E1+*E2-",
            Cell::IIPrime => "E2+*E1-",
            Cell::III => match case {
                SensorCase::Frontal => "S+*S-",
                _ => "E1+*E1-",
            },
            Cell::IV => "E2-S-E1-",
            Cell::IVPrime => "E1+S+E2+",
            Cell::IVa => "E2-S-",
            Cell::IVaPrime => "S+E2+",
            Cell::V => "E1+*E2-S-",
            Cell::VPrime => "S+E2+*E1-",
            Cell::VI => "S-E1-",
            Cell::VIPrime => "E1+S+",
            Cell::VII => "S+E1+*E2-S-",
            Cell::VIIPrime => "S+E2+*E1-S-",
            Cell::VIII => "E2+*E1-S-",
            Cell::VIIIPrime => "S+E1+*E2-",
        };
        text.parse().expect("static word")
    }

    /// Engine legs; `None` for the cells built by hand (I, I', III).
    fn legs(self) -> Option<Vec<Leg>> {
        use Bear::{Edge, Free, Root};
        Some(match self {
            Cell::I | Cell::IPrime | Cell::III => return None,
            Cell::II => vec![Leg::E(1, F), Leg::Rot, Leg::E(2, B)],
            Cell::IIPrime => vec![Leg::E(2, F), Leg::Rot, Leg::E(1, B)],
            Cell::IV => vec![Leg::E(2, B), Leg::S(B, Edge(2), Edge(1)), Leg::E(1, B)],
            Cell::IVPrime => vec![Leg::E(1, F), Leg::S(F, Edge(1), Edge(2)), Leg::E(2, F)],
            Cell::IVa => vec![Leg::E(2, B), Leg::S(B, Edge(2), Root)],
            Cell::IVaPrime => vec![Leg::S(F, Root, Edge(2)), Leg::E(2, F)],
            Cell::V => vec![Leg::E(1, F), Leg::Rot, Leg::E(2, B), Leg::S(B, Edge(2), Free(0))],
            Cell::VPrime => vec![Leg::S(F, Free(0), Edge(2)), Leg::E(2, F), Leg::Rot, Leg::E(1, B)],
            Cell::VI => vec![Leg::S(B, Root, Edge(1)), Leg::E(1, B)],
            Cell::VIPrime => vec![Leg::E(1, F), Leg::S(F, Edge(1), Root)],
            Cell::VII => vec![
                Leg::S(F, Free(0), Edge(1)),
                Leg::E(1, F),
                Leg::Rot,
                Leg::E(2, B),
                Leg::S(B, Edge(2), Free(1)),
            ],
            Cell::VIIPrime => vec![
                Leg::S(F, Free(0), Edge(2)),
                Leg::E(2, F),
                Leg::Rot,
                Leg::E(1, B),
                Leg::S(B, Edge(1), Free(1)),
            ],
            Cell::VIII => vec![Leg::E(2, F), Leg::Rot, Leg::E(1, B), Leg::S(B, Edge(1), Free(0))],
            Cell::VIIIPrime => vec![Leg::S(F, Free(0), Edge(1)), Leg::E(1, F), Leg::Rot, Leg::E(2, B)],
        })
    }

    /// Cells that can win inside D(P) for a sensor case.
    pub fn candidates(case: SensorCase) -> &'static [Cell] {
        use Cell::*;
        match case {
            SensorCase::Frontal | SensorCase::BorderlineFrontal => &[
                I, IPrime, II, IIPrime, III, IVa, IVaPrime, V, VPrime, VII, VIIPrime, VIII,
                VIIIPrime,
            ],
            _ => &[
                I, IPrime, II, IIPrime, III, IV, IVPrime, IVa, IVaPrime, V, VPrime, VI, VIPrime,
            ],
        }
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A cell of D(P) or its image outside the disk.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RegionLabel {
    pub cell: Cell,
    pub exterior: bool,
}

impl RegionLabel {
    pub fn word(&self, case: SensorCase) -> Word {
        let w = self.cell.word(case);
        if self.exterior {
            w.transformed()
        } else {
            w
        }
    }
}

impl fmt::Display for RegionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exterior {
            write!(f, "F({})", self.cell)
        } else {
            write!(f, "{}", self.cell)
        }
    }
}

/// Admissible consecutive symbols and the words they spell.
#[derive(Clone, Debug, PartialEq)]
pub struct LanguageGraph {
    pub maximal: Vec<Word>,
    pub edges: BTreeSet<(String, String)>,
    /// Every subword of a maximal word that neither starts nor ends with `*`.
    pub words: Vec<Word>,
}

impl LanguageGraph {
    pub fn has_edge(&self, a: Symbol, b: Symbol) -> bool {
        self.edges.contains(&(a.to_string(), b.to_string()))
    }

    /// Whether every consecutive pair of `w` is an edge.
    pub fn accepts(&self, w: &Word) -> bool {
        w.0.windows(2).all(|p| self.has_edge(p[0], p[1]))
    }
}

/// The sufficient language of a case as a graph over the alphabet.
pub fn language_graph(case: SensorCase) -> LanguageGraph {
    let maximal: Vec<Word> = match case {
        SensorCase::Frontal | SensorCase::BorderlineFrontal => ["S+E1+*E2-S-", "S+E2+*E1-S-"],
        _ => ["E1+*E2-S-E1-", "E1+S+E2+*E1-"],
    }
    .iter()
    .map(|s| s.parse().expect("static word"))
    .collect();
    let mut edges = BTreeSet::new();
    let mut words = BTreeSet::new();
    for m in &maximal {
        for p in m.0.windows(2) {
            edges.insert((p[0].to_string(), p[1].to_string()));
        }
        let n = m.0.len();
        for i in 0..n {
            for j in i + 1..=n {
                let sub = &m.0[i..j];
                if sub[0] != Symbol::Rot && sub[sub.len() - 1] != Symbol::Rot {
                    words.insert(Word(sub.to_vec()).to_string());
                }
            }
        }
    }
    LanguageGraph {
        maximal,
        edges,
        words: words.iter().map(|s| s.parse().expect("generated word")).collect(),
    }
}

/// A planned query: the winning cell, the path in the caller's frame, and
/// the same path in the reduced frame where the sensor geometry lives.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Plan {
    pub label: RegionLabel,
    pub path: Path,
    pub reduced: Path,
}

/// Annulus ρ ∈ [rho_min, rho_max] sampled by `partition`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Window {
    pub rho_min: f64,
    pub rho_max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PartitionSample {
    pub point: PolarPoint,
    pub label: RegionLabel,
    pub length: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Border {
    pub name: String,
    pub points: Vec<PolarPoint>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub samples: Vec<PartitionSample>,
    pub borders: Vec<Border>,
}

/// Per-(Γ, δ, ρ_P) precomputation shared by all queries.
pub struct Synthesis {
    /// Geometry of the reduced offset.
    pub geom: SensorGeometry,
    pub reduction: Reduction,
    pub rho_p: f64,
    pub thresholds: Thresholds,
    /// cot φ1 and cot φ2 (infinite for H, zero for C).
    pub t1: f64,
    pub t2: f64,
    engine: Engine,
}

impl Synthesis {
    pub fn new(gamma: f64, delta: f64, rho_p: f64) -> Result<Synthesis, SynthesisError> {
        if !(rho_p > 0.0 && rho_p.is_finite()) {
            return Err(SynthesisError::GoalRadius(rho_p));
        }
        let reduction = reduce_gamma(gamma, delta)?;
        let geom = classify(reduction.gamma, delta)?;
        Ok(Synthesis {
            geom,
            reduction,
            rho_p,
            thresholds: thresholds(&geom, rho_p),
            t1: 1.0 / geom.phi1.tan(),
            t2: 1.0 / geom.phi2.tan(),
            engine: Engine::new(&geom, rho_p),
        })
    }

    pub fn goal(&self) -> PolarPoint {
        PolarPoint::new(self.rho_p, 0.0)
    }

    /// Reduced-frame image of a caller-frame point.
    pub fn to_reduced(&self, q: &PolarPoint) -> PolarPoint {
        if self.reduction.mirror {
            q.mirrored()
        } else {
            *q
        }
    }

    /// Caller-frame image of a reduced-frame path.
    pub fn from_reduced(&self, p: &Path) -> Path {
        let Reduction {
            reverse_time,
            mirror,
            ..
        } = self.reduction;
        let arcs = p
            .arcs
            .iter()
            .map(|a| {
                let mut symbol = a.symbol;
                if mirror {
                    symbol = match symbol {
                        Symbol::E1(d) => Symbol::E2(d),
                        Symbol::E2(d) => Symbol::E1(d),
                        s => s,
                    };
                }
                if reverse_time {
                    symbol = symbol.flipped();
                }
                let pt = |x: PolarPoint| if mirror { x.mirrored() } else { x };
                let phi = a.phi.map(|b| {
                    let b = if mirror { -b } else { b };
                    if reverse_time {
                        wrap_angle(b + PI)
                    } else {
                        b
                    }
                });
                Arc {
                    symbol,
                    start: pt(a.start),
                    end: pt(a.end),
                    length: a.length,
                    phi,
                }
            })
            .collect();
        Path::new(arcs)
    }

    /// Shortest path from `q` to P in the caller's frame.
    pub fn synthesize(&self, q: &PolarPoint) -> Result<Path, SynthesisError> {
        Ok(self.plan(q)?.path)
    }

    pub fn classify_point(&self, q: &PolarPoint) -> Result<RegionLabel, SynthesisError> {
        Ok(self.plan(q)?.label)
    }

    pub fn plan(&self, q: &PolarPoint) -> Result<Plan, SynthesisError> {
        if !(q.rho > 0.0) || !q.rho.is_finite() || !q.psi.is_finite() {
            return Err(SynthesisError::AtOrigin);
        }
        let qr = self.to_reduced(q);
        let (label, reduced) = self.plan_reduced(&qr)?;
        Ok(Plan {
            label,
            path: self.from_reduced(&reduced),
            reduced,
        })
    }

    /// Planning in the reduced frame; the path starts exactly at `q`.
    pub fn plan_reduced(&self, q: &PolarPoint) -> Result<(RegionLabel, Path), SynthesisError> {
        let wrapped = PolarPoint::new(q.rho, wrap_angle(q.psi));
        let shift = q.psi - wrapped.psi;
        let (label, path) = if wrapped.rho <= self.rho_p {
            let (cell, path) = self.interior(&wrapped)?;
            (
                RegionLabel {
                    cell,
                    exterior: false,
                },
                path,
            )
        } else {
            // fold outside points into the disk; F maps the fold back onto q
            let folded = PolarPoint::new(self.rho_p * self.rho_p / wrapped.rho, -wrapped.psi);
            let (cell, inner) = self.interior(&folded)?;
            (
                RegionLabel {
                    cell,
                    exterior: true,
                },
                transform_path(&inner, &folded, self.rho_p)?,
            )
        };
        Ok((label, shift_path(&path, shift, q)))
    }

    /// All candidate lengths for an interior point, in cell order.
    pub fn candidate_lengths(&self, q: &PolarPoint) -> Vec<(Cell, f64)> {
        Cell::candidates(self.geom.case)
            .iter()
            .filter_map(|&c| self.candidate(c, q).map(|(l, _)| (c, l)))
            .collect()
    }

    fn interior(&self, q: &PolarPoint) -> Result<(Cell, Path), SynthesisError> {
        let p = self.goal();
        if q.distance(&p) <= 1e-15 * self.rho_p {
            return Ok((Cell::I, Path::default()));
        }
        let mut best: Option<(Cell, f64, Path)> = None;
        for &cell in Cell::candidates(self.geom.case) {
            let Some((len, path)) = self.candidate(cell, q) else {
                continue;
            };
            // strict improvement beyond the tie band keeps the lower cell on ties
            let better = best
                .as_ref()
                .map_or(true, |b| len < b.1 - TIE * self.rho_p);
            if better {
                best = Some((cell, len, path));
            }
        }
        best.map(|(c, _, p)| (c, p.pruned(PRUNE * self.rho_p)))
            .ok_or(SynthesisError::NoPath)
    }

    /// Length and path of one cell's word from an interior point.
    pub fn candidate(&self, cell: Cell, q: &PolarPoint) -> Option<(f64, Path)> {
        match cell {
            Cell::I => self.direct(q, B),
            Cell::IPrime => self.direct(q, F),
            Cell::III => Some(self.through_origin(q)),
            _ => {
                let legs = cell.legs()?;
                let mut inst = self.engine.solve(&legs, q, SCAN)?;
                if cell == Cell::V {
                    self.polish_on_semicircle(&legs, q, &mut inst);
                }
                let path = self.engine.build(&legs, q, &inst)?;
                Some((inst.length, path))
            }
        }
    }

    /// On the upper semicircle of C(P) in the Side case the switch angle of
    /// E1⁺*E2⁻S⁻ has a closed-form optimality condition; use it in place of
    /// the numerical minimizer so the switching points are exact.
    fn polish_on_semicircle(&self, legs: &[Leg], q: &PolarPoint, inst: &mut Instance) {
        if self.geom.case != SensorCase::Side || (q.rho - self.rho_p).abs() > 1e-12 * self.rho_p {
            return;
        }
        if !(q.psi > 0.0 && q.psi <= PI) {
            return;
        }
        let alpha = optimal_alpha(q.psi, &self.geom).unwrap_or(0.0);
        let b = self.geom.phi2 - alpha;
        if let Some(l) = self.engine.evaluate(legs, q, &[b], None, inst.k) {
            if l <= inst.length + 1e-12 * self.rho_p {
                inst.length = l;
                inst.free = vec![b];
            }
        }
    }

    /// The single straight arc q → P, when it keeps the landmark in view.
    fn direct(&self, q: &PolarPoint, dir: Dir) -> Option<(f64, Path)> {
        let p = self.goal();
        if !segment_feasible(q, &p, dir, &self.geom, DIRECT_SLACK) {
            return None;
        }
        let (b0, b1) = segment_bearings(q, &p, dir)?;
        if b0.abs() < 1e-12 || b1.abs() < 1e-12 {
            // radial: the landmark sits on the line, which is only allowed if
            // the segment does not cross it
            if q.psi.cos() < 0.0 && dir == F {
                return None;
            }
        }
        let mut arc = Arc::straight(dir, *q, p);
        arc.end = PolarPoint::new(self.rho_p, ((q.psi + b1 - b0) / TAU).round() * TAU);
        Some((arc.length, Path::new(vec![arc])))
    }

    /// Region III: into the landmark and out again along the steepest edges.
    pub fn through_origin(&self, q: &PolarPoint) -> (f64, Path) {
        let o = PolarPoint::origin();
        let p = self.goal();
        if self.geom.sees_ahead() {
            let straight = self.geom.case == SensorCase::Frontal;
            let (sym_in, sym_out, phi) = if straight {
                (Symbol::S(F), Symbol::S(B), None)
            } else {
                (Symbol::E1(F), Symbol::E1(B), Some(0.0))
            };
            let arcs = vec![
                Arc {
                    symbol: sym_in,
                    start: *q,
                    end: o,
                    length: q.rho,
                    phi,
                },
                Arc::rotation(o),
                Arc {
                    symbol: sym_out,
                    start: o,
                    end: p,
                    length: self.rho_p,
                    phi,
                },
            ];
            let path = Path::new(arcs);
            return (path.total_length, path);
        }
        let (c1, c2) = (self.geom.phi1.cos().abs(), self.geom.phi2.cos().abs());
        let (sym_in, phi_in, c_in) = if c1 >= c2 {
            (Symbol::E1(F), self.geom.phi1, c1)
        } else {
            (Symbol::E2(B), self.geom.phi2, c2)
        };
        let (sym_out, phi_out, c_out) = if c1 >= c2 {
            (Symbol::E1(B), self.geom.phi1, c1)
        } else {
            (Symbol::E2(F), self.geom.phi2, c2)
        };
        let arcs = vec![
            Arc {
                symbol: sym_in,
                start: *q,
                end: o,
                length: q.rho / c_in,
                phi: Some(phi_in),
            },
            Arc::rotation(o),
            Arc {
                symbol: sym_out,
                start: o,
                end: p,
                length: self.rho_p / c_out,
                phi: Some(phi_out),
            },
        ];
        let path = Path::new(arcs);
        (path.total_length, path)
    }

    /// Length of the existence witness: radial through the landmark in the
    /// cases that see ahead; otherwise a spiral pair meeting at a switch N
    /// (E1⁺*E2⁻, or E2⁻*E1⁻ in the Lateral case) or, with E2 = C, a run
    /// along E1 to C(P) followed by the circle. A spiral pair that needs more
    /// turns than the winding search tries falls back to the passage through
    /// the landmark. Outside D(P) the witness of the folded point is carried
    /// back by F and scaled.
    pub fn upper_bound(&self, q: &PolarPoint) -> Result<f64, SynthesisError> {
        if !(q.rho > 0.0) {
            return Err(SynthesisError::AtOrigin);
        }
        let q = self.to_reduced(q);
        let q = PolarPoint::new(q.rho, wrap_angle(q.psi));
        if q.rho > self.rho_p {
            // the F-image of the folded point's witness is a witness for q
            let folded = PolarPoint::new(self.rho_p * self.rho_p / q.rho, -q.psi);
            let inner = self.to_reduced(&folded);
            return Ok(self.upper_bound(&inner)? * q.rho / self.rho_p);
        }
        match self.geom.case {
            SensorCase::Frontal | SensorCase::BorderlineFrontal => Ok(q.rho + self.rho_p),
            SensorCase::BorderlineSide => {
                let p1 = self.geom.phi1;
                let dpsi = -p1.tan() * (self.rho_p / q.rho).ln();
                let arc = wrap_angle(q.psi + dpsi).abs();
                Ok((self.rho_p - q.rho).abs() / p1.cos() + self.rho_p * arc)
            }
            SensorCase::Side | SensorCase::Lateral => {
                let legs = if self.geom.case == SensorCase::Side {
                    [Leg::E(1, F), Leg::Rot, Leg::E(2, B)]
                } else {
                    [Leg::E(2, B), Leg::Rot, Leg::E(1, B)]
                };
                let passage = self.through_origin(&q).0;
                Ok(self
                    .engine
                    .solve(&legs, &q, SCAN)
                    .map_or(passage, |i| i.length.min(passage)))
            }
        }
    }

    /// Switching points of the E1⁺*E2⁻S⁻ path from a point on the upper
    /// semicircle: N (spiral to spiral) and M2 (E2 to the final straight arc).
    pub fn switching_points(&self, q: &PolarPoint) -> Option<(PolarPoint, PolarPoint)> {
        let legs = Cell::V.legs()?;
        let mut inst = self.engine.solve(&legs, q, SCAN)?;
        self.polish_on_semicircle(&legs, q, &mut inst);
        let path = self.engine.build(&legs, q, &inst)?;
        Some((path.arcs[0].end, path.arcs[2].end))
    }

    /// Samples labels on a polar grid and traces the analytic borders.
    pub fn partition(&self, window: Window, n_rho: usize, n_psi: usize) -> Partition {
        let points: Vec<PolarPoint> = (0..n_rho)
            .flat_map(|i| {
                let rho = if n_rho == 1 {
                    window.rho_min
                } else {
                    window.rho_min + (window.rho_max - window.rho_min) * i as f64 / (n_rho - 1) as f64
                };
                (0..n_psi).map(move |j| PolarPoint::new(rho, -PI + TAU * (j as f64 + 0.5) / n_psi as f64))
            })
            .collect();
        let samples = points
            .par_iter()
            .filter_map(|q| {
                self.plan(q).ok().map(|plan| PartitionSample {
                    point: *q,
                    label: plan.label,
                    length: plan.path.total_length,
                })
            })
            .collect();
        Partition {
            samples,
            borders: self.borders(window),
        }
    }

    /// Border curves in the caller's frame: the interior borders and their
    /// images under the fold (ρ, ψ) ↦ (ρ_P²/ρ, −ψ).
    pub fn borders(&self, window: Window) -> Vec<Border> {
        let rp = self.rho_p;
        let p = self.goal();
        let n = 256;
        let mut inner: Vec<Border> = Vec::new();
        inner.push(Border {
            name: "C(P)".into(),
            points: (0..=n).map(|i| PolarPoint::new(rp, -PI + TAU * i as f64 / n as f64)).collect(),
        });
        let lo = window.rho_min.max(1e-3 * rp).min(rp);
        for (name, phi) in [("E1(P)", self.geom.phi1), ("E2(P)", self.geom.phi2)] {
            if (phi.abs() - FRAC_PI_2).abs() > 1e-12 {
                inner.push(Border {
                    name: name.into(),
                    points: spiral_polyline(&p, phi, lo, rp, n),
                });
            }
        }
        if let Ok(sf) = straight_region(&p, &self.geom, F) {
            inner.push(Border {
                name: "dSF2(P)".into(),
                points: sf.boundary_2.sample(n, rp),
            });
            inner.push(Border {
                name: "dSF1(P)".into(),
                points: sf.boundary_1.sample(n, rp),
            });
        }
        let t = self.thresholds;
        if let Some(m) = t.m.filter(|m| m.rho > 0.0 && m.rho.is_finite()) {
            if let Ok(sf) = straight_region(&m, &self.geom, F) {
                inner.push(Border {
                    name: "dSF2(M)".into(),
                    points: sf.boundary_2.sample(n, rp),
                });
            }
        }
        for (name, psi) in [("E1(R1)", t.psi_r1), ("E1(R2)", t.psi_r2)] {
            if psi.is_finite() && self.geom.phi1 != 0.0 && psi <= PI {
                inner.push(Border {
                    name: name.into(),
                    points: spiral_polyline(&PolarPoint::new(rp, psi), self.geom.phi1, lo, rp, n),
                });
            }
        }
        if self.geom.case == SensorCase::Frontal {
            if let Some(c) = xi_circle(&self.geom, rp) {
                inner.push(Border {
                    name: "xi-circle".into(),
                    points: c
                        .into_iter()
                        .filter(|v| v.rho <= rp * (1.0 + 1e-12))
                        .collect(),
                });
            }
        }
        let mut out = Vec::with_capacity(2 * inner.len());
        for b in &inner {
            if b.name != "C(P)" {
                out.push(Border {
                    name: format!("F[{}]", b.name),
                    points: b
                        .points
                        .iter()
                        .filter(|v| v.rho > 0.0)
                        .map(|v| PolarPoint::new(rp * rp / v.rho, -v.psi))
                        .filter(|v| v.rho <= window.rho_max)
                        .collect(),
                });
            }
        }
        out.extend(inner);
        if self.reduction.mirror {
            for b in &mut out {
                for v in &mut b.points {
                    *v = v.mirrored();
                }
            }
        }
        out
    }
}

/// Translates every ψ of a path by `shift` and pins its start to `q`.
fn shift_path(p: &Path, shift: f64, q: &PolarPoint) -> Path {
    let mv = |v: PolarPoint| {
        if v.is_origin() {
            v
        } else {
            PolarPoint::new(v.rho, v.psi + shift)
        }
    };
    let mut arcs: Vec<Arc> = p
        .arcs
        .iter()
        .map(|a| Arc {
            start: mv(a.start),
            end: mv(a.end),
            ..*a
        })
        .collect();
    if let Some(first) = arcs.first_mut() {
        first.start = *q;
    }
    Path::new(arcs)
}

/// Points of the spiral with characteristic angle `phi` through `anchor`
/// for radii in [lo, hi].
pub fn spiral_polyline(anchor: &PolarPoint, phi: f64, lo: f64, hi: f64, n: usize) -> Vec<PolarPoint> {
    (0..=n)
        .map(|i| {
            // geometric spacing keeps windings near the landmark resolved
            let rho = lo * (hi / lo).powf(i as f64 / n as f64);
            let psi = if phi == 0.0 {
                anchor.psi
            } else {
                anchor.psi - phi.tan() * (rho / anchor.rho).ln()
            };
            PolarPoint::new(rho, psi)
        })
        .collect()
}

/// The Frontal-case circle carrying R1 and R2: centre (0, y_c) with
/// y_c = −ρ_P(sin²φ1 − sin²φ2)/(2 sin ξ sin φ1 sin φ2), through P.
pub fn xi_circle(geom: &SensorGeometry, rho_p: f64) -> Option<Vec<PolarPoint>> {
    let (p1, p2) = (geom.phi1, geom.phi2);
    if !(p1 < 0.0 && p2 > 0.0) {
        return None;
    }
    let (t1, t2) = (1.0 / p1.tan(), 1.0 / p2.tan());
    let xi = (t1 + t2) / (t1 * t2) * ((p1.cos() + p2.cos()) / (p2 - p1).sin()).ln()
        + (-p1.sin()).ln() / t1
        - p2.sin().ln() / t2;
    let s = xi.sin();
    if s.abs() < 1e-15 {
        return None;
    }
    let yc = -rho_p * (p1.sin().powi(2) - p2.sin().powi(2)) / (2.0 * s * p1.sin() * p2.sin());
    let r = rho_p.hypot(yc);
    let n = 512;
    Some(
        (0..=n)
            .map(|i| {
                let a = TAU * i as f64 / n as f64;
                PolarPoint::from_xy(r * a.cos(), yc + r * a.sin())
            })
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn side() -> Synthesis {
        Synthesis::new(PI / 4.0, PI / 6.0, 1.0).unwrap()
    }

    #[test]
    fn reduce_examples() {
        let r = reduce_gamma(0.3, 0.5).unwrap();
        assert_eq!((r.gamma, r.reverse_time, r.mirror), (0.3, false, false));
        let r = reduce_gamma(-0.3, 0.5).unwrap();
        assert_eq!((r.gamma, r.reverse_time, r.mirror), (0.3, false, true));
        let r = reduce_gamma(2.0, 0.5).unwrap();
        assert!((r.gamma - (PI - 2.0)).abs() < 1e-15);
        assert!(r.reverse_time && r.mirror);
        let r = reduce_gamma(-2.0, 0.5).unwrap();
        assert!((r.gamma - (PI - 2.0)).abs() < 1e-15);
        assert!(r.reverse_time && !r.mirror);
        assert!(reduce_gamma(3.5, 0.5).is_err());
    }

    #[test]
    fn goal_is_region_one_with_empty_motion() {
        let s = side();
        let plan = s.plan(&s.goal()).unwrap();
        assert_eq!(plan.label.cell, Cell::I);
        assert!(plan.path.arcs.is_empty());
    }

    #[test]
    fn semicircle_regions_follow_thresholds() {
        let s = side();
        let t = s.thresholds;
        let at = |psi: f64| s.classify_point(&PolarPoint::new(1.0, psi)).unwrap().cell;
        assert_eq!(at(0.5 * t.psi_r1), Cell::II);
        assert_eq!(at(0.5 * (t.psi_r1 + t.psi_r2)), Cell::V);
        assert_eq!(at(0.5 * (t.psi_r2 + PI)), Cell::III);
    }

    #[test]
    fn lower_semicircle_mirrors_upper_with_image_words() {
        let s = side();
        for psi in [0.7, 1.4, 2.5] {
            let up = s.plan(&PolarPoint::new(1.0, psi)).unwrap();
            let down = s.plan(&PolarPoint::new(1.0, -psi)).unwrap();
            assert!((up.path.total_length - down.path.total_length).abs() < 1e-9);
        }
    }

    #[test]
    fn exterior_is_transform_of_folded_interior() {
        let s = side();
        let q = PolarPoint::new(2.5, 0.9);
        let out = s.plan(&q).unwrap();
        assert!(out.label.exterior);
        let folded = PolarPoint::new(1.0 / 2.5, -0.9);
        let inner = s.plan(&folded).unwrap();
        let ratio = out.path.total_length / inner.path.total_length;
        assert!((ratio - 2.5).abs() < 1e-12);
        assert_eq!(out.label.cell, inner.label.cell);
    }

    #[test]
    fn paths_start_at_query_and_end_at_goal() {
        let s = side();
        for q in [PolarPoint::new(0.4, 2.0), PolarPoint::new(3.0, -2.0), PolarPoint::new(0.9, 7.0)] {
            let p = s.synthesize(&q).unwrap();
            assert_eq!(p.start().unwrap(), q);
            let end = p.end().unwrap();
            assert!(end.distance(&s.goal()) < 1e-9);
            assert!(p.max_gap() < 1e-9);
        }
    }

    #[test]
    fn language_graph_edges() {
        let g = language_graph(SensorCase::Side);
        assert!(g.has_edge(Symbol::E1(F), Symbol::Rot));
        assert!(g.has_edge(Symbol::Rot, Symbol::E2(B)));
        assert!(!g.has_edge(Symbol::E1(F), Symbol::E2(F)));
        for (a, b) in &g.edges {
            // no backward arc is ever followed by a forward one
            assert!(!(a.ends_with('-') && b.ends_with('+')), "{a} -> {b}");
        }
        assert!(g.accepts(&"E1+*E2-S-E1-".parse().unwrap()));
        let f = language_graph(SensorCase::Frontal);
        assert!(f.accepts(&"S+E2+*E1-S-".parse().unwrap()));
        assert!(!f.accepts(&"E1+*E2-S-E1-".parse().unwrap()));
    }

    #[test]
    fn cell_words_are_in_language() {
        for case in SensorCase::ALL {
            let g = language_graph(case);
            for &c in Cell::candidates(case) {
                let w = c.word(case);
                if c != Cell::III {
                    assert!(g.accepts(&w), "{case} {c} {w}");
                }
            }
        }
    }

    #[test]
    fn primed_cells_carry_image_words() {
        let pairs = [
            (Cell::II, Cell::IIPrime),
            (Cell::IV, Cell::IVPrime),
            (Cell::IVa, Cell::IVaPrime),
            (Cell::V, Cell::VPrime),
            (Cell::VI, Cell::VIPrime),
            (Cell::VII, Cell::VIIPrime),
            (Cell::VIII, Cell::VIIIPrime),
        ];
        for (a, b) in pairs {
            assert_eq!(a.word(SensorCase::Side).transformed(), b.word(SensorCase::Side));
        }
    }

    #[test]
    fn frontal_symmetric_xi_circle_is_goal_circle() {
        let g = classify(0.0, 1.0).unwrap();
        let c = xi_circle(&g, 1.3).unwrap();
        for v in c {
            assert!((v.rho - 1.3).abs() < 1e-12);
        }
    }

    #[test]
    fn upper_bound_dominates_plan() {
        for (gamma, delta) in [(0.1, 0.8), (0.4, 0.8), (PI / 4.0, PI / 6.0), (1.3208, 0.5), (1.3, 0.8)] {
            let s = Synthesis::new(gamma, delta, 1.0).unwrap();
            for q in [PolarPoint::new(0.5, 1.0), PolarPoint::new(1.7, -2.2), PolarPoint::new(0.2, 3.0)] {
                let l = s.synthesize(&q).unwrap().total_length;
                let u = s.upper_bound(&q).unwrap();
                assert!(l <= u + 1e-9, "{gamma} {delta} {q:?}: {l} > {u}");
            }
        }
    }
}
