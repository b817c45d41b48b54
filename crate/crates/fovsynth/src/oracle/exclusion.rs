//! Random instances of the excluded concatenations, each checked against
//! the construction that shortens it.
//!
//! * Backward then forward: the arc pair rises above the larger end radius
//!   r; the part above r is contracted about the landmark by r/ρ_Z from its
//!   farthest point Z, once onto each end, and the two images meet.
//! * E_i then E_j in one direction: the corner at the switch is cut by a
//!   straight chord close to it.
//! * S then a spiral across a rotation: the replacement words are solved
//!   exactly between the same end points.
//!
//! A sample whose hypothesis does not hold (no radius above both ends, say)
//! is counted as not applicable rather than passed.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{direct_length, spiral_length, spiral_sign_ok, step, Family, FamilyOptions};
use crate::geometry::{wrap_angle, PolarPoint};
use crate::sensor::{classify, segment_feasible, SensorCase, SensorGeometry};
use crate::synthesis::{Dir, Word};

/// Samples per leg when an arc pair is discretized.
const DENSE: usize = 400;
/// Bearings are kept this far from the cone edges and from zero.
const MARGIN: f64 = 0.02;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub family: String,
    pub word: String,
    pub start: PolarPoint,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ProbeTally {
    pub name: String,
    pub tried: usize,
    pub shortened: usize,
    pub not_applicable: usize,
    /// Smallest relative saving among shortened samples.
    pub min_saving: f64,
    pub counterexamples: Vec<Counterexample>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExclusionReport {
    pub case: SensorCase,
    pub gamma: f64,
    pub delta: f64,
    pub samples: usize,
    pub families: Vec<ProbeTally>,
}

impl ExclusionReport {
    pub fn counterexamples(&self) -> usize {
        self.families.iter().map(|f| f.counterexamples.len()).sum()
    }

    pub fn ok(&self) -> bool {
        self.counterexamples() == 0
    }
}

/// Representative sensor of each case, in the reduced range Γ ∈ [0, π/2].
pub fn representative(case: SensorCase) -> SensorGeometry {
    let (g, d) = match case {
        SensorCase::Frontal => (0.1, 0.8),
        SensorCase::BorderlineFrontal => (0.4, 0.8),
        SensorCase::Side => (PI / 4.0, PI / 6.0),
        SensorCase::BorderlineSide => ((PI - 0.6) / 2.0, 0.6),
        SensorCase::Lateral => (1.3, 0.8),
    };
    classify(g, d).expect("representative sensors are valid")
}

pub fn exclusion_probe(case: SensorCase, samples: usize) -> ExclusionReport {
    exclusion_probe_with(&representative(case), samples, 0x5eed)
}

#[derive(Clone, Copy, Debug)]
enum Move {
    Straight { theta: f64, nu: f64, len: f64 },
    Spiral { phi: f64, lam: f64, nu: f64 },
}

#[derive(Clone, Copy, Debug)]
struct Leg {
    start: PolarPoint,
    mv: Move,
}

impl Leg {
    /// Point and heading at fraction t of the leg.
    fn at(&self, t: f64) -> (PolarPoint, f64) {
        match self.mv {
            Move::Straight { theta, nu, len } => {
                let (x, y) = self.start.to_xy();
                let s = nu * len * t;
                (PolarPoint::from_xy(x + s * theta.cos(), y + s * theta.sin()), theta)
            }
            Move::Spiral { phi, lam, .. } => {
                let (u, v) = step(phi);
                let p = PolarPoint::new(self.start.rho * (t * lam * u).exp(), self.start.psi + t * lam * v);
                (p, p.psi + PI - phi)
            }
        }
    }

    fn end(&self) -> PolarPoint {
        self.at(1.0).0
    }

    fn length(&self) -> f64 {
        match self.mv {
            Move::Straight { len, .. } => len,
            Move::Spiral { phi, lam, .. } => spiral_length(phi, lam, self.start.rho),
        }
    }

    fn nu(&self) -> f64 {
        match self.mv {
            Move::Straight { nu, .. } | Move::Spiral { nu, .. } => nu,
        }
    }
}

/// Which extremal a sampled leg follows.
#[derive(Clone, Copy, Debug, PartialEq)]
enum Kind {
    S,
    E(u8),
}

impl Kind {
    fn label(self, d: Dir) -> String {
        let m = if d == Dir::Forward { '+' } else { '-' };
        match self {
            Kind::S => format!("S{m}"),
            Kind::E(i) => format!("E{i}{m}"),
        }
    }
}

/// Interval of bearings with one sign, chosen at random among the cone's parts.
fn bearing_side(geom: &SensorGeometry, rng: &mut ChaCha8Rng) -> Option<(f64, f64)> {
    let mut sides = Vec::new();
    if geom.phi2 > MARGIN * 2.0 {
        sides.push((geom.phi1.max(MARGIN), geom.phi2 - MARGIN.min(geom.phi2 / 4.0)));
    }
    if geom.phi1 < -MARGIN * 2.0 {
        sides.push((geom.phi1 + MARGIN.min(-geom.phi1 / 4.0), geom.phi2.min(-MARGIN)));
    }
    sides.retain(|(a, b)| b > a);
    if sides.is_empty() {
        return None;
    }
    Some(sides[rng.gen_range(0..sides.len())])
}

/// Straight leg from `g` in direction `d` between random bearings of one sign.
fn random_straight(g: PolarPoint, d: Dir, geom: &SensorGeometry, rng: &mut ChaCha8Rng) -> Option<(Leg, f64)> {
    let (lo, hi) = bearing_side(geom, rng)?;
    let (x, y) = (rng.gen_range(lo..hi), rng.gen_range(lo..hi));
    let (small, large) = if x.abs() < y.abs() { (x, y) } else { (y, x) };
    if (large - small).abs() < 1e-3 {
        return None;
    }
    let (b0, b1) = match d {
        Dir::Forward => (small, large),
        Dir::Backward => (large, small),
    };
    Some((straight_leg(g, d, b0, b1), b1))
}

fn straight_leg(g: PolarPoint, d: Dir, b0: f64, b1: f64) -> Leg {
    Leg {
        start: g,
        mv: Move::Straight {
            theta: g.psi + PI - b0,
            nu: d.nu(),
            len: g.rho * ((b1 - b0).sin() / b1.sin()).abs(),
        },
    }
}

/// Spiral leg from `g` along edge `i` in direction `d` with a random extent.
fn random_spiral(g: PolarPoint, i: u8, d: Dir, geom: &SensorGeometry, rng: &mut ChaCha8Rng) -> Leg {
    let phi = geom.phi(i);
    let mag = if phi.abs() < 1e-12 {
        rng.gen_range(0.05..0.8)
    } else {
        // at most a quarter turn and a factor e² in radius
        let (u, _) = step(phi);
        let cap = if u.abs() > 1e-12 { (2.0 / u.abs()).min(FRAC_PI_2) } else { FRAC_PI_2 };
        rng.gen_range(0.03..1.0) * cap
    };
    let lam = if spiral_sign_ok(phi, d, 1.0) { mag } else { -mag };
    Leg {
        start: g,
        mv: Move::Spiral { phi, lam, nu: d.nu() },
    }
}

fn random_leg(g: PolarPoint, kind: Kind, d: Dir, geom: &SensorGeometry, rng: &mut ChaCha8Rng) -> Option<Leg> {
    match kind {
        Kind::S => random_straight(g, d, geom, rng).map(|(l, _)| l),
        Kind::E(i) => Some(random_spiral(g, i, d, geom, rng)),
    }
}

fn random_kind(rng: &mut ChaCha8Rng) -> Kind {
    match rng.gen_range(0..3) {
        0 => Kind::S,
        1 => Kind::E(1),
        _ => Kind::E(2),
    }
}

fn random_start(rng: &mut ChaCha8Rng) -> PolarPoint {
    PolarPoint::new(rng.gen_range(0.3..2.0), rng.gen_range(-PI..PI))
}

fn dense(legs: &[Leg]) -> Vec<(PolarPoint, f64, f64)> {
    let mut out = Vec::with_capacity(legs.len() * (DENSE + 1));
    for l in legs {
        for k in 0..=DENSE {
            let (p, th) = l.at(k as f64 / DENSE as f64);
            out.push((p, th, l.nu()));
        }
    }
    out
}

fn polyline_length(pts: &[(PolarPoint, f64, f64)]) -> f64 {
    pts.windows(2).map(|w| w[0].0.distance(&w[1].0)).sum()
}

fn in_cone(geom: &SensorGeometry, p: &PolarPoint, theta: f64, tol: f64) -> bool {
    let b = wrap_angle(p.psi + PI - theta);
    geom.phi1 - tol <= b && b <= geom.phi2 + tol
}

enum Outcome {
    Shortened(f64),
    NotApplicable,
    Counter(String),
}

/// Backward arc, rotation, forward arc; contraction about the landmark.
fn probe_backward_forward(geom: &SensorGeometry, rng: &mut ChaCha8Rng) -> (String, PolarPoint, Outcome) {
    let a = random_start(rng);
    let (k1, k2) = (random_kind(rng), random_kind(rng));
    let word = format!("{}*{}", k1.label(Dir::Backward), k2.label(Dir::Forward));
    let Some(l1) = random_leg(a, k1, Dir::Backward, geom, rng) else {
        return (word, a, Outcome::NotApplicable);
    };
    let Some(l2) = random_leg(l1.end(), k2, Dir::Forward, geom, rng) else {
        return (word, a, Outcome::NotApplicable);
    };
    let pts = dense(&[l1, l2]);
    let r = pts[0].0.rho.max(pts[pts.len() - 1].0.rho);
    let (iz, z) = pts
        .iter()
        .enumerate()
        .fold((0, pts[0].0), |acc, (i, p)| if p.0.rho > acc.1.rho { (i, p.0) } else { acc });
    if z.rho <= r * (1.0 + 1e-6) {
        return (word, a, Outcome::NotApplicable);
    }
    // the stretch above r around Z, bounded by its crossings A and B
    let mut ia = iz;
    while ia > 0 && pts[ia - 1].0.rho > r {
        ia -= 1;
    }
    let mut ib = iz;
    while ib + 1 < pts.len() && pts[ib + 1].0.rho > r {
        ib += 1;
    }
    if pts[..ia].iter().chain(&pts[ib + 1..]).any(|p| p.0.rho > r * (1.0 + 1e-9)) {
        // rises above r twice; the theorem applies to each rise separately
        return (word, a, Outcome::NotApplicable);
    }
    let legs = [l1, l2];
    let per = DENSE + 1;
    // crossing of radius r between samples i and j of one leg, by bisection on the leg
    let cross = |i: usize, j: usize| {
        let leg = &legs[i / per];
        let (mut ti, mut tj) = ((i % per) as f64 / DENSE as f64, (j % per) as f64 / DENSE as f64);
        for _ in 0..100 {
            let tm = 0.5 * (ti + tj);
            if leg.at(tm).0.rho > r {
                tj = tm;
            } else {
                ti = tm;
            }
        }
        let (p, th) = leg.at(0.5 * (ti + tj));
        (PolarPoint::new(r, p.psi), th, leg.nu())
    };
    let ea = if ia == 0 { pts[0] } else { cross(ia - 1, ia) };
    let eb = if ib + 1 == pts.len() { pts[ib] } else { cross(ib + 1, ib) };
    let (pa, pb) = (ea.0, eb.0);
    let mut above: Vec<(PolarPoint, f64, f64)> = vec![ea];
    above.extend_from_slice(&pts[ia..=ib]);
    above.push(eb);
    let old = polyline_length(&above);
    let zi = iz - ia + 1;
    let c = r / z.rho;
    let map = |p: &(PolarPoint, f64, f64), rot: f64| (PolarPoint::new(p.0.rho * c, p.0.psi + rot), p.1 + rot, -p.2);
    // Z → B onto A, and Z → A onto B driven backwards
    let g1: Vec<_> = above[zi..].iter().map(|p| map(p, pa.psi - z.psi)).collect();
    let g2: Vec<_> = above[..=zi].iter().rev().map(|p| map(p, pb.psi - z.psi)).collect();
    let meet = g1[g1.len() - 1].0.distance(&g2[g2.len() - 1].0);
    let new = polyline_length(&g1) + polyline_length(&g2);
    let scale = r;
    let starts_ok = g1[0].0.distance(&pa) <= 1e-9 * scale && g2[0].0.distance(&pb) <= 1e-9 * scale;
    let inside = g1.iter().chain(&g2).all(|p| p.0.rho <= r * (1.0 + 1e-9));
    let feasible = g1.iter().chain(&g2).all(|p| in_cone(geom, &p.0, p.1, 1e-9));
    let outcome = if !starts_ok || meet > 1e-9 * scale {
        Outcome::Counter(format!("images do not meet (gap {meet:e})"))
    } else if !inside {
        Outcome::Counter("contracted path leaves the disk".into())
    } else if !feasible {
        Outcome::Counter("contracted path loses the landmark".into())
    } else if new >= old {
        Outcome::Counter(format!("contracted length {new} not below {old}"))
    } else {
        Outcome::Shortened(1.0 - new / old)
    };
    (word, a, outcome)
}

/// E_i then E_j (i ≠ j) in one direction; a chord cuts the corner.
fn probe_same_direction(geom: &SensorGeometry, rng: &mut ChaCha8Rng) -> (String, PolarPoint, Outcome) {
    let a = random_start(rng);
    let d = if rng.gen_bool(0.5) { Dir::Forward } else { Dir::Backward };
    let (i, j) = if rng.gen_bool(0.5) { (1, 2) } else { (2, 1) };
    let word = format!("{}*{}", Kind::E(i).label(d), Kind::E(j).label(d));
    let l1 = random_spiral(a, i, d, geom, rng);
    let l2 = random_spiral(l1.end(), j, d, geom, rng);
    let (len1, len2) = (l1.length(), l2.length());
    for eps in [0.1, 0.03, 0.01, 0.003, 0.001] {
        // fractions of each arc kept away from the corner
        let t1 = 1.0 - eps * len1.min(len2) / len1;
        let t2 = eps * len1.min(len2) / len2;
        let (pa, _) = l1.at(t1);
        let (pb, _) = l2.at(t2);
        let old = spiral_piece(&l1, t1, 1.0) + spiral_piece(&l2, 0.0, t2);
        let chord = pa.distance(&pb);
        let ok = [Dir::Forward, Dir::Backward]
            .into_iter()
            .any(|dd| segment_feasible(&pa, &pb, dd, geom, 0.0));
        if ok && chord < old {
            return (word, a, Outcome::Shortened(1.0 - chord / old));
        }
    }
    (word, a, Outcome::Counter("no feasible corner chord".into()))
}

/// Exact length of a spiral leg between fractions t0 < t1.
fn spiral_piece(l: &Leg, t0: f64, t1: f64) -> f64 {
    let Move::Spiral { phi, lam, .. } = l.mv else { unreachable!("spiral legs only") };
    spiral_length(phi, lam * (t1 - t0), l.at(t0).0.rho)
}

/// S, rotation, spiral: each pattern with the words said to beat it.
const STRAIGHT_PATTERNS: [(&str, Dir, u8, Dir, &[&str]); 6] = [
    ("S+*E2+", Dir::Forward, 2, Dir::Forward, &["S+E2+", "E2+*E1-"]),
    ("S+*E1-", Dir::Forward, 1, Dir::Backward, &["S+E2+", "E2+*E1-"]),
    ("S+*E1+", Dir::Forward, 1, Dir::Forward, &["E1+S+", "E1+*E2-"]),
    ("S+*E2-", Dir::Forward, 2, Dir::Backward, &["E1+S+", "E1+*E2-"]),
    ("S-*E1-", Dir::Backward, 1, Dir::Backward, &["S-E1-"]),
    ("S-*E2-", Dir::Backward, 2, Dir::Backward, &["E2-S-"]),
];

fn swap_edges(w: &str) -> String {
    w.chars()
        .map(|c| match c {
            '1' => '2',
            '2' => '1',
            c => c,
        })
        .collect()
}

fn probe_straight_spiral(geom: &SensorGeometry, rng: &mut ChaCha8Rng, opts: &FamilyOptions) -> (String, PolarPoint, Outcome) {
    let a = random_start(rng);
    let (name, ds, i, de, repl) = STRAIGHT_PATTERNS[rng.gen_range(0..STRAIGHT_PATTERNS.len())];
    let Some((s, b1)) = random_straight(a, ds, geom, rng) else {
        return (name.into(), a, Outcome::NotApplicable);
    };
    if (b1 - geom.phi(i)).abs() < 1e-3 {
        // no rotation at the switch: the pattern is already tangent
        return (name.into(), a, Outcome::NotApplicable);
    }
    // a frontal cone admits straights on both sides of β = 0, and those on
    // the far side see the mirror image of the pattern
    let mut repl: Vec<String> = repl.iter().map(|w| w.to_string()).collect();
    if geom.phi1 < 0.0 && 0.0 < geom.phi2 {
        if let Some(p) = STRAIGHT_PATTERNS.iter().find(|p| p.1 == ds && p.2 == 3 - i && p.3 == de) {
            repl.extend(p.4.iter().map(|w| swap_edges(w)));
        }
    }
    let e = random_spiral(s.end(), i, de, geom, rng);
    let b = e.end();
    let old = s.length() + e.length();
    // the lone straight is the degenerate member of every replacement with an S
    let mut best = direct_length(&a, &b, geom).unwrap_or(f64::INFINITY);
    for w in &repl {
        let word: Word = w.parse().expect("static word");
        if let Some(inst) = Family::new(&word, geom).and_then(|f| f.minimize(&a, &b, opts)) {
            best = best.min(inst.length);
        }
    }
    let outcome = if best < old - 1e-12 * a.rho.max(b.rho) {
        Outcome::Shortened(1.0 - best / old)
    } else {
        Outcome::Counter(format!("best replacement {best} vs {old} (to {b:?})"))
    };
    (name.into(), a, outcome)
}

/// Runs `samples` probes spread evenly over the three families.
pub fn exclusion_probe_with(geom: &SensorGeometry, samples: usize, seed: u64) -> ExclusionReport {
    let names = ["backward then forward", "same-direction spirals", "straight then spiral"];
    let opts = FamilyOptions {
        root_scan: 64,
        ..FamilyOptions::default()
    };
    let results: Vec<(usize, String, PolarPoint, Outcome)> = (0..samples)
        .into_par_iter()
        .map(|n| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ n as u64);
            let fam = n % 3;
            let (w, a, o) = match fam {
                0 => probe_backward_forward(geom, &mut rng),
                1 => probe_same_direction(geom, &mut rng),
                _ => probe_straight_spiral(geom, &mut rng, &opts),
            };
            (fam, w, a, o)
        })
        .collect();
    let mut families: Vec<ProbeTally> = names
        .iter()
        .map(|n| ProbeTally {
            name: n.to_string(),
            min_saving: f64::INFINITY,
            ..ProbeTally::default()
        })
        .collect();
    for (fam, word, start, o) in results {
        let t = &mut families[fam];
        t.tried += 1;
        match o {
            Outcome::Shortened(s) => {
                t.shortened += 1;
                t.min_saving = t.min_saving.min(s);
            }
            Outcome::NotApplicable => t.not_applicable += 1,
            Outcome::Counter(detail) => t.counterexamples.push(Counterexample {
                family: t.name.clone(),
                word,
                start,
                detail,
            }),
        }
    }
    ExclusionReport {
        case: geom.case,
        gamma: geom.gamma,
        delta: geom.delta,
        samples,
        families,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn side_probe_is_clean() {
        let r = exclusion_probe(SensorCase::Side, 300);
        assert!(r.ok(), "{:?}", r.families);
        assert_eq!(r.families.iter().map(|f| f.tried).sum::<usize>(), 300);
        assert!(r.families.iter().all(|f| f.shortened > 0));
    }

    #[test]
    fn probes_are_deterministic() {
        let g = representative(SensorCase::Frontal);
        assert_eq!(exclusion_probe_with(&g, 60, 7), exclusion_probe_with(&g, 60, 7));
    }

    #[test]
    fn straight_leg_matches_closed_form() {
        let g = PolarPoint::new(1.2, 0.4);
        let l = straight_leg(g, Dir::Forward, 0.5, 0.9);
        let e = l.end();
        assert!((e.rho - 1.2 * 0.5f64.sin() / 0.9f64.sin()).abs() < 1e-12);
        assert!((wrap_angle(e.psi - 0.8)).abs() < 1e-12);
    }
}
