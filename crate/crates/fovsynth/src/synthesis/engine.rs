//! Closed-form construction of candidate words.
//!
//! Every extremal acts on (ln ρ, ψ) as a translation: a spiral E_i by
//! λ·(−cot φ_i, 1), a straight arc from bearing b0 to bearing b1 by
//! (ln(sin b0 / sin b1), b1 − b0), a rotation by nothing. Closing a word at
//! P is linear in the spiral parameters once the straight-arc bearings are
//! fixed, so each word reduces to at most two scalar unknowns.

use std::f64::consts::TAU;

use crate::geometry::{shape_of, PolarPoint, SpiralShape};
use crate::sensor::SensorGeometry;

use super::path::{Arc, Dir, Path, Symbol};

/// Slack on the sign of spiral parameters and on bearing order.
const SIGN_TOL: f64 = 1e-12;
/// Bearings closer than this to 0 make straight arcs radial; they are excluded.
const ZERO_BEARING: f64 = 1e-9;

/// How a straight-arc end bearing is determined.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Bear {
    /// Tangent to E_i: the bearing equals φ_i.
    Edge(u8),
    /// Free parameter number `n`.
    Free(usize),
    /// Solved so that the word closes (words with a single spiral).
    Root,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Leg {
    E(u8, Dir),
    S(Dir, Bear, Bear),
    Rot,
}

/// Concrete parameters of one word instance.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub length: f64,
    pub free: Vec<f64>,
    pub root: Option<f64>,
    pub k: i64,
}

#[derive(Clone, Copy, Debug)]
enum LegValue {
    E(f64),
    S(f64, f64),
    Rot,
}

struct Closed {
    values: Vec<LegValue>,
    residual: f64,
}

pub struct Engine {
    phi: [f64; 2],
    shape: [SpiralShape; 2],
    rho_p: f64,
}

impl Engine {
    pub fn new(geom: &SensorGeometry, rho_p: f64) -> Engine {
        Engine {
            phi: [geom.phi1, geom.phi2],
            shape: [shape_of(geom.phi1), shape_of(geom.phi2)],
            rho_p,
        }
    }

    fn phi(&self, i: u8) -> f64 {
        self.phi[(i - 1) as usize]
    }

    fn shape(&self, i: u8) -> SpiralShape {
        self.shape[(i - 1) as usize]
    }

    /// Translation of (ln ρ, ψ) per unit spiral parameter.
    fn direction(&self, i: u8) -> (f64, f64) {
        match self.shape(i) {
            SpiralShape::Log { t } => (-t, 1.0),
            SpiralShape::Circle => (0.0, 1.0),
            SpiralShape::HalfLine => (1.0, 0.0),
        }
    }

    /// Required sign of the spiral parameter for travel in `dir`.
    fn sign(&self, i: u8, dir: Dir) -> f64 {
        match self.shape(i) {
            SpiralShape::HalfLine => -dir.nu(),
            _ => dir.nu() * self.phi(i).sin().signum(),
        }
    }

    fn spiral_step(&self, i: u8, lambda: f64, rho: f64) -> (f64, f64) {
        match self.shape(i) {
            SpiralShape::Log { t } => {
                let f = (-t * lambda).exp();
                (rho * (1.0 - f).abs() / self.phi(i).cos().abs(), rho * f)
            }
            SpiralShape::Circle => (rho * lambda.abs(), rho),
            SpiralShape::HalfLine => {
                let f = lambda.exp();
                (rho * (f - 1.0).abs(), rho * f)
            }
        }
    }

    fn bearing(&self, b: Bear, free: &[f64], root: Option<f64>) -> f64 {
        match b {
            Bear::Edge(i) => self.phi(i),
            Bear::Free(n) => free[n],
            Bear::Root => root.unwrap_or(f64::NAN),
        }
    }

    fn straight_ok(&self, dir: Dir, b0: f64, b1: f64) -> bool {
        let (lo, hi) = (self.phi[0] - SIGN_TOL, self.phi[1] + SIGN_TOL);
        if !(lo..=hi).contains(&b0) || !(lo..=hi).contains(&b1) {
            return false;
        }
        if b0.abs() < ZERO_BEARING || b1.abs() < ZERO_BEARING || b0 * b1 < 0.0 {
            return false;
        }
        // |β| grows forward and shrinks backward
        match dir {
            Dir::Forward => b1.abs() >= b0.abs() - SIGN_TOL,
            Dir::Backward => b1.abs() <= b0.abs() + SIGN_TOL,
        }
    }

    fn close(&self, legs: &[Leg], q: &PolarPoint, free: &[f64], root: Option<f64>, k: i64) -> Option<Closed> {
        let c = self.close_unsigned(legs, q, free, root, k)?;
        self.signs_ok(legs, &c).then_some(c)
    }

    fn signs_ok(&self, legs: &[Leg], c: &Closed) -> bool {
        legs.iter().zip(&c.values).all(|(leg, v)| match (leg, v) {
            (Leg::E(i, d), LegValue::E(l)) => l * self.sign(*i, *d) >= -SIGN_TOL * (1.0 + l.abs()),
            _ => true,
        })
    }

    /// Solves the closure without checking spiral directions, so residuals
    /// stay defined on both sides of a root that sits where a spiral vanishes.
    fn close_unsigned(&self, legs: &[Leg], q: &PolarPoint, free: &[f64], root: Option<f64>, k: i64) -> Option<Closed> {
        let mut a = (self.rho_p / q.rho).ln();
        let mut b = -q.psi + TAU * k as f64;
        let mut values = Vec::with_capacity(legs.len());
        let mut spirals: Vec<usize> = Vec::with_capacity(3);
        for (n, leg) in legs.iter().enumerate() {
            match *leg {
                Leg::S(dir, s0, s1) => {
                    let b0 = self.bearing(s0, free, root);
                    let b1 = self.bearing(s1, free, root);
                    if !self.straight_ok(dir, b0, b1) {
                        return None;
                    }
                    a -= (b0.sin() / b1.sin()).ln();
                    b -= b1 - b0;
                    values.push(LegValue::S(b0, b1));
                }
                Leg::E(..) => {
                    spirals.push(n);
                    values.push(LegValue::E(0.0));
                }
                Leg::Rot => values.push(LegValue::Rot),
            }
        }
        let index = |n: usize| match legs[n] {
            Leg::E(i, d) => (i, d),
            _ => unreachable!(),
        };
        let mut residual = 0.0;
        match spirals.len() {
            0 => return None,
            1 => {
                let (i, _) = index(spirals[0]);
                let (u, v) = self.direction(i);
                let lambda = if v != 0.0 { b / v } else { a / u };
                residual = if v != 0.0 { a - u * lambda } else { b };
                values[spirals[0]] = LegValue::E(lambda);
            }
            _ => {
                let (i, _) = index(spirals[0]);
                let (j, _) = index(spirals[1]);
                let (u1, v1) = self.direction(i);
                let (u2, v2) = self.direction(j);
                let det = u1 * v2 - v1 * u2;
                if det.abs() < 1e-14 {
                    return None;
                }
                values[spirals[0]] = LegValue::E((a * v2 - b * u2) / det);
                values[spirals[1]] = LegValue::E((u1 * b - v1 * a) / det);
            }
        }
        Some(Closed { values, residual })
    }

    fn length_of(&self, legs: &[Leg], q: &PolarPoint, c: &Closed) -> f64 {
        let mut rho = q.rho;
        let mut total = 0.0;
        for (leg, v) in legs.iter().zip(&c.values) {
            match (leg, v) {
                (Leg::E(i, _), LegValue::E(l)) => {
                    let (len, r) = self.spiral_step(*i, *l, rho);
                    total += len;
                    rho = r;
                }
                (Leg::S(..), LegValue::S(b0, b1)) => {
                    total += rho * ((b1 - b0).sin() / b1.sin()).abs();
                    rho *= b0.sin() / b1.sin();
                }
                _ => {}
            }
        }
        total
    }

    /// Length of the instance with the given parameters, if it is feasible and closes.
    pub fn evaluate(&self, legs: &[Leg], q: &PolarPoint, free: &[f64], root: Option<f64>, k: i64) -> Option<f64> {
        let c = self.close(legs, q, free, root, k)?;
        if root.is_some() && c.residual.abs() > 1e-9 {
            return None;
        }
        Some(self.length_of(legs, q, &c))
    }

    fn residual(&self, legs: &[Leg], q: &PolarPoint, free: &[f64], root: f64, k: i64) -> Option<f64> {
        self.close_unsigned(legs, q, free, Some(root), k).map(|c| c.residual)
    }

    /// Admissible interval for a free or root bearing, from the cone, the
    /// sign of the other end of its straight arc, and the monotonicity of |β|.
    fn slot_range(&self, legs: &[Leg], slot: Bear) -> Option<(f64, f64)> {
        for leg in legs {
            if let Leg::S(dir, s0, s1) = *leg {
                let (other, is_start) = if s0 == slot {
                    (s1, true)
                } else if s1 == slot {
                    (s0, false)
                } else {
                    continue;
                };
                let Bear::Edge(i) = other else {
                    return None;
                };
                let fixed = self.phi(i);
                if fixed.abs() < ZERO_BEARING {
                    return None;
                }
                let (mut lo, mut hi) = (self.phi[0], self.phi[1]);
                if fixed > 0.0 {
                    lo = lo.max(ZERO_BEARING);
                } else {
                    hi = hi.min(-ZERO_BEARING);
                }
                // free end must not exceed the fixed one in |β| when it comes first going forward
                let smaller = matches!((dir, is_start), (Dir::Forward, true) | (Dir::Backward, false));
                if smaller {
                    if fixed > 0.0 {
                        hi = hi.min(fixed);
                    } else {
                        lo = lo.max(fixed);
                    }
                } else if fixed > 0.0 {
                    lo = lo.max(fixed);
                } else {
                    hi = hi.min(fixed);
                }
                return (lo <= hi).then_some((lo, hi));
            }
        }
        None
    }

    /// Winding numbers worth trying: spirals near the landmark turn many times.
    pub fn winding_range(&self, q: &PolarPoint) -> std::ops::RangeInclusive<i64> {
        let steep = self
            .shape
            .iter()
            .map(|s| match s {
                SpiralShape::Log { t } => 1.0 / t.abs(),
                _ => 0.0,
            })
            .fold(0.0, f64::max);
        let turns = ((self.rho_p / q.rho).ln().abs() * steep / TAU).ceil();
        let kmax = (2.0 + turns).min(40.0) as i64;
        -kmax..=kmax
    }

    /// Best instance of a word over its free parameters and windings.
    pub fn solve(&self, legs: &[Leg], q: &PolarPoint, scan: usize) -> Option<Instance> {
        let nfree = legs
            .iter()
            .flat_map(|l| match l {
                Leg::S(_, a, b) => vec![*a, *b],
                _ => vec![],
            })
            .filter(|b| matches!(b, Bear::Free(_)))
            .count();
        let has_root = legs
            .iter()
            .any(|l| matches!(l, Leg::S(_, Bear::Root, _) | Leg::S(_, _, Bear::Root)));
        let mut ranges = Vec::with_capacity(nfree);
        for n in 0..nfree {
            ranges.push(self.slot_range(legs, Bear::Free(n))?);
        }
        let root_range = if has_root {
            Some(self.slot_range(legs, Bear::Root)?)
        } else {
            None
        };
        let mut best: Option<Instance> = None;
        for k in self.winding_range(q) {
            let inner = |free: &[f64]| -> (f64, Option<f64>) {
                match root_range {
                    None => (self.evaluate(legs, q, free, None, k).unwrap_or(f64::INFINITY), None),
                    Some((lo, hi)) => {
                        let mut out = (f64::INFINITY, None);
                        for r in find_roots(|x| self.residual(legs, q, free, x, k), lo, hi, 64) {
                            if let Some(c) = self.close(legs, q, free, Some(r), k) {
                                let l = self.length_of(legs, q, &c);
                                if l < out.0 {
                                    out = (l, Some(r));
                                }
                            }
                        }
                        out
                    }
                }
            };
            let (length, free, root) = match nfree {
                0 => {
                    let (l, r) = inner(&[]);
                    (l, vec![], r)
                }
                1 => {
                    let (lo, hi) = ranges[0];
                    let (x, l) = self.minimize_slot(legs, q, k, &[0.0], 0, (lo, hi), scan, &inner);
                    (l, vec![x], inner(&[x]).1)
                }
                _ => {
                    let (lo0, hi0) = ranges[0];
                    let (lo1, hi1) = ranges[1];
                    let n_in = scan.max(8);
                    let best_inner = |x0: f64| self.minimize_slot(legs, q, k, &[x0, 0.0], 1, (lo1, hi1), n_in, &inner);
                    let (x0, l) = minimize_1d(|x0| best_inner(x0).1, lo0, hi0, (scan / 2).max(8));
                    let (x1, _) = best_inner(x0);
                    (l, vec![x0, x1], inner(&[x0, x1]).1)
                }
            };
            let (length, free) = self.snap_to_bounds(&inner, &ranges, length, free, scan);
            let root = if root_range.is_some() { inner(&free).1 } else { root };
            if length.is_finite() && best.as_ref().map_or(true, |b| length < b.length) {
                best = Some(Instance { length, free, root, k });
            }
        }
        best
    }

    /// Minimizes over one free bearing. Near a region border a spiral of the
    /// word shrinks to nothing and the feasible bearings pinch to a band
    /// narrower than the scan, so the zeros of every spiral parameter are
    /// added as breakpoints and short bands between them are searched too.
    #[allow(clippy::too_many_arguments)]
    fn minimize_slot<F: Fn(&[f64]) -> (f64, Option<f64>)>(
        &self,
        legs: &[Leg],
        q: &PolarPoint,
        k: i64,
        free: &[f64],
        slot: usize,
        (lo, hi): (f64, f64),
        scan: usize,
        inner: &F,
    ) -> (f64, f64) {
        let at = |x: f64| {
            let mut z = free.to_vec();
            z[slot] = x;
            z
        };
        let f = |x: f64| inner(&at(x)).0;
        let mut best = minimize_1d(f, lo, hi, scan);
        let mut cuts = vec![lo, hi];
        for (n, leg) in legs.iter().enumerate() {
            if !matches!(leg, Leg::E(..)) {
                continue;
            }
            let lambda = |x: f64| {
                self.close_unsigned(legs, q, &at(x), None, k).map(|c| match c.values[n] {
                    LegValue::E(l) => l,
                    _ => f64::NAN,
                })
            };
            cuts.extend(find_roots(lambda, lo, hi, scan));
        }
        cuts.sort_by(f64::total_cmp);
        let narrow = 2.0 * (hi - lo) / scan.max(2) as f64;
        for w in cuts.windows(2) {
            if w[1] > w[0] && w[1] - w[0] < narrow {
                let m = minimize_1d(f, w[0], w[1], 8);
                if m.1 < best.1 {
                    best = m;
                }
            }
        }
        best
    }

    /// Moves free bearings that converged next to a range end onto it.
    /// Minima on a range end mean a degenerate S arc, and the line search
    /// only gets within its tolerance of the end; the snapped instance is
    /// kept unless it is longer.
    fn snap_to_bounds<F: Fn(&[f64]) -> (f64, Option<f64>)>(
        &self,
        inner: &F,
        ranges: &[(f64, f64)],
        length: f64,
        free: Vec<f64>,
        scan: usize,
    ) -> (f64, Vec<f64>) {
        let mut best = (length, free);
        if !length.is_finite() {
            return best;
        }
        for (i, &(lo, hi)) in ranges.iter().enumerate() {
            for end in [lo, hi] {
                if (best.1[i] - end).abs() > SNAP * (hi - lo) || best.1[i] == end {
                    continue;
                }
                let mut x = best.1.clone();
                x[i] = end;
                let l = if ranges.len() == 2 {
                    let j = 1 - i;
                    let (lo_j, hi_j) = ranges[j];
                    let (xj, l) = minimize_1d(
                        |y| {
                            let mut z = x.clone();
                            z[j] = y;
                            inner(&z).0
                        },
                        lo_j,
                        hi_j,
                        scan.max(8),
                    );
                    x[j] = xj;
                    l
                } else {
                    inner(&x).0
                };
                if l <= best.0 + 1e-12 * self.rho_p {
                    best = (l, x);
                }
            }
        }
        best
    }

    /// Arc chain of an instance, starting at `q` with its ψ kept unwrapped.
    pub fn build(&self, legs: &[Leg], q: &PolarPoint, inst: &Instance) -> Option<Path> {
        let c = self.close(legs, q, &inst.free, inst.root, inst.k)?;
        let mut cur = *q;
        let mut arcs = Vec::with_capacity(legs.len());
        for (leg, v) in legs.iter().zip(&c.values) {
            match (*leg, *v) {
                (Leg::E(i, d), LegValue::E(l)) => {
                    let (len, rho) = self.spiral_step(i, l, cur.rho);
                    let dpsi = match self.shape(i) {
                        SpiralShape::HalfLine => 0.0,
                        _ => l,
                    };
                    let end = PolarPoint::new(rho, cur.psi + dpsi);
                    let symbol = if i == 1 { Symbol::E1(d) } else { Symbol::E2(d) };
                    arcs.push(Arc {
                        symbol,
                        start: cur,
                        end,
                        length: len,
                        phi: Some(self.phi(i)),
                    });
                    cur = end;
                }
                (Leg::S(d, ..), LegValue::S(b0, b1)) => {
                    let end = PolarPoint::new(cur.rho * b0.sin() / b1.sin(), cur.psi + b1 - b0);
                    let mut arc = Arc::straight(d, cur, end);
                    arc.length = cur.rho * ((b1 - b0).sin() / b1.sin()).abs();
                    arcs.push(arc);
                    cur = end;
                }
                (Leg::Rot, _) => arcs.push(Arc::rotation(cur)),
                _ => return None,
            }
        }
        // land exactly on P; the drift is rounding only
        if let Some(last) = arcs.last_mut() {
            let turns = (last.end.psi / TAU).round();
            last.end = PolarPoint::new(self.rho_p, turns * TAU);
        }
        Some(Path::new(arcs))
    }
}

/// Coarse scan followed by golden-section refinement around the best sample.
/// Free bearings closer than this fraction of their range to an end are snapped.
const SNAP: f64 = 1e-5;

pub fn minimize_1d<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, scan: usize) -> (f64, f64) {
    if hi <= lo {
        return (lo, f(lo));
    }
    let n = scan.max(2);
    let xs: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
    let ys: Vec<f64> = xs.iter().map(|&x| f(x)).collect();
    let mut ib = 0;
    for i in 1..=n {
        if ys[i] < ys[ib] {
            ib = i;
        }
    }
    if !ys[ib].is_finite() {
        return (xs[ib], f64::INFINITY);
    }
    let (mut a, mut b) = (xs[ib.saturating_sub(1)], xs[(ib + 1).min(n)]);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > 1e-13 * (1.0 + a.abs()) {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let mut best = (xs[ib], ys[ib]);
    for (x, y) in [(c, fc), (d, fd)] {
        if y < best.1 {
            best = (x, y);
        }
    }
    best
}

/// Roots of a partially defined function, from sign changes on a scan.
pub fn find_roots<F: Fn(f64) -> Option<f64>>(g: F, lo: f64, hi: f64, scan: usize) -> Vec<f64> {
    let mut out = Vec::new();
    if hi < lo {
        return out;
    }
    if hi == lo {
        if let Some(v) = g(lo) {
            if v.abs() < 1e-12 {
                out.push(lo);
            }
        }
        return out;
    }
    let n = scan.max(2);
    let xs: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
    let ys: Vec<Option<f64>> = xs.iter().map(|&x| g(x)).collect();
    for i in 0..n {
        let (Some(ya), Some(yb)) = (ys[i], ys[i + 1]) else {
            continue;
        };
        if ya == 0.0 {
            out.push(xs[i]);
            continue;
        }
        if yb == 0.0 {
            // an exact zero at a sample is reported by the interval it opens
            if i + 1 == n {
                out.push(xs[i + 1]);
            }
            continue;
        }
        if ya * yb > 0.0 {
            continue;
        }
        let (mut a, mut b, mut fa) = (xs[i], xs[i + 1], ya);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            let Some(fm) = g(m) else { break };
            if fm == 0.0 || (b - a) < 1e-15 * (1.0 + m.abs()) {
                a = m;
                b = m;
                break;
            }
            if fa * fm < 0.0 {
                b = m;
            } else {
                a = m;
                fa = fm;
            }
        }
        out.push(0.5 * (a + b));
    }
    out
}
