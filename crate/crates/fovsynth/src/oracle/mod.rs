//! Ground truth that does not trust the planner.
//!
//! * [`family_minimize`] enumerates every word of the sufficient language and
//!   minimizes each over its free switching parameters by brute force. It
//!   shares the language assumption with the planner and nothing else: the
//!   word closure below is a separate implementation.
//! * [`graph::graph_shortest`] searches a lattice of exactly feasible
//!   segments and assumes only the kinematics and the cone.
//! * [`exclusion::exclusion_probe`] builds the shortening constructions behind
//!   the excluded concatenations on random instances.
//!
//! Every family works in log-polar coordinates (ln ρ, ψ), where each letter
//! is a translation: E_i by λ·(−cot φ_i, 1) (λ·(1, 0) for H, λ·(0, 1) for C)
//! and S between bearings b0 → b1 by (ln(sin b0/sin b1), b1 − b0).

pub mod exclusion;
pub mod graph;

use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::PolarPoint;
use crate::sensor::SensorGeometry;
use crate::synthesis::{language_graph, Dir, Symbol, Word};

pub use exclusion::{exclusion_probe, exclusion_probe_with, ExclusionReport};
pub use graph::{graph_shortest, GraphField, GraphGrid};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("query coincides with the landmark")]
    AtOrigin,
    #[error("no word of the language reaches the goal")]
    NoFeasibleWord,
    #[error("invalid lattice: {0}")]
    Grid(String),
    #[error("goal unreachable on this lattice; refine it")]
    Unreachable,
}

/// Sampling density of [`family_minimize`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyOptions {
    /// Grid points for one free parameter.
    pub grid_1d: usize,
    /// Grid points per axis for two free parameters.
    pub grid_2d: usize,
    /// Samples scanned for sign changes when a bearing closes the word.
    pub root_scan: usize,
}

impl Default for FamilyOptions {
    fn default() -> Self {
        FamilyOptions {
            grid_1d: 1000,
            grid_2d: 64,
            root_scan: 96,
        }
    }
}

/// Best instance of the language found for one query.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyResult {
    /// Word of the winning instance after dropping arcs of zero length.
    pub word: Word,
    /// Language word that produced it.
    pub declared: Word,
    /// Free bearings and spiral parameters at the optimum, then the closing bearing if any.
    pub parameters: Vec<f64>,
    pub winding: i64,
    pub length: f64,
}

/// Tolerance on bearings and spiral signs when accepting an instance.
const ACCEPT: f64 = 1e-12;
/// Arcs shorter than this fraction of the scale are dropped from reported words.
const NEGLIGIBLE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
enum Piece {
    S(Dir),
    E(u8, Dir),
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Slot {
    Fixed(f64),
    Free(usize),
    Root,
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Amount {
    Closer(usize),
    Free(usize),
}

/// Translation direction of E_i in (ln ρ, ψ) per unit λ.
fn step(phi: f64) -> (f64, f64) {
    if phi.sin().abs() < 1e-12 {
        (1.0, 0.0)
    } else if phi.cos().abs() < 1e-12 {
        (0.0, 1.0)
    } else {
        (-phi.cos() / phi.sin(), 1.0)
    }
}

/// Whether λ moves along E_i in direction `d`: ρ̇ = −ν cos φ, ψ̇ = ν sin φ/ρ.
fn spiral_sign_ok(phi: f64, d: Dir, lam: f64) -> bool {
    let (u, v) = step(phi);
    let nu = d.nu();
    let tol = ACCEPT * (1.0 + lam.abs());
    let psi_ok = phi.sin().abs() < 1e-12 || v * lam * nu * phi.sin() >= -tol;
    let rho_ok = phi.cos().abs() < 1e-12 || -u * lam * nu * phi.cos() >= -tol;
    psi_ok && rho_ok
}

fn spiral_length(phi: f64, lam: f64, rho_start: f64) -> f64 {
    let (u, v) = step(phi);
    if phi.cos().abs() < 1e-12 {
        rho_start * (v * lam).abs()
    } else {
        rho_start * (1.0 - (u * lam).exp()).abs() / phi.cos().abs()
    }
}

/// A straight arc from bearing b0 to b1 keeps one sign and |β| grows forward.
fn straight_ok(geom: &SensorGeometry, d: Dir, b0: f64, b1: f64) -> bool {
    let inside = |b: f64| geom.phi1 - ACCEPT <= b && b <= geom.phi2 + ACCEPT;
    if !(inside(b0) && inside(b1)) || b0 * b1 <= 0.0 {
        return false;
    }
    match d {
        Dir::Forward => b1.abs() >= b0.abs() - ACCEPT,
        Dir::Backward => b1.abs() <= b0.abs() + ACCEPT,
    }
}

/// One evaluated instance of a family.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub length: f64,
    /// Length of each motion arc in word order.
    pub arc_lengths: Vec<f64>,
    pub parameters: Vec<f64>,
    pub winding: i64,
}

/// A word with its switching structure resolved: which bearings are pinned
/// by tangency to a neighbouring spiral, which spirals close the loop, and
/// which parameters stay free.
#[derive(Clone, Debug)]
pub struct Family {
    pub word: Word,
    pieces: Vec<Piece>,
    /// Bearing slots of S pieces at (start, end); unused for spirals.
    bearings: Vec<(Slot, Slot)>,
    amounts: Vec<Option<Amount>>,
    closers: Vec<usize>,
    /// (range, is_bearing) of each free parameter.
    free: Vec<((f64, f64), bool)>,
    /// Piece and end of the closing bearing, with its range.
    root: Option<(usize, bool, (f64, f64))>,
    phi: [f64; 2],
    geom: SensorGeometry,
}

impl Family {
    /// Resolves a word, or `None` when its closure is underdetermined or an
    /// S arc is pinned to a radial edge.
    pub fn new(word: &Word, geom: &SensorGeometry) -> Option<Family> {
        let mut pieces = Vec::new();
        let mut star_before = Vec::new();
        let mut pending = false;
        for s in word.symbols() {
            match *s {
                Symbol::Rot => pending = true,
                Symbol::S(d) => {
                    pieces.push(Piece::S(d));
                    star_before.push(pending);
                    pending = false;
                }
                Symbol::E1(d) | Symbol::E2(d) => {
                    let i = if matches!(s, Symbol::E1(_)) { 1 } else { 2 };
                    pieces.push(Piece::E(i, d));
                    star_before.push(pending);
                    pending = false;
                }
            }
        }
        let n = pieces.len();
        if n == 0 {
            return None;
        }
        let phi = [geom.phi1, geom.phi2];
        let edge_of = |k: usize| match pieces[k] {
            Piece::E(i, _) => Some(phi[i as usize - 1]),
            Piece::S(_) => None,
        };
        let mut bearings = vec![(Slot::Fixed(f64::NAN), Slot::Fixed(f64::NAN)); n];
        let mut free = Vec::new();
        let mut root = None;
        let mut pending_free: Vec<(usize, bool, (f64, f64))> = Vec::new();
        for k in 0..n {
            let Piece::S(d) = pieces[k] else { continue };
            let before = (k > 0 && !star_before[k]).then(|| edge_of(k - 1)).flatten();
            let after = (k + 1 < n && !star_before[k + 1]).then(|| edge_of(k + 1)).flatten();
            for b in [before, after].into_iter().flatten() {
                if b.abs() < 1e-12 {
                    return None;
                }
            }
            let range_for = |fixed: Option<f64>, is_start: bool| -> (f64, f64) {
                let (mut lo, mut hi) = (phi[0], phi[1]);
                let Some(f) = fixed else {
                    return (lo, hi);
                };
                if f > 0.0 {
                    lo = lo.max(1e-9);
                } else {
                    hi = hi.min(-1e-9);
                }
                // |β| grows forward: a free start sits below the pinned end in |β|
                let below = matches!((d, is_start), (Dir::Forward, true) | (Dir::Backward, false));
                if below == (f > 0.0) {
                    hi = hi.min(f);
                } else {
                    lo = lo.max(f);
                }
                (lo, hi)
            };
            let start = match before {
                Some(b) => Slot::Fixed(b),
                None => {
                    pending_free.push((k, true, range_for(after, true)));
                    Slot::Free(usize::MAX)
                }
            };
            let end = match after {
                Some(b) => Slot::Fixed(b),
                None => {
                    pending_free.push((k, false, range_for(before, false)));
                    Slot::Free(usize::MAX)
                }
            };
            bearings[k] = (start, end);
        }
        let spirals: Vec<usize> = (0..n).filter(|&k| matches!(pieces[k], Piece::E(..))).collect();
        let mut closers = Vec::new();
        'pair: for (a, &ka) in spirals.iter().enumerate() {
            for &kb in &spirals[a + 1..] {
                let (ua, va) = step(edge_of(ka).unwrap());
                let (ub, vb) = step(edge_of(kb).unwrap());
                if (ua * vb - va * ub).abs() > 1e-9 {
                    closers = vec![ka, kb];
                    break 'pair;
                }
            }
        }
        if closers.is_empty() {
            closers = spirals.first().copied().into_iter().collect();
        }
        if closers.is_empty() {
            return None;
        }
        if closers.len() == 1 {
            if pending_free.is_empty() {
                return None;
            }
            root = Some(pending_free.remove(0));
        }
        for (k, is_start, range) in &pending_free {
            let slot = Slot::Free(free.len());
            free.push((*range, true));
            if *is_start {
                bearings[*k].0 = slot;
            } else {
                bearings[*k].1 = slot;
            }
        }
        if let Some((k, is_start, _)) = root {
            if is_start {
                bearings[k].0 = Slot::Root;
            } else {
                bearings[k].1 = Slot::Root;
            }
        }
        let mut amounts = vec![None; n];
        for &k in &spirals {
            if let Some(c) = closers.iter().position(|&c| c == k) {
                amounts[k] = Some(Amount::Closer(c));
            } else {
                amounts[k] = Some(Amount::Free(free.len()));
                // spiral sign fixes the half line; the span is set per query
                free.push(((f64::NAN, f64::NAN), false));
            }
        }
        for &(_, _, (lo, hi)) in pending_free.iter().chain(root.iter()) {
            if lo > hi {
                return None;
            }
        }
        Some(Family {
            word: word.clone(),
            pieces,
            bearings,
            amounts,
            closers,
            free,
            root,
            phi,
            geom: *geom,
        })
    }

    fn phi_of(&self, i: u8) -> f64 {
        self.phi[i as usize - 1]
    }

    fn bearing(&self, slot: Slot, free: &[f64], root: f64) -> f64 {
        match slot {
            Slot::Fixed(b) => b,
            Slot::Free(i) => free[i],
            Slot::Root => root,
        }
    }

    /// Ranges of the free parameters for a query whose log-radius gap is `gap`.
    fn ranges(&self, gap: f64) -> Vec<(f64, f64)> {
        let mut out: Vec<(f64, f64)> = self.free.iter().map(|(r, _)| *r).collect();
        for (k, a) in self.amounts.iter().enumerate() {
            if let Some(Amount::Free(j)) = a {
                let Piece::E(i, d) = self.pieces[k] else { unreachable!() };
                let phi = self.phi_of(i);
                let (u, _) = step(phi);
                // a spiral arc never needs to wind past the radii the whole path spans
                let span = if u.abs() < 1e-12 { TAU } else { TAU + (gap.abs() + 3.0) / u.abs() };
                let span = span.min(80.0);
                out[*j] = if spiral_sign_ok(phi, d, 1.0) { (0.0, span) } else { (-span, 0.0) };
            }
        }
        out
    }

    /// Closes the word from `a` to `b` and returns the residual of the
    /// unused closure equation (root mode) or the full instance.
    fn close(&self, a: &PolarPoint, b: &PolarPoint, free: &[f64], root: f64, k: i64, check: bool) -> Closure {
        let mut ga = (b.rho / a.rho).ln();
        let mut gb = b.psi - a.psi + TAU * k as f64;
        let n = self.pieces.len();
        let mut lam = vec![0.0; n];
        for (kk, p) in self.pieces.iter().enumerate() {
            match *p {
                Piece::S(d) => {
                    let b0 = self.bearing(self.bearings[kk].0, free, root);
                    let b1 = self.bearing(self.bearings[kk].1, free, root);
                    if !(b0 * b1 > 0.0) {
                        return Closure::Undefined;
                    }
                    if check && !straight_ok(&self.geom, d, b0, b1) {
                        return Closure::Undefined;
                    }
                    ga -= (b0.sin() / b1.sin()).ln();
                    gb -= b1 - b0;
                }
                Piece::E(i, _) => {
                    if let Some(Amount::Free(j)) = self.amounts[kk] {
                        let (u, v) = step(self.phi_of(i));
                        lam[kk] = free[j];
                        ga -= u * free[j];
                        gb -= v * free[j];
                    }
                }
            }
        }
        if self.closers.len() == 2 {
            let (k1, k2) = (self.closers[0], self.closers[1]);
            let (u1, v1) = step(self.edge(k1));
            let (u2, v2) = step(self.edge(k2));
            let det = u1 * v2 - v1 * u2;
            lam[k1] = (ga * v2 - gb * u2) / det;
            lam[k2] = (u1 * gb - v1 * ga) / det;
        } else {
            let k1 = self.closers[0];
            let (u1, v1) = step(self.edge(k1));
            let res = if v1 != 0.0 {
                lam[k1] = gb / v1;
                ga - u1 * lam[k1]
            } else {
                lam[k1] = ga / u1;
                gb
            };
            if !check {
                return Closure::Residual(res);
            }
        }
        if !check {
            return Closure::Residual(0.0);
        }
        let mut rho = a.rho;
        let mut total = 0.0;
        let mut arc_lengths = Vec::with_capacity(n);
        for (kk, p) in self.pieces.iter().enumerate() {
            let l = match *p {
                Piece::S(_) => {
                    let b0 = self.bearing(self.bearings[kk].0, free, root);
                    let b1 = self.bearing(self.bearings[kk].1, free, root);
                    let l = rho * ((b1 - b0).sin() / b1.sin()).abs();
                    rho *= b0.sin() / b1.sin();
                    l
                }
                Piece::E(i, d) => {
                    let phi = self.phi_of(i);
                    if !spiral_sign_ok(phi, d, lam[kk]) {
                        return Closure::Undefined;
                    }
                    let l = spiral_length(phi, lam[kk], rho);
                    rho *= (step(phi).0 * lam[kk]).exp();
                    l
                }
            };
            total += l;
            arc_lengths.push(l);
        }
        Closure::Done(total, arc_lengths)
    }

    fn edge(&self, k: usize) -> f64 {
        match self.pieces[k] {
            Piece::E(i, _) => self.phi_of(i),
            Piece::S(_) => unreachable!("closers are spirals"),
        }
    }

    /// Best instance for fixed free parameters and winding.
    fn evaluate(&self, a: &PolarPoint, b: &PolarPoint, free: &[f64], k: i64, scan: usize) -> Option<Instance> {
        let done = |root: f64| match self.close(a, b, free, root, k, true) {
            Closure::Done(l, arcs) => Some((l, arcs)),
            _ => None,
        };
        let (length, arc_lengths, root) = match self.root {
            None => {
                let (l, arcs) = done(f64::NAN)?;
                (l, arcs, None)
            }
            Some((_, _, (lo, hi))) => {
                let res = |x: f64| match self.close(a, b, free, x, k, false) {
                    Closure::Residual(r) => Some(r),
                    _ => None,
                };
                let mut best: Option<(f64, Vec<f64>, f64)> = None;
                for r in sign_changes(res, lo, hi, scan) {
                    if let Some((l, arcs)) = done(r) {
                        if best.as_ref().map_or(true, |b| l < b.0) {
                            best = Some((l, arcs, r));
                        }
                    }
                }
                let (l, arcs, r) = best?;
                (l, arcs, Some(r))
            }
        };
        let mut parameters = free.to_vec();
        parameters.extend(root);
        Some(Instance {
            length,
            arc_lengths,
            parameters,
            winding: k,
        })
    }

    /// Windings worth trying for a query: steep spirals near the landmark
    /// wind once per 2π·tan|φ| of log-radius.
    fn windings(&self, gap: f64) -> std::ops::RangeInclusive<i64> {
        let steep = self
            .phi
            .iter()
            .filter(|p| p.sin().abs() > 1e-12)
            .map(|p| (p.cos() / p.sin()).abs())
            .fold(0.0, f64::max);
        let kmax = (2.0 + (gap.abs() * steep / TAU).ceil()).min(40.0) as i64;
        -kmax..=kmax
    }

    /// Shortest instance from `a` to `b` over all parameters and windings.
    pub fn minimize(&self, a: &PolarPoint, b: &PolarPoint, opts: &FamilyOptions) -> Option<Instance> {
        let gap = (b.rho / a.rho).ln();
        let ranges = self.ranges(gap);
        let mut best: Option<Instance> = None;
        for k in self.windings(gap) {
            let f = |x: &[f64]| self.evaluate(a, b, x, k, opts.root_scan);
            let len = |x: &[f64]| f(x).map_or(f64::INFINITY, |i| i.length);
            let x = match ranges.len() {
                0 => Some(vec![]),
                1 => {
                    let (lo, hi) = ranges[0];
                    let (x, l) = grid_golden(|x| len(&[x]), lo, hi, opts.grid_1d);
                    l.is_finite().then(|| vec![x])
                }
                2 => {
                    let (x, l) = grid_golden_2d(|x0, x1| len(&[x0, x1]), ranges[0], ranges[1], opts.grid_2d);
                    l.is_finite().then(|| x.to_vec())
                }
                _ => None,
            };
            if let Some(inst) = x.and_then(|x| f(&x)) {
                if best.as_ref().map_or(true, |b| inst.length < b.length) {
                    best = Some(inst);
                }
            }
        }
        best
    }

    /// Word of an instance with its vanishing arcs removed.
    pub fn effective_word(&self, inst: &Instance, scale: f64) -> Word {
        let mut out = Vec::new();
        let mut arc = 0;
        for s in self.word.symbols() {
            if *s == Symbol::Rot {
                out.push(*s);
                continue;
            }
            if inst.arc_lengths[arc] > NEGLIGIBLE * scale {
                out.push(*s);
            }
            arc += 1;
        }
        Word(out).normalized()
    }
}

enum Closure {
    Undefined,
    Residual(f64),
    Done(f64, Vec<f64>),
}

/// Roots of `g` on [lo, hi] found by scanning `n` intervals and bisecting
/// every sign change. Samples where `g` is undefined are skipped.
pub fn sign_changes<F: Fn(f64) -> Option<f64>>(g: F, lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let n = n.max(2);
    let xs: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
    let ys: Vec<Option<f64>> = xs.iter().map(|&x| g(x)).collect();
    let mut roots = Vec::new();
    for i in 0..n {
        let (Some(ya), Some(yb)) = (ys[i], ys[i + 1]) else { continue };
        if ya == 0.0 {
            roots.push(xs[i]);
            continue;
        }
        if yb == 0.0 {
            // the next interval reports it, unless there is none
            if i + 1 == n {
                roots.push(xs[i + 1]);
            }
            continue;
        }
        if ya * yb > 0.0 {
            continue;
        }
        let (mut a, mut b, mut fa) = (xs[i], xs[i + 1], ya);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            match g(m) {
                Some(fm) if fm == 0.0 => {
                    a = m;
                    b = m;
                    break;
                }
                Some(fm) if (fm > 0.0) == (fa > 0.0) => {
                    a = m;
                    fa = fm;
                }
                Some(_) => b = m,
                None => break,
            }
        }
        roots.push(0.5 * (a + b));
    }
    roots
}

/// Grid scan followed by golden-section refinement around the best sample,
/// stopping when the bracket is below 1e−10 relative.
pub fn grid_golden<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, n: usize) -> (f64, f64) {
    if hi <= lo {
        return (lo, f(lo));
    }
    let n = n.max(2);
    let at = |i: usize| lo + (hi - lo) * i as f64 / n as f64;
    let (mut ib, mut yb) = (0, f64::INFINITY);
    for i in 0..=n {
        let y = f(at(i));
        if y < yb {
            ib = i;
            yb = y;
        }
    }
    if !yb.is_finite() {
        return (at(ib), yb);
    }
    let (a, b) = (at(ib.saturating_sub(1)), at((ib + 1).min(n)));
    let (x, y) = golden(&f, a, b);
    if y < yb {
        (x, y)
    } else {
        (at(ib), yb)
    }
}

fn golden<F: Fn(f64) -> f64>(f: &F, mut a: f64, mut b: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > 1e-10 * (1.0 + a.abs().max(b.abs())) {
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
    // minima on a bracket end are reached exactly
    [(c, fc), (d, fd), (a, f(a)), (b, f(b))]
        .into_iter()
        .fold((c, f64::INFINITY), |acc, p| if p.1 < acc.1 { p } else { acc })
}

/// Local minima of the grid refined per family; valleys narrower than a
/// grid cell can hide the global one behind a slightly better node.
const STARTS_2D: usize = 4;

/// Two-parameter version: an n×n grid, then nested golden sections on the
/// cells around the best few local minima of the grid.
pub fn grid_golden_2d<F: Fn(f64, f64) -> f64>(f: F, r0: (f64, f64), r1: (f64, f64), n: usize) -> ([f64; 2], f64) {
    let n = n.max(2);
    let at = |r: (f64, f64), i: usize| r.0 + (r.1 - r.0) * i as f64 / n as f64;
    let ys: Vec<f64> = (0..=n)
        .flat_map(|i| (0..=n).map(move |j| (i, j)))
        .map(|(i, j)| f(at(r0, i), at(r1, j)))
        .collect();
    let y = |i: usize, j: usize| ys[i * (n + 1) + j];
    let mut starts: Vec<(usize, usize)> = Vec::new();
    for i in 0..=n {
        for j in 0..=n {
            let v = y(i, j);
            if !v.is_finite() {
                continue;
            }
            let lowest = (i.saturating_sub(1)..=(i + 1).min(n))
                .flat_map(|a| (j.saturating_sub(1)..=(j + 1).min(n)).map(move |b| (a, b)))
                .all(|(a, b)| y(a, b) >= v);
            if lowest {
                starts.push((i, j));
            }
        }
    }
    starts.sort_by(|a, b| y(a.0, a.1).total_cmp(&y(b.0, b.1)));
    let Some(&first) = starts.first() else {
        return ([at(r0, 0), at(r1, 0)], f64::INFINITY);
    };
    let mut best = ([at(r0, first.0), at(r1, first.1)], y(first.0, first.1));
    for &(i, j) in starts.iter().take(STARTS_2D) {
        let (a0, b0) = (at(r0, i.saturating_sub(1)), at(r0, (i + 1).min(n)));
        let (a1, b1) = (at(r1, j.saturating_sub(1)), at(r1, (j + 1).min(n)));
        let inner = |x0: f64| golden(&|x1| f(x0, x1), a1, b1);
        let (x0, v) = golden(&|x0| inner(x0).1, a0, b0);
        if v < best.1 {
            best = ([x0, inner(x0).0], v);
        }
    }
    compass(&f, best, [(r0.1 - r0.0) / n as f64, (r1.1 - r1.0) / n as f64], [r0, r1])
}

/// Compass search from `start` with initial steps `h`, halving them on
/// failure. It keeps descending along valleys that bend away from the axes
/// and against infeasible walls where golden sections stall.
fn compass<F: Fn(f64, f64) -> f64>(f: &F, start: ([f64; 2], f64), mut h: [f64; 2], r: [(f64, f64); 2]) -> ([f64; 2], f64) {
    let (mut x, mut y) = start;
    let floor = [1e-11 * (r[0].1 - r[0].0).max(1.0), 1e-11 * (r[1].1 - r[1].0).max(1.0)];
    let mut evals = 0;
    while (h[0] > floor[0] || h[1] > floor[1]) && evals < 4000 {
        let mut moved = false;
        for (d0, d1) in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0), (1.0, 1.0), (-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0)] {
            let c = [
                (x[0] + d0 * h[0]).clamp(r[0].0, r[0].1),
                (x[1] + d1 * h[1]).clamp(r[1].0, r[1].1),
            ];
            let v = f(c[0], c[1]);
            evals += 1;
            if v < y {
                (x, y, moved) = (c, v, true);
                break;
            }
        }
        if !moved {
            h = [h[0] * 0.5, h[1] * 0.5];
        }
    }
    (x, y)
}

/// Straight segment from `a` to `b`, if either driving direction keeps the
/// landmark in view.
pub fn direct_length(a: &PolarPoint, b: &PolarPoint, geom: &SensorGeometry) -> Option<f64> {
    [Dir::Forward, Dir::Backward]
        .into_iter()
        .any(|d| crate::sensor::segment_feasible(a, b, d, geom, ACCEPT))
        .then(|| a.distance(b))
}

/// Passage through the landmark: inbound and outbound along the edge that
/// closes on it fastest, radially when β = 0 is in view.
pub fn through_landmark_length(a: &PolarPoint, b: &PolarPoint, geom: &SensorGeometry) -> f64 {
    let mut c = [geom.phi1, geom.phi2]
        .iter()
        .map(|p| p.cos().abs())
        .filter(|c| *c > 1e-12)
        .fold(0.0, f64::max);
    if geom.phi1 <= 0.0 && 0.0 <= geom.phi2 {
        c = 1.0;
    }
    (a.rho + b.rho) / c
}

/// Words searched for a query at radius ρ: the language inside D(P), its
/// transformed images outside.
pub fn oracle_words(geom: &SensorGeometry, exterior: bool) -> Vec<Word> {
    let lang = language_graph(geom.case);
    lang.words
        .iter()
        .map(|w| if exterior { w.transformed() } else { w.clone() })
        .collect()
}

/// Global best over the language, the straight segment and the passage
/// through the landmark, for a query `q` and goal P = (ρ_P, 0).
pub fn family_minimize(q: &PolarPoint, geom: &SensorGeometry, rho_p: f64) -> Result<FamilyResult, OracleError> {
    family_minimize_with(q, geom, rho_p, &FamilyOptions::default())
}

pub fn family_minimize_with(
    q: &PolarPoint,
    geom: &SensorGeometry,
    rho_p: f64,
    opts: &FamilyOptions,
) -> Result<FamilyResult, OracleError> {
    if !(q.rho > 0.0) {
        return Err(OracleError::AtOrigin);
    }
    let p = PolarPoint::new(rho_p, 0.0);
    if q.distance(&p) <= 1e-15 * rho_p {
        return Ok(FamilyResult {
            word: Word::empty(),
            declared: Word::empty(),
            parameters: vec![],
            winding: 0,
            length: 0.0,
        });
    }
    let s_word = |d: Dir| Word(vec![Symbol::S(d)]);
    let mut best: Option<FamilyResult> = None;
    let mut offer = |r: FamilyResult| {
        // ties keep the earlier, simpler candidate
        if best.as_ref().map_or(true, |b| r.length < b.length - 1e-12 * rho_p) {
            best = Some(r);
        }
    };
    if let Some(l) = direct_length(q, &p, geom) {
        let forward = crate::sensor::segment_feasible(q, &p, Dir::Forward, geom, ACCEPT);
        let w = s_word(if forward { Dir::Forward } else { Dir::Backward });
        offer(FamilyResult {
            word: w.clone(),
            declared: w,
            parameters: vec![],
            winding: 0,
            length: l,
        });
    }
    let families: Vec<Family> = oracle_words(geom, q.rho > rho_p)
        .iter()
        .filter_map(|w| Family::new(w, geom))
        .collect();
    let found: Vec<FamilyResult> = families
        .par_iter()
        .filter_map(|fam| {
            let inst = fam.minimize(q, &p, opts)?;
            Some(FamilyResult {
                word: fam.effective_word(&inst, rho_p),
                declared: fam.word.clone(),
                parameters: inst.parameters.clone(),
                winding: inst.winding,
                length: inst.length,
            })
        })
        .collect();
    for r in found {
        offer(r);
    }
    let through = through_landmark_length(q, &p, geom);
    let w: Word = "S+*S-".parse().expect("static word");
    offer(FamilyResult {
        word: w.clone(),
        declared: w,
        parameters: vec![],
        winding: 0,
        length: through,
    });
    best.ok_or(OracleError::NoFeasibleWord)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sensor::classify;
    use std::f64::consts::PI;

    fn side() -> SensorGeometry {
        classify(PI / 4.0, PI / 6.0).unwrap()
    }

    #[test]
    fn goal_costs_nothing() {
        let r = family_minimize(&PolarPoint::new(1.0, 0.0), &side(), 1.0).unwrap();
        assert_eq!(r.length, 0.0);
        assert!(r.word.is_empty());
    }

    #[test]
    fn spiral_pair_closes_on_circle_below_r1() {
        // below ψ_R1 the S arc of the family vanishes
        let g = side();
        let r = family_minimize(&PolarPoint::new(1.0, 1.0), &g, 1.0).unwrap();
        assert_eq!(r.word.to_string(), "E1+*E2-");
    }

    #[test]
    fn closure_lands_on_goal() {
        let g = side();
        let w: Word = "E1+*E2-".parse().unwrap();
        let fam = Family::new(&w, &g).unwrap();
        let q = PolarPoint::new(0.6, 0.9);
        let inst = fam.minimize(&q, &PolarPoint::new(1.0, 0.0), &FamilyOptions::default()).unwrap();
        // the E1 arc from q meets the E2 spiral through P; lengths follow from radii
        let (c1, c2) = (1.0 / g.phi1.tan(), 1.0 / g.phi2.tan());
        let psi_n = (q.psi * c1 + q.rho.ln()) / (c1 - c2);
        let rho_n = (-psi_n * c2).exp();
        let expect = (q.rho - rho_n).abs() / g.phi1.cos() + (1.0 - rho_n).abs() / g.phi2.cos();
        assert!((inst.length - expect).abs() < 1e-12, "{} vs {}", inst.length, expect);
    }

    #[test]
    fn radial_edge_rejects_tangent_straight() {
        let bf = classify(0.4, 0.8).unwrap();
        let w: Word = "S+E1+".parse().unwrap();
        assert!(Family::new(&w, &bf).is_none());
    }

    #[test]
    fn golden_finds_parabola_minimum() {
        let (x, y) = grid_golden(|x| (x - 0.3).powi(2), -1.0, 2.0, 50);
        assert!((x - 0.3).abs() < 1e-8 && y < 1e-15);
        let (x, _) = grid_golden_2d(|a, b| (a - 0.2).powi(2) + (b + 0.4).powi(2), (-1.0, 1.0), (-1.0, 1.0), 20);
        assert!((x[0] - 0.2).abs() < 1e-8 && (x[1] + 0.4).abs() < 1e-8);
    }

    #[test]
    fn golden_reaches_bracket_end() {
        let (x, _) = grid_golden(|x| x, 0.0, 1.0, 10);
        assert_eq!(x, 0.0);
    }

    #[test]
    fn sign_changes_finds_each_root_once() {
        let r = sign_changes(|x| Some(x * x * x - x), -2.0, 2.1, 41);
        assert_eq!(r.len(), 3);
    }

    #[test]
    fn through_landmark_uses_radial_when_visible() {
        let fr = classify(0.1, 0.8).unwrap();
        let l = through_landmark_length(&PolarPoint::new(0.5, 2.0), &PolarPoint::new(1.0, 0.0), &fr);
        assert!((l - 1.5).abs() < 1e-15);
    }
}
