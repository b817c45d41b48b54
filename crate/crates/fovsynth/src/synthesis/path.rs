//! Words over the extremal alphabet and the arc chains that realize them.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::geometry::PolarPoint;

/// Direction of travel along an arc.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Dir {
    Forward,
    Backward,
}

impl Dir {
    pub fn flip(self) -> Dir {
        match self {
            Dir::Forward => Dir::Backward,
            Dir::Backward => Dir::Forward,
        }
    }

    /// +1 for forward, -1 for backward (the sign of ν).
    pub fn nu(self) -> f64 {
        match self {
            Dir::Forward => 1.0,
            Dir::Backward => -1.0,
        }
    }

    fn mark(self) -> char {
        match self {
            Dir::Forward => '+',
            Dir::Backward => '-',
        }
    }
}

/// One letter of the alphabet {*, S±, E1±, E2±}.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Symbol {
    Rot,
    S(Dir),
    E1(Dir),
    E2(Dir),
}

impl Symbol {
    pub fn dir(self) -> Option<Dir> {
        match self {
            Symbol::Rot => None,
            Symbol::S(d) | Symbol::E1(d) | Symbol::E2(d) => Some(d),
        }
    }

    /// Same extremal, opposite direction; `*` is its own image.
    pub fn flipped(self) -> Symbol {
        match self {
            Symbol::Rot => Symbol::Rot,
            Symbol::S(d) => Symbol::S(d.flip()),
            Symbol::E1(d) => Symbol::E1(d.flip()),
            Symbol::E2(d) => Symbol::E2(d.flip()),
        }
    }

    pub fn kind_name(self) -> &'static str {
        match self {
            Symbol::Rot => "rot",
            Symbol::S(_) => "S",
            Symbol::E1(_) => "E1",
            Symbol::E2(_) => "E2",
        }
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Symbol::Rot => write!(f, "*"),
            Symbol::S(d) => write!(f, "S{}", d.mark()),
            Symbol::E1(d) => write!(f, "E1{}", d.mark()),
            Symbol::E2(d) => write!(f, "E2{}", d.mark()),
        }
    }
}

/// A symbolic path type such as `E1+*E2-S-`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Word(pub Vec<Symbol>);

impl Word {
    pub fn empty() -> Word {
        Word(Vec::new())
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of junctions between consecutive motion arcs.
    pub fn switches(&self) -> usize {
        self.0.iter().filter(|s| **s != Symbol::Rot).count().saturating_sub(1)
    }

    /// Image under the path transform: reversed, directions flipped.
    pub fn transformed(&self) -> Word {
        Word(self.0.iter().rev().map(|s| s.flipped()).collect())
    }

    /// Time reversal alone (same as the transform at the symbolic level).
    pub fn reversed(&self) -> Word {
        self.transformed()
    }

    /// Drops leading/trailing rotations and merges repeated ones.
    pub fn normalized(&self) -> Word {
        let mut out: Vec<Symbol> = Vec::with_capacity(self.0.len());
        for &s in &self.0 {
            if s == Symbol::Rot && (out.is_empty() || out.last() == Some(&Symbol::Rot)) {
                continue;
            }
            out.push(s);
        }
        while out.last() == Some(&Symbol::Rot) {
            out.pop();
        }
        Word(out)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "(empty)");
        }
        for s in &self.0 {
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot parse word {0:?}")]
pub struct WordParseError(pub String);

impl FromStr for Word {
    type Err = WordParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let chars: Vec<char> = s.chars().filter(|c| !c.is_whitespace()).collect();
        let mut out = Vec::new();
        let mut i = 0;
        let dir = |c: Option<&char>| match c {
            Some('+') => Some(Dir::Forward),
            Some('-') => Some(Dir::Backward),
            _ => None,
        };
        let err = || WordParseError(s.to_string());
        while i < chars.len() {
            match chars[i] {
                '*' => {
                    out.push(Symbol::Rot);
                    i += 1;
                }
                'S' => {
                    out.push(Symbol::S(dir(chars.get(i + 1)).ok_or_else(err)?));
                    i += 2;
                }
                'E' => {
                    let d = dir(chars.get(i + 2)).ok_or_else(err)?;
                    match chars.get(i + 1) {
                        Some('1') => out.push(Symbol::E1(d)),
                        Some('2') => out.push(Symbol::E2(d)),
                        _ => return Err(err()),
                    }
                    i += 3;
                }
                _ => return Err(err()),
            }
        }
        Ok(Word(out))
    }
}

/// One extremal segment of a path.
///
/// Spiral arcs carry their characteristic angle; `end.rho == 0` marks an arc
/// that reaches the landmark (its end angle is then meaningless).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    pub symbol: Symbol,
    pub start: PolarPoint,
    pub end: PolarPoint,
    pub length: f64,
    /// Held bearing for spiral arcs; `None` for straight arcs and rotations.
    pub phi: Option<f64>,
}

impl Arc {
    pub fn rotation(at: PolarPoint) -> Arc {
        Arc {
            symbol: Symbol::Rot,
            start: at,
            end: at,
            length: 0.0,
            phi: None,
        }
    }

    pub fn straight(dir: Dir, start: PolarPoint, end: PolarPoint) -> Arc {
        Arc {
            symbol: Symbol::S(dir),
            start,
            end,
            length: start.distance(&end),
            phi: None,
        }
    }
}

/// A concatenation of arcs; the last arc ends at the goal.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub arcs: Vec<Arc>,
    pub total_length: f64,
}

impl Path {
    pub fn new(arcs: Vec<Arc>) -> Path {
        // float sums start at −0.0; an empty path has length +0
        let total_length = arcs.iter().map(|a| a.length).sum::<f64>() + 0.0;
        Path { arcs, total_length }
    }

    pub fn word(&self) -> Word {
        Word(self.arcs.iter().map(|a| a.symbol).collect())
    }

    pub fn start(&self) -> Option<PolarPoint> {
        self.arcs.first().map(|a| a.start)
    }

    pub fn end(&self) -> Option<PolarPoint> {
        self.arcs.last().map(|a| a.end)
    }

    /// Removes arcs no longer than `eps` and the rotations they leave dangling,
    /// then restitches the chain and merges equal neighbours. Each removal
    /// moves a joint by at most `eps`.
    pub fn pruned(&self, eps: f64) -> Path {
        let mut out: Vec<Arc> = Vec::with_capacity(self.arcs.len());
        for a in &self.arcs {
            if a.symbol != Symbol::Rot && a.length <= eps {
                continue;
            }
            let mut a = *a;
            match out.last_mut() {
                None if a.symbol == Symbol::Rot => continue,
                None => {}
                Some(l) if l.symbol == Symbol::Rot && a.symbol == Symbol::Rot => continue,
                Some(l) if l.symbol == a.symbol && l.phi == a.phi => {
                    l.end = a.end;
                    l.length += a.length;
                    continue;
                }
                Some(l) => {
                    a.start = l.end;
                    if a.symbol == Symbol::Rot {
                        a.end = l.end;
                    }
                }
            }
            out.push(a);
        }
        while out.last().map(|l| l.symbol) == Some(Symbol::Rot) {
            out.pop();
        }
        Path::new(out)
    }

    /// Largest distance between consecutive arc endpoints.
    pub fn max_gap(&self) -> f64 {
        self.arcs
            .windows(2)
            .map(|w| w[0].end.distance(&w[1].start))
            .fold(0.0, f64::max)
    }

    pub fn max_rho(&self) -> f64 {
        self.arcs
            .iter()
            .flat_map(|a| [a.start.rho, a.end.rho])
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn word_round_trips_through_text() {
        for w in ["E1+*E2-S-E1-", "S+E2+*E1-", "S-", "E1+*E1-"] {
            let parsed: Word = w.parse().unwrap();
            assert_eq!(parsed.to_string(), w);
        }
        assert!("E3+".parse::<Word>().is_err());
        assert!("S".parse::<Word>().is_err());
    }

    #[test]
    fn transform_reverses_and_flips() {
        let w: Word = "S-*E2+".parse().unwrap();
        assert_eq!(w.transformed().to_string(), "E2-*S+");
        let w: Word = "E1+*E2-S-E1-".parse().unwrap();
        assert_eq!(w.transformed().to_string(), "E1+S+E2+*E1-");
        assert_eq!(w.transformed().transformed(), w);
    }

    #[test]
    fn switches_ignore_rotations() {
        let w: Word = "E1+*E2-S-E1-".parse().unwrap();
        assert_eq!(w.switches(), 3);
        assert_eq!(Word::empty().switches(), 0);
    }

    #[test]
    fn normalized_strips_rotations() {
        let w: Word = "**S+**S-*".parse().unwrap();
        assert_eq!(w.normalized().to_string(), "S+*S-");
    }
}
