//! Exact points, half-open arcs and canonical arc unions on the circle R/Z.
//!
//! An [`ArcSet`] is stored internally as a sorted list of disjoint,
//! non-adjacent half-open segments `[a, b)` with `0 <= a < b <= 1`. A set
//! containing both `[x, 1)` and `[0, y)` is presented to callers as a single
//! wrapping arc `[x, y + 1)`; the full circle is the single arc of length 1
//! starting at 0. Two equal point sets always have identical representations.

use std::fmt;

use num::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::rational::{format_rational, frac, serde_str, Rational};

/// A point of the circle, stored as its representative in `[0, 1)`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct CirclePoint(Rational);

impl CirclePoint {
    /// Reduces `value` mod 1.
    pub fn new(value: Rational) -> Self {
        if value >= Rational::zero() && value < Rational::one() {
            CirclePoint(value)
        } else {
            CirclePoint(frac(&value))
        }
    }

    pub fn zero() -> Self {
        CirclePoint(Rational::zero())
    }

    pub fn value(&self) -> &Rational {
        &self.0
    }

    pub fn into_value(self) -> Rational {
        self.0
    }

    /// `self + c mod 1`.
    pub fn shifted(&self, c: &Rational) -> CirclePoint {
        CirclePoint::new(&self.0 + c)
    }

    /// Arc-length distance on the circle, in `[0, 1/2]`.
    pub fn distance(&self, other: &CirclePoint) -> Rational {
        let d = if self.0 >= other.0 { &self.0 - &other.0 } else { &other.0 - &self.0 };
        let alt = Rational::one() - &d;
        if alt < d {
            alt
        } else {
            d
        }
    }
}

impl From<Rational> for CirclePoint {
    fn from(v: Rational) -> Self {
        CirclePoint::new(v)
    }
}

impl fmt::Debug for CirclePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", format_rational(&self.0))
    }
}

impl fmt::Display for CirclePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_rational(&self.0))
    }
}

impl Serialize for CirclePoint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        serde_str::serialize(&self.0, s)
    }
}

impl<'de> Deserialize<'de> for CirclePoint {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        serde_str::deserialize(d).map(CirclePoint::new)
    }
}

/// Half-open arc `[start, start + length)`, possibly wrapping through 0.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawArc", into = "RawArc")]
pub struct Arc {
    start: CirclePoint,
    length: Rational,
}

#[derive(Serialize, Deserialize)]
struct RawArc {
    start: CirclePoint,
    #[serde(with = "serde_str")]
    length: Rational,
}

impl TryFrom<RawArc> for Arc {
    type Error = Error;
    fn try_from(r: RawArc) -> Result<Self, Error> {
        Arc::new(r.start, r.length)
    }
}

impl From<Arc> for RawArc {
    fn from(a: Arc) -> Self {
        RawArc { start: a.start, length: a.length }
    }
}

impl Arc {
    /// Fails unless `0 < length <= 1`.
    pub fn new(start: CirclePoint, length: Rational) -> Result<Self, Error> {
        if length <= Rational::zero() || length > Rational::one() {
            return Err(Error::InvalidArc(format!("length {} outside (0, 1]", format_rational(&length))));
        }
        Ok(Arc { start, length })
    }

    /// The arc `[a, b)` for real numbers `a < b <= a + 1`.
    pub fn from_endpoints(a: &Rational, b: &Rational) -> Result<Self, Error> {
        Arc::new(CirclePoint::new(a.clone()), b - a)
    }

    pub fn full() -> Self {
        Arc { start: CirclePoint::zero(), length: Rational::one() }
    }

    pub fn start(&self) -> &CirclePoint {
        &self.start
    }

    pub fn length(&self) -> &Rational {
        &self.length
    }

    /// Lifted end `start + length`, in `(0, 2)`.
    pub fn end(&self) -> Rational {
        self.start.value() + &self.length
    }

    pub fn wraps(&self) -> bool {
        self.end() > Rational::one()
    }

    pub fn is_full(&self) -> bool {
        self.length.is_one()
    }

    pub fn contains(&self, x: &CirclePoint) -> bool {
        let offset = frac(&(x.value() - self.start.value()));
        offset < self.length
    }

    /// `true` if `x` lies in the open arc `(start, start + length)`.
    pub fn contains_interior(&self, x: &CirclePoint) -> bool {
        let offset = frac(&(x.value() - self.start.value()));
        !offset.is_zero() && offset < self.length
    }

    pub fn translate(&self, c: &Rational) -> Arc {
        Arc { start: self.start.shifted(c), length: self.length.clone() }
    }

    /// Linear pieces of the arc inside `[0, 1]`.
    pub fn segments(&self) -> Vec<(Rational, Rational)> {
        let s = self.start.value().clone();
        let e = self.end();
        if e <= Rational::one() {
            vec![(s, e)]
        } else if s.is_zero() {
            vec![(Rational::zero(), Rational::one())]
        } else {
            vec![(s, Rational::one()), (Rational::zero(), e - Rational::one())]
        }
    }
}

impl fmt::Debug for Arc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.start, format_rational(&self.end()))
    }
}

/// Canonical finite union of half-open arcs.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct ArcSet {
    segs: Vec<(Rational, Rational)>,
    total: Rational,
}

impl ArcSet {
    pub fn empty() -> Self {
        ArcSet::default()
    }

    pub fn full() -> Self {
        ArcSet { segs: vec![(Rational::zero(), Rational::one())], total: Rational::one() }
    }

    pub fn from_arc(arc: &Arc) -> Self {
        Self::normalize(std::slice::from_ref(arc))
    }

    /// Canonical union of arbitrary (overlapping, adjacent, wrapping) arcs.
    pub fn normalize(raw: &[Arc]) -> Self {
        Self::from_segments(raw.iter().flat_map(Arc::segments).collect())
    }

    /// Canonical union of linear half-open segments `[a, b)` with
    /// `0 <= a <= b <= 1`; empty segments are dropped.
    pub fn from_segments(mut segs: Vec<(Rational, Rational)>) -> Self {
        segs.retain(|(a, b)| a < b);
        segs.sort_by(|x, y| x.0.cmp(&y.0));
        let mut merged: Vec<(Rational, Rational)> = Vec::with_capacity(segs.len());
        for (a, b) in segs {
            match merged.last_mut() {
                Some(last) if a <= last.1 => {
                    if b > last.1 {
                        last.1 = b;
                    }
                }
                _ => merged.push((a, b)),
            }
        }
        Self::from_canonical(merged)
    }

    fn from_canonical(segs: Vec<(Rational, Rational)>) -> Self {
        let total = segs.iter().fold(Rational::zero(), |acc, (a, b)| acc + (b - a));
        ArcSet { segs, total }
    }

    /// Sorted, disjoint, non-adjacent linear segments covering the set.
    pub fn segments(&self) -> &[(Rational, Rational)] {
        &self.segs
    }

    /// Canonical arcs, sorted by start. A set touching both 0 and 1 yields a
    /// single wrapping arc in last position.
    pub fn arcs(&self) -> Vec<Arc> {
        if self.is_full() {
            return vec![Arc::full()];
        }
        let n = self.segs.len();
        let wrap = n >= 2 && self.segs[0].0.is_zero() && self.segs[n - 1].1.is_one();
        let body = if wrap { &self.segs[1..n - 1] } else { &self.segs[..] };
        let mut out: Vec<Arc> =
            body.iter().map(|(a, b)| Arc { start: CirclePoint(a.clone()), length: b - a }).collect();
        if wrap {
            let (s, _) = &self.segs[n - 1];
            let (_, e) = &self.segs[0];
            out.push(Arc { start: CirclePoint(s.clone()), length: Rational::one() - s + e });
        }
        out
    }

    pub fn total_length(&self) -> &Rational {
        &self.total
    }

    pub fn is_empty(&self) -> bool {
        self.segs.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.total.is_one()
    }

    /// Number of canonical arcs.
    pub fn arc_count(&self) -> usize {
        let n = self.segs.len();
        if n >= 2 && self.segs[0].0.is_zero() && self.segs[n - 1].1.is_one() {
            n - 1
        } else {
            n
        }
    }

    pub fn contains(&self, x: &CirclePoint) -> bool {
        let v = x.value();
        // Last segment with start <= v.
        let idx = self.segs.partition_point(|(a, _)| a <= v);
        idx > 0 && v < &self.segs[idx - 1].1
    }

    /// `true` if `x` lies in the topological closure of the set.
    pub fn closure_contains(&self, x: &CirclePoint) -> bool {
        if self.contains(x) {
            return true;
        }
        let v = x.value();
        self.segs.iter().any(|(_, b)| b == v) || (v.is_zero() && self.segs.last().is_some_and(|(_, b)| b.is_one()))
    }

    pub fn union(&self, other: &ArcSet) -> ArcSet {
        let mut all = Vec::with_capacity(self.segs.len() + other.segs.len());
        all.extend(self.segs.iter().cloned());
        all.extend(other.segs.iter().cloned());
        Self::from_segments(all)
    }

    pub fn intersect(&self, other: &ArcSet) -> ArcSet {
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < self.segs.len() && j < other.segs.len() {
            let (a0, a1) = &self.segs[i];
            let (b0, b1) = &other.segs[j];
            let lo = if a0 > b0 { a0 } else { b0 };
            let hi = if a1 < b1 { a1 } else { b1 };
            if lo < hi {
                out.push((lo.clone(), hi.clone()));
            }
            if a1 < b1 {
                i += 1;
            } else {
                j += 1;
            }
        }
        Self::from_canonical(out)
    }

    /// Half-open complement. Endpoints are assigned so that the result is
    /// again a union of `[a, b)` arcs; lengths are exact.
    pub fn complement(&self) -> ArcSet {
        let mut out = Vec::with_capacity(self.segs.len() + 1);
        let mut cursor = Rational::zero();
        for (a, b) in &self.segs {
            if &cursor < a {
                out.push((cursor.clone(), a.clone()));
            }
            cursor = b.clone();
        }
        if cursor < Rational::one() {
            out.push((cursor, Rational::one()));
        }
        Self::from_canonical(out)
    }

    pub fn difference(&self, other: &ArcSet) -> ArcSet {
        self.intersect(&other.complement())
    }

    /// Every arc shifted by `c` mod 1.
    pub fn translate(&self, c: &Rational) -> ArcSet {
        let c = frac(c);
        if c.is_zero() {
            return self.clone();
        }
        let one = Rational::one();
        // Segments that stay below 1 keep their relative order, as do the
        // ones that wrap, so the result is two sorted runs plus at most one
        // straddling segment.
        let mut low = Vec::new();
        let mut high = Vec::new();
        for (a, b) in &self.segs {
            let a2 = a + &c;
            let b2 = b + &c;
            if b2 <= one {
                high.push((a2, b2));
            } else if a2 >= one {
                low.push((a2 - &one, b2 - &one));
            } else {
                high.push((a2, one.clone()));
                low.push((Rational::zero(), b2 - &one));
            }
        }
        low.extend(high);
        Self::from_segments(low)
    }

    pub fn is_subset(&self, other: &ArcSet) -> bool {
        // Every segment of self must sit inside one segment of other.
        let mut j = 0;
        for (a, b) in &self.segs {
            while j < other.segs.len() && &other.segs[j].1 <= a {
                j += 1;
            }
            match other.segs.get(j) {
                Some((c, d)) if c <= a && b <= d => {}
                _ => return false,
            }
        }
        true
    }

    /// Portion of the set inside the linear window `[lo, hi)`.
    pub fn clip(&self, lo: &Rational, hi: &Rational) -> Vec<(Rational, Rational)> {
        let start = self.segs.partition_point(|(_, b)| b <= lo);
        let mut out = Vec::new();
        for (a, b) in &self.segs[start..] {
            if a >= hi {
                break;
            }
            let x = if a > lo { a } else { lo };
            let y = if b < hi { b } else { hi };
            if x < y {
                out.push((x.clone(), y.clone()));
            }
        }
        out
    }

    /// All segment endpoints, sorted and deduplicated.
    pub fn endpoints(&self) -> Vec<Rational> {
        let mut v: Vec<Rational> = self.segs.iter().flat_map(|(a, b)| [a.clone(), b.clone()]).collect();
        v.dedup();
        v
    }
}

impl fmt::Debug for ArcSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.arcs()).finish()
    }
}

#[derive(Serialize, Deserialize)]
struct RawArcSet {
    arcs: Vec<Arc>,
}

impl Serialize for ArcSet {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        RawArcSet { arcs: self.arcs() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for ArcSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = RawArcSet::deserialize(d)?;
        Ok(ArcSet::normalize(&raw.arcs))
    }
}
