//! Piecewise continuous maps of the circle or the segment, Birkhoff
//! empirical measures along their orbits, visit frequencies near the
//! discontinuity set and a sampled wandering test for discontinuities.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc as Shared;

use num::bigint::BigInt;
use num::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::circle::CirclePoint;
use crate::error::{Error, Result};
use crate::itm::Itm;
use crate::measure::{Cdf, Measure, TestFunction, TestableMap};
use crate::rational::{format_rational, frac, parse_rational, serde_str, to_f64, Rational};

/// Tolerance for floating-point comparisons on general pieces.
const FLOAT_TOL: f64 = 1e-12;
/// Subintervals for Simpson quadrature over general pieces.
const QUADRATURE_STEPS: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    /// `R/Z`; images are reduced mod 1.
    Circle,
    /// `[0, 1]`; images must stay in `[0, 1]`.
    Segment,
}

pub type Evaluator = Shared<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum PieceFn {
    /// `x -> a x + b`, exact.
    Affine { a: Rational, b: Rational },
    /// Black-box continuous function evaluated in floating point, with a
    /// Lipschitz-style modulus of continuity hint.
    General { f: Evaluator, modulus: f64 },
}

impl fmt::Debug for PieceFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PieceFn::Affine { a, b } => write!(f, "Affine({} x + {})", format_rational(a), format_rational(b)),
            PieceFn::General { modulus, .. } => write!(f, "General(modulus {modulus})"),
        }
    }
}

impl PieceFn {
    fn eval_f64(&self, x: f64) -> f64 {
        match self {
            PieceFn::Affine { a, b } => to_f64(a) * x + to_f64(b),
            PieceFn::General { f, .. } => f(x),
        }
    }
}

/// A piece `[start, end)` of the partition (the last piece of a segment map
/// is closed at 1).
#[derive(Debug, Clone)]
pub struct Piece {
    pub start: Rational,
    pub end: Rational,
    pub func: PieceFn,
}

#[derive(Debug, Clone)]
pub struct PiecewiseMap {
    domain: Domain,
    pieces: Vec<Piece>,
    boundary_values: BTreeMap<Rational, Rational>,
    discontinuities: Vec<Rational>,
}

impl PiecewiseMap {
    /// Validates the partition and computes the discontinuity set: the
    /// points where the assigned value differs from a one-sided limit.
    pub fn new(domain: Domain, pieces: Vec<Piece>, boundary_values: BTreeMap<Rational, Rational>) -> Result<Self> {
        let invalid = |index: usize, reason: String| Error::InvalidMap { index, reason };
        if pieces.is_empty() {
            return Err(invalid(0, "no pieces".into()));
        }
        if !pieces[0].start.is_zero() {
            return Err(invalid(0, "first piece must start at 0".into()));
        }
        for (k, p) in pieces.iter().enumerate() {
            if p.start >= p.end {
                return Err(invalid(k, "empty piece".into()));
            }
            if k + 1 < pieces.len() && p.end != pieces[k + 1].start {
                return Err(invalid(k + 1, "pieces are not contiguous".into()));
            }
        }
        if !pieces[pieces.len() - 1].end.is_one() {
            return Err(invalid(pieces.len() - 1, "last piece must end at 1".into()));
        }
        for (x, v) in &boundary_values {
            let out_of_domain = x.is_negative()
                || x > &Rational::one()
                || (domain == Domain::Circle && x.is_one())
                || (domain == Domain::Segment && (v.is_negative() || v > &Rational::one()));
            if out_of_domain {
                return Err(Error::InvalidInput(format!(
                    "boundary value {} -> {} outside the domain",
                    format_rational(x),
                    format_rational(v)
                )));
            }
        }
        if domain == Domain::Segment {
            for (k, p) in pieces.iter().enumerate() {
                if let PieceFn::Affine { a, b } = &p.func {
                    for x in [&p.start, &p.end] {
                        let y = a * x + b;
                        if y.is_negative() || y > Rational::one() {
                            return Err(invalid(k, format!("image {} leaves [0, 1]", format_rational(&y))));
                        }
                    }
                }
            }
        }
        let mut map = PiecewiseMap { domain, pieces, boundary_values, discontinuities: Vec::new() };
        map.discontinuities = map.detect_discontinuities();
        Ok(map)
    }

    /// Replaces the computed discontinuity set.
    pub fn with_discontinuities(mut self, mut h: Vec<Rational>) -> Self {
        h.sort();
        h.dedup();
        self.discontinuities = h;
        self
    }

    /// The circle map agreeing with `s`, cut at 0.
    pub fn from_itm(s: &Itm) -> Self {
        let cut = s.cut_at_zero();
        let n = cut.n();
        let pieces = (0..n)
            .map(|j| Piece {
                start: cut.breakpoint(j).value().clone(),
                end: if j + 1 < n { cut.breakpoint(j + 1).value().clone() } else { Rational::one() },
                func: PieceFn::Affine { a: Rational::one(), b: cut.shift(j).clone() },
            })
            .collect();
        PiecewiseMap::new(Domain::Circle, pieces, BTreeMap::new()).expect("an ITM partition is valid")
    }

    /// Rotation by `c` as a one-piece circle map.
    pub fn rotation(c: Rational) -> Self {
        PiecewiseMap::from_itm(&Itm::rotation(c))
    }

    /// `x -> x/2` on `(0, 1]` with `0 -> 1`, a segment map with no invariant
    /// probability measure.
    pub fn halving_with_jump() -> Self {
        let piece = Piece {
            start: Rational::zero(),
            end: Rational::one(),
            func: PieceFn::Affine { a: Rational::new(BigInt::one(), BigInt::from(2)), b: Rational::zero() },
        };
        let values = BTreeMap::from([(Rational::zero(), Rational::one())]);
        PiecewiseMap::new(Domain::Segment, vec![piece], values).expect("valid segment map")
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    pub fn boundary_values(&self) -> &BTreeMap<Rational, Rational> {
        &self.boundary_values
    }

    pub fn discontinuities(&self) -> &[Rational] {
        &self.discontinuities
    }

    pub fn is_affine(&self) -> bool {
        self.pieces.iter().all(|p| matches!(p.func, PieceFn::Affine { .. }))
    }

    fn piece_index(&self, x: &Rational) -> usize {
        self.pieces.partition_point(|p| &p.start <= x).saturating_sub(1)
    }

    fn piece_index_f64(&self, x: f64) -> usize {
        self.pieces.partition_point(|p| to_f64(&p.start) <= x).saturating_sub(1)
    }

    fn reduce(&self, y: Rational) -> Rational {
        match self.domain {
            Domain::Circle => frac(&y),
            Domain::Segment => y,
        }
    }

    fn reduce_f64(&self, y: f64) -> f64 {
        match self.domain {
            Domain::Circle => y - y.floor(),
            Domain::Segment => y,
        }
    }

    fn normalize_point(&self, x: &Rational) -> Result<Rational> {
        match self.domain {
            Domain::Circle => Ok(frac(x)),
            Domain::Segment if x.is_negative() || x > &Rational::one() => {
                Err(Error::InvalidInput(format!("{} outside [0, 1]", format_rational(x))))
            }
            Domain::Segment => Ok(x.clone()),
        }
    }

    fn affine_at(&self, k: usize, x: &Rational) -> Result<Rational> {
        match &self.pieces[k].func {
            PieceFn::Affine { a, b } => Ok(self.reduce(a * x + b)),
            PieceFn::General { .. } => Err(Error::InvalidInput("exact evaluation needs affine pieces".into())),
        }
    }

    /// `T(x)`, exactly. Requires affine pieces.
    pub fn eval(&self, x: &Rational) -> Result<Rational> {
        let x = self.normalize_point(x)?;
        if let Some(v) = self.boundary_values.get(&x) {
            return Ok(self.reduce(v.clone()));
        }
        self.affine_at(self.piece_index(&x), &x)
    }

    pub fn eval_f64(&self, x: f64) -> f64 {
        let x = self.reduce_f64(x);
        if let Some((_, v)) = self.boundary_values.iter().find(|(p, _)| (to_f64(p) - x).abs() <= FLOAT_TOL) {
            return self.reduce_f64(to_f64(v));
        }
        self.reduce_f64(self.pieces[self.piece_index_f64(x)].func.eval_f64(x))
    }

    /// Distance in the domain's metric.
    pub fn distance(&self, x: &Rational, y: &Rational) -> Rational {
        match self.domain {
            Domain::Circle => CirclePoint::new(x.clone()).distance(&CirclePoint::new(y.clone())),
            Domain::Segment => (x - y).abs(),
        }
    }

    fn distance_f64(&self, x: f64, y: f64) -> f64 {
        let d = (x - y).abs();
        match self.domain {
            Domain::Circle => d.min(1.0 - d),
            Domain::Segment => d,
        }
    }

    fn same_point(&self, x: &Rational, y: &Rational) -> bool {
        self.distance(x, y).is_zero()
    }

    fn detect_discontinuities(&self) -> Vec<Rational> {
        let mut candidates: Vec<Rational> = self.pieces.iter().map(|p| p.start.clone()).collect();
        candidates.extend(self.boundary_values.keys().cloned());
        candidates.sort();
        candidates.dedup();
        candidates
            .into_iter()
            .filter(|p| if self.is_affine() { self.breaks_at_exact(p) } else { self.breaks_at_f64(to_f64(p)) })
            .collect()
    }

    fn left_piece(&self, p: &Rational) -> Option<(usize, Rational)> {
        let k = self.piece_index(p);
        if &self.pieces[k].start != p {
            return Some((k, p.clone()));
        }
        match (k, self.domain) {
            (0, Domain::Segment) => None,
            (0, Domain::Circle) => Some((self.pieces.len() - 1, Rational::one())),
            _ => Some((k - 1, p.clone())),
        }
    }

    fn breaks_at_exact(&self, p: &Rational) -> bool {
        let value = self.eval(p).expect("affine map");
        let right = self.affine_at(self.piece_index(p), p).expect("affine map");
        let right_ok = (self.domain == Domain::Segment && p.is_one()) || self.same_point(&value, &right);
        let left_ok = match self.left_piece(p) {
            Some((k, x)) => self.same_point(&value, &self.affine_at(k, &x).expect("affine map")),
            None => true,
        };
        !(right_ok && left_ok)
    }

    fn breaks_at_f64(&self, p: f64) -> bool {
        let value = self.eval_f64(p);
        let k = self.piece_index_f64(p);
        let right = self.reduce_f64(self.pieces[k].func.eval_f64(p));
        let mut broken = self.distance_f64(value, right) > FLOAT_TOL;
        let exact_p = Rational::from_float(p).unwrap_or_else(Rational::zero);
        if let Some((j, x)) = self.left_piece(&exact_p) {
            let left = self.reduce_f64(self.pieces[j].func.eval_f64(to_f64(&x)));
            broken |= self.distance_f64(value, left) > FLOAT_TOL;
        }
        broken
    }

    fn check_not_in_h(&self, step: usize, x: &Rational) -> Result<()> {
        if self.discontinuities.iter().any(|h| self.same_point(h, x)) {
            return Err(Error::HitDiscontinuity { step, point: format_rational(x) });
        }
        Ok(())
    }

    /// `x0, T(x0), ..., T^{len-1}(x0)`, failing if any of them lies in H.
    fn trajectory(&self, x0: &Rational, len: usize) -> Result<Vec<Rational>> {
        let mut out = Vec::with_capacity(len);
        if len == 0 {
            return Ok(out);
        }
        let x = self.normalize_point(x0)?;
        self.check_not_in_h(0, &x)?;
        out.push(x);
        for step in 1..len {
            let x = self.eval(&out[step - 1])?;
            self.check_not_in_h(step, &x)?;
            out.push(x);
        }
        Ok(out)
    }

    /// The first `m` points of the orbit of `x0`, exactly.
    pub fn orbit(&self, x0: &Rational, m: usize) -> Result<Vec<Rational>> {
        if !self.is_affine() {
            return Err(Error::InvalidInput("exact orbits need affine pieces".into()));
        }
        self.trajectory(x0, m)
    }

    /// The first `m` points of the orbit of `x0` in floating point.
    pub fn orbit_f64(&self, x0: f64, m: usize) -> Result<Vec<f64>> {
        let mut x = self.reduce_f64(x0);
        let h: Vec<f64> = self.discontinuities.iter().map(to_f64).collect();
        let mut out = Vec::with_capacity(m);
        for step in 0..m {
            if h.iter().any(|p| self.distance_f64(*p, x) <= FLOAT_TOL) {
                return Err(Error::HitDiscontinuity { step, point: x.to_string() });
            }
            out.push(x);
            x = self.eval_f64(x);
        }
        Ok(out)
    }

    fn distance_to_h(&self, x: &Rational) -> Option<Rational> {
        self.discontinuities.iter().map(|h| self.distance(h, x)).min()
    }

    fn distance_to_h_f64(&self, x: f64) -> Option<f64> {
        self.discontinuities.iter().map(|h| self.distance_f64(to_f64(h), x)).reduce(f64::min)
    }

    /// `int phi(T x) dx` over `[lo, hi]` inside piece `k`, times `w`.
    fn integrate_piece(&self, k: usize, lo: &Rational, hi: &Rational, w: f64, phi: &TestFunction) -> f64 {
        match &self.pieces[k].func {
            PieceFn::Affine { a, b } if a.is_zero() => {
                w * to_f64(&(hi - lo)) * phi.eval(to_f64(&self.reduce(b.clone())))
            }
            PieceFn::Affine { a, b } => {
                let (y0, y1) = (to_f64(&(a * lo + b)), to_f64(&(a * hi + b)));
                w / to_f64(a) * (self.image_antiderivative(phi, y1) - self.image_antiderivative(phi, y0))
            }
            PieceFn::General { f, .. } => {
                let (lo, hi) = (to_f64(lo), to_f64(hi));
                let step = (hi - lo) / QUADRATURE_STEPS as f64;
                let g = |x: f64| phi.eval(self.reduce_f64(f(x)));
                let mut acc = g(lo) + g(hi);
                for i in 1..QUADRATURE_STEPS {
                    acc += g(lo + i as f64 * step) * if i % 2 == 1 { 4.0 } else { 2.0 };
                }
                w * acc * step / 3.0
            }
        }
    }

    /// Antiderivative of `y -> phi(y reduced into the domain)`.
    fn image_antiderivative(&self, phi: &TestFunction, y: f64) -> f64 {
        match (self.domain, phi) {
            (Domain::Circle, TestFunction::Coordinate) => {
                let f = y - y.floor();
                0.5 * y.floor() + 0.5 * f * f
            }
            _ => phi.antiderivative(y),
        }
    }
}

impl TestableMap for PiecewiseMap {
    fn composed_integrals(&self, family: &[TestFunction], mu: &Measure) -> Vec<f64> {
        family
            .iter()
            .map(|phi| {
                let mut total = 0.0;
                for (a, b, w) in mu.density_segments() {
                    let w = to_f64(w);
                    let first = self.piece_index(a);
                    for k in first..self.pieces.len() {
                        let p = &self.pieces[k];
                        if &p.start >= b {
                            break;
                        }
                        let lo = if a > &p.start { a } else { &p.start };
                        let hi = if b < &p.end { b } else { &p.end };
                        if lo < hi {
                            total += self.integrate_piece(k, lo, hi, w, phi);
                        }
                    }
                }
                for (p, m) in mu.atoms() {
                    let y = if self.is_affine() {
                        to_f64(&self.eval(p.value()).expect("affine map"))
                    } else {
                        self.eval_f64(to_f64(p.value()))
                    };
                    total += to_f64(m) * phi.eval(y);
                }
                total
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrequencyVerdict {
    /// Visits near H thin out as the neighbourhood shrinks.
    Plausible,
    /// A positive share of the orbit stays near H however small the
    /// neighbourhood.
    Violated,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyRow {
    pub m: usize,
    #[serde(with = "serde_str")]
    pub eps: Rational,
    #[serde(with = "serde_str")]
    pub f: Rational,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyReport {
    pub rows: Vec<FrequencyRow>,
    pub verdict: FrequencyVerdict,
}

impl FrequencyReport {
    pub fn get(&self, m: usize, eps: &Rational) -> Option<&Rational> {
        self.rows.iter().find(|r| r.m == m && &r.eps == eps).map(|r| &r.f)
    }
}

/// `f(eps, m) = #{1 <= k <= m : d(T^k x0, H) < eps} / m` for every pair.
///
/// The verdict looks at `g(eps)`, the largest `f(eps, m)` over the upper
/// half of the tested `m`: violated when `g` at the smallest `eps` is still
/// at least half of `g` at the largest, plausible when `g` vanishes at the
/// smallest `eps` or falls at least like `sqrt(eps)` while staying monotone.
pub fn visit_frequency(
    t: &PiecewiseMap,
    x0: &Rational,
    ms: &[usize],
    epsilons: &[Rational],
) -> Result<FrequencyReport> {
    let mut ms = ms.to_vec();
    ms.sort_unstable();
    ms.dedup();
    let mut eps = epsilons.to_vec();
    eps.sort();
    eps.dedup();
    if ms.first() == Some(&0) || eps.iter().any(|e| !e.is_positive()) {
        return Err(Error::InvalidInput("orbit lengths and radii must be positive".into()));
    }
    let max_m = ms.last().copied().unwrap_or(0);
    // Only the order of distances matters, so the float path compares f64s.
    let hits: Vec<Vec<bool>> = if t.is_affine() {
        let orbit = t.trajectory(x0, max_m + 1)?;
        let d: Vec<Option<Rational>> = orbit[1..].iter().map(|x| t.distance_to_h(x)).collect();
        eps.iter().map(|e| d.iter().map(|d| d.as_ref().is_some_and(|d| d < e)).collect()).collect()
    } else {
        let orbit = t.orbit_f64(to_f64(x0), max_m + 1)?;
        let d: Vec<Option<f64>> = orbit[1..].iter().map(|x| t.distance_to_h_f64(*x)).collect();
        eps.iter().map(|e| d.iter().map(|d| d.is_some_and(|d| d < to_f64(e))).collect()).collect()
    };
    let mut rows = Vec::with_capacity(ms.len() * eps.len());
    for &m in &ms {
        for (e, h) in eps.iter().zip(&hits) {
            let count = h[..m].iter().filter(|b| **b).count();
            rows.push(FrequencyRow { m, eps: e.clone(), f: Rational::new(BigInt::from(count), BigInt::from(m)) });
        }
    }
    let verdict = frequency_verdict(&rows, &ms, &eps);
    Ok(FrequencyReport { rows, verdict })
}

fn frequency_verdict(rows: &[FrequencyRow], ms: &[usize], eps: &[Rational]) -> FrequencyVerdict {
    if eps.len() < 2 || ms.is_empty() {
        return FrequencyVerdict::Inconclusive;
    }
    let upper = &ms[ms.len() / 2..];
    let g: Vec<f64> = eps
        .iter()
        .map(|e| rows.iter().filter(|r| &r.eps == e && upper.contains(&r.m)).map(|r| to_f64(&r.f)).fold(0.0, f64::max))
        .collect();
    let (g_min, g_max) = (g[0], g[g.len() - 1]);
    if g_max > 0.0 && g_min >= g_max / 2.0 {
        return FrequencyVerdict::Violated;
    }
    let ratio = to_f64(&eps[0]) / to_f64(&eps[eps.len() - 1]);
    let monotone = g.windows(2).all(|w| w[0] <= w[1]);
    if g_min == 0.0 || (monotone && g_min <= ratio.sqrt() * g_max) {
        FrequencyVerdict::Plausible
    } else {
        FrequencyVerdict::Inconclusive
    }
}

/// `(1/m) sum_{i<m} delta(T^i x)`, kept as an orbit so that the defect
/// identity can be checked exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure {
    pub domain: Domain,
    pub base: Rational,
    pub m: usize,
    /// `T^i(x)` for `0 <= i < m`.
    pub orbit: Vec<Rational>,
    /// `T^m(x)`.
    pub end: Rational,
}

pub fn empirical_measure(t: &PiecewiseMap, x0: &Rational, m: usize) -> Result<EmpiricalMeasure> {
    if m == 0 {
        return Err(Error::InvalidInput("empirical measure needs m >= 1".into()));
    }
    let mut orbit = t.orbit(x0, m + 1)?;
    let end = orbit.pop().expect("orbit has m + 1 points");
    Ok(EmpiricalMeasure { domain: t.domain(), base: orbit[0].clone(), m, orbit, end })
}

impl EmpiricalMeasure {
    pub fn weight(&self) -> Rational {
        Rational::new(BigInt::one(), BigInt::from(self.m))
    }

    /// Orbit points with their multiplicities.
    pub fn counts(&self) -> BTreeMap<Rational, u64> {
        let mut c = BTreeMap::new();
        for x in &self.orbit {
            *c.entry(x.clone()).or_insert(0) += 1;
        }
        c
    }

    pub fn cdf(&self) -> Cdf {
        let w = self.weight();
        Cdf::new(
            Vec::new(),
            self.counts().into_iter().map(|(x, c)| (x, &w * Rational::from_integer(BigInt::from(c)))).collect(),
        )
    }

    /// The same atoms as a circle measure; segment orbits touching 1 have
    /// no circle counterpart.
    pub fn to_measure(&self) -> Result<Measure> {
        if self.domain == Domain::Segment && self.orbit.iter().any(|x| x.is_one()) {
            return Err(Error::InvalidInput("atom at 1 cannot be placed on the circle".into()));
        }
        let w = self.weight();
        Measure::new(
            Vec::new(),
            self.counts()
                .into_iter()
                .map(|(x, c)| (CirclePoint::new(x), &w * Rational::from_integer(BigInt::from(c))))
                .collect(),
        )
    }

    /// `||T#mu_m - mu_m||`, computed by pushing every atom through `t`.
    pub fn pushforward_defect(&self, t: &PiecewiseMap) -> Result<Rational> {
        let mut diff: BTreeMap<Rational, i64> = BTreeMap::new();
        for (x, c) in self.counts() {
            *diff.entry(t.eval(&x)?).or_insert(0) += c as i64;
            *diff.entry(x).or_insert(0) -= c as i64;
        }
        let total: i64 = diff.values().map(|d| d.abs()).sum();
        Ok(Rational::new(BigInt::from(total), BigInt::from(self.m)))
    }

    /// `2/m` if the orbit does not close up after `m` steps, else 0.
    pub fn expected_defect(&self) -> Rational {
        if self.end == self.base {
            Rational::zero()
        } else {
            Rational::new(BigInt::from(2), BigInt::from(self.m))
        }
    }
}

#[derive(Serialize)]
struct RawAtom<'a> {
    #[serde(with = "serde_str")]
    point: &'a Rational,
    #[serde(with = "serde_str")]
    mass: Rational,
}

impl Serialize for EmpiricalMeasure {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        #[serde(rename_all = "camelCase")]
        struct Raw<'a> {
            domain: Domain,
            #[serde(with = "serde_str")]
            base: &'a Rational,
            m: usize,
            atoms: Vec<RawAtom<'a>>,
            #[serde(with = "serde_str")]
            end_point: &'a Rational,
        }
        let w = self.weight();
        let counts = self.counts();
        let atoms = counts
            .iter()
            .map(|(x, c)| RawAtom { point: x, mass: &w * Rational::from_integer(BigInt::from(*c)) })
            .collect();
        Raw { domain: self.domain, base: &self.base, m: self.m, atoms, end_point: &self.end }.serialize(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct RadiusResult {
    #[serde(with = "serde_str")]
    pub radius: Rational,
    /// Smallest `k <= horizon` with `T^k(p)` back in the ball, over samples.
    pub return_time: Option<usize>,
    #[serde(with = "crate::rational::serde_str_opt")]
    pub witness: Option<Rational>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum WanderingVerdict {
    /// Every tested ball had a returning sample: evidence that the point is
    /// nonwandering.
    ReturnFound,
    /// Some ball had no return within the horizon: evidence, not proof,
    /// that the point is wandering.
    NoReturnWithinBudget,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WanderingReport {
    #[serde(with = "serde_str")]
    pub point: Rational,
    pub radii: Vec<RadiusResult>,
    pub verdict: WanderingVerdict,
}

/// For each `h` in H and each radius `r`, iterates `samples` evenly spaced
/// points of the open ball `U_r(h)` for up to `horizon` steps and records
/// the earliest return into the ball.
pub fn wandering_discontinuity_check(
    t: &PiecewiseMap,
    radii: &[Rational],
    horizon: usize,
    samples: usize,
) -> Result<Vec<WanderingReport>> {
    if !t.is_affine() {
        return Err(Error::InvalidInput("the wandering check needs affine pieces".into()));
    }
    if radii.iter().any(|r| !r.is_positive()) || samples == 0 {
        return Err(Error::InvalidInput("radii and sample count must be positive".into()));
    }
    t.discontinuities()
        .iter()
        .map(|h| {
            let radii: Vec<RadiusResult> =
                radii.iter().map(|r| ball_return(t, h, r, horizon, samples)).collect::<Result<_>>()?;
            let verdict = if radii.iter().all(|r| r.return_time.is_some()) {
                WanderingVerdict::ReturnFound
            } else {
                WanderingVerdict::NoReturnWithinBudget
            };
            Ok(WanderingReport { point: h.clone(), radii, verdict })
        })
        .collect()
}

fn ball_return(t: &PiecewiseMap, h: &Rational, r: &Rational, horizon: usize, samples: usize) -> Result<RadiusResult> {
    let two_r = r * Rational::from_integer(BigInt::from(2));
    let denom = Rational::from_integer(BigInt::from(samples + 1));
    let mut best: Option<(usize, Rational)> = None;
    for k in 1..=samples {
        let raw = h - r + &two_r * Rational::from_integer(BigInt::from(k)) / &denom;
        let p = match t.domain() {
            Domain::Circle => frac(&raw),
            Domain::Segment if raw.is_negative() || raw > Rational::one() => continue,
            Domain::Segment => raw,
        };
        let limit = best.as_ref().map_or(horizon, |(b, _)| b - 1);
        let mut x = p.clone();
        for step in 1..=limit {
            x = t.eval(&x)?;
            if &t.distance(&x, h) < r {
                best = Some((step, p.clone()));
                break;
            }
        }
    }
    Ok(RadiusResult { radius: r.clone(), return_time: best.as_ref().map(|(k, _)| *k), witness: best.map(|(_, p)| p) })
}

#[derive(Serialize, Deserialize)]
struct RawAffine {
    #[serde(with = "serde_str")]
    a: Rational,
    #[serde(with = "serde_str")]
    b: Rational,
}

#[derive(Serialize, Deserialize)]
struct RawPiece {
    interval: [String; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    affine: Option<RawAffine>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    general: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct RawMap {
    domain: Domain,
    pieces: Vec<RawPiece>,
    #[serde(default)]
    boundary_values: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    discontinuities: Option<Vec<String>>,
}

impl Serialize for PiecewiseMap {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RawMap {
            domain: self.domain,
            pieces: self
                .pieces
                .iter()
                .map(|p| RawPiece {
                    interval: [format_rational(&p.start), format_rational(&p.end)],
                    affine: match &p.func {
                        PieceFn::Affine { a, b } => Some(RawAffine { a: a.clone(), b: b.clone() }),
                        PieceFn::General { .. } => None,
                    },
                    general: matches!(p.func, PieceFn::General { .. }),
                })
                .collect(),
            boundary_values: self
                .boundary_values
                .iter()
                .map(|(k, v)| (format_rational(k), format_rational(v)))
                .collect(),
            discontinuities: Some(self.discontinuities.iter().map(format_rational).collect()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for PiecewiseMap {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = RawMap::deserialize(d)?;
        let parse = |s: &str| parse_rational(s).map_err(D::Error::custom);
        let mut pieces = Vec::with_capacity(raw.pieces.len());
        for (k, p) in raw.pieces.into_iter().enumerate() {
            let Some(affine) = p.affine else {
                return Err(D::Error::custom(format!("piece {k}: only affine pieces can be read from JSON")));
            };
            pieces.push(Piece {
                start: parse(&p.interval[0])?,
                end: parse(&p.interval[1])?,
                func: PieceFn::Affine { a: affine.a, b: affine.b },
            });
        }
        let mut values = BTreeMap::new();
        for (k, v) in &raw.boundary_values {
            values.insert(parse(k)?, parse(v)?);
        }
        let map = PiecewiseMap::new(raw.domain, pieces, values).map_err(D::Error::custom)?;
        Ok(match raw.discontinuities {
            Some(h) => map.with_discontinuities(h.iter().map(|s| parse(s)).collect::<std::result::Result<_, _>>()?),
            None => map,
        })
    }
}
