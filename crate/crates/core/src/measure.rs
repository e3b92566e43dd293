//! Finite measures on the circle made of a piecewise-constant density and a
//! finite list of atoms, with exact pushforward under interval translation
//! maps, exact invariance residuals and Kolmogorov (CDF) distances.

use std::collections::HashMap;
use std::f64::consts::TAU;

use num::bigint::BigInt;
use num::{One, Signed, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::circle::{Arc, ArcSet, CirclePoint};
use crate::error::{Error, Result};
use crate::itm::{push_translated, AttractorResult, FiniteType, Itm};
use crate::rational::{format_rational, serde_str, to_f64, Rational};

/// Upper bound on pushforward iterations when searching for a measure cycle.
pub const DEFAULT_CYCLE_BUDGET: usize = 1 << 12;

/// Piecewise-constant density plus atoms. Canonical: density segments are
/// sorted, disjoint, carry positive weights, and adjacent segments of equal
/// weight are merged; atoms are sorted by position with positive masses.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct Measure {
    segs: Vec<(Rational, Rational, Rational)>,
    atoms: Vec<(CirclePoint, Rational)>,
    total: Rational,
}

impl std::fmt::Debug for Measure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let d: Vec<String> = self
            .segs
            .iter()
            .map(|(a, b, w)| format!("[{}, {})*{}", format_rational(a), format_rational(b), format_rational(w)))
            .collect();
        let a: Vec<String> = self.atoms.iter().map(|(p, m)| format!("{}@{}", format_rational(m), p)).collect();
        write!(f, "Measure {{ density: [{}], atoms: [{}] }}", d.join(", "), a.join(", "))
    }
}

impl Measure {
    pub fn zero() -> Self {
        Measure::default()
    }

    pub fn lebesgue() -> Self {
        Measure::restricted_lebesgue(&ArcSet::full())
    }

    /// Lebesgue measure restricted to `set`, not renormalized.
    pub fn restricted_lebesgue(set: &ArcSet) -> Self {
        let segs = set.segments().iter().map(|(a, b)| (a.clone(), b.clone(), Rational::one())).collect();
        Measure::from_parts(segs, Vec::new())
    }

    /// Normalized Lebesgue measure on `set`.
    pub fn uniform_on(set: &ArcSet) -> Result<Self> {
        if set.is_empty() {
            return Err(Error::InvalidInput("cannot normalize Lebesgue measure on an empty set".into()));
        }
        let w = Rational::one() / set.total_length();
        let segs = set.segments().iter().map(|(a, b)| (a.clone(), b.clone(), w.clone())).collect();
        Ok(Measure::from_parts(segs, Vec::new()))
    }

    pub fn dirac(p: CirclePoint) -> Self {
        Measure::from_parts(Vec::new(), vec![(p, Rational::one())])
    }

    /// Builds a measure from possibly overlapping weighted arcs (weights add
    /// up) and atoms. Negative weights or masses are rejected.
    pub fn new(density: Vec<(Arc, Rational)>, atoms: Vec<(CirclePoint, Rational)>) -> Result<Self> {
        let mut segs = Vec::new();
        for (arc, w) in density {
            if w.is_negative() {
                return Err(Error::InvalidInput(format!("negative density weight {}", format_rational(&w))));
            }
            segs.extend(arc.segments().into_iter().map(|(a, b)| (a, b, w.clone())));
        }
        if let Some((_, m)) = atoms.iter().find(|(_, m)| m.is_negative()) {
            return Err(Error::InvalidInput(format!("negative atom mass {}", format_rational(m))));
        }
        Ok(Measure::from_parts(segs, atoms))
    }

    /// Canonicalizes raw linear segments (`0 <= a <= b <= 1`, any overlap)
    /// and atoms.
    pub(crate) fn from_parts(segs: Vec<(Rational, Rational, Rational)>, atoms: Vec<(CirclePoint, Rational)>) -> Self {
        let segs = sum_overlaps(segs);
        let mut atoms: Vec<(CirclePoint, Rational)> = atoms.into_iter().filter(|(_, m)| !m.is_zero()).collect();
        atoms.sort_by(|x, y| x.0.cmp(&y.0));
        let mut merged: Vec<(CirclePoint, Rational)> = Vec::with_capacity(atoms.len());
        for (p, m) in atoms {
            match merged.last_mut() {
                Some(last) if last.0 == p => last.1 += m,
                _ => merged.push((p, m)),
            }
        }
        merged.retain(|(_, m)| !m.is_zero());
        let total = segs.iter().fold(Rational::zero(), |acc, (a, b, w)| acc + (b - a) * w)
            + merged.iter().fold(Rational::zero(), |acc, (_, m)| acc + m);
        Measure { segs, atoms: merged, total }
    }

    /// Linear density segments `(a, b, weight)`.
    pub fn density_segments(&self) -> &[(Rational, Rational, Rational)] {
        &self.segs
    }

    /// Canonical density as arcs; a segment pair meeting at 0 with equal
    /// weight is reported as one wrapping arc.
    pub fn density(&self) -> Vec<(Arc, Rational)> {
        let n = self.segs.len();
        let wrap =
            n >= 2 && self.segs[0].0.is_zero() && self.segs[n - 1].1.is_one() && self.segs[0].2 == self.segs[n - 1].2;
        let body = if wrap { &self.segs[1..n - 1] } else { &self.segs[..] };
        let mut out: Vec<(Arc, Rational)> =
            body.iter().map(|(a, b, w)| (Arc::from_endpoints(a, b).expect("nonempty segment"), w.clone())).collect();
        if wrap {
            let (s, _, w) = &self.segs[n - 1];
            let (_, e, _) = &self.segs[0];
            out.push((Arc::from_endpoints(s, &(e + Rational::one())).expect("wrap arc"), w.clone()));
        }
        out
    }

    pub fn atoms(&self) -> &[(CirclePoint, Rational)] {
        &self.atoms
    }

    pub fn total_mass(&self) -> &Rational {
        &self.total
    }

    pub fn is_non_atomic(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn is_probability(&self) -> bool {
        self.total.is_one()
    }

    /// Closed support of the density part as an arc set (atoms excluded).
    pub fn density_support(&self) -> ArcSet {
        ArcSet::from_segments(self.segs.iter().map(|(a, b, _)| (a.clone(), b.clone())).collect())
    }

    /// `true` if every point of the support lies in the closure of `set`.
    pub fn support_within_closure(&self, set: &ArcSet) -> bool {
        self.density_support().is_subset(set) && self.atoms.iter().all(|(p, _)| set.closure_contains(p))
    }

    pub fn scale(&self, k: &Rational) -> Measure {
        if k.is_zero() {
            return Measure::zero();
        }
        Measure {
            segs: self.segs.iter().map(|(a, b, w)| (a.clone(), b.clone(), w * k)).collect(),
            atoms: self.atoms.iter().map(|(p, m)| (p.clone(), m * k)).collect(),
            total: &self.total * k,
        }
    }

    pub fn add(&self, other: &Measure) -> Measure {
        let segs = self.segs.iter().chain(&other.segs).cloned().collect();
        let atoms = self.atoms.iter().chain(&other.atoms).cloned().collect();
        Measure::from_parts(segs, atoms)
    }

    /// Density value at `x` (right-continuous).
    pub fn density_at(&self, x: &CirclePoint) -> Rational {
        let v = x.value();
        let idx = self.segs.partition_point(|(a, _, _)| a <= v);
        match idx.checked_sub(1).map(|i| &self.segs[i]) {
            Some((_, b, w)) if v < b => w.clone(),
            _ => Rational::zero(),
        }
    }

    /// Density mass of the linear window `[lo, hi)` (atoms excluded).
    fn density_mass_linear(&self, lo: &Rational, hi: &Rational) -> Rational {
        let start = self.segs.partition_point(|(_, b, _)| b <= lo);
        let mut acc = Rational::zero();
        for (a, b, w) in &self.segs[start..] {
            if a >= hi {
                break;
            }
            let x = if a > lo { a } else { lo };
            let y = if b < hi { b } else { hi };
            if x < y {
                acc += (y - x) * w;
            }
        }
        acc
    }

    /// Mass the density part gives to a set (atoms ignored).
    pub fn density_mass(&self, set: &ArcSet) -> Rational {
        set.segments().iter().fold(Rational::zero(), |acc, (a, b)| acc + self.density_mass_linear(a, b))
    }

    /// Mass of a half-open arc set.
    pub fn mass_of(&self, set: &ArcSet) -> Rational {
        let dens = self.density_mass(set);
        let atoms = self.atoms.iter().filter(|(p, _)| set.contains(p)).fold(Rational::zero(), |acc, (_, m)| acc + m);
        dens + atoms
    }

    /// Mass of the closed arc `[a, a + len]`.
    pub fn mass_of_closed_arc(&self, arc: &Arc) -> Rational {
        let end = CirclePoint::new(arc.end());
        let endpoint_atom = if arc.is_full() { Rational::zero() } else { self.atom_mass_at(&end) };
        self.mass_of(&ArcSet::from_arc(arc)) + endpoint_atom
    }

    pub fn atom_mass_at(&self, p: &CirclePoint) -> Rational {
        self.atoms
            .binary_search_by(|(q, _)| q.cmp(p))
            .map(|i| self.atoms[i].1.clone())
            .unwrap_or_else(|_| Rational::zero())
    }

    /// Mass of the open ball `(center - radius, center + radius)`.
    pub fn mass_open_ball(&self, center: &CirclePoint, radius: &Rational) -> Rational {
        if !radius.is_positive() {
            return Rational::zero();
        }
        let diameter = radius * Rational::from_integer(BigInt::from(2));
        if diameter > Rational::one() {
            return self.total.clone();
        }
        let arc = Arc::new(center.shifted(&-radius), diameter).expect("diameter in (0, 1]");
        let set = ArcSet::from_arc(&arc);
        let dens = set.segments().iter().fold(Rational::zero(), |acc, (a, b)| acc + self.density_mass_linear(a, b));
        let atoms =
            self.atoms.iter().filter(|(p, _)| arc.contains_interior(p)).fold(Rational::zero(), |acc, (_, m)| acc + m);
        dens + atoms
    }

    /// Exact pushforward `S#mu`.
    pub fn pushforward(&self, s: &Itm) -> Measure {
        let mut segs = Vec::with_capacity(self.segs.len() + 2 * s.n());
        let mut moved = Vec::new();
        for j in 0..s.n() {
            for (lo, hi) in s.piece_segments(j) {
                let start = self.segs.partition_point(|(_, b, _)| b <= &lo);
                for (a, b, w) in &self.segs[start..] {
                    if a >= &hi {
                        break;
                    }
                    let x = if a > &lo { a.clone() } else { lo.clone() };
                    let y = if b < &hi { b.clone() } else { hi.clone() };
                    if x < y {
                        moved.clear();
                        push_translated((x, y), s.shift(j), &mut moved);
                        segs.extend(moved.drain(..).map(|(p, q)| (p, q, w.clone())));
                    }
                }
            }
        }
        let atoms = self.atoms.iter().map(|(p, m)| (s.evaluate(p), m.clone())).collect();
        Measure::from_parts(segs, atoms)
    }

    /// Total variation norm of `self - other`: `int |f - g| + sum |atom diffs|`.
    pub fn total_variation_distance(&self, other: &Measure) -> Rational {
        let neg: Vec<(Rational, Rational, Rational)> =
            other.segs.iter().map(|(a, b, w)| (a.clone(), b.clone(), -w)).collect();
        let dens = signed_sweep(self.segs.iter().cloned().chain(neg))
            .into_iter()
            .fold(Rational::zero(), |acc, (a, b, w)| acc + (b - a) * w.abs());
        let mut diffs: HashMap<&CirclePoint, Rational> = HashMap::new();
        for (p, m) in &self.atoms {
            *diffs.entry(p).or_insert_with(Rational::zero) += m;
        }
        for (p, m) in &other.atoms {
            *diffs.entry(p).or_insert_with(Rational::zero) -= m;
        }
        dens + diffs.values().fold(Rational::zero(), |acc, d| acc + d.abs())
    }

    /// `||S#mu - mu||`, zero exactly when `mu` is `S`-invariant.
    pub fn invariance_residual_exact(&self, s: &Itm) -> Rational {
        self.pushforward(s).total_variation_distance(self)
    }

    /// `int phi dmu`, with exact rational endpoints and floating-point
    /// transcendental evaluation.
    pub fn integrate(&self, phi: &TestFunction) -> f64 {
        let dens: f64 = self
            .segs
            .iter()
            .map(|(a, b, w)| to_f64(w) * (phi.antiderivative(to_f64(b)) - phi.antiderivative(to_f64(a))))
            .sum();
        let atoms: f64 = self.atoms.iter().map(|(p, m)| to_f64(m) * phi.eval(to_f64(p.value()))).sum();
        dens + atoms
    }

    pub fn cdf(&self) -> Cdf {
        Cdf::new(self.segs.clone(), self.atoms.iter().map(|(p, m)| (p.value().clone(), m.clone())).collect())
    }
}

/// Sums overlapping weighted segments into canonical positive segments.
fn sum_overlaps(segs: Vec<(Rational, Rational, Rational)>) -> Vec<(Rational, Rational, Rational)> {
    signed_sweep(segs).into_iter().filter(|(_, _, w)| w.is_positive()).collect()
}

/// Sweeps weighted segments into disjoint segments of constant (signed,
/// nonzero) total weight, merging equal-weight neighbours.
fn signed_sweep(segs: impl IntoIterator<Item = (Rational, Rational, Rational)>) -> Vec<(Rational, Rational, Rational)> {
    let mut events: Vec<(Rational, Rational)> = Vec::new();
    for (a, b, w) in segs {
        if a < b && !w.is_zero() {
            events.push((a, w.clone()));
            events.push((b, -w));
        }
    }
    events.sort_by(|x, y| x.0.cmp(&y.0));
    let mut out: Vec<(Rational, Rational, Rational)> = Vec::new();
    let mut current = Rational::zero();
    let mut i = 0;
    while i < events.len() {
        let pos = events[i].0.clone();
        while i < events.len() && events[i].0 == pos {
            current += &events[i].1;
            i += 1;
        }
        if i < events.len() && !current.is_zero() {
            let next = events[i].0.clone();
            match out.last_mut() {
                Some(last) if last.1 == pos && last.2 == current => last.1 = next,
                _ => out.push((pos, next, current.clone())),
            }
        }
    }
    out
}

/// A test function on the circle (or segment) with a closed-form
/// antiderivative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum TestFunction {
    /// `cos(2 pi k x)`
    Cos { k: u32 },
    /// `sin(2 pi k x)`
    Sin { k: u32 },
    /// `x`, read on the representative in `[0, 1]`.
    Coordinate,
}

impl TestFunction {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            TestFunction::Cos { k } => (TAU * k as f64 * x).cos(),
            TestFunction::Sin { k } => (TAU * k as f64 * x).sin(),
            TestFunction::Coordinate => x,
        }
    }

    pub fn antiderivative(&self, x: f64) -> f64 {
        match *self {
            TestFunction::Cos { k: 0 } => x,
            TestFunction::Sin { k: 0 } => 0.0,
            TestFunction::Cos { k } => (TAU * k as f64 * x).sin() / (TAU * k as f64),
            TestFunction::Sin { k } => -(TAU * k as f64 * x).cos() / (TAU * k as f64),
            TestFunction::Coordinate => 0.5 * x * x,
        }
    }

    /// `true` for 1-periodic functions, which need no reduction mod 1.
    pub fn is_periodic(&self) -> bool {
        !matches!(self, TestFunction::Coordinate)
    }
}

/// A family of test functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum TestFamily {
    /// `cos(2 pi k x)` and `sin(2 pi k x)` for `1 <= k <= degree`.
    Trigonometric {
        degree: u32,
    },
    Functions {
        functions: Vec<TestFunction>,
    },
}

impl TestFamily {
    pub fn functions(&self) -> Vec<TestFunction> {
        match self {
            TestFamily::Trigonometric { degree } => {
                (1..=*degree).flat_map(|k| [TestFunction::Cos { k }, TestFunction::Sin { k }]).collect()
            }
            TestFamily::Functions { functions } => functions.clone(),
        }
    }
}

/// Maps against which `int phi o T dmu` can be evaluated.
pub trait TestableMap {
    /// `int phi o T dmu` for every function in `family`.
    fn composed_integrals(&self, family: &[TestFunction], mu: &Measure) -> Vec<f64>;
}

impl TestableMap for Itm {
    fn composed_integrals(&self, family: &[TestFunction], mu: &Measure) -> Vec<f64> {
        let pushed = mu.pushforward(self);
        family.iter().map(|phi| pushed.integrate(phi)).collect()
    }
}

/// `max_phi |int phi dmu - int phi o T dmu|` over the family.
pub fn invariance_residual_functional(map: &dyn TestableMap, mu: &Measure, family: &TestFamily) -> f64 {
    let fs = family.functions();
    let composed = map.composed_integrals(&fs, mu);
    fs.iter().zip(composed).map(|(phi, c)| (mu.integrate(phi) - c).abs()).fold(0.0, f64::max)
}

/// Invariant measure of a finite-type map: normalized Lebesgue measure on
/// the attractor, or, if that is not invariant, the average over the cycle
/// its pushforwards eventually enter. The result is checked exactly.
pub fn attractor_measure(s: &Itm, attr: &AttractorResult) -> Result<Measure> {
    attractor_measure_with_budget(s, attr, DEFAULT_CYCLE_BUDGET)
}

pub fn attractor_measure_with_budget(s: &Itm, attr: &AttractorResult, budget: usize) -> Result<Measure> {
    if attr.finite_type != FiniteType::Yes {
        return Err(Error::NotFiniteType);
    }
    let candidate = Measure::uniform_on(&attr.attractor)?;
    if candidate.invariance_residual_exact(s).is_zero() {
        return Ok(candidate);
    }
    let mut seen: HashMap<Measure, usize> = HashMap::new();
    let mut history = vec![candidate.clone()];
    seen.insert(candidate, 0);
    for step in 1..=budget {
        let next = history[step - 1].pushforward(s);
        if let Some(&first) = seen.get(&next) {
            let cycle = &history[first..step];
            let weight = Rational::new(BigInt::one(), BigInt::from(cycle.len()));
            let avg = cycle.iter().fold(Measure::zero(), |acc, m| acc.add(m)).scale(&weight);
            let residual = avg.invariance_residual_exact(s);
            if !residual.is_zero() {
                return Err(Error::NotInvariant { residual: format_rational(&residual) });
            }
            return Ok(avg);
        }
        seen.insert(next.clone(), step);
        history.push(next);
    }
    Err(Error::CycleNotFound { budget })
}

/// Exact `mu((t_k - delta, t_k + delta))` for every breakpoint `t_k` of `s`.
pub fn mass_near_breakpoints(mu: &Measure, s: &Itm, delta: &Rational) -> Result<Vec<Rational>> {
    if !delta.is_positive() {
        return Err(Error::InvalidInput("delta must be positive".into()));
    }
    Ok(s.breakpoints().iter().map(|t| mu.mass_open_ball(t, delta)).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Recurrence {
    pub point: CirclePoint,
    /// First `m <= horizon` with `dist(S^m x, x) < eps`.
    pub time: Option<usize>,
    #[serde(with = "crate::rational::serde_str_opt")]
    pub distance: Option<Rational>,
}

/// Grid resolution for sampling support points.
const SAMPLE_GRID: u64 = 1 << 20;

/// Draws `samples` points from the support of `mu`, weighted by mass, and
/// looks for the first close return of each within `horizon` steps.
pub fn find_recurrent_points<R: Rng + ?Sized>(
    s: &Itm,
    mu: &Measure,
    eps: &Rational,
    horizon: usize,
    samples: usize,
    rng: &mut R,
) -> Result<Vec<Recurrence>> {
    if !eps.is_positive() {
        return Err(Error::InvalidInput("eps must be positive".into()));
    }
    let points = sample_support(mu, samples, rng)?;
    Ok(points
        .into_iter()
        .map(|x| {
            let mut y = x.clone();
            for m in 1..=horizon {
                y = s.evaluate(&y);
                let d = y.distance(&x);
                if &d < eps {
                    return Recurrence { point: x, time: Some(m), distance: Some(d) };
                }
            }
            Recurrence { point: x, time: None, distance: None }
        })
        .collect())
}

/// Mass-weighted sample of support points on a dyadic grid inside each
/// density segment; atoms are returned as themselves.
pub fn sample_support<R: Rng + ?Sized>(mu: &Measure, samples: usize, rng: &mut R) -> Result<Vec<CirclePoint>> {
    enum Part<'a> {
        Seg(&'a Rational, &'a Rational),
        Atom(&'a CirclePoint),
    }
    let mut parts = Vec::new();
    let mut cumulative = Vec::new();
    let mut acc = 0.0;
    for (a, b, w) in &mu.segs {
        acc += to_f64(&((b - a) * w));
        parts.push(Part::Seg(a, b));
        cumulative.push(acc);
    }
    for (p, m) in &mu.atoms {
        acc += to_f64(m);
        parts.push(Part::Atom(p));
        cumulative.push(acc);
    }
    if parts.is_empty() || acc <= 0.0 {
        return Err(Error::InvalidInput("cannot sample from a zero measure".into()));
    }
    let grid = Rational::from_integer(BigInt::from(SAMPLE_GRID));
    Ok((0..samples)
        .map(|_| {
            let u = rng.gen::<f64>() * acc;
            let idx = cumulative.partition_point(|c| *c <= u).min(parts.len() - 1);
            match parts[idx] {
                Part::Seg(a, b) => {
                    let k = Rational::from_integer(BigInt::from(rng.gen_range(0..SAMPLE_GRID)));
                    CirclePoint::new(a + (b - a) * k / &grid)
                }
                Part::Atom(p) => p.clone(),
            }
        })
        .collect())
}

/// Cumulative distribution `F(x) = mu([0, x])` with basepoint 0. Atoms may
/// sit anywhere in `[0, 1]`, so segment-domain measures are representable.
#[derive(Debug, Clone, PartialEq)]
pub struct Cdf {
    segs: Vec<(Rational, Rational, Rational)>,
    /// Density mass strictly before each segment.
    seg_prefix: Vec<Rational>,
    atoms: Vec<(Rational, Rational)>,
    /// Atom mass at or before each atom.
    atom_prefix: Vec<Rational>,
    total: Rational,
}

impl Cdf {
    /// `segs` must be sorted and disjoint.
    pub fn new(segs: Vec<(Rational, Rational, Rational)>, mut atoms: Vec<(Rational, Rational)>) -> Self {
        atoms.sort_by(|x, y| x.0.cmp(&y.0));
        let mut seg_prefix = Vec::with_capacity(segs.len());
        let mut acc = Rational::zero();
        for (a, b, w) in &segs {
            seg_prefix.push(acc.clone());
            acc += (b - a) * w;
        }
        let mut atom_prefix = Vec::with_capacity(atoms.len());
        let mut acc_atoms = Rational::zero();
        for (_, m) in &atoms {
            acc_atoms += m;
            atom_prefix.push(acc_atoms.clone());
        }
        let total = acc + acc_atoms;
        Cdf { segs, seg_prefix, atoms, atom_prefix, total }
    }

    /// Uniform probability on finitely many points (with multiplicity).
    pub fn empirical(points: &[Rational]) -> Self {
        let w = Rational::new(BigInt::one(), BigInt::from(points.len().max(1)));
        Cdf::new(Vec::new(), points.iter().map(|p| (p.clone(), w.clone())).collect())
    }

    pub fn total(&self) -> &Rational {
        &self.total
    }

    pub fn segments(&self) -> &[(Rational, Rational, Rational)] {
        &self.segs
    }

    pub fn atoms(&self) -> &[(Rational, Rational)] {
        &self.atoms
    }

    pub fn is_continuous(&self) -> bool {
        self.atoms.is_empty()
    }

    fn density_upto(&self, x: &Rational) -> Rational {
        let idx = self.segs.partition_point(|(a, _, _)| a < x);
        if idx == 0 {
            return Rational::zero();
        }
        let (a, b, w) = &self.segs[idx - 1];
        let inside = if x < b { x - a } else { b - a };
        &self.seg_prefix[idx - 1] + inside * w
    }

    fn atoms_upto(&self, x: &Rational, inclusive: bool) -> Rational {
        let idx = if inclusive {
            self.atoms.partition_point(|(p, _)| p <= x)
        } else {
            self.atoms.partition_point(|(p, _)| p < x)
        };
        if idx == 0 {
            Rational::zero()
        } else {
            self.atom_prefix[idx - 1].clone()
        }
    }

    /// `F(x) = mu([0, x])`.
    pub fn eval(&self, x: &Rational) -> Rational {
        self.density_upto(x) + self.atoms_upto(x, true)
    }

    /// `F(x-) = mu([0, x))`.
    pub fn eval_left(&self, x: &Rational) -> Rational {
        self.density_upto(x) + self.atoms_upto(x, false)
    }

    /// Sorted, deduplicated points where `F` changes slope or jumps,
    /// together with 0 and 1.
    pub fn breaklist(&self) -> Vec<Rational> {
        let mut v: Vec<Rational> = Vec::with_capacity(2 * self.segs.len() + self.atoms.len() + 2);
        v.push(Rational::zero());
        v.push(Rational::one());
        for (a, b, _) in &self.segs {
            v.push(a.clone());
            v.push(b.clone());
        }
        v.extend(self.atoms.iter().map(|(p, _)| p.clone()));
        v.sort();
        v.dedup();
        v
    }

    /// `(x, F(x))` at every breaklist point.
    pub fn table(&self) -> Vec<(Rational, Rational)> {
        self.breaklist()
            .into_iter()
            .map(|x| {
                let f = self.eval(&x);
                (x, f)
            })
            .collect()
    }
}

/// Kolmogorov distance `sup_x |F_mu(x) - F_nu(x)|`, exact.
pub fn cdf_distance(mu: &Measure, nu: &Measure) -> Rational {
    cdf_sup_distance(&mu.cdf(), &nu.cdf())
}

/// Kolmogorov distance between two CDFs. The difference is linear between
/// consecutive breaklist points, so the supremum is attained at a breaklist
/// point or as a left limit there.
pub fn cdf_sup_distance(f: &Cdf, g: &Cdf) -> Rational {
    cdf_sup_distance_on(f, g, &Rational::zero(), &Rational::one())
}

/// Supremum of `|F - G|` over `x` in `[lo, hi]`.
pub fn cdf_sup_distance_on(f: &Cdf, g: &Cdf, lo: &Rational, hi: &Rational) -> Rational {
    let mut pts = f.breaklist();
    pts.extend(g.breaklist());
    pts.push(lo.clone());
    pts.push(hi.clone());
    pts.sort();
    pts.dedup();
    let mut best = Rational::zero();
    for x in pts.iter().filter(|x| *x >= lo && *x <= hi) {
        let d = (f.eval(x) - g.eval(x)).abs();
        if d > best {
            best = d;
        }
        if x > lo {
            let d = (f.eval_left(x) - g.eval_left(x)).abs();
            if d > best {
                best = d;
            }
        }
    }
    best
}

#[derive(Serialize, Deserialize)]
struct RawDensity {
    arc: Arc,
    #[serde(with = "serde_str")]
    weight: Rational,
}

#[derive(Serialize, Deserialize)]
struct RawAtom {
    point: CirclePoint,
    #[serde(with = "serde_str")]
    mass: Rational,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct RawMeasure {
    #[serde(default)]
    density: Vec<RawDensity>,
    #[serde(default)]
    atoms: Vec<RawAtom>,
    #[serde(with = "crate::rational::serde_str_opt", default, skip_deserializing)]
    total_mass: Option<Rational>,
}

impl Serialize for Measure {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RawMeasure {
            density: self.density().into_iter().map(|(arc, weight)| RawDensity { arc, weight }).collect(),
            atoms: self.atoms.iter().map(|(p, m)| RawAtom { point: p.clone(), mass: m.clone() }).collect(),
            total_mass: Some(self.total.clone()),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Measure {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawMeasure::deserialize(d)?;
        Measure::new(
            raw.density.into_iter().map(|r| (r.arc, r.weight)).collect(),
            raw.atoms.into_iter().map(|r| (r.point, r.mass)).collect(),
        )
        .map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};

    fn p(n: i64, d: i64) -> CirclePoint {
        CirclePoint::new(rat(n, d))
    }

    fn arc(a: (i64, i64), b: (i64, i64)) -> Arc {
        Arc::from_endpoints(&rat(a.0, a.1), &rat(b.0, b.1)).unwrap()
    }

    fn half_collapse() -> Itm {
        Itm::new(vec![int(0), rat(1, 2)], vec![int(0), rat(1, 2)]).unwrap()
    }

    fn two_piece() -> Itm {
        Itm::new(vec![int(0), rat(1, 2)], vec![rat(1, 3), rat(1, 4)]).unwrap()
    }

    fn half_density() -> Measure {
        Measure::new(vec![(arc((0, 1), (1, 2)), int(2))], vec![]).unwrap()
    }

    #[test]
    fn canonical_form_merges_and_sums() {
        let m = Measure::new(
            vec![(arc((0, 1), (1, 2)), int(1)), (arc((1, 4), (3, 4)), int(1)), (arc((3, 4), (1, 1)), int(2))],
            vec![(p(1, 3), rat(1, 2)), (p(1, 3), rat(1, 2)), (p(1, 5), int(0))],
        )
        .unwrap();
        assert_eq!(
            m.density_segments(),
            &[
                (int(0), rat(1, 4), int(1)),
                (rat(1, 4), rat(1, 2), int(2)),
                (rat(1, 2), rat(3, 4), int(1)),
                (rat(3, 4), int(1), int(2)),
            ]
        );
        assert_eq!(m.atoms(), &[(p(1, 3), int(1))]);
        assert_eq!(m.total_mass(), &rat(5, 2));
        assert!(Measure::new(vec![(arc((0, 1), (1, 2)), int(-1))], vec![]).is_err());
    }

    #[test]
    fn pushforward_examples() {
        assert_eq!(half_density().pushforward(&half_collapse()), half_density());
        assert_eq!(Measure::lebesgue().pushforward(&Itm::rotation(rat(2, 9))), Measure::lebesgue());
        let m = Measure::dirac(p(1, 2)).pushforward(&two_piece());
        assert_eq!(m, Measure::dirac(p(3, 4)));
    }

    #[test]
    fn pushforward_preserves_mass() {
        let mu = Measure::new(
            vec![(arc((1, 10), (7, 10)), rat(3, 2)), (arc((9, 10), (11, 10)), int(2))],
            vec![(p(1, 2), rat(1, 7))],
        )
        .unwrap();
        let pushed = mu.pushforward(&two_piece());
        assert_eq!(pushed.total_mass(), mu.total_mass());
        assert!(pushed.atoms().len() == 1);
    }

    #[test]
    fn residual_examples() {
        assert!(half_density().invariance_residual_exact(&half_collapse()).is_zero());
        assert!(Measure::lebesgue().invariance_residual_exact(&two_piece()).is_positive());
        assert!(Measure::lebesgue().invariance_residual_exact(&Itm::rotation(rat(3, 7))).is_zero());
        // A point mass under a rotation moves, so it is not invariant.
        assert_eq!(Measure::dirac(p(0, 1)).invariance_residual_exact(&Itm::rotation(rat(1, 3))), int(2));
    }

    #[test]
    fn functional_residual_examples() {
        let fam = TestFamily::Trigonometric { degree: 8 };
        assert!(invariance_residual_functional(&half_collapse(), &half_density(), &fam) <= 1e-12);
        assert!(invariance_residual_functional(&Itm::rotation(rat(1, 7)), &Measure::lebesgue(), &fam) <= 1e-12);
        assert!(invariance_residual_functional(&two_piece(), &Measure::lebesgue(), &fam) > 1e-3);
    }

    #[test]
    fn attractor_measure_examples() {
        let s = half_collapse();
        let mu = attractor_measure(&s, &s.attractor(10, 100).unwrap()).unwrap();
        assert_eq!(mu, half_density());
        let r = Itm::rotation(rat(1, 5));
        assert_eq!(attractor_measure(&r, &r.attractor(10, 100).unwrap()).unwrap(), Measure::lebesgue());
        let m = Itm::new(vec![int(0), rat(1, 2)], vec![rat(1, 7), rat(1, 3)]).unwrap();
        let partial = m.attractor(1, 100).unwrap();
        assert_eq!(attractor_measure(&m, &partial), Err(Error::NotFiniteType));
    }

    #[test]
    fn cycle_average_fallback_produces_invariant_measure() {
        // Feed a non-invariant starting set by hand: a quarter arc under a
        // rotation by 1/4 cycles with period 4.
        let s = Itm::rotation(rat(1, 4));
        let fake = AttractorResult {
            iterates: vec![],
            stabilized_at: Some(0),
            attractor: ArcSet::from_arc(&arc((0, 1), (1, 8))),
            finite_type: FiniteType::Yes,
            steps: 1,
        };
        let mu = attractor_measure(&s, &fake).unwrap();
        assert!(mu.invariance_residual_exact(&s).is_zero());
        assert_eq!(mu.total_mass(), &int(1));
        assert_eq!(mu.density_segments().len(), 4);
        assert_eq!(attractor_measure_with_budget(&s, &fake, 2), Err(Error::CycleNotFound { budget: 2 }));
    }

    #[test]
    fn cdf_distance_examples() {
        assert_eq!(cdf_distance(&Measure::lebesgue(), &half_density()), rat(1, 2));
        assert!(cdf_distance(&half_density(), &half_density()).is_zero());
        assert_eq!(cdf_distance(&Measure::dirac(CirclePoint::zero()), &Measure::lebesgue()), int(1));
    }

    #[test]
    fn cdf_evaluation() {
        let mu = Measure::new(vec![(arc((1, 4), (1, 2)), int(2))], vec![(p(3, 4), rat(1, 2))]).unwrap();
        let f = mu.cdf();
        assert_eq!(f.eval(&rat(1, 8)), int(0));
        assert_eq!(f.eval(&rat(3, 8)), rat(1, 4));
        assert_eq!(f.eval_left(&rat(3, 4)), rat(1, 2));
        assert_eq!(f.eval(&rat(3, 4)), int(1));
        assert_eq!(f.breaklist(), vec![int(0), rat(1, 4), rat(1, 2), rat(3, 4), int(1)]);
    }

    #[test]
    fn mass_near_breakpoint_examples() {
        let s = two_piece();
        let d = rat(1, 16);
        assert_eq!(mass_near_breakpoints(&Measure::lebesgue(), &s, &d).unwrap(), vec![rat(1, 8), rat(1, 8)]);
        assert_eq!(mass_near_breakpoints(&half_density(), &s, &rat(1, 8)).unwrap(), vec![rat(1, 4), rat(1, 4)]);
        let away = Measure::new(vec![(arc((1, 8), (3, 8)), int(4))], vec![]).unwrap();
        assert_eq!(mass_near_breakpoints(&away, &s, &rat(1, 16)).unwrap(), vec![int(0), int(0)]);
        assert!(mass_near_breakpoints(&away, &s, &int(0)).is_err());
        // Atoms on the boundary of the open ball are excluded.
        let atom = Measure::dirac(p(1, 4));
        assert!(atom.mass_open_ball(&CirclePoint::zero(), &rat(1, 4)).is_zero());
        assert_eq!(atom.mass_open_ball(&CirclePoint::zero(), &rat(1, 3)), int(1));
    }

    #[test]
    fn recurrence_examples() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let r = Itm::rotation(rat(1, 3));
        let found = find_recurrent_points(&r, &Measure::lebesgue(), &rat(1, 100), 10, 20, &mut rng).unwrap();
        assert!(found.iter().all(|f| f.time == Some(3) && f.distance == Some(int(0))));

        let s = half_collapse();
        let found = find_recurrent_points(&s, &Measure::dirac(p(1, 4)), &rat(1, 100), 10, 3, &mut rng).unwrap();
        assert!(found.iter().all(|f| f.time == Some(1) && f.distance == Some(int(0))));

        let g = Itm::rotation(rat(5, 8));
        let found = find_recurrent_points(&g, &Measure::lebesgue(), &rat(1, 16), 64, 50, &mut rng).unwrap();
        assert!(found.iter().all(|f| f.time.is_some_and(|t| t <= 8)));
    }

    #[test]
    fn json_form() {
        let m = Measure::new(vec![(arc((3, 4), (5, 4)), int(2))], vec![(p(1, 3), int(0))]).unwrap();
        let j = serde_json::to_string(&m).unwrap();
        assert_eq!(
            j,
            r#"{"density":[{"arc":{"start":"3/4","length":"1/2"},"weight":"2"}],"atoms":[],"totalMass":"1"}"#
        );
        let back: Measure = serde_json::from_str(&j).unwrap();
        assert_eq!(back, m);
    }
}
