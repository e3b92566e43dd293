//! Interval translation maps of the circle.
//!
//! A map is given by breakpoints `t_0 < ... < t_{n-1}` in `[0, 1)` and shifts
//! `c_0, ..., c_{n-1}`; on the piece `[t_j, t_{j+1})` (indices mod n, the last
//! piece wrapping through 0) it acts as `x -> x + c_j mod 1`. A breakpoint
//! belongs to the piece on its right.

use std::collections::{BTreeSet, HashMap};

use num::bigint::BigInt;
use num::integer::Integer;
use num::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::circle::{Arc, ArcSet, CirclePoint};
use crate::error::{Error, Result};
use crate::rational::{floor_int, format_rational, frac, serde_str_vec, Rational};

pub const DEFAULT_MAX_ITER: usize = 4096;
pub const DEFAULT_MAX_ARCS: usize = 1 << 16;
pub const DEFAULT_ORBIT_BUDGET: usize = 1 << 16;
pub const DEFAULT_OMEGA_CAP: usize = 1 << 20;

/// Which one-sided limit of a breakpoint an orbit starts from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawItm", into = "RawItm")]
pub struct Itm {
    breakpoints: Vec<CirclePoint>,
    shifts: Vec<Rational>,
}

#[derive(Serialize, Deserialize)]
struct RawItm {
    #[serde(with = "serde_str_vec")]
    breakpoints: Vec<Rational>,
    #[serde(with = "serde_str_vec")]
    shifts: Vec<Rational>,
}

impl TryFrom<RawItm> for Itm {
    type Error = Error;
    fn try_from(r: RawItm) -> Result<Self> {
        Itm::new(r.breakpoints, r.shifts)
    }
}

impl From<Itm> for RawItm {
    fn from(m: Itm) -> Self {
        RawItm { breakpoints: m.breakpoints.into_iter().map(CirclePoint::into_value).collect(), shifts: m.shifts }
    }
}

impl std::fmt::Debug for Itm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let bp: Vec<String> = self.breakpoints.iter().map(|t| t.to_string()).collect();
        let sh: Vec<String> = self.shifts.iter().map(format_rational).collect();
        write!(f, "Itm {{ breakpoints: [{}], shifts: [{}] }}", bp.join(", "), sh.join(", "))
    }
}

impl Itm {
    /// Validates and builds a map. Breakpoints must lie in `[0, 1)` and be
    /// strictly increasing; shifts are reduced mod 1.
    pub fn new(breakpoints: Vec<Rational>, shifts: Vec<Rational>) -> Result<Self> {
        if breakpoints.is_empty() {
            return Err(Error::InvalidMap { index: 0, reason: "no pieces".into() });
        }
        if breakpoints.len() != shifts.len() {
            return Err(Error::InvalidMap {
                index: breakpoints.len().min(shifts.len()),
                reason: format!("{} breakpoints but {} shifts", breakpoints.len(), shifts.len()),
            });
        }
        for (i, t) in breakpoints.iter().enumerate() {
            if *t < Rational::zero() || *t >= Rational::one() {
                return Err(Error::InvalidMap {
                    index: i,
                    reason: format!("breakpoint {} outside [0, 1)", format_rational(t)),
                });
            }
            if i > 0 && breakpoints[i - 1] >= *t {
                return Err(Error::InvalidMap {
                    index: i,
                    reason: format!(
                        "breakpoint {} not greater than predecessor {}",
                        format_rational(t),
                        format_rational(&breakpoints[i - 1])
                    ),
                });
            }
        }
        Ok(Itm {
            breakpoints: breakpoints.into_iter().map(CirclePoint::new).collect(),
            shifts: shifts.iter().map(frac).collect(),
        })
    }

    /// Rigid rotation by `c`, a single piece starting at 0.
    pub fn rotation(c: Rational) -> Self {
        Itm::new(vec![Rational::zero()], vec![c]).expect("rotation is always valid")
    }

    pub fn n(&self) -> usize {
        self.breakpoints.len()
    }

    pub fn breakpoints(&self) -> &[CirclePoint] {
        &self.breakpoints
    }

    pub fn breakpoint(&self, j: usize) -> &CirclePoint {
        &self.breakpoints[j]
    }

    pub fn shifts(&self) -> &[Rational] {
        &self.shifts
    }

    pub fn shift(&self, j: usize) -> &Rational {
        &self.shifts[j]
    }

    /// Lifted right end `t_{j+1}` of piece `j` (`t_n = t_0 + 1`).
    fn piece_end(&self, j: usize) -> Rational {
        if j + 1 < self.n() {
            self.breakpoints[j + 1].value().clone()
        } else {
            self.breakpoints[0].value() + Rational::one()
        }
    }

    pub fn piece_length(&self, j: usize) -> Rational {
        self.piece_end(j) - self.breakpoints[j].value()
    }

    pub fn piece_arc(&self, j: usize) -> Arc {
        Arc::new(self.breakpoints[j].clone(), self.piece_length(j)).expect("pieces are nonempty")
    }

    /// Linear segments of piece `j` inside `[0, 1]`.
    pub fn piece_segments(&self, j: usize) -> Vec<(Rational, Rational)> {
        self.piece_arc(j).segments()
    }

    /// Index of the piece containing `x` (half-open convention).
    pub fn piece_index(&self, x: &CirclePoint) -> usize {
        let idx = self.breakpoints.partition_point(|t| t <= x);
        if idx == 0 {
            self.n() - 1
        } else {
            idx - 1
        }
    }

    /// Index of the breakpoint equal to `x`, if any.
    pub fn breakpoint_index(&self, x: &CirclePoint) -> Option<usize> {
        self.breakpoints.binary_search(x).ok()
    }

    /// Piece that acts on points just to the given side of `x`.
    pub fn piece_index_one_sided(&self, x: &CirclePoint, side: Side) -> usize {
        match (side, self.breakpoint_index(x)) {
            (Side::Left, Some(k)) => (k + self.n() - 1) % self.n(),
            _ => self.piece_index(x),
        }
    }

    pub fn evaluate(&self, x: &CirclePoint) -> CirclePoint {
        x.shifted(&self.shifts[self.piece_index(x)])
    }

    /// The orbit of the one-sided limit `t_j ± 0` for `steps` steps.
    pub fn evaluate_one_sided(&self, j: usize, side: Side, steps: usize) -> EndpointOrbit {
        let n = self.n();
        let start = self.breakpoints[j].clone();
        let mut points = Vec::with_capacity(steps + 1);
        let mut itinerary = Vec::with_capacity(steps);
        let mut visit_counts = vec![0u64; n];
        let mut lifted = start.value().clone();
        points.push(start);
        for _ in 0..steps {
            let here = points.last().expect("orbit is nonempty");
            let k = self.piece_index_one_sided(here, side);
            let next = here.shifted(&self.shifts[k]);
            lifted += &self.shifts[k];
            itinerary.push(k);
            visit_counts[k] += 1;
            points.push(next);
        }
        EndpointOrbit { base: j, side, points, itinerary, visit_counts, winding: floor_int(&lifted) }
    }

    /// Exact image of an arc set.
    pub fn image(&self, a: &ArcSet) -> ArcSet {
        let mut out = Vec::with_capacity(a.segments().len() + self.n());
        for j in 0..self.n() {
            for (lo, hi) in self.piece_segments(j) {
                for seg in a.clip(&lo, &hi) {
                    push_translated(seg, &self.shifts[j], &mut out);
                }
            }
        }
        ArcSet::from_segments(out)
    }

    /// Exact preimage `S^{-1}(A) = U_j (A - c_j) n [t_j, t_{j+1})`.
    pub fn preimage(&self, a: &ArcSet) -> ArcSet {
        let mut out = Vec::new();
        for j in 0..self.n() {
            let moved = a.translate(&-&self.shifts[j]);
            for (lo, hi) in self.piece_segments(j) {
                out.extend(moved.clip(&lo, &hi));
            }
        }
        ArcSet::from_segments(out)
    }

    /// Preimages of a single point, one candidate per piece.
    pub fn preimages_of_point(&self, y: &CirclePoint) -> Vec<CirclePoint> {
        (0..self.n())
            .filter_map(|j| {
                let x = y.shifted(&-&self.shifts[j]);
                (self.piece_index(&x) == j).then_some(x)
            })
            .collect()
    }

    /// Iterates `A_{k+1} = S(A_k)` from the full circle until two consecutive
    /// iterates coincide or the budget runs out.
    pub fn attractor(&self, max_iter: usize, max_arcs: usize) -> Result<AttractorResult> {
        self.attractor_with(&AttractorOptions { max_iter, max_arcs, keep_iterates: true })
    }

    pub fn attractor_with(&self, opts: &AttractorOptions) -> Result<AttractorResult> {
        if opts.max_iter == 0 {
            return Err(Error::InvalidInput("max_iter must be at least 1".into()));
        }
        let mut current = ArcSet::full();
        let mut iterates = Vec::new();
        if opts.keep_iterates {
            iterates.push(current.clone());
        }
        for k in 0..opts.max_iter {
            let next = self.image(&current);
            if next.arc_count() > opts.max_arcs {
                return Err(Error::BudgetExceeded { what: "attractor arcs", limit: opts.max_arcs });
            }
            if !next.is_subset(&current) {
                return Err(Error::InvalidInput(format!("iterate {} is not nested", k + 1)));
            }
            if next == current {
                return Ok(AttractorResult {
                    iterates,
                    stabilized_at: Some(k),
                    attractor: current,
                    finite_type: FiniteType::Yes,
                    steps: k + 1,
                });
            }
            current = next;
            if opts.keep_iterates {
                iterates.push(current.clone());
            }
        }
        Ok(AttractorResult {
            iterates,
            stabilized_at: None,
            attractor: current,
            finite_type: FiniteType::NoWithinBudget,
            steps: opts.max_iter,
        })
    }

    /// Points of `U_{k<=depth} S^{-k}(H)`, sorted and duplicate-free.
    pub fn omega_to_depth(&self, depth: usize, cap: usize) -> Result<Vec<CirclePoint>> {
        let mut all: BTreeSet<CirclePoint> = self.breakpoints.iter().cloned().collect();
        let mut frontier: Vec<CirclePoint> = all.iter().cloned().collect();
        for _ in 0..depth {
            let mut next = Vec::new();
            for y in &frontier {
                for x in self.preimages_of_point(y) {
                    if all.insert(x.clone()) {
                        next.push(x);
                    }
                }
            }
            if all.len() > cap {
                return Err(Error::BudgetExceeded { what: "discontinuity preimages", limit: cap });
            }
            if next.is_empty() {
                break;
            }
            frontier = next;
        }
        Ok(all.into_iter().collect())
    }

    /// Splits the circle at the depth-`depth` discontinuity preimages and
    /// follows every complementary arc forward as a whole arc.
    pub fn classify_homtervals(&self, depth: usize, orbit_budget: usize) -> Result<HomtervalReport> {
        if depth == 0 {
            return Err(Error::InvalidInput("homterval depth must be at least 1".into()));
        }
        let omega = self.omega_to_depth(depth, DEFAULT_OMEGA_CAP)?;
        let homtervals = gaps(&omega)
            .into_iter()
            .map(|arc| {
                let fate = self.arc_fate(&arc, orbit_budget);
                Homterval { arc, fate }
            })
            .collect();
        Ok(HomtervalReport { depth, omega, homtervals })
    }

    /// Follows `arc` while it stays inside a single piece.
    pub fn arc_fate(&self, arc: &Arc, orbit_budget: usize) -> HomtervalFate {
        let mut seen: HashMap<CirclePoint, usize> = HashMap::new();
        let mut current = arc.clone();
        seen.insert(current.start().clone(), 0);
        for step in 1..=orbit_budget {
            let Some(j) = self.piece_containing_arc(&current) else {
                return HomtervalFate::Unresolved { reason: Unresolved::HitsDiscontinuity, step: step - 1 };
            };
            current = current.translate(&self.shifts[j]);
            if let Some(&first) = seen.get(current.start()) {
                return HomtervalFate::Periodic { preperiod: first, period: step - first };
            }
            seen.insert(current.start().clone(), step);
        }
        HomtervalFate::Unresolved { reason: Unresolved::BudgetExhausted, step: orbit_budget }
    }

    /// The piece containing the whole half-open arc, if there is one.
    pub fn piece_containing_arc(&self, arc: &Arc) -> Option<usize> {
        let j = self.piece_index(arc.start());
        let offset = frac(&(arc.start().value() - self.breakpoints[j].value()));
        (offset + arc.length() <= self.piece_length(j)).then_some(j)
    }

    /// Searches for a periodic homterval. A positive answer is a proof of
    /// non-genericity; a negative one only reports the search budget.
    pub fn genericity_within_depth(&self, depth: usize, orbit_budget: usize) -> Result<Genericity> {
        let report = self.classify_homtervals(depth, orbit_budget)?;
        Ok(if report.homtervals.iter().any(|h| h.fate.is_periodic()) {
            Genericity::NotGeneric
        } else {
            Genericity::NoPeriodicDomainFound
        })
    }

    /// Least common denominator of every breakpoint and shift.
    pub fn common_denominator(&self) -> BigInt {
        self.breakpoints
            .iter()
            .map(|t| t.value().denom().clone())
            .chain(self.shifts.iter().map(|c| c.denom().clone()))
            .fold(BigInt::one(), |acc, d| acc.lcm(&d))
    }

    /// The same map with 0 inserted as a breakpoint when it is not one.
    /// Both halves of the split piece keep the original shift.
    pub fn cut_at_zero(&self) -> Itm {
        if self.breakpoints[0].value().is_zero() {
            return self.clone();
        }
        let last = self.n() - 1;
        let mut bps = vec![Rational::zero()];
        let mut shifts = vec![self.shifts[last].clone()];
        bps.extend(self.breakpoints.iter().map(|t| t.value().clone()));
        shifts.extend(self.shifts.iter().cloned());
        Itm::new(bps, shifts).expect("inserting 0 keeps breakpoints ordered")
    }
}

/// Appends `seg + c (mod 1)` as one or two linear segments.
pub(crate) fn push_translated((a, b): (Rational, Rational), c: &Rational, out: &mut Vec<(Rational, Rational)>) {
    let one = Rational::one();
    let a2 = frac(&(&a + c));
    let b2 = &a2 + (&b - &a);
    if b2 <= one {
        out.push((a2, b2));
    } else {
        out.push((a2, one.clone()));
        out.push((Rational::zero(), b2 - one));
    }
}

/// Half-open arcs between consecutive points of a sorted cyclic list.
fn gaps(points: &[CirclePoint]) -> Vec<Arc> {
    match points.len() {
        0 => vec![Arc::full()],
        1 => vec![Arc::new(points[0].clone(), Rational::one()).expect("unit length")],
        k => (0..k)
            .map(|i| {
                let a = points[i].value();
                let b = if i + 1 < k { points[i + 1].value().clone() } else { points[0].value() + Rational::one() };
                Arc::from_endpoints(a, &b).expect("sorted points give positive gaps")
            })
            .collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EndpointOrbit {
    pub base: usize,
    pub side: Side,
    pub points: Vec<CirclePoint>,
    pub itinerary: Vec<usize>,
    pub visit_counts: Vec<u64>,
    #[serde(with = "crate::rational::serde_bigint")]
    pub winding: BigInt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FiniteType {
    Yes,
    NoWithinBudget,
    Unknown,
}

#[derive(Debug, Clone, Copy)]
pub struct AttractorOptions {
    pub max_iter: usize,
    pub max_arcs: usize,
    pub keep_iterates: bool,
}

impl Default for AttractorOptions {
    fn default() -> Self {
        AttractorOptions { max_iter: DEFAULT_MAX_ITER, max_arcs: DEFAULT_MAX_ARCS, keep_iterates: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct AttractorResult {
    /// `A_0 = T^1, A_1, ...` when iterates were kept.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub iterates: Vec<ArcSet>,
    pub stabilized_at: Option<usize>,
    pub attractor: ArcSet,
    pub finite_type: FiniteType,
    /// Number of images computed.
    pub steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Unresolved {
    /// The arc image straddled a breakpoint.
    HitsDiscontinuity,
    BudgetExhausted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum HomtervalFate {
    Periodic { preperiod: usize, period: usize },
    Unresolved { reason: Unresolved, step: usize },
}

impl HomtervalFate {
    pub fn is_periodic(&self) -> bool {
        matches!(self, HomtervalFate::Periodic { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Homterval {
    pub arc: Arc,
    pub fate: HomtervalFate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct HomtervalReport {
    pub depth: usize,
    pub omega: Vec<CirclePoint>,
    pub homtervals: Vec<Homterval>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Genericity {
    NotGeneric,
    NoPeriodicDomainFound,
}
