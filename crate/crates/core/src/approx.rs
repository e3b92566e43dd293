//! Relation-preserving rational approximation of interval translation maps
//! and the measure pipeline built on top of it: harvest integer relations
//! from endpoint collisions, generate approximants that satisfy them
//! exactly, compute their invariant measures and watch the sequence settle.

use num::bigint::BigInt;
use num::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize, Serializer};

use crate::circle::{ArcSet, CirclePoint};
use crate::error::{Error, Result};
use crate::itm::{AttractorOptions, AttractorResult, FiniteType, Itm, Side};
use crate::measure::{
    attractor_measure_with_budget, cdf_distance, invariance_residual_functional, mass_near_breakpoints, Measure,
    TestFamily, TestableMap,
};
use crate::rational::{floor_int, format_rational, serde_str, serde_str_vec, Rational};

/// Exact integer relation `t_j - t_i = sum_k l_k c_k - w` among the
/// parameters of a map (shifts taken in `[0, 1)`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relation {
    pub i: usize,
    pub j: usize,
    pub l: Vec<i64>,
    pub w: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
}

/// The one-sided endpoint orbit that exhibited a relation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witness {
    pub side: Side,
    pub depth: usize,
    pub itinerary: Vec<usize>,
}

impl Relation {
    fn key(&self) -> (usize, usize, &[i64], i64) {
        (self.i, self.j, &self.l, self.w)
    }

    /// `(t_j - t_i) - (sum l_k c_k - w)`.
    pub fn residual(&self, breakpoints: &[Rational], shifts: &[Rational]) -> Rational {
        let lin = self
            .l
            .iter()
            .zip(shifts)
            .fold(Rational::zero(), |acc, (l, c)| acc + c * Rational::from_integer(BigInt::from(*l)));
        (&breakpoints[self.j] - &breakpoints[self.i]) - (lin - Rational::from_integer(BigInt::from(self.w)))
    }

    pub fn holds(&self, breakpoints: &[Rational], shifts: &[Rational]) -> bool {
        self.residual(breakpoints, shifts).is_zero()
    }

    fn check_shape(&self, n: usize) -> Result<()> {
        if self.i >= n || self.j >= n || self.l.len() != n {
            return Err(Error::InvalidInput(format!(
                "relation ({}, {}) with {} coefficients does not fit a map with {} pieces",
                self.i,
                self.j,
                self.l.len(),
                n
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RelationSystem {
    pub relations: Vec<Relation>,
    pub source_depth: usize,
}

impl RelationSystem {
    /// Union of two systems, keeping the first copy (and witness) of each
    /// relation; a later witness fills in a missing one.
    pub fn merged(&self, other: &RelationSystem) -> RelationSystem {
        let mut out = self.clone();
        for r in &other.relations {
            match out.relations.iter_mut().find(|x| x.key() == r.key()) {
                Some(existing) if existing.witness.is_none() => existing.witness = r.witness.clone(),
                Some(_) => {}
                None => out.relations.push(r.clone()),
            }
        }
        out.source_depth = self.source_depth.max(other.source_depth);
        out
    }
}

/// Breakpoints and shifts of a map, kept unreduced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Parameters {
    #[serde(with = "serde_str_vec")]
    pub breakpoints: Vec<Rational>,
    #[serde(with = "serde_str_vec")]
    pub shifts: Vec<Rational>,
}

impl Parameters {
    pub fn of(s: &Itm) -> Self {
        Parameters {
            breakpoints: s.breakpoints().iter().map(|t| t.value().clone()).collect(),
            shifts: s.shifts().to_vec(),
        }
    }

    pub fn to_itm(&self) -> Result<Itm> {
        Itm::new(self.breakpoints.clone(), self.shifts.clone())
    }

    fn coordinates(&self) -> Vec<Rational> {
        self.breakpoints.iter().chain(&self.shifts).cloned().collect()
    }

    fn from_coordinates(x: Vec<Rational>, n: usize) -> Self {
        let mut x = x;
        let shifts = x.split_off(n);
        Parameters { breakpoints: x, shifts }
    }

    /// Sup-norm distance to `other`.
    pub fn distance(&self, other: &Parameters) -> Rational {
        self.coordinates()
            .iter()
            .zip(other.coordinates())
            .map(|(a, b)| (a - b).abs())
            .max()
            .unwrap_or_else(Rational::zero)
    }
}

/// Harvests every exact collision of a one-sided endpoint orbit with a
/// breakpoint within `depth` steps.
pub fn detect_relations(s: &Itm, depth: usize) -> Result<RelationSystem> {
    if depth == 0 {
        return Err(Error::InvalidInput("relation depth must be at least 1".into()));
    }
    let n = s.n();
    let mut out = RelationSystem { relations: Vec::new(), source_depth: depth };
    for i in 0..n {
        for side in [Side::Right, Side::Left] {
            let orbit = s.evaluate_one_sided(i, side, depth);
            let mut counts = vec![0i64; n];
            let mut lifted = s.breakpoint(i).value().clone();
            for r in 1..=depth {
                let k = orbit.itinerary[r - 1];
                counts[k] += 1;
                lifted += s.shift(k);
                if let Some(j) = s.breakpoint_index(&orbit.points[r]) {
                    let w = floor_int(&lifted).to_i64().expect("winding fits in i64");
                    let rel = Relation {
                        i,
                        j,
                        l: counts.clone(),
                        w,
                        witness: Some(Witness { side, depth: r, itinerary: orbit.itinerary[..r].to_vec() }),
                    };
                    if !out.relations.iter().any(|x| x.key() == rel.key()) {
                        out.relations.push(rel);
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Last continued-fraction convergent of `x` with denominator at most `q`.
pub fn best_convergent(x: &Rational, q: &BigInt) -> Rational {
    let (mut h_prev, mut h) = (BigInt::zero(), BigInt::one());
    let (mut k_prev, mut k) = (BigInt::one(), BigInt::zero());
    let mut r = x.clone();
    let mut best = Rational::from_integer(x.floor().to_integer());
    loop {
        let a = r.floor().to_integer();
        let h_next = &a * &h + &h_prev;
        let k_next = &a * &k + &k_prev;
        if &k_next > q {
            return best;
        }
        best = Rational::new(h_next.clone(), k_next.clone());
        h_prev = std::mem::replace(&mut h, h_next);
        k_prev = std::mem::replace(&mut k, k_next);
        let f = &r - Rational::from_integer(a);
        if f.is_zero() {
            return best;
        }
        r = f.recip();
    }
}

/// Fibonacci numbers `2, 3, 5, 8, ...` up to `max`.
pub fn fibonacci_denominators(max: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let (mut a, mut b) = (1u64, 2u64);
    while b <= max {
        out.push(b);
        (a, b) = (b, a + b);
    }
    out
}

/// Reduced row-echelon form of the relation equations, with the split into
/// dependent (pivot) and free coordinates.
#[derive(Debug, Clone)]
struct Parametrization {
    n: usize,
    /// `(pivot column, coefficients, rhs)`; the row reads
    /// `x_pivot + sum coeff_f x_f = rhs` over free columns.
    rows: Vec<(usize, Vec<Rational>, Rational)>,
    free: Vec<usize>,
}

/// Coordinates are `t_0..t_{n-1}` then `c_0..c_{n-1}`. Pivots are taken in
/// the order `t_1, ..., t_{n-1}, c_0, ..., c_{n-1}, t_0`, lowest first, so
/// breakpoints are solved for before shifts and `t_0` stays free if it can.
fn pivot_order(n: usize) -> Vec<usize> {
    (1..n).chain(n..2 * n).chain(std::iter::once(0)).collect()
}

fn parametrize(n: usize, relations: &[Relation]) -> Result<Parametrization> {
    let mut m: Vec<(Vec<Rational>, Rational)> = relations
        .iter()
        .map(|r| {
            let mut row = vec![Rational::zero(); 2 * n];
            row[r.j] += Rational::one();
            row[r.i] -= Rational::one();
            for (k, l) in r.l.iter().enumerate() {
                row[n + k] -= Rational::from_integer(BigInt::from(*l));
            }
            (row, Rational::from_integer(BigInt::from(-r.w)))
        })
        .collect();
    let mut pivots = Vec::new();
    let mut next = 0;
    for col in pivot_order(n) {
        let Some(p) = (next..m.len()).find(|&r| !m[r].0[col].is_zero()) else {
            continue;
        };
        m.swap(next, p);
        let inv = m[next].0[col].recip();
        for v in m[next].0.iter_mut() {
            *v *= &inv;
        }
        m[next].1 *= &inv;
        let (prow, prhs) = m[next].clone();
        for (r, (row, rhs)) in m.iter_mut().enumerate() {
            if r != next && !row[col].is_zero() {
                let f = row[col].clone();
                for (v, pv) in row.iter_mut().zip(&prow) {
                    *v -= &f * pv;
                }
                *rhs -= &f * &prhs;
            }
        }
        pivots.push(col);
        next += 1;
    }
    if let Some((_, rhs)) = m[next..].iter().find(|(_, rhs)| !rhs.is_zero()) {
        return Err(Error::InconsistentRelations(format!("relations reduce to 0 = {}", format_rational(rhs))));
    }
    let free: Vec<usize> = (0..2 * n).filter(|c| !pivots.contains(c)).collect();
    let rows =
        pivots.iter().zip(m).map(|(&p, (row, rhs))| (p, free.iter().map(|&f| row[f].clone()).collect(), rhs)).collect();
    Ok(Parametrization { n, rows, free })
}

impl Parametrization {
    fn solve(&self, free_values: &[Rational]) -> Vec<Rational> {
        let mut x = vec![Rational::zero(); 2 * self.n];
        for (&f, v) in self.free.iter().zip(free_values) {
            x[f] = v.clone();
        }
        for (p, coeffs, rhs) in &self.rows {
            x[*p] = coeffs.iter().zip(free_values).fold(rhs.clone(), |acc, (a, v)| acc - a * v);
        }
        x
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ApproximantLevel {
    pub denominator: u64,
    pub parameters: Parameters,
    #[serde(skip)]
    pub itm: Itm,
    #[serde(with = "serde_str")]
    pub distance: Rational,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ApproximantSchedule {
    pub target: Parameters,
    pub relations: RelationSystem,
    /// Indices of the coordinates solved from the relations; coordinates
    /// are `t_0..t_{n-1}` followed by `c_0..c_{n-1}`.
    pub dependent: Vec<usize>,
    pub levels: Vec<ApproximantLevel>,
}

/// Builds one rational approximant per denominator bound. Free coordinates
/// take their last continued-fraction convergent with denominator at most
/// `q`; dependent coordinates are solved exactly, so every level satisfies
/// every relation exactly.
///
/// With `precision = Some(p)` the relations need only hold at the target up
/// to `(1 + sum |l|) * 10^-p`; otherwise they must hold exactly.
pub fn generate_approximants(
    target: &Parameters,
    relations: &RelationSystem,
    denominators: &[u64],
    precision: Option<u32>,
) -> Result<ApproximantSchedule> {
    let n = target.breakpoints.len();
    let target_itm = target.to_itm()?;
    let target = Parameters::of(&target_itm);
    for r in &relations.relations {
        r.check_shape(n)?;
        let residual = r.residual(&target.breakpoints, &target.shifts).abs();
        let tol = match precision {
            None => Rational::zero(),
            Some(p) => {
                let weight: i64 = 1 + r.l.iter().map(|l| l.abs()).sum::<i64>();
                Rational::new(BigInt::from(weight), num::pow(BigInt::from(10), p as usize))
            }
        };
        if residual > tol {
            return Err(Error::InconsistentRelations(format!(
                "relation t_{} - t_{} = {:?}.c - {} misses the target by {}",
                r.j,
                r.i,
                r.l,
                r.w,
                format_rational(&residual)
            )));
        }
    }
    let param = parametrize(n, &relations.relations)?;
    let coords = target.coordinates();
    let mut levels = Vec::with_capacity(denominators.len());
    for &q in denominators {
        let qb = BigInt::from(q);
        let free_values: Vec<Rational> = param.free.iter().map(|&f| best_convergent(&coords[f], &qb)).collect();
        let params = Parameters::from_coordinates(param.solve(&free_values), n);
        let itm = params.to_itm().map_err(|e| Error::OrderViolation {
            bound: q.to_string(),
            reason: match e {
                Error::InvalidMap { reason, .. } => reason,
                other => other.to_string(),
            },
        })?;
        let distance = params.distance(&target);
        levels.push(ApproximantLevel { denominator: q, parameters: params, itm, distance });
    }
    Ok(ApproximantSchedule {
        target,
        relations: relations.clone(),
        dependent: param.rows.iter().map(|(p, _, _)| *p).collect(),
        levels,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CollisionFailure {
    pub relation: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LevelCollisions {
    pub level: usize,
    pub denominator: u64,
    pub failures: Vec<CollisionFailure>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CollisionReport {
    pub depth: usize,
    /// Relations with a witness of length at most `depth`.
    pub checked: Vec<usize>,
    pub levels: Vec<LevelCollisions>,
    /// First level (1-based) from which every replayed collision holds.
    pub m_r: Option<usize>,
}

/// Replays each witnessed relation of depth at most `depth` on every level
/// and checks the itinerary and the final collision exactly.
pub fn orbit_collision_preservation(
    schedule: &ApproximantSchedule,
    relations: &RelationSystem,
    depth: usize,
) -> CollisionReport {
    let checked: Vec<usize> = relations
        .relations
        .iter()
        .enumerate()
        .filter(|(_, r)| r.witness.as_ref().is_some_and(|w| w.depth <= depth))
        .map(|(k, _)| k)
        .collect();
    let levels: Vec<LevelCollisions> = schedule
        .levels
        .iter()
        .enumerate()
        .map(|(idx, level)| {
            let failures = checked
                .iter()
                .filter_map(|&k| {
                    let r = &relations.relations[k];
                    let w = r.witness.as_ref().expect("filtered to witnessed relations");
                    replay(&level.itm, r, w).err().map(|reason| CollisionFailure { relation: k, reason })
                })
                .collect();
            LevelCollisions { level: idx + 1, denominator: level.denominator, failures }
        })
        .collect();
    let m_r = match levels.iter().rposition(|l| !l.failures.is_empty()) {
        None => Some(1),
        Some(last_bad) if last_bad + 1 < levels.len() => Some(last_bad + 2),
        Some(_) => None,
    };
    CollisionReport { depth, checked, levels, m_r }
}

fn replay(s: &Itm, r: &Relation, w: &Witness) -> std::result::Result<(), String> {
    let orbit = s.evaluate_one_sided(r.i, w.side, w.depth);
    if orbit.itinerary != w.itinerary {
        return Err(format!("itinerary {:?} differs from {:?}", orbit.itinerary, w.itinerary));
    }
    let end = orbit.points.last().expect("orbit is nonempty");
    if end != s.breakpoint(r.j) {
        return Err(format!("orbit ends at {} instead of t_{} = {}", end, r.j, s.breakpoint(r.j)));
    }
    Ok(())
}

/// Budgets for computing the invariant measure of each level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MeasureBudgets {
    pub max_iter: usize,
    pub max_arcs: usize,
    pub cycle_budget: usize,
}

impl Default for MeasureBudgets {
    fn default() -> Self {
        MeasureBudgets {
            max_iter: crate::itm::DEFAULT_MAX_ITER,
            max_arcs: crate::itm::DEFAULT_MAX_ARCS,
            cycle_budget: crate::measure::DEFAULT_CYCLE_BUDGET,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LevelMeasure {
    pub level: usize,
    pub denominator: u64,
    pub attractor: Option<AttractorResult>,
    pub measure: Option<Measure>,
    #[serde(serialize_with = "error_as_string")]
    pub error: Option<Error>,
}

fn error_as_string<S: Serializer>(e: &Option<Error>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match e {
        Some(e) => s.serialize_some(&e.to_string()),
        None => s.serialize_none(),
    }
}

/// Attractor and invariant measure of every level, computed in parallel and
/// returned in level order. A failing level does not stop the others.
pub fn measure_sequence(schedule: &ApproximantSchedule, budgets: &MeasureBudgets) -> Vec<LevelMeasure> {
    schedule
        .levels
        .par_iter()
        .enumerate()
        .map(|(idx, level)| {
            let opts =
                AttractorOptions { max_iter: budgets.max_iter, max_arcs: budgets.max_arcs, keep_iterates: false };
            let mut out = LevelMeasure {
                level: idx + 1,
                denominator: level.denominator,
                attractor: None,
                measure: None,
                error: None,
            };
            match level.itm.attractor_with(&opts) {
                Ok(attr) => {
                    match attractor_measure_with_budget(&level.itm, &attr, budgets.cycle_budget) {
                        Ok(mu) => out.measure = Some(mu),
                        Err(e) => out.error = Some(e),
                    }
                    out.attractor = Some(attr);
                }
                Err(e) => out.error = Some(e),
            }
            out
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ConvergenceReport {
    /// `cdfDistance(mu_k, mu_{k+1})` for consecutive measures.
    #[serde(with = "serde_str_vec")]
    pub distances: Vec<Rational>,
    #[serde(with = "serde_str")]
    pub tol: Rational,
    /// Every distance in the second half of the sequence is within `tol`.
    pub cauchy: bool,
    /// First index from which all successive distances are within `tol`.
    pub cauchy_from: Option<usize>,
    /// The last measure; a candidate, not a proven limit.
    pub limit_candidate: Measure,
}

pub fn detect_convergence(mus: &[Measure], tol: &Rational) -> Result<ConvergenceReport> {
    if mus.len() < 2 {
        return Err(Error::InvalidInput("convergence needs at least two measures".into()));
    }
    let distances: Vec<Rational> = mus.par_windows(2).map(|w| cdf_distance(&w[0], &w[1])).collect();
    let cauchy_from = match distances.iter().rposition(|d| d > tol) {
        None => Some(0),
        Some(k) if k + 1 < distances.len() => Some(k + 1),
        Some(_) => None,
    };
    let cauchy = cauchy_from.is_some_and(|k| k <= distances.len() / 2);
    Ok(ConvergenceReport {
        distances,
        tol: tol.clone(),
        cauchy,
        cauchy_from,
        limit_candidate: mus.last().expect("at least two measures").clone(),
    })
}

/// For each `delta`, the largest mass any level puts within `delta` of one
/// of its own breakpoints.
pub fn mass_near_breakpoint_trend(levels: &[(Itm, Measure)], deltas: &[Rational]) -> Result<Vec<(Rational, Rational)>> {
    deltas
        .iter()
        .map(|d| {
            let mut sup = Rational::zero();
            for (s, mu) in levels {
                for m in mass_near_breakpoints(mu, s, d)? {
                    if m > sup {
                        sup = m;
                    }
                }
            }
            Ok((d.clone(), sup))
        })
        .collect()
}

/// `2^-1, 2^-2, ..., 2^-30`.
pub fn default_delta_schedule() -> Vec<Rational> {
    (1..=30).map(|k| Rational::new(BigInt::one(), BigInt::one() << k)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct NeighborhoodMass {
    #[serde(with = "serde_str")]
    pub delta: Rational,
    #[serde(with = "serde_str")]
    pub mass: Rational,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct LimitReport {
    pub neighborhood_masses: Vec<NeighborhoodMass>,
    /// The neighbourhood mass of H drops to `tolMass` as delta shrinks.
    pub null_discontinuities: bool,
    pub residual: f64,
    pub residual_within_tol: bool,
    /// Names of the failing hypotheses, empty when both hold.
    pub failing: Vec<String>,
}

impl LimitReport {
    pub fn passed(&self) -> bool {
        self.failing.is_empty()
    }
}

/// Checks the two hypotheses under which a weak-* limit is invariant:
/// (a) the candidate gives vanishing mass to shrinking neighbourhoods of
/// the discontinuity set, (b) its functional invariance residual is small.
pub fn verify_limit_measure(
    target: &dyn TestableMap,
    mu: &Measure,
    h: &[CirclePoint],
    tol_mass: &Rational,
    tol_res: f64,
    family: &TestFamily,
    deltas: &[Rational],
) -> LimitReport {
    let neighborhood_masses: Vec<NeighborhoodMass> =
        deltas.iter().map(|d| NeighborhoodMass { delta: d.clone(), mass: mass_open_neighborhood(mu, h, d) }).collect();
    let null_discontinuities = neighborhood_masses.last().is_none_or(|m| &m.mass <= tol_mass);
    let residual = invariance_residual_functional(target, mu, family);
    let residual_within_tol = residual <= tol_res;
    let mut failing = Vec::new();
    if !null_discontinuities {
        failing.push("discontinuity set carries mass".to_string());
    }
    if !residual_within_tol {
        failing.push("invariance residual above tolerance".to_string());
    }
    LimitReport { neighborhood_masses, null_discontinuities, residual, residual_within_tol, failing }
}

/// `mu` of the union of open balls of radius `delta` around `points`.
pub fn mass_open_neighborhood(mu: &Measure, points: &[CirclePoint], delta: &Rational) -> Rational {
    if points.is_empty() || !delta.is_positive() {
        return Rational::zero();
    }
    let two = Rational::from_integer(BigInt::from(2));
    if delta * &two > Rational::one() {
        return mu.total_mass().clone();
    }
    let arcs: Vec<_> = points
        .iter()
        .map(|p| crate::circle::Arc::new(p.shifted(&-delta), delta * &two).expect("diameter in (0, 1]"))
        .collect();
    let set = ArcSet::normalize(&arcs);
    let density = mu.density_mass(&set);
    let atoms = mu
        .atoms()
        .iter()
        .filter(|(p, _)| points.iter().any(|h| &h.distance(p) < delta))
        .fold(Rational::zero(), |acc, (_, m)| acc + m);
    density + atoms
}

/// Whether a level ran out of budget rather than failing outright.
pub fn budget_exceeded(level: &LevelMeasure) -> bool {
    matches!(level.error, Some(Error::BudgetExceeded { .. }))
        || level.attractor.as_ref().is_some_and(|a| a.finite_type == FiniteType::Unknown)
}
