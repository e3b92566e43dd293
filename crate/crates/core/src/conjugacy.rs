//! Metric conjugacy of an interval translation map carrying a non-atomic
//! invariant probability measure to an interval exchange map, through the
//! distribution function `h(x) = mu([0, x])`.

use num::bigint::BigInt;
use num::{One, Signed, Zero};
use serde::Serialize;

use crate::circle::{ArcSet, CirclePoint};
use crate::error::{Error, Result};
use crate::itm::Itm;
use crate::measure::{Cdf, Measure};
use crate::rational::{floor_int, format_rational, frac, serde_str, serde_str_vec, Rational};

/// Default number of grid points for the sampled semi-conjugacy check.
pub const DEFAULT_SAMPLES: usize = 10_000;

/// `h(x) = mu([0, x])` for a non-atomic probability measure.
pub fn build_h(mu: &Measure) -> Result<Cdf> {
    if !mu.is_non_atomic() {
        return Err(Error::AtomicMeasure);
    }
    if !mu.is_probability() {
        return Err(Error::InvalidInput(format!(
            "measure has total mass {}, expected 1",
            format_rational(mu.total_mass())
        )));
    }
    Ok(mu.cdf())
}

/// `max { x : h(x) = y }` for `y` in `[0, 1]`.
pub fn hbar(h: &Cdf, y: &Rational) -> Rational {
    let mut before = Rational::zero();
    for (a, b, w) in h.segments() {
        let mass = (b - a) * w;
        if y < &(&before + &mass) {
            return a + (y - &before) / w;
        }
        before += mass;
    }
    Rational::one()
}

/// `min { x : h(x) = y }` for `y` in `[0, 1]`.
pub fn hbar_min(h: &Cdf, y: &Rational) -> Rational {
    if !y.is_positive() {
        return Rational::zero();
    }
    let mut before = Rational::zero();
    for (a, b, w) in h.segments() {
        let mass = (b - a) * w;
        if y <= &(&before + &mass) {
            return a + (y - &before) / w;
        }
        before += mass;
    }
    Rational::one()
}

/// The lift `H(x) = floor(x) + h(frac(x))` of `h` to the real line.
fn lifted_h(h: &Cdf, x: &Rational) -> Rational {
    Rational::from_integer(floor_int(x)) + h.eval(&frac(x))
}

/// Closed plateau `[a, b]` of positive length containing `x`, if any.
pub fn plateau_containing(h: &Cdf, x: &Rational) -> Option<(Rational, Rational)> {
    let y = h.eval(x);
    let (a, b) = (hbar_min(h, &y), hbar(h, &y));
    (a < b).then_some((a, b))
}

/// An interval exchange on `[0, 1)` written as a translation map.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Iem {
    #[serde(with = "serde_str_vec")]
    pub breakpoints: Vec<Rational>,
    /// Lifted translation amounts; the map is `y -> y + d_j mod 1`.
    #[serde(with = "serde_str_vec")]
    pub shifts: Vec<Rational>,
    /// Source piece of each IEM piece.
    #[serde(rename = "sourcePieces")]
    pub source_pieces: Vec<usize>,
    pub injective: bool,
}

impl Iem {
    pub fn as_itm(&self) -> Itm {
        Itm::new(self.breakpoints.clone(), self.shifts.clone()).expect("breakpoints of nonempty pieces increase")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SampleStatus {
    /// Inside a level set of positive length, where `h` is not injective.
    InPlateau,
    Regular,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SampleFailure {
    #[serde(with = "serde_str")]
    pub x: Rational,
    pub status: SampleStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SemiConjugacyReport {
    pub samples: usize,
    pub failures: Vec<SampleFailure>,
    /// Failures at points where `h` is locally injective.
    pub regular_failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ConjugacyData {
    pub source_map: Itm,
    /// `source_map` with 0 inserted as a breakpoint.
    pub cut_map: Itm,
    pub mu: Measure,
    #[serde(skip)]
    pub h: Cdf,
    /// `tau_j = h(s_j)` for the breakpoints of `cut_map`, then `1`.
    #[serde(with = "serde_str_vec")]
    pub tau: Vec<Rational>,
    pub iem: Iem,
    pub semi_conjugacy: SemiConjugacyReport,
}

/// Builds `T = h o S o hbar` and samples the semi-conjugacy `h o S = T o h`
/// on a grid of `samples` points.
///
/// On each nonempty `[tau_j, tau_{j+1})` the map translates by
/// `h(S(hbar(y))) - y`. That amount is constant between consecutive levels of
/// `h` plateaus: a gap of the support inside a source piece can be carried
/// onto positive mass, in which case `T` changes translation at the gap's
/// level and the piece is split there.
pub fn induce_iem(s: &Itm, mu: &Measure, samples: usize) -> Result<ConjugacyData> {
    let h = build_h(mu)?;
    let residual = mu.invariance_residual_exact(s);
    if !residual.is_zero() {
        return Err(Error::NotInvariant { residual: format_rational(&residual) });
    }
    let cut = s.cut_at_zero();
    let n = cut.n();
    let mut tau: Vec<Rational> = cut.breakpoints().iter().map(|t| h.eval(t.value())).collect();
    tau.push(Rational::one());
    let mut levels: Vec<Rational> = h.breaklist().iter().map(|x| h.eval(x)).collect();
    levels.sort();
    levels.dedup();
    let mut breakpoints: Vec<Rational> = Vec::new();
    let mut shifts: Vec<Rational> = Vec::new();
    let mut source_pieces = Vec::new();
    for j in 0..n {
        if tau[j] >= tau[j + 1] {
            continue;
        }
        let inner = levels.iter().filter(|y| **y > tau[j] && **y < tau[j + 1]);
        let mut prev: Option<Rational> = None;
        for y in std::iter::once(&tau[j]).chain(inner) {
            let d = lifted_h(&h, &(hbar(&h, y) + cut.shift(j))) - y;
            if prev.as_ref() != Some(&d) {
                breakpoints.push(y.clone());
                shifts.push(d.clone());
                source_pieces.push(j);
                prev = Some(d);
            }
        }
    }
    let mut iem = Iem { breakpoints, shifts, source_pieces, injective: false };
    iem.injective = image_overlap(&iem.as_itm()).is_zero();
    let semi_conjugacy = sample_semi_conjugacy(s, &h, &iem.as_itm(), samples);
    Ok(ConjugacyData { source_map: s.clone(), cut_map: cut, mu: mu.clone(), h, tau, iem, semi_conjugacy })
}

fn sample_semi_conjugacy(s: &Itm, h: &Cdf, t: &Itm, samples: usize) -> SemiConjugacyReport {
    let denom = BigInt::from(samples.max(1));
    let failures: Vec<SampleFailure> = (0..samples)
        .filter_map(|k| {
            let x = Rational::new(BigInt::from(k), denom.clone());
            let lhs = frac(&h.eval(s.evaluate(&CirclePoint::new(x.clone())).value()));
            let rhs = t.evaluate(&CirclePoint::new(h.eval(&x))).into_value();
            (lhs != rhs).then(|| {
                let status =
                    if plateau_containing(h, &x).is_some() { SampleStatus::InPlateau } else { SampleStatus::Regular };
                SampleFailure { x, status }
            })
        })
        .collect();
    let regular_failures = failures.iter().filter(|f| f.status == SampleStatus::Regular).count();
    SemiConjugacyReport { samples, failures, regular_failures }
}

/// Total length of pairwise overlaps between piece images.
fn image_overlap(t: &Itm) -> Rational {
    let images: Vec<ArcSet> = (0..t.n()).map(|j| ArcSet::from_arc(&t.piece_arc(j).translate(t.shift(j)))).collect();
    let mut overlap = Rational::zero();
    for a in 0..images.len() {
        for b in a + 1..images.len() {
            overlap += images[a].intersect(&images[b]).total_length();
        }
    }
    overlap
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct IemReport {
    /// Each IEM piece is carried by a translation of the source map:
    /// `H(x + c_j) - h(x) = d_j` on the part of the source piece that `h`
    /// maps onto it, with no shortfall at either end.
    pub isometry: bool,
    pub isometry_failures: Vec<usize>,
    /// `||T#Leb - Leb||`.
    #[serde(with = "serde_str")]
    pub lebesgue_residual: Rational,
    pub lebesgue_invariant: bool,
    #[serde(with = "serde_str")]
    pub overlap_length: Rational,
    pub injective: bool,
}

impl IemReport {
    pub fn passed(&self) -> bool {
        self.isometry && self.lebesgue_invariant && self.injective
    }
}

pub fn verify_iem(data: &ConjugacyData) -> IemReport {
    let t = data.iem.as_itm();
    let isometry_failures: Vec<usize> =
        (0..data.iem.breakpoints.len()).filter(|&k| !piece_is_isometric(data, k)).collect();
    let lebesgue_residual = Measure::lebesgue().invariance_residual_exact(&t);
    let overlap_length = image_overlap(&t);
    IemReport {
        isometry: isometry_failures.is_empty(),
        isometry_failures,
        lebesgue_invariant: lebesgue_residual.is_zero(),
        lebesgue_residual,
        injective: overlap_length.is_zero(),
        overlap_length,
    }
}

/// Checks that `x -> H(x + c_j) - h(x)` equals `d` on `[hbar(y_k),
/// hbar_min(y_{k+1})]`, where `[y_k, y_{k+1})` is the IEM piece. Both terms
/// are piecewise linear, so it suffices to check the ends and every kink in
/// between.
fn piece_is_isometric(data: &ConjugacyData, k: usize) -> bool {
    let h = &data.h;
    let j = data.iem.source_pieces[k];
    let c = data.cut_map.shift(j);
    let d = &data.iem.shifts[k];
    let y_end = data.iem.breakpoints.get(k + 1).cloned().unwrap_or_else(Rational::one);
    let lo = hbar(h, &data.iem.breakpoints[k]);
    let hi = hbar_min(h, &y_end);
    let piece_lo = data.cut_map.breakpoint(j).value().clone();
    let piece_hi = data.cut_map.breakpoints().get(j + 1).map_or_else(Rational::one, |t| t.value().clone());
    if lo < piece_lo || hi > piece_hi || lo > hi {
        return false;
    }
    let mut kinks = vec![lo.clone(), hi.clone()];
    for x in h.breaklist() {
        for shift in [-1, 0, 1] {
            kinks.push(&x - c + Rational::from_integer(BigInt::from(shift)));
        }
        kinks.push(x);
    }
    kinks.into_iter().filter(|x| x >= &lo && x <= &hi).all(|x| &(lifted_h(h, &(&x + c)) - h.eval(&x)) == d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circle::Arc;
    use crate::rational::{int, rat};

    fn half_collapse() -> Itm {
        Itm::new(vec![int(0), rat(1, 2)], vec![int(0), rat(1, 2)]).unwrap()
    }

    fn half_density() -> Measure {
        Measure::uniform_on(&ArcSet::from_segments(vec![(int(0), rat(1, 2))])).unwrap()
    }

    #[test]
    fn h_examples() {
        let h = build_h(&Measure::lebesgue()).unwrap();
        assert_eq!(h.eval(&rat(3, 7)), rat(3, 7));
        let h = build_h(&half_density()).unwrap();
        assert_eq!(h.eval(&rat(1, 8)), rat(1, 4));
        assert_eq!(h.eval(&rat(3, 4)), int(1));
        let mu = Measure::new(vec![(Arc::from_endpoints(&rat(1, 4), &rat(1, 2)).unwrap(), int(4))], vec![]).unwrap();
        let h = build_h(&mu).unwrap();
        assert_eq!(h.eval(&rat(1, 4)), int(0));
        assert_eq!(h.eval(&rat(3, 8)), rat(1, 2));
        assert_eq!(h.eval(&rat(1, 2)), int(1));
        assert_eq!(build_h(&Measure::dirac(CirclePoint::zero())), Err(Error::AtomicMeasure));
    }

    #[test]
    fn hbar_examples() {
        let h = build_h(&Measure::lebesgue()).unwrap();
        assert_eq!(hbar(&h, &rat(2, 5)), rat(2, 5));
        let h = build_h(&half_density()).unwrap();
        assert_eq!(hbar(&h, &rat(1, 3)), rat(1, 6));
        assert_eq!(hbar(&h, &int(1)), int(1));
        assert_eq!(hbar_min(&h, &int(1)), rat(1, 2));
        // Plateau [0, 1/4] at level 0.
        let mu = Measure::new(vec![(Arc::from_endpoints(&rat(1, 4), &rat(1, 2)).unwrap(), int(4))], vec![]).unwrap();
        let h = build_h(&mu).unwrap();
        assert_eq!(hbar(&h, &int(0)), rat(1, 4));
        assert_eq!(plateau_containing(&h, &rat(1, 8)), Some((int(0), rat(1, 4))));
        assert_eq!(plateau_containing(&h, &rat(3, 8)), None);
    }

    #[test]
    fn h_of_hbar_is_identity() {
        let mu = Measure::new(
            vec![
                (Arc::from_endpoints(&rat(1, 8), &rat(1, 4)).unwrap(), int(2)),
                (Arc::from_endpoints(&rat(1, 2), &rat(7, 8)).unwrap(), int(2)),
            ],
            vec![],
        )
        .unwrap();
        let h = build_h(&mu).unwrap();
        for k in 0..64 {
            let y = rat(k, 64);
            assert_eq!(h.eval(&hbar(&h, &y)), y);
            assert_eq!(h.eval(&hbar_min(&h, &y)), y);
        }
    }

    #[test]
    fn half_collapse_induces_identity() {
        let data = induce_iem(&half_collapse(), &half_density(), 256).unwrap();
        assert_eq!(data.iem.as_itm(), Itm::new(vec![int(0)], vec![int(0)]).unwrap());
        assert_eq!(data.tau, vec![int(0), int(1), int(1)]);
        assert_eq!(data.semi_conjugacy.regular_failures, 0);
        assert!(verify_iem(&data).passed());
    }

    #[test]
    fn rotation_induces_itself() {
        let c = rat(2, 7);
        let s = Itm::rotation(c.clone());
        let data = induce_iem(&s, &Measure::lebesgue(), 700).unwrap();
        assert_eq!(data.iem.as_itm(), s);
        assert!(data.semi_conjugacy.failures.is_empty());
        assert!(verify_iem(&data).passed());

        let off = Itm::new(vec![rat(1, 3)], vec![rat(1, 5)]).unwrap();
        let data = induce_iem(&off, &Measure::lebesgue(), 300).unwrap();
        assert_eq!(data.iem.breakpoints, vec![int(0), rat(1, 3)]);
        assert_eq!(data.iem.shifts, vec![rat(1, 5), rat(1, 5)]);
        assert!(verify_iem(&data).passed());
    }

    #[test]
    fn zero_mass_pieces_vanish() {
        let s = Itm::new(vec![int(0), rat(1, 4), rat(1, 2)], vec![int(0), rat(3, 4), rat(1, 2)]).unwrap();
        let attr = s.attractor(16, 64).unwrap();
        let mu = crate::measure::attractor_measure(&s, &attr).unwrap();
        let data = induce_iem(&s, &mu, 512).unwrap();
        assert!(data.tau.windows(2).any(|w| w[0] == w[1]));
        assert!(data.iem.breakpoints.len() < data.cut_map.n());
        assert_eq!(data.semi_conjugacy.regular_failures, 0);
        assert!(verify_iem(&data).passed());
    }

    #[test]
    fn gap_carried_onto_mass_splits_the_piece() {
        // Support [3/4, 1) u [0, 1/2); the gap [1/2, 3/4) sits inside piece 1
        // and is carried onto [0, 1/4), which has mass 1/3.
        let s = Itm::new(vec![int(0), rat(1, 4)], vec![int(0), rat(1, 2)]).unwrap();
        let mu = crate::measure::attractor_measure(&s, &s.attractor(64, 64).unwrap()).unwrap();
        let data = induce_iem(&s, &mu, 600).unwrap();
        assert_eq!(data.tau, vec![int(0), rat(1, 3), int(1)]);
        assert_eq!(data.iem.breakpoints, vec![int(0), rat(1, 3), rat(2, 3)]);
        assert_eq!(data.iem.shifts, vec![int(0), rat(1, 3), rat(2, 3)]);
        assert_eq!(data.iem.source_pieces, vec![0, 1, 1]);
        assert_eq!(data.semi_conjugacy.regular_failures, 0);
        assert!(verify_iem(&data).passed());
    }

    #[test]
    fn corrupted_shift_fails_invariance_and_injectivity() {
        let s = Itm::new(vec![int(0), rat(1, 2)], vec![rat(1, 2), rat(1, 2)]).unwrap();
        let mut data = induce_iem(&s, &Measure::lebesgue(), 64).unwrap();
        assert!(verify_iem(&data).passed());
        data.iem.shifts[1] = data.iem.shifts[0].clone() - rat(1, 2);
        let report = verify_iem(&data);
        assert!(!report.lebesgue_invariant);
        assert!(!report.injective);
        assert_eq!(report.overlap_length, rat(1, 2));
    }

    #[test]
    fn preconditions() {
        let s = Itm::new(vec![int(0), rat(1, 2)], vec![rat(1, 3), rat(1, 4)]).unwrap();
        assert!(matches!(induce_iem(&s, &Measure::lebesgue(), 8), Err(Error::NotInvariant { .. })));
        assert_eq!(
            induce_iem(&Itm::rotation(int(0)), &Measure::dirac(CirclePoint::zero()), 8),
            Err(Error::AtomicMeasure)
        );
    }
}
