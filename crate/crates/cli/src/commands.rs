//! One function per subcommand. Each validates its inputs, runs the
//! pipeline and returns the report body with its tables and plots.

use itm_core::approx::{
    budget_exceeded, detect_convergence, detect_relations, generate_approximants, mass_near_breakpoint_trend,
    measure_sequence, orbit_collision_preservation, verify_limit_measure, MeasureBudgets, RelationSystem,
};
use itm_core::conjugacy::{induce_iem, verify_iem};
use itm_core::itm::{AttractorOptions, HomtervalFate, Unresolved};
use itm_core::measure::{
    attractor_measure_with_budget, cdf_sup_distance, find_recurrent_points, invariance_residual_functional, TestableMap,
};
use itm_core::piecewise::{empirical_measure, visit_frequency, wandering_discontinuity_check, PiecewiseMap};
use itm_core::rational::{format_rational, serde_str, to_f64, Rational};
use itm_core::{AttractorResult, CirclePoint, FiniteType, Itm, Measure};
use num::{ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use crate::config::{Config, Needs};
use crate::error::CliError;
use crate::report::{cdf_plot, cdf_table, density_plot, to_value, Outcome, Plot, Table};
use crate::svg;

/// Recurrence horizons are `q^2`, capped here.
const MAX_RECURRENCE_HORIZON: usize = 1_000_000;

fn core(op: &str) -> impl Fn(itm_core::Error) -> CliError + '_ {
    move |e| CliError::from_core(op, e)
}

pub fn validate(c: &Config) -> Result<Outcome, CliError> {
    let checked = c.validate(Needs::Nothing)?;
    Ok(Outcome::new(json!({ "valid": true, "checked": checked })))
}

fn run_attractor(c: &Config, s: &Itm) -> Result<AttractorResult, CliError> {
    let opts = AttractorOptions { max_iter: c.budgets.max_iter, max_arcs: c.budgets.max_arcs, keep_iterates: false };
    s.attractor_with(&opts).map_err(core("itm-engine::attractor"))
}

fn attractor_failure(attr: &AttractorResult, c: &Config) -> Option<CliError> {
    (attr.finite_type != FiniteType::Yes).then(|| {
        CliError::Budget(format!(
            "itm-engine::attractor: no stabilization within maxIter = {} (finiteType {})",
            c.budgets.max_iter,
            to_value(attr.finite_type).as_str().unwrap_or_default()
        ))
    })
}

fn arcs_table(attr: &AttractorResult) -> Table {
    Table {
        name: "arcs",
        header: vec!["start", "end", "length"],
        rows: attr
            .attractor
            .arcs()
            .iter()
            .map(|a| vec![a.start().to_string(), format_rational(&a.end()), format_rational(a.length())])
            .collect(),
    }
}

fn arcs_plot(title: &str, attr: &AttractorResult) -> Plot {
    let segs: Vec<(f64, f64, bool)> =
        attr.attractor.segments().iter().map(|(a, b)| (to_f64(a), to_f64(b), true)).collect();
    Plot { name: "attractor", svg: svg::arcs(title, &segs) }
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct AttractorBody<'a> {
    #[serde(flatten)]
    attractor: &'a AttractorResult,
    #[serde(with = "serde_str")]
    length: Rational,
    common_denominator: String,
}

fn attractor_body(s: &Itm, attr: &AttractorResult) -> serde_json::Value {
    to_value(AttractorBody {
        attractor: attr,
        length: attr.attractor.total_length().clone(),
        common_denominator: s.common_denominator().to_string(),
    })
}

pub fn attractor(c: &Config) -> Result<Outcome, CliError> {
    c.validate(Needs::Map)?;
    let s = c.itm()?;
    let attr = run_attractor(c, &s)?;
    let mut out = Outcome::new(attractor_body(&s, &attr));
    out.failure = attractor_failure(&attr, c);
    out.tables.push(arcs_table(&attr));
    out.plots.push(arcs_plot("attractor", &attr));
    Ok(out)
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct RecurrenceSummary {
    #[serde(with = "serde_str")]
    eps: Rational,
    horizon: usize,
    seed: u64,
    samples: usize,
    recurrent: usize,
    fraction: f64,
}

pub fn measure(c: &Config) -> Result<Outcome, CliError> {
    c.validate(Needs::Map)?;
    let s = c.itm()?;
    let attr = run_attractor(c, &s)?;
    if let Some(f) = attractor_failure(&attr, c) {
        let mut out = Outcome::new(json!({ "attractor": attractor_body(&s, &attr) }));
        out.failure = Some(f);
        return Ok(out);
    }
    let mu =
        attractor_measure_with_budget(&s, &attr, c.budgets.cycle_budget).map_err(core("measures::attractorMeasure"))?;
    let residual = mu.invariance_residual_exact(&s);
    let functional = invariance_residual_functional(&s, &mu, &c.test_family);

    let q = s.common_denominator();
    let eps = Rational::new(1.into(), q.clone());
    let horizon = c
        .recurrence_horizon
        .unwrap_or_else(|| (&q * &q).to_usize().map_or(MAX_RECURRENCE_HORIZON, |h| h.min(MAX_RECURRENCE_HORIZON)));
    let mut rng = ChaCha8Rng::seed_from_u64(c.seed);
    let rec = find_recurrent_points(&s, &mu, &eps, horizon, c.recurrence_samples, &mut rng)
        .map_err(core("measures::findRecurrentPoints"))?;
    let recurrent = rec.iter().filter(|r| r.time.is_some()).count();
    let summary = RecurrenceSummary {
        eps,
        horizon,
        seed: c.seed,
        samples: rec.len(),
        recurrent,
        fraction: if rec.is_empty() { 1.0 } else { recurrent as f64 / rec.len() as f64 },
    };

    let within_tol = residual <= c.tol;
    let cdf = mu.cdf();
    let mut out = Outcome::new(json!({
        "attractor": attractor_body(&s, &attr),
        "measure": &mu,
        "nonAtomic": mu.is_non_atomic(),
        "supportWithinAttractor": mu.support_within_closure(&attr.attractor),
        "invarianceResidualExact": format_rational(&residual),
        "invarianceResidualFunctional": functional,
        "testFamily": &c.test_family,
        "recurrence": summary,
    }));
    if !within_tol {
        out.failure = Some(CliError::Verification(format!(
            "measures::invarianceResidualExact: residual {} above tol {}",
            format_rational(&residual),
            format_rational(&c.tol)
        )));
    }
    out.tables.push(cdf_table(&cdf));
    out.plots.push(density_plot("invariant density", &mu));
    out.plots.push(cdf_plot("cdf", "distribution function", &cdf));
    out.plots.push(arcs_plot("attractor", &attr));
    Ok(out)
}

pub fn homtervals(c: &Config) -> Result<Outcome, CliError> {
    c.validate(Needs::Map)?;
    let s = c.itm()?;
    let report =
        s.classify_homtervals(c.depth, c.budgets.orbit_budget).map_err(core("itm-engine::classifyHomtervals"))?;
    let periodic = report.homtervals.iter().filter(|h| h.fate.is_periodic()).count();
    let exhausted = report
        .homtervals
        .iter()
        .filter(|h| matches!(h.fate, HomtervalFate::Unresolved { reason: Unresolved::BudgetExhausted, .. }))
        .count();
    let genericity = if periodic > 0 { "not-generic" } else { "no-periodic-domain-found" };
    let rows = report
        .homtervals
        .iter()
        .map(|h| {
            let (status, a, b) = match h.fate {
                HomtervalFate::Periodic { preperiod, period } => ("periodic", preperiod, period),
                HomtervalFate::Unresolved { reason: Unresolved::HitsDiscontinuity, step } => {
                    ("hits-discontinuity", step, 0)
                }
                HomtervalFate::Unresolved { reason: Unresolved::BudgetExhausted, step } => {
                    ("budget-exhausted", step, 0)
                }
            };
            vec![
                h.arc.start().to_string(),
                format_rational(&h.arc.end()),
                status.to_string(),
                a.to_string(),
                b.to_string(),
            ]
        })
        .collect();
    let segs: Vec<(f64, f64, bool)> = report
        .homtervals
        .iter()
        .flat_map(|h| {
            let periodic = h.fate.is_periodic();
            itm_core::ArcSet::from_arc(&h.arc)
                .segments()
                .iter()
                .map(|(a, b)| (to_f64(a), to_f64(b), periodic))
                .collect::<Vec<_>>()
        })
        .collect();
    let mut out = Outcome::new(json!({
        "report": &report,
        "periodic": periodic,
        "genericity": genericity,
    }));
    if exhausted > 0 {
        out.failure = Some(CliError::Budget(format!(
            "itm-engine::classifyHomtervals: {exhausted} homtervals unresolved after orbitBudget = {}",
            c.budgets.orbit_budget
        )));
    }
    out.tables.push(Table {
        name: "homtervals",
        header: vec!["start", "end", "status", "preperiod_or_step", "period"],
        rows,
    });
    out.plots.push(Plot { name: "homtervals", svg: svg::arcs("homtervals (periodic in blue)", &segs) });
    Ok(out)
}

fn relations_table(sys: &RelationSystem) -> Table {
    Table {
        name: "relations",
        header: vec!["i", "j", "l", "w", "side", "depth"],
        rows: sys
            .relations
            .iter()
            .map(|r| {
                let l: Vec<String> = r.l.iter().map(ToString::to_string).collect();
                let (side, depth) = match &r.witness {
                    Some(w) => (to_value(w.side).as_str().unwrap_or_default().to_string(), w.depth.to_string()),
                    None => ("declared".to_string(), String::new()),
                };
                vec![r.i.to_string(), r.j.to_string(), l.join(" "), r.w.to_string(), side, depth]
            })
            .collect(),
    }
}

pub fn relations(c: &Config) -> Result<Outcome, CliError> {
    c.validate(Needs::Map)?;
    let s = c.itm()?;
    let sys = detect_relations(&s, c.depth).map_err(core("approximation::detectRelations"))?;
    let mut out = Outcome::new(&sys);
    out.tables.push(relations_table(&sys));
    Ok(out)
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct LevelSummary<'a> {
    level: usize,
    denominator: u64,
    parameters: &'a itm_core::approx::Parameters,
    #[serde(with = "serde_str")]
    distance: &'a Rational,
    #[serde(skip_serializing_if = "Option::is_none")]
    stabilized_at: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    finite_type: Option<FiniteType>,
    #[serde(skip_serializing_if = "Option::is_none")]
    measure: Option<&'a Measure>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

pub fn approximate(c: &Config) -> Result<Outcome, CliError> {
    c.validate(Needs::Target)?;
    let (target, target_itm) = c.target()?;
    let declared = RelationSystem { relations: c.declared_relations.clone(), source_depth: 0 };
    let detected = detect_relations(&target_itm, c.depth).map_err(core("approximation::detectRelations"))?;
    let system = declared.merged(&detected);
    let denominators = c.denominators.clone().unwrap_or_default();
    let schedule = generate_approximants(target, &system, &denominators, c.precision)
        .map_err(core("approximation::generateApproximants"))?;
    let budgets = MeasureBudgets {
        max_iter: c.budgets.max_iter,
        max_arcs: c.budgets.max_arcs,
        cycle_budget: c.budgets.cycle_budget,
    };
    let seq = measure_sequence(&schedule, &budgets);
    let collisions = orbit_collision_preservation(&schedule, &system, c.depth);

    let levels: Vec<LevelSummary> = schedule
        .levels
        .iter()
        .zip(&seq)
        .map(|(l, m)| LevelSummary {
            level: m.level,
            denominator: l.denominator,
            parameters: &l.parameters,
            distance: &l.distance,
            stabilized_at: m.attractor.as_ref().and_then(|a| a.stabilized_at),
            finite_type: m.attractor.as_ref().map(|a| a.finite_type),
            measure: m.measure.as_ref(),
            error: m.error.as_ref().map(ToString::to_string),
        })
        .collect();
    let relations_hold: Vec<bool> = schedule
        .levels
        .iter()
        .map(|l| system.relations.iter().all(|r| r.holds(&l.parameters.breakpoints, &l.parameters.shifts)))
        .collect();

    let mus: Vec<Measure> = seq.iter().filter_map(|l| l.measure.clone()).collect();
    let pairs: Vec<(Itm, Measure)> =
        schedule.levels.iter().zip(&seq).filter_map(|(l, m)| m.measure.clone().map(|mu| (l.itm.clone(), mu))).collect();
    let trend = mass_near_breakpoint_trend(&pairs, &c.deltas).map_err(core("approximation::massNearBreakpoints"))?;

    let mut tables = Vec::new();
    let mut plots = Vec::new();
    let (convergence, limit) = if mus.len() >= 2 {
        let conv = detect_convergence(&mus, &c.tol).map_err(core("approximation::detectConvergence"))?;
        let h: Vec<CirclePoint> = target_itm.breakpoints().to_vec();
        let limit = verify_limit_measure(
            &target_itm,
            &conv.limit_candidate,
            &h,
            &c.mass_tol,
            c.residual_tol,
            &c.test_family,
            &c.deltas,
        );
        let cdf = conv.limit_candidate.cdf();
        tables.push(cdf_table(&cdf));
        plots.push(cdf_plot("limit-cdf", "limit candidate distribution function", &cdf));
        plots.push(density_plot("limit candidate density", &conv.limit_candidate));
        (Some(conv), Some(limit))
    } else {
        (None, None)
    };
    let is_lebesgue = convergence.as_ref().map(|cv| cv.limit_candidate == Measure::lebesgue());

    let mut prev: Option<&Measure> = None;
    let level_rows = levels
        .iter()
        .map(|l| {
            let step = match (prev, l.measure) {
                (Some(p), Some(mu)) => format_rational(&itm_core::measure::cdf_distance(p, mu)),
                _ => String::new(),
            };
            if l.measure.is_some() {
                prev = l.measure;
            }
            vec![
                l.level.to_string(),
                l.denominator.to_string(),
                format_rational(l.distance),
                l.stabilized_at.map(|k| k.to_string()).unwrap_or_default(),
                step,
                l.error.clone().unwrap_or_default(),
            ]
        })
        .collect();
    tables.insert(
        0,
        Table {
            name: "levels",
            header: vec![
                "level",
                "denominator",
                "parameter_distance",
                "stabilized_at",
                "cdf_distance_to_previous",
                "error",
            ],
            rows: level_rows,
        },
    );
    tables.push(Table {
        name: "trend",
        header: vec!["delta", "sup_mass_near_breakpoints"],
        rows: trend.iter().map(|(d, m)| vec![format_rational(d), format_rational(m)]).collect(),
    });

    let mut out = Outcome::new(json!({
        "relations": &system,
        "dependentCoordinates": &schedule.dependent,
        "levels": levels,
        "relationsHoldAtEveryLevel": relations_hold.iter().all(|b| *b),
        "collisions": &collisions,
        "massNearBreakpoints": trend
            .iter()
            .map(|(d, m)| json!({ "delta": format_rational(d), "mass": format_rational(m) }))
            .collect::<Vec<_>>(),
        "convergence": &convergence,
        "limitIsLebesgue": is_lebesgue,
        "limit": &limit,
    }));
    out.tables = tables;
    out.plots = plots;
    let budget_levels: Vec<String> =
        seq.iter().filter(|l| budget_exceeded(l)).map(|l| l.denominator.to_string()).collect();
    out.failure = if !budget_levels.is_empty() {
        Some(CliError::Budget(format!(
            "approximation::measureSequence: budget exhausted at denominators {}",
            budget_levels.join(", ")
        )))
    } else if let Some(l) = seq.iter().find(|l| l.error.is_some()) {
        Some(CliError::Verification(format!(
            "approximation::measureSequence: level {} failed: {}",
            l.level,
            l.error.as_ref().expect("checked")
        )))
    } else if mus.len() < 2 {
        Some(CliError::Verification("approximation::detectConvergence: fewer than two measures".into()))
    } else {
        limit
            .as_ref()
            .filter(|l| !l.passed())
            .map(|l| CliError::Verification(format!("approximation::verifyLimitMeasure: {}", l.failing.join("; "))))
    };
    Ok(out)
}

pub fn conjugate(c: &Config) -> Result<Outcome, CliError> {
    c.validate(Needs::Map)?;
    let s = c.itm()?;
    let mut attractor_json = None;
    let mu = match &c.measure {
        Some(mu) => mu.clone(),
        None => {
            let attr = run_attractor(c, &s)?;
            if let Some(f) = attractor_failure(&attr, c) {
                let mut out = Outcome::new(json!({ "attractor": attractor_body(&s, &attr) }));
                out.failure = Some(f);
                return Ok(out);
            }
            attractor_json = Some(attractor_body(&s, &attr));
            attractor_measure_with_budget(&s, &attr, c.budgets.cycle_budget)
                .map_err(core("measures::attractorMeasure"))?
        }
    };
    let data = induce_iem(&s, &mu, c.samples).map_err(core("conjugacy::induceIem"))?;
    let report = verify_iem(&data);
    let in_plateau = data.semi_conjugacy.failures.len() - data.semi_conjugacy.regular_failures;
    let mut out = Outcome::new(json!({
        "attractor": attractor_json,
        "measure": &data.mu,
        "cutMap": &data.cut_map,
        "tau": data.tau.iter().map(format_rational).collect::<Vec<_>>(),
        "iem": &data.iem,
        "verification": &report,
        "semiConjugacy": {
            "samples": data.semi_conjugacy.samples,
            "failuresInPlateaus": in_plateau,
            "regularFailures": data.semi_conjugacy.regular_failures,
            "firstFailures": data.semi_conjugacy.failures.iter().take(20).collect::<Vec<_>>(),
        },
    }));
    if !report.passed() || data.semi_conjugacy.regular_failures > 0 {
        let mut what = Vec::new();
        if !report.isometry {
            what.push(format!("isometry fails on pieces {:?}", report.isometry_failures));
        }
        if !report.lebesgue_invariant {
            what.push(format!("Lebesgue residual {}", format_rational(&report.lebesgue_residual)));
        }
        if !report.injective {
            what.push(format!("image overlap {}", format_rational(&report.overlap_length)));
        }
        if data.semi_conjugacy.regular_failures > 0 {
            what.push(format!("{} semi-conjugacy failures off plateaus", data.semi_conjugacy.regular_failures));
        }
        out.failure = Some(CliError::Verification(format!("conjugacy::verifyIem: {}", what.join("; "))));
    }
    let grid = 1000;
    out.tables.push(Table {
        name: "h",
        header: vec!["x", "h(x)"],
        rows: (0..=grid)
            .map(|k| {
                let x = Rational::new(k.into(), grid.into());
                let hx = data.h.eval(&x);
                vec![format_rational(&x), format_rational(&hx)]
            })
            .collect(),
    });
    let end = |k: usize| data.iem.breakpoints.get(k + 1).cloned().unwrap_or_else(|| Rational::from_integer(1.into()));
    out.tables.push(Table {
        name: "iem",
        header: vec!["piece", "start", "end", "shift", "source_piece"],
        rows: (0..data.iem.breakpoints.len())
            .map(|k| {
                vec![
                    k.to_string(),
                    format_rational(&data.iem.breakpoints[k]),
                    format_rational(&end(k)),
                    format_rational(&data.iem.shifts[k]),
                    data.iem.source_pieces[k].to_string(),
                ]
            })
            .collect(),
    });
    out.plots.push(cdf_plot("h", "h(x) = mu([0, x])", &data.h));
    Ok(out)
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct DefectRow {
    m: usize,
    #[serde(with = "serde_str")]
    end_point: Rational,
    closed: bool,
    #[serde(with = "serde_str")]
    defect: Rational,
    #[serde(with = "serde_str")]
    expected: Rational,
    #[serde(skip_serializing_if = "Option::is_none")]
    cdf_distance_to_reference: Option<String>,
}

pub fn empirical(c: &Config) -> Result<Outcome, CliError> {
    c.validate(Needs::PiecewiseMap)?;
    let t = c.piecewise()?;
    let x0 = c.x0.clone().expect("validated");
    let freq = visit_frequency(t, &x0, &c.orbit_lengths, &c.epsilons).map_err(core("kb-empirical::visitFrequency"))?;
    let reference = c.measure.as_ref().map(Measure::cdf);
    let mut rows = Vec::new();
    let mut largest = None;
    let mut ms = c.orbit_lengths.clone();
    ms.sort_unstable();
    ms.dedup();
    for &m in &ms {
        let e = empirical_measure(t, &x0, m).map_err(core("kb-empirical::empiricalMeasure"))?;
        let defect = e.pushforward_defect(t).map_err(core("kb-empirical::pushforwardDefect"))?;
        rows.push(DefectRow {
            m,
            end_point: e.end.clone(),
            closed: e.end == e.base,
            expected: e.expected_defect(),
            defect,
            cdf_distance_to_reference: reference.as_ref().map(|r| format_rational(&cdf_sup_distance(&e.cdf(), r))),
        });
        largest = Some(e);
    }
    let wandering = if c.radii.is_empty() {
        None
    } else {
        Some(
            wandering_discontinuity_check(t, &c.radii, c.wandering_horizon, c.wandering_samples)
                .map_err(core("kb-empirical::wanderingDiscontinuityCheck"))?,
        )
    };
    let mismatches: Vec<usize> = rows.iter().filter(|r| r.defect != r.expected).map(|r| r.m).collect();
    let largest = largest.expect("orbitLengths validated non-empty");
    let mut out = Outcome::new(json!({
        "discontinuities": t.discontinuities().iter().map(format_rational).collect::<Vec<_>>(),
        "visitFrequency": &freq,
        "defects": &rows,
        "empiricalMeasure": c.emit_atoms.then_some(&largest),
        "distinctPoints": largest.counts().len(),
        "wandering": wandering,
    }));
    if !mismatches.is_empty() {
        out.failure = Some(CliError::Verification(format!(
            "kb-empirical::pushforwardDefect: defect differs from 2/m or 0 at m = {mismatches:?}"
        )));
    }
    out.tables.push(Table {
        name: "frequency",
        header: vec!["m", "eps", "f"],
        rows: freq.rows.iter().map(|r| vec![r.m.to_string(), format_rational(&r.eps), format_rational(&r.f)]).collect(),
    });
    out.tables.push(Table {
        name: "defects",
        header: vec!["m", "defect", "expected", "closed"],
        rows: rows
            .iter()
            .map(|r| {
                vec![r.m.to_string(), format_rational(&r.defect), format_rational(&r.expected), r.closed.to_string()]
            })
            .collect(),
    });
    out.plots.push(cdf_plot("cdf", &format!("empirical distribution, m = {}", largest.m), &largest.cdf()));
    Ok(out)
}

pub fn verify_limit(c: &Config) -> Result<Outcome, CliError> {
    c.validate(Needs::AnyMapAndMeasure)?;
    let mu = c.measure.as_ref().expect("validated");
    let (map, h): (Box<dyn TestableMap>, Vec<CirclePoint>) = match &c.piecewise_map {
        Some(t) => (Box::new(t.clone()), discontinuity_points(t)),
        None => {
            let s = c.itm()?;
            let h = s.breakpoints().to_vec();
            (Box::new(s), h)
        }
    };
    let report = verify_limit_measure(map.as_ref(), mu, &h, &c.mass_tol, c.residual_tol, &c.test_family, &c.deltas);
    let mass_at_h: Rational = h.iter().map(|p| mu.atom_mass_at(p)).fold(Rational::zero(), |a, b| a + b);
    let mut out = Outcome::new(json!({
        "discontinuities": &h,
        "massAtDiscontinuities": format_rational(&mass_at_h),
        "report": &report,
        "passed": report.passed(),
    }));
    if !report.passed() {
        out.failure =
            Some(CliError::Verification(format!("approximation::verifyLimitMeasure: {}", report.failing.join("; "))));
    }
    out.tables.push(Table {
        name: "neighborhood",
        header: vec!["delta", "mass"],
        rows: report
            .neighborhood_masses
            .iter()
            .map(|n| vec![format_rational(&n.delta), format_rational(&n.mass)])
            .collect(),
    });
    out.plots.push(cdf_plot("candidate-cdf", "candidate distribution function", &mu.cdf()));
    Ok(out)
}

/// The discontinuity set read on the circle; a segment endpoint 1 is 0.
fn discontinuity_points(t: &PiecewiseMap) -> Vec<CirclePoint> {
    let mut pts: Vec<CirclePoint> = t.discontinuities().iter().map(|x| CirclePoint::new(x.clone())).collect();
    pts.sort();
    pts.dedup();
    pts
}
