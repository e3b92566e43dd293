//! Experiment configuration: parsing, defaults, flag overrides and
//! validation. The resolved form is embedded in every report.

use std::path::Path;

use itm_core::approx::{default_delta_schedule, fibonacci_denominators, Parameters, Relation};
use itm_core::measure::TestFamily;
use itm_core::piecewise::{Domain, PiecewiseMap};
use itm_core::rational::{rat, serde_str, serde_str_opt, serde_str_vec, Rational};
use itm_core::{Error, Itm, Measure};
use num::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Default bound for the denominator schedule.
pub const DEFAULT_MAX_DENOMINATOR: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Budgets {
    pub max_iter: usize,
    pub max_arcs: usize,
    pub cycle_budget: usize,
    /// Steps an arc or a homterval is followed before giving up.
    pub orbit_budget: usize,
}

impl Default for Budgets {
    fn default() -> Self {
        let core = itm_core::approx::MeasureBudgets::default();
        Budgets {
            max_iter: core.max_iter,
            max_arcs: core.max_arcs,
            cycle_budget: core.cycle_budget,
            orbit_budget: 4096,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct Config {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub map: Option<Parameters>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub piecewise_map: Option<PiecewiseMap>,
    /// Candidate or reference measure.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub measure: Option<Measure>,

    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<Parameters>,
    /// Decimal digits to which declared relations must hold at the target.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub precision: Option<u32>,
    pub declared_relations: Vec<Relation>,
    /// Denominator bounds; Fibonacci numbers up to 10^6 when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub denominators: Option<Vec<u64>>,
    /// Keep only the first `levels` denominators.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub levels: Option<usize>,

    pub budgets: Budgets,
    pub depth: usize,
    /// Exact tolerance for residuals and the Cauchy test.
    #[serde(with = "serde_str")]
    pub tol: Rational,
    /// Tolerance for the floating-point functional residual.
    pub residual_tol: f64,
    /// Largest mass allowed near the discontinuity set.
    #[serde(with = "serde_str")]
    pub mass_tol: Rational,
    pub test_family: TestFamily,
    #[serde(with = "serde_str_vec")]
    pub deltas: Vec<Rational>,

    pub seed: u64,
    /// Grid size of the sampled semi-conjugacy check.
    pub samples: usize,
    pub recurrence_samples: usize,
    /// Horizon of the recurrence search; `q^2` capped at 10^6 when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub recurrence_horizon: Option<usize>,

    #[serde(with = "serde_str_opt", skip_serializing_if = "Option::is_none")]
    pub x0: Option<Rational>,
    pub orbit_lengths: Vec<usize>,
    #[serde(with = "serde_str_vec")]
    pub epsilons: Vec<Rational>,
    /// Ball radii of the wandering check; skipped when empty.
    #[serde(with = "serde_str_vec")]
    pub radii: Vec<Rational>,
    pub wandering_horizon: usize,
    pub wandering_samples: usize,
    /// Include the atoms of the longest empirical measure in the report.
    pub emit_atoms: bool,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            map: None,
            piecewise_map: None,
            measure: None,
            target: None,
            precision: None,
            declared_relations: Vec::new(),
            denominators: None,
            levels: None,
            budgets: Budgets::default(),
            depth: 16,
            tol: Rational::zero(),
            residual_tol: 1e-3,
            mass_tol: rat(1, 1_000_000),
            test_family: TestFamily::Trigonometric { degree: 8 },
            deltas: default_delta_schedule(),
            seed: 0,
            samples: itm_core::conjugacy::DEFAULT_SAMPLES,
            recurrence_samples: 100,
            recurrence_horizon: None,
            x0: None,
            orbit_lengths: vec![10, 100, 1000, 10_000],
            epsilons: vec![rat(1, 10), rat(1, 100), rat(1, 1000)],
            radii: Vec::new(),
            wandering_horizon: 1000,
            wandering_samples: 16,
            emit_atoms: false,
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub max_iter: Option<usize>,
    pub max_arcs: Option<usize>,
    pub depth: Option<usize>,
    pub tol: Option<Rational>,
    pub levels: Option<usize>,
}

/// Which inputs a command needs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Needs {
    Nothing,
    Map,
    Target,
    PiecewiseMap,
    AnyMapAndMeasure,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(v) = o.seed {
            self.seed = v;
        }
        if let Some(v) = o.max_iter {
            self.budgets.max_iter = v;
        }
        if let Some(v) = o.max_arcs {
            self.budgets.max_arcs = v;
        }
        if let Some(v) = o.depth {
            self.depth = v;
        }
        if let Some(v) = &o.tol {
            self.tol = v.clone();
        }
        if let Some(v) = o.levels {
            self.levels = Some(v);
        }
    }

    /// Fills in the denominator schedule so the report records it.
    pub fn resolve(&mut self) {
        if self.target.is_some() {
            let mut d = self.denominators.take().unwrap_or_else(|| fibonacci_denominators(DEFAULT_MAX_DENOMINATOR));
            if let Some(k) = self.levels {
                d.truncate(k);
            }
            self.denominators = Some(d);
        }
    }

    pub fn itm(&self) -> Result<Itm, CliError> {
        let p = self.map.as_ref().ok_or_else(|| CliError::Config("missing field `map`".into()))?;
        p.to_itm().map_err(|e| violation("map", e))
    }

    pub fn target(&self) -> Result<(&Parameters, Itm), CliError> {
        let p = self.target.as_ref().ok_or_else(|| CliError::Config("missing field `target`".into()))?;
        Ok((p, p.to_itm().map_err(|e| violation("target", e))?))
    }

    pub fn piecewise(&self) -> Result<&PiecewiseMap, CliError> {
        self.piecewise_map.as_ref().ok_or_else(|| CliError::Config("missing field `piecewiseMap`".into()))
    }

    /// Checks every present field, then the fields `needs` requires.
    pub fn validate(&self, needs: Needs) -> Result<Vec<&'static str>, CliError> {
        let mut checked = Vec::new();
        if self.map.is_some() {
            self.itm()?;
            checked.push("map");
        }
        if self.target.is_some() {
            let (_, t) = self.target()?;
            for (k, r) in self.declared_relations.iter().enumerate() {
                if r.i >= t.n() || r.j >= t.n() || r.l.len() != t.n() {
                    return Err(CliError::Config(format!(
                        "declaredRelations: invalid relation at index {k}: needs i, j < {n} and {n} coefficients",
                        n = t.n()
                    )));
                }
            }
            checked.push("target");
        } else if !self.declared_relations.is_empty() {
            return Err(CliError::Config("declaredRelations given without a target".into()));
        }
        if let Some(d) = &self.denominators {
            if let Some(k) = d.iter().position(|q| *q == 0) {
                return Err(CliError::Config(format!("denominators: invalid bound at index {k}: must be positive")));
            }
            if d.is_empty() && self.target.is_some() {
                return Err(CliError::Config("denominators: empty schedule".into()));
            }
        }
        if self.piecewise_map.is_some() {
            checked.push("piecewiseMap");
        }
        if self.measure.is_some() {
            checked.push("measure");
        }
        if self.tol.is_negative() {
            return Err(CliError::Config("tol: must be non-negative".into()));
        }
        if self.mass_tol.is_negative() || self.residual_tol.is_nan() || self.residual_tol < 0.0 {
            return Err(CliError::Config("massTol and residualTol must be non-negative".into()));
        }
        positive_list("deltas", &self.deltas)?;
        positive_list("epsilons", &self.epsilons)?;
        positive_list("radii", &self.radii)?;
        if let Some(k) = self.orbit_lengths.iter().position(|m| *m == 0) {
            return Err(CliError::Config(format!("orbitLengths: invalid length at index {k}: must be positive")));
        }
        if let (Some(x0), Some(t)) = (&self.x0, &self.piecewise_map) {
            let hi_ok = match t.domain() {
                Domain::Circle => x0 < &Rational::one(),
                Domain::Segment => x0 <= &Rational::one(),
            };
            if x0.is_negative() || !hi_ok {
                return Err(CliError::Config("x0: outside the domain of piecewiseMap".into()));
            }
        }
        match needs {
            Needs::Nothing => {}
            Needs::Map => {
                self.itm()?;
            }
            Needs::Target => {
                self.target()?;
            }
            Needs::PiecewiseMap => {
                self.piecewise()?;
                if self.x0.is_none() {
                    return Err(CliError::Config("missing field `x0`".into()));
                }
            }
            Needs::AnyMapAndMeasure => {
                if self.map.is_none() && self.piecewise_map.is_none() {
                    return Err(CliError::Config("missing field `map` or `piecewiseMap`".into()));
                }
                if self.measure.is_none() {
                    return Err(CliError::Config("missing field `measure`".into()));
                }
            }
        }
        Ok(checked)
    }
}

fn positive_list(field: &str, xs: &[Rational]) -> Result<(), CliError> {
    match xs.iter().position(|x| !x.is_positive()) {
        Some(k) => Err(CliError::Config(format!("{field}: invalid value at index {k}: must be positive"))),
        None => Ok(()),
    }
}

fn violation(field: &str, e: Error) -> CliError {
    match e {
        Error::InvalidMap { index, reason } => {
            CliError::Config(format!("{field}: invalid map at index {index}: {reason}"))
        }
        other => CliError::Config(format!("{field}: {other}")),
    }
}
