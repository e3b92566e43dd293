//! Report assembly and artifact emission.

use std::path::Path;

use itm_core::rational::{format_rational, to_f64};
use itm_core::{Cdf, Measure};
use serde::Serialize;
use serde_json::Value;

use crate::config::Config;
use crate::error::CliError;
use crate::svg;

pub struct Table {
    pub name: &'static str,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

pub struct Plot {
    pub name: &'static str,
    pub svg: String,
}

/// What a command produced; `failure` carries a budget or verification
/// failure that is reported after the artifacts are written.
pub struct Outcome {
    pub result: Value,
    pub tables: Vec<Table>,
    pub plots: Vec<Plot>,
    pub failure: Option<CliError>,
}

impl Outcome {
    pub fn new(result: impl Serialize) -> Self {
        Outcome { result: to_value(result), tables: Vec::new(), plots: Vec::new(), failure: None }
    }
}

pub fn to_value(x: impl Serialize) -> Value {
    serde_json::to_value(x).expect("reports serialize to JSON")
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct Status {
    exit_code: u8,
    #[serde(skip_serializing_if = "Option::is_none")]
    message: Option<String>,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct Report<'a> {
    tool: &'static str,
    version: &'static str,
    core_version: &'static str,
    command: &'a str,
    config: &'a Config,
    result: &'a Value,
    status: Status,
}

pub fn render(command: &str, config: &Config, outcome: &Outcome) -> String {
    let report = Report {
        tool: "itm",
        version: env!("CARGO_PKG_VERSION"),
        core_version: itm_core::VERSION,
        command,
        config,
        result: &outcome.result,
        status: Status {
            exit_code: outcome.failure.as_ref().map_or(0, CliError::exit_code),
            message: outcome.failure.as_ref().map(ToString::to_string),
        },
    };
    let mut s = serde_json::to_string_pretty(&report).expect("reports serialize to JSON");
    s.push('\n');
    s
}

/// Writes `<command>.json`, one CSV per table and, with `plot`, one SVG per
/// plot into `dir`.
pub fn write_artifacts(dir: &Path, command: &str, json: &str, outcome: &Outcome, plot: bool) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Output(format!("{}: {e}", dir.display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    std::fs::write(dir.join(format!("{command}.json")), json).map_err(io)?;
    for t in &outcome.tables {
        let path = dir.join(format!("{command}-{}.csv", t.name));
        let mut w = csv::Writer::from_path(&path).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
        let csv_err = |e: csv::Error| CliError::Output(format!("{}: {e}", path.display()));
        w.write_record(&t.header).map_err(csv_err)?;
        for row in &t.rows {
            w.write_record(row).map_err(csv_err)?;
        }
        w.flush().map_err(io)?;
    }
    if plot {
        for p in &outcome.plots {
            std::fs::write(dir.join(format!("{command}-{}.svg", p.name)), &p.svg).map_err(io)?;
        }
    }
    Ok(())
}

/// `x, F(x)` at the breaklist points.
pub fn cdf_table(cdf: &Cdf) -> Table {
    Table {
        name: "cdf",
        header: vec!["x", "F(x)"],
        rows: cdf.table().iter().map(|(x, f)| vec![format_rational(x), format_rational(f)]).collect(),
    }
}

/// CDF graph with exact vertical jumps at atoms.
pub fn cdf_plot(name: &'static str, title: &str, cdf: &Cdf) -> Plot {
    let mut points = vec![(0.0, 0.0)];
    for x in cdf.breaklist() {
        points.push((to_f64(&x), to_f64(&cdf.eval_left(&x))));
        points.push((to_f64(&x), to_f64(&cdf.eval(&x))));
    }
    points.push((1.0, to_f64(cdf.total())));
    Plot { name, svg: svg::curve(title, &points) }
}

pub fn density_plot(title: &str, mu: &Measure) -> Plot {
    let segs: Vec<(f64, f64, f64)> =
        mu.density_segments().iter().map(|(a, b, w)| (to_f64(a), to_f64(b), to_f64(w))).collect();
    Plot { name: "density", svg: svg::histogram(title, &segs) }
}
