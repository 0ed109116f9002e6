//! Artifact writers: result JSON, CSV tables and the run manifest.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use mather_lp::experiments::ExperimentReport;
use mather_lp::flow::Trajectory;
use mather_lp::mather::GraphReport;
use mather_lp::{DiscreteMeasure, DiscreteStateSpace, MatherResult};
use serde::{Deserialize, Serialize};

use crate::config::{Command, RunConfig};
use crate::error::CliError;

pub const RESULT_FILE: &str = "result.json";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const MEASURE_FILE: &str = "measure.csv";
pub const ALPHA_FILE: &str = "alpha.csv";
pub const BETA_FILE: &str = "beta.csv";
pub const TRIALS_FILE: &str = "trials.csv";
pub const TRAJECTORY_FILE: &str = "trajectory.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct CurvePoint {
    pub at: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct FlowSummary {
    pub samples: usize,
    pub clip_fraction: f64,
    pub closedness_residual: f64,
    /// Largest `|E(t) − E(0)|` along the trajectory.
    pub energy_drift: f64,
    pub path_action: f64,
    pub binned_action: f64,
}

/// Everything a command produces, ready to be written.
#[derive(Debug, Clone)]
pub enum Report {
    Minimize {
        result: MatherResult,
        graph: GraphReport,
        space: DiscreteStateSpace,
    },
    Alpha(Vec<CurvePoint>),
    Beta(Vec<CurvePoint>),
    Experiment(ExperimentReport),
    Flow {
        summary: FlowSummary,
        trajectory: Trajectory,
        measure: DiscreteMeasure,
        space: DiscreteStateSpace,
    },
}

#[derive(Serialize)]
#[serde(rename_all = "kebab-case")]
struct MinimizeJson<'a> {
    command: Command,
    result: &'a MatherResult,
    graph_check: &'a GraphReport,
}

#[derive(Serialize)]
#[serde(rename_all = "kebab-case")]
struct CurveJson<'a> {
    command: Command,
    points: &'a [CurvePoint],
}

#[derive(Serialize)]
#[serde(rename_all = "kebab-case")]
struct ExperimentJson<'a> {
    command: &'a str,
    report: &'a ExperimentReport,
}

#[derive(Serialize)]
#[serde(rename_all = "kebab-case")]
struct FlowJson<'a> {
    command: Command,
    flow: &'a FlowSummary,
}

/// Written last; lists every other artifact of the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Manifest {
    pub version: String,
    pub command: Command,
    pub seed: u64,
    pub wall_time_s: f64,
    pub files: Vec<String>,
    pub config: RunConfig,
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, value)
        .map_err(|e| CliError::io(path, e.into()))?;
    writeln!(out)
        .and_then(|_| out.flush())
        .map_err(|e| CliError::io(path, e))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>, CliError> {
    Ok(csv::Writer::from_writer(create(path)?))
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> CliError + '_ {
    move |e| CliError::io(path, e.into())
}

/// Shortest representation that parses back to the same `f64`.
fn num(x: f64) -> String {
    format!("{x:?}")
}

fn indexed_header(name: &str, dim: usize) -> Vec<String> {
    if dim == 1 {
        vec![name.to_string()]
    } else {
        (1..=dim).map(|k| format!("{name}{k}")).collect()
    }
}

/// One row per cell of positive weight, in cell order: position indices,
/// signed velocity indices, weight.
pub fn write_measure_csv(path: &Path, measure: &DiscreteMeasure, space: &DiscreteStateSpace) -> Result<(), CliError> {
    let d = space.dim();
    let mut w = csv_writer(path)?;
    let mut header = indexed_header("x-index", d);
    header.extend(indexed_header("v-index", d));
    header.push("weight".into());
    w.write_record(&header).map_err(csv_err(path))?;
    for (cell, &weight) in measure.weights().iter().enumerate() {
        if weight <= 0.0 {
            continue;
        }
        let mut row: Vec<String> = space
            .position_multi_index(space.position_of(cell))
            .iter()
            .map(|i| i.to_string())
            .collect();
        row.extend(space.velocity_offsets(space.velocity_of(cell)).iter().map(|j| j.to_string()));
        row.push(num(weight));
        w.write_record(&row).map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Two columns for d = 1 (`c,alpha`); one argument column per component otherwise.
pub fn write_curve_csv(path: &Path, arg: &str, value: &str, points: &[CurvePoint]) -> Result<(), CliError> {
    let dim = points.first().map_or(1, |p| p.at.len());
    let mut w = csv_writer(path)?;
    let mut header = indexed_header(arg, dim);
    header.push(value.into());
    w.write_record(&header).map_err(csv_err(path))?;
    for p in points {
        let mut row: Vec<String> = p.at.iter().map(|&x| num(x)).collect();
        row.push(num(p.value));
        w.write_record(&row).map_err(csv_err(path))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// One row per face entry; a failed trial gets one row with its error.
pub fn write_trials_csv(path: &Path, report: &ExperimentReport) -> Result<(), CliError> {
    let dim = report
        .trials
        .iter()
        .flat_map(|t| &t.entries)
        .map(|e| e.c.len())
        .next()
        .unwrap_or(1);
    let mut w = csv_writer(path)?;
    let mut header = vec!["trial".to_string(), "seed".to_string()];
    header.extend(indexed_header("c", dim));
    header.extend(
        ["epsilon", "face-dimension", "min-action", "graph-check-pass", "error"].map(String::from),
    );
    w.write_record(&header).map_err(csv_err(path))?;
    for t in &report.trials {
        let lead = [t.index.to_string(), t.seed.to_string()];
        if t.entries.is_empty() {
            let mut row = lead.to_vec();
            row.extend(std::iter::repeat(String::new()).take(dim + 4));
            row.push(t.error.clone().unwrap_or_default());
            w.write_record(&row).map_err(csv_err(path))?;
        }
        for e in &t.entries {
            let mut row = lead.to_vec();
            row.extend(e.c.iter().map(|&x| num(x)));
            row.extend([
                num(e.epsilon),
                e.face_dimension.to_string(),
                num(e.min_action),
                e.graph_check_pass.to_string(),
                String::new(),
            ]);
            w.write_record(&row).map_err(csv_err(path))?;
        }
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Writes the command's artifacts into `dir` and returns their file names.
/// Experiment timings are left out so that `result.json` depends only on
/// the config.
pub fn write_report(report: &Report, dir: &Path) -> Result<Vec<String>, CliError> {
    let result = dir.join(RESULT_FILE);
    let files: &[&str] = match report {
        Report::Minimize { result: r, graph, space } => {
            write_json(
                &result,
                &MinimizeJson {
                    command: Command::Minimize,
                    result: r,
                    graph_check: graph,
                },
            )?;
            write_measure_csv(&dir.join(MEASURE_FILE), &r.measure, space)?;
            &[RESULT_FILE, MEASURE_FILE]
        }
        Report::Alpha(points) => {
            write_json(
                &result,
                &CurveJson {
                    command: Command::AlphaCurve,
                    points,
                },
            )?;
            write_curve_csv(&dir.join(ALPHA_FILE), "c", "alpha", points)?;
            &[RESULT_FILE, ALPHA_FILE]
        }
        Report::Beta(points) => {
            write_json(
                &result,
                &CurveJson {
                    command: Command::BetaCurve,
                    points,
                },
            )?;
            write_curve_csv(&dir.join(BETA_FILE), "rho", "beta", points)?;
            &[RESULT_FILE, BETA_FILE]
        }
        Report::Experiment(r) => {
            write_json(
                &result,
                &ExperimentJson {
                    command: &r.kind,
                    report: &r.without_timing(),
                },
            )?;
            write_trials_csv(&dir.join(TRIALS_FILE), r)?;
            &[RESULT_FILE, TRIALS_FILE]
        }
        Report::Flow {
            summary,
            trajectory,
            measure,
            space,
        } => {
            write_json(
                &result,
                &FlowJson {
                    command: Command::ValidateFlow,
                    flow: summary,
                },
            )?;
            let path = dir.join(TRAJECTORY_FILE);
            let mut out = create(&path)?;
            trajectory
                .write_csv(&mut out)
                .and_then(|_| out.flush())
                .map_err(|e| CliError::io(&path, e))?;
            write_measure_csv(&dir.join(MEASURE_FILE), measure, space)?;
            &[RESULT_FILE, TRAJECTORY_FILE, MEASURE_FILE]
        }
    };
    Ok(files.iter().map(|s| s.to_string()).collect())
}
