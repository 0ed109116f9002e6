//! Run configuration: parsing, defaults and per-command validation.

use std::fmt;
use std::path::PathBuf;

use mather_lp::{CohomologyClass, GridConfig, LagrangianSpec, PotentialSpec};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const WORKERS_ENV: &str = "MATHER_LP_WORKERS";
pub const DEFAULT_N_V: usize = 17;
/// Default velocity step; `h = Δx / DEFAULT_DV`.
pub const DEFAULT_DV: f64 = 0.125;
pub const DEFAULT_N_MODES: usize = 5;
pub const DEFAULT_AMPLITUDE: f64 = 1.0;
pub const DEFAULT_H_ODE: f64 = 1e-3;
pub const DEFAULT_OUTPUT_DIR: &str = "mather-lp-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Minimize,
    AlphaCurve,
    BetaCurve,
    Genericity,
    CSweep,
    EpsSweep,
    ValidateFlow,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Minimize => "minimize",
            Command::AlphaCurve => "alpha-curve",
            Command::BetaCurve => "beta-curve",
            Command::Genericity => "genericity",
            Command::CSweep => "c-sweep",
            Command::EpsSweep => "eps-sweep",
            Command::ValidateFlow => "validate-flow",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Grid section of the config. `dim` defaults to the Lagrangian's.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct GridSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    pub n_x: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_v: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct Experiment {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_modes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<PotentialSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c_grid: Option<Vec<CohomologyClass>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_grid: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_grid: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h_ode: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
}

impl Experiment {
    fn present_fields(&self) -> Vec<&'static str> {
        [
            ("n-samples", self.n_samples.is_some()),
            ("n-modes", self.n_modes.is_some()),
            ("amplitude", self.amplitude.is_some()),
            ("potential", self.potential.is_some()),
            ("c-grid", self.c_grid.is_some()),
            ("rho-grid", self.rho_grid.is_some()),
            ("eps-grid", self.eps_grid.is_some()),
            ("x0", self.x0.is_some()),
            ("v0", self.v0.is_some()),
            ("h-ode", self.h_ode.is_some()),
            ("duration", self.duration.is_some()),
        ]
        .into_iter()
        .filter_map(|(name, set)| set.then_some(name))
        .collect()
    }
}

fn allowed_fields(command: Command) -> &'static [&'static str] {
    match command {
        Command::Minimize => &[],
        Command::AlphaCurve => &["c-grid"],
        Command::BetaCurve => &["rho-grid"],
        Command::Genericity => &["n-samples", "n-modes", "amplitude"],
        Command::CSweep => &["potential", "c-grid"],
        Command::EpsSweep => &["potential", "eps-grid", "c-grid"],
        Command::ValidateFlow => &["x0", "v0", "h-ode", "duration"],
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub lagrangian: LagrangianSpec,
    pub grid: GridSection,
    #[serde(default)]
    pub experiment: Experiment,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

/// Command-line values that take precedence over the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub output_dir: Option<PathBuf>,
    pub workers: Option<usize>,
    pub seed: Option<u64>,
}

/// Parses a JSON config. Errors carry the field path and source position.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let config: RunConfig = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        CliError::Config(format!("{path}: {}", e.into_inner()))
    })?;
    de.end().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(config)
}

fn bad(field: &str, msg: impl fmt::Display) -> CliError {
    CliError::Config(format!("{field}: {msg}"))
}

fn positive(field: &str, x: f64) -> Result<f64, CliError> {
    if x > 0.0 && x.is_finite() {
        Ok(x)
    } else {
        Err(bad(field, format!("must be a positive finite number, got {x}")))
    }
}

fn required<T: Clone>(field: &str, value: &Option<T>, command: Command) -> Result<T, CliError> {
    value
        .clone()
        .ok_or_else(|| bad(field, format!("required by command {command}")))
}

fn check_len(field: &str, v: &[f64], dim: usize) -> Result<(), CliError> {
    if v.len() != dim {
        return Err(bad(field, format!("expected {dim} components, got {}", v.len())));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(bad(field, "components must be finite"));
    }
    Ok(())
}

fn nonempty<T>(field: &str, v: &[T]) -> Result<(), CliError> {
    if v.is_empty() {
        return Err(bad(field, "must not be empty"));
    }
    Ok(())
}

impl RunConfig {
    pub fn dim(&self) -> usize {
        self.lagrangian.dim()
    }

    /// The grid described by the (resolved) grid section.
    pub fn grid_config(&self) -> Result<GridConfig, CliError> {
        let g = &self.grid;
        let n_v = g.n_v.unwrap_or(DEFAULT_N_V);
        let h = g.h.unwrap_or(1.0 / (g.n_x as f64 * DEFAULT_DV));
        GridConfig::new(g.dim.unwrap_or(self.dim()), g.n_x, n_v, h).map_err(|e| bad("grid", e))
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn workers(&self) -> usize {
        self.workers.unwrap_or(1)
    }

    pub fn output_dir(&self) -> PathBuf {
        self.output_dir
            .clone()
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUTPUT_DIR))
    }

    /// Applies overrides, fills every default, and validates. The result is
    /// the effective config echoed in the manifest; resolving it again is a
    /// no-op.
    pub fn resolve(mut self, overrides: &Overrides, env_workers: Option<&str>) -> Result<Self, CliError> {
        if let Some(dir) = &overrides.output_dir {
            self.output_dir = Some(dir.clone());
        }
        if let Some(seed) = overrides.seed {
            self.seed = Some(seed);
        }
        if let Some(w) = overrides.workers {
            self.workers = Some(w);
        }
        if self.workers.is_none() {
            self.workers = Some(match env_workers {
                Some(s) => s
                    .trim()
                    .parse()
                    .map_err(|_| bad(WORKERS_ENV, format!("not a worker count: {s:?}")))?,
                None => std::thread::available_parallelism().map_or(1, |n| n.get()),
            });
        }
        if self.workers == Some(0) {
            return Err(bad("workers", "must be at least 1"));
        }
        self.seed.get_or_insert(0);
        self.output_dir.get_or_insert_with(|| PathBuf::from(DEFAULT_OUTPUT_DIR));

        let grid = self.grid_config()?;
        if grid.dim != self.dim() {
            return Err(bad(
                "grid.dim",
                format!("{} does not match lagrangian.dim {}", grid.dim, self.dim()),
            ));
        }
        self.grid = GridSection {
            dim: Some(grid.dim),
            n_x: grid.n_x,
            n_v: Some(grid.n_v),
            h: Some(grid.h),
        };
        self.resolve_experiment(&grid)?;
        Ok(self)
    }

    fn resolve_experiment(&mut self, grid: &GridConfig) -> Result<(), CliError> {
        let command = self.command;
        let dim = self.dim();
        let allowed = allowed_fields(command);
        if let Some(extra) = self
            .experiment
            .present_fields()
            .into_iter()
            .find(|f| !allowed.contains(f))
        {
            return Err(bad(
                &format!("experiment.{extra}"),
                format!("not used by command {command}"),
            ));
        }
        let e = &mut self.experiment;
        let check_classes = |field: &str, cs: &[CohomologyClass]| -> Result<(), CliError> {
            nonempty(field, cs)?;
            cs.iter().try_for_each(|c| check_len(field, c.components(), dim))
        };
        let check_potential = |p: &PotentialSpec| -> Result<(), CliError> {
            if p.dim() != dim {
                return Err(bad(
                    "experiment.potential",
                    format!("dimension {} does not match lagrangian.dim {dim}", p.dim()),
                ));
            }
            Ok(())
        };
        match command {
            Command::Minimize => {}
            Command::AlphaCurve => {
                let cs = required("experiment.c-grid", &e.c_grid, command)?;
                check_classes("experiment.c-grid", &cs)?;
            }
            Command::BetaCurve => {
                let rhos = required("experiment.rho-grid", &e.rho_grid, command)?;
                nonempty("experiment.rho-grid", &rhos)?;
                let v_max = grid.v_max();
                for rho in &rhos {
                    check_len("experiment.rho-grid", rho, dim)?;
                    if rho.iter().any(|r| r.abs() > v_max) {
                        return Err(bad(
                            "experiment.rho-grid",
                            format!("{rho:?} lies outside the velocity range ±{v_max}"),
                        ));
                    }
                }
            }
            Command::Genericity => {
                let n = required("experiment.n-samples", &e.n_samples, command)?;
                if n == 0 {
                    return Err(bad("experiment.n-samples", "must be at least 1"));
                }
                let modes = *e.n_modes.get_or_insert(DEFAULT_N_MODES);
                if modes == 0 {
                    return Err(bad("experiment.n-modes", "must be at least 1"));
                }
                positive("experiment.amplitude", *e.amplitude.get_or_insert(DEFAULT_AMPLITUDE))?;
            }
            Command::CSweep => {
                check_potential(&required("experiment.potential", &e.potential, command)?)?;
                let cs = required("experiment.c-grid", &e.c_grid, command)?;
                check_classes("experiment.c-grid", &cs)?;
            }
            Command::EpsSweep => {
                check_potential(&required("experiment.potential", &e.potential, command)?)?;
                let eps = required("experiment.eps-grid", &e.eps_grid, command)?;
                nonempty("experiment.eps-grid", &eps)?;
                eps.iter().try_for_each(|&x| positive("experiment.eps-grid", x).map(drop))?;
                let cs = e.c_grid.get_or_insert_with(|| vec![CohomologyClass::zero(dim)]);
                check_classes("experiment.c-grid", cs)?;
            }
            Command::ValidateFlow => {
                check_len("experiment.x0", &required("experiment.x0", &e.x0, command)?, dim)?;
                check_len("experiment.v0", &required("experiment.v0", &e.v0, command)?, dim)?;
                positive("experiment.h-ode", *e.h_ode.get_or_insert(DEFAULT_H_ODE))?;
                positive(
                    "experiment.duration",
                    required("experiment.duration", &e.duration, command)?,
                )?;
            }
        }
        Ok(())
    }
}
