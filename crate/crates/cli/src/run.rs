use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use mather_lp::experiments::{cohomology_sweep, epsilon_sweep, genericity_trial, SamplerConfig};
use mather_lp::flow::{empirical_measure, integrate_el, mean_path_action};
use mather_lp::mather::graph_property_check;
use mather_lp::mather::SUPPORT_TOL;
use mather_lp::{alpha, beta, closedness_residual, discrete_action, minimize_action, DiscreteStateSpace};

use crate::config::{parse_config, Command, Overrides, RunConfig, WORKERS_ENV};
use crate::error::CliError;
use crate::report::{write_json, write_report, CurvePoint, FlowSummary, Manifest, Report, MANIFEST_FILE};

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    pub manifest: Manifest,
}

/// Reads, resolves and executes a config file, writing all artifacts.
pub fn run_config(path: &Path, overrides: &Overrides) -> Result<RunSummary, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let env_workers = std::env::var(WORKERS_ENV).ok();
    let config = parse_config(&text)?.resolve(overrides, env_workers.as_deref())?;
    run(&config)
}

/// Executes an already resolved config.
pub fn run(config: &RunConfig) -> Result<RunSummary, CliError> {
    let dir = config.output_dir();
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;

    let started = Instant::now();
    let report = execute(config)?;
    let wall_time_s = started.elapsed().as_secs_f64();

    let mut files = write_report(&report, &dir)?;
    files.push(MANIFEST_FILE.to_string());
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        command: config.command,
        seed: config.seed(),
        wall_time_s,
        files,
        config: config.clone(),
    };
    write_json(&dir.join(MANIFEST_FILE), &manifest)?;
    Ok(RunSummary {
        output_dir: dir,
        manifest,
    })
}

/// Runs the computation for the config's command.
pub fn execute(config: &RunConfig) -> Result<Report, CliError> {
    let spec = &config.lagrangian;
    let grid = config.grid_config()?;
    let e = &config.experiment;
    // resolve() has checked that every field used below is present
    let missing = |field: &str| CliError::Config(format!("experiment.{field}: missing"));
    Ok(match config.command {
        Command::Minimize => {
            let result = minimize_action(spec, &grid)?;
            let space = DiscreteStateSpace::new(result.grid)?;
            let graph = graph_property_check(&result.measure, &space, SUPPORT_TOL)?;
            Report::Minimize { result, graph, space }
        }
        Command::AlphaCurve => {
            let cs = e.c_grid.as_ref().ok_or_else(|| missing("c-grid"))?;
            let points = cs
                .iter()
                .map(|c| {
                    Ok(CurvePoint {
                        at: c.components().to_vec(),
                        value: alpha(spec, c, &grid)?,
                    })
                })
                .collect::<Result<_, mather_lp::Error>>()?;
            Report::Alpha(points)
        }
        Command::BetaCurve => {
            let rhos = e.rho_grid.as_ref().ok_or_else(|| missing("rho-grid"))?;
            let points = rhos
                .iter()
                .map(|rho| {
                    Ok(CurvePoint {
                        at: rho.clone(),
                        value: beta(spec, rho, &grid)?,
                    })
                })
                .collect::<Result<_, mather_lp::Error>>()?;
            Report::Beta(points)
        }
        Command::Genericity => {
            let sampler = SamplerConfig {
                n_modes: e.n_modes.ok_or_else(|| missing("n-modes"))?,
                amplitude: e.amplitude.ok_or_else(|| missing("amplitude"))?,
            };
            let n = e.n_samples.ok_or_else(|| missing("n-samples"))?;
            Report::Experiment(genericity_trial(
                spec,
                &sampler,
                n,
                config.seed(),
                &grid,
                config.workers(),
            )?)
        }
        Command::CSweep => {
            let v = e.potential.as_ref().ok_or_else(|| missing("potential"))?;
            let cs = e.c_grid.as_ref().ok_or_else(|| missing("c-grid"))?;
            Report::Experiment(cohomology_sweep(spec, v, cs, &grid, config.workers())?)
        }
        Command::EpsSweep => {
            let v = e.potential.as_ref().ok_or_else(|| missing("potential"))?;
            let eps = e.eps_grid.as_ref().ok_or_else(|| missing("eps-grid"))?;
            let cs = e.c_grid.as_ref().ok_or_else(|| missing("c-grid"))?;
            Report::Experiment(epsilon_sweep(spec, v, eps, cs, &grid, config.workers())?)
        }
        Command::ValidateFlow => {
            let x0 = e.x0.as_ref().ok_or_else(|| missing("x0"))?;
            let v0 = e.v0.as_ref().ok_or_else(|| missing("v0"))?;
            let h = e.h_ode.ok_or_else(|| missing("h-ode"))?;
            let t = e.duration.ok_or_else(|| missing("duration"))?;
            let trajectory = integrate_el(spec, x0, v0, h, t)?;
            let space = DiscreteStateSpace::new(grid)?;
            let emp = empirical_measure(&trajectory, &space)?;
            let e0 = trajectory.energy(spec, 0);
            let energy_drift = (0..trajectory.len())
                .map(|i| (trajectory.energy(spec, i) - e0).abs())
                .fold(0.0, f64::max);
            let summary = FlowSummary {
                samples: trajectory.len(),
                clip_fraction: emp.clip_fraction,
                closedness_residual: closedness_residual(&emp.measure, &space)?,
                energy_drift,
                path_action: mean_path_action(spec, &trajectory),
                binned_action: discrete_action(spec, &emp.measure, &space)?,
            };
            Report::Flow {
                summary,
                trajectory,
                measure: emp.measure,
                space,
            }
        }
    })
}
