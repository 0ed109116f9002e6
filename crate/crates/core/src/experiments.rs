//! Multiplicity statistics for families of Lagrangians.
//!
//! A Lagrangian "has more than one minimizing measure" here when the optimal
//! face, projected to position marginals, has dimension at least one.
//! Trials run on a dedicated thread pool; reports list trials in index order
//! regardless of completion order, so a report is a pure function of its
//! inputs apart from `wall_time_s`.

use std::time::Instant;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{sample_random_potential, CohomologyClass, LagrangianSpec, PotentialSpec};
use crate::error::{check_dim, Error, Result};
use crate::holonomy::{DiscreteStateSpace, GridConfig};
use crate::mather::{graph_property_check, minimize_action, SUPPORT_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct SamplerConfig {
    pub n_modes: usize,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct FaceEntry {
    pub c: Vec<f64>,
    pub epsilon: f64,
    pub face_dimension: usize,
    pub min_action: f64,
    pub graph_check_pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct TrialRecord {
    pub index: usize,
    pub seed: u64,
    pub potential: PotentialSpec,
    pub entries: Vec<FaceEntry>,
    /// `None` when the trial failed.
    pub max_face_dimension: Option<usize>,
    pub graph_check_pass: Option<bool>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct DimensionFraction {
    pub at_least: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct Aggregate {
    pub n_trials: usize,
    pub n_failed: usize,
    /// Fractions of successful trials with `max_face_dimension ≥ k`.
    pub fractions: Vec<DimensionFraction>,
    pub max_face_dimension: Option<usize>,
    pub graph_pass_fraction: f64,
    pub wall_time_s: f64,
}

impl Aggregate {
    pub fn from_trials(trials: &[TrialRecord], wall_time_s: f64) -> Self {
        let dims: Vec<usize> = trials.iter().filter_map(|t| t.max_face_dimension).collect();
        let ok = dims.len();
        let max = dims.iter().copied().max();
        let fraction = |count: usize| if ok == 0 { 0.0 } else { count as f64 / ok as f64 };
        let fractions = (1..=max.unwrap_or(0).max(1))
            .map(|k| DimensionFraction {
                at_least: k,
                fraction: fraction(dims.iter().filter(|&&d| d >= k).count()),
            })
            .collect();
        let passes = trials.iter().filter(|t| t.graph_check_pass == Some(true)).count();
        Self {
            n_trials: trials.len(),
            n_failed: trials.len() - ok,
            fractions,
            max_face_dimension: max,
            graph_pass_fraction: fraction(passes),
            wall_time_s,
        }
    }

    /// Fraction of successful trials with dimension at least `k` (`k ≥ 1`).
    pub fn fraction_at_least(&self, k: usize) -> f64 {
        self.fractions
            .iter()
            .find(|f| f.at_least == k)
            .map_or(0.0, |f| f.fraction)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct ExperimentReport {
    pub kind: String,
    pub trials: Vec<TrialRecord>,
    pub aggregate: Aggregate,
}

impl ExperimentReport {
    fn new(kind: &str, trials: Vec<TrialRecord>, started: Instant) -> Self {
        let aggregate = Aggregate::from_trials(&trials, started.elapsed().as_secs_f64());
        Self {
            kind: kind.to_string(),
            trials,
            aggregate,
        }
    }

    /// Whether the stored aggregate matches one recomputed from the trials.
    pub fn aggregate_consistent(&self) -> bool {
        Aggregate::from_trials(&self.trials, self.aggregate.wall_time_s) == self.aggregate
    }

    /// Copy with the timing field zeroed, for reproducibility comparisons.
    pub fn without_timing(&self) -> Self {
        let mut out = self.clone();
        out.aggregate.wall_time_s = 0.0;
        out
    }
}

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))
}

fn face_entry(spec: &LagrangianSpec, c: &CohomologyClass, epsilon: f64, config: &GridConfig) -> Result<FaceEntry> {
    let shifted = spec.shift_by_cohomology(c)?;
    let res = minimize_action(&shifted, config)?;
    let space = DiscreteStateSpace::new(res.grid)?;
    let graph = graph_property_check(&res.measure, &space, SUPPORT_TOL)?;
    Ok(FaceEntry {
        c: c.components().to_vec(),
        epsilon,
        face_dimension: res.face_dimension,
        min_action: res.min_action,
        graph_check_pass: graph.passed,
    })
}

fn finish_trial(index: usize, seed: u64, potential: PotentialSpec, entries: Result<Vec<FaceEntry>>) -> TrialRecord {
    match entries {
        Ok(entries) => TrialRecord {
            index,
            seed,
            potential,
            max_face_dimension: entries.iter().map(|e| e.face_dimension).max(),
            graph_check_pass: Some(entries.iter().all(|e| e.graph_check_pass)),
            entries,
            error: None,
        },
        Err(e) => TrialRecord {
            index,
            seed,
            potential,
            entries: Vec::new(),
            max_face_dimension: None,
            graph_check_pass: None,
            error: Some(e.to_string()),
        },
    }
}

/// Per-trial seeds drawn from one stream seeded by `seed`.
pub fn trial_seeds(seed: u64, n: usize) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.next_u64()).collect()
}

/// Samples `n_samples` potentials `V` and measures the face dimension of
/// `L − V` at `c = 0` for each.
pub fn genericity_trial(
    base: &LagrangianSpec,
    sampler: &SamplerConfig,
    n_samples: usize,
    seed: u64,
    config: &GridConfig,
    workers: usize,
) -> Result<ExperimentReport> {
    if n_samples == 0 {
        return Err(Error::InvalidArgument("n-samples must be at least 1".into()));
    }
    check_dim(config.dim, base.dim())?;
    let started = Instant::now();
    let seeds = trial_seeds(seed, n_samples);
    let potentials = seeds
        .iter()
        .map(|&s| sample_random_potential(base.dim(), s, sampler.n_modes, sampler.amplitude))
        .collect::<Result<Vec<_>>>()?;
    let zero = CohomologyClass::zero(base.dim());
    let trials = pool(workers)?.install(|| {
        potentials
            .into_par_iter()
            .zip(seeds.par_iter())
            .enumerate()
            .map(|(index, (v, &s))| {
                let entries = base
                    .perturb_by_potential(&v, 1.0)
                    .and_then(|spec| face_entry(&spec, &zero, 1.0, config))
                    .map(|e| vec![e]);
                finish_trial(index, s, v, entries)
            })
            .collect()
    });
    Ok(ExperimentReport::new("genericity", trials, started))
}

/// Face dimension of `L − V + c` for each `c` in the grid.
pub fn cohomology_sweep(
    base: &LagrangianSpec,
    v: &PotentialSpec,
    c_grid: &[CohomologyClass],
    config: &GridConfig,
    workers: usize,
) -> Result<ExperimentReport> {
    let started = Instant::now();
    let entries = sweep(base, v, &[1.0], c_grid, config, workers)?;
    Ok(ExperimentReport::new(
        "c-sweep",
        vec![finish_trial(0, 0, v.clone(), entries)],
        started,
    ))
}

/// Face dimension of `L − εV + c` over the product of the two grids.
pub fn epsilon_sweep(
    base: &LagrangianSpec,
    v: &PotentialSpec,
    eps_grid: &[f64],
    c_grid: &[CohomologyClass],
    config: &GridConfig,
    workers: usize,
) -> Result<ExperimentReport> {
    if eps_grid.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
        return Err(Error::InvalidArgument("epsilon values must be positive".into()));
    }
    let started = Instant::now();
    let entries = sweep(base, v, eps_grid, c_grid, config, workers)?;
    Ok(ExperimentReport::new(
        "eps-sweep",
        vec![finish_trial(0, 0, v.clone(), entries)],
        started,
    ))
}

fn sweep(
    base: &LagrangianSpec,
    v: &PotentialSpec,
    eps_grid: &[f64],
    c_grid: &[CohomologyClass],
    config: &GridConfig,
    workers: usize,
) -> Result<Result<Vec<FaceEntry>>> {
    if eps_grid.is_empty() || c_grid.is_empty() {
        return Err(Error::InvalidArgument("sweep grids must be nonempty".into()));
    }
    check_dim(config.dim, base.dim())?;
    for c in c_grid {
        check_dim(base.dim(), c.dim())?;
    }
    let jobs: Vec<(f64, &CohomologyClass)> = eps_grid
        .iter()
        .flat_map(|&e| c_grid.iter().map(move |c| (e, c)))
        .collect();
    Ok(pool(workers)?.install(|| {
        jobs.into_par_iter()
            .map(|(eps, c)| {
                let spec = base.perturb_by_potential(v, eps)?;
                face_entry(&spec, c, eps, config)
            })
            .collect()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n_x: usize) -> GridConfig {
        GridConfig::with_velocity_step(1, n_x, 9, 0.125).unwrap()
    }

    #[test]
    fn degenerate_sample_is_fully_symmetric() {
        let free = LagrangianSpec::free(1).unwrap();
        let sampler = SamplerConfig {
            n_modes: 3,
            amplitude: 0.0,
        };
        let r = genericity_trial(&free, &sampler, 1, 9, &grid(16), 1).unwrap();
        assert_eq!(r.trials[0].max_face_dimension, Some(15));
        assert!(r.aggregate_consistent());
    }

    #[test]
    fn reports_are_reproducible_and_ordered() {
        let free = LagrangianSpec::free(1).unwrap();
        let sampler = SamplerConfig {
            n_modes: 3,
            amplitude: 1.0,
        };
        let a = genericity_trial(&free, &sampler, 12, 42, &grid(16), 3).unwrap();
        let b = genericity_trial(&free, &sampler, 12, 42, &grid(16), 1).unwrap();
        assert_eq!(a.without_timing(), b.without_timing());
        assert!(a.trials.iter().enumerate().all(|(i, t)| t.index == i));
        assert!(a.aggregate_consistent());
        assert_eq!(a.aggregate.fraction_at_least(1), 0.0);
    }

    #[test]
    fn empty_trial_list_aggregates() {
        let agg = Aggregate::from_trials(&[], 0.0);
        assert_eq!(agg.n_trials, 0);
        assert_eq!(agg.max_face_dimension, None);
        assert_eq!(agg.fraction_at_least(1), 0.0);
    }

    #[test]
    fn failed_trials_are_counted_not_aggregated() {
        let failed = finish_trial(0, 1, PotentialSpec::zero(1), Err(Error::Solver(crate::lp::LpStatus::Infeasible)));
        let agg = Aggregate::from_trials(&[failed], 0.0);
        assert_eq!(agg.n_failed, 1);
        assert_eq!(agg.fraction_at_least(1), 0.0);
    }

    #[test]
    fn sweep_preconditions() {
        let free = LagrangianSpec::free(1).unwrap();
        let v = PotentialSpec::cosine(&[1], 1.0).unwrap();
        assert!(cohomology_sweep(&free, &v, &[], &grid(8), 1).is_err());
        assert!(epsilon_sweep(&free, &v, &[0.0], &[CohomologyClass::zero(1)], &grid(8), 1).is_err());
        assert!(epsilon_sweep(&free, &v, &[], &[CohomologyClass::zero(1)], &grid(8), 1).is_err());
    }
}
