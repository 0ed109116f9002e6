//! Minimizing measures of the discrete action over closed measures.
//!
//! Conventions:
//!
//! * `α(c) = −min_μ ∫(L + c·v) dμ`, convex in `c` with `α(0) = −min ∫L dμ`;
//! * `β(ρ) = min { ∫L dμ : μ closed, ∫v dμ = ρ }`, so that
//!   `β(ρ) + α(c) ≥ −c·ρ` with equality at dual pairs.
//!
//! Face dimensions are measured on position marginals: two optimal measures
//! with the same marginal act identically on potentials `f(x)`.

use serde::{Deserialize, Serialize};

use crate::domain::{CohomologyClass, LagrangianSpec, PotentialSpec};
use crate::error::{check_dim, Error, Result};
use crate::holonomy::{
    action_objective, build_closed_measure_constraints, DiscreteMeasure, DiscreteStateSpace,
    GridConfig,
};
use crate::lp::{
    probe_optimal_face, solve_lp, LinearProgram, LpStatus, OptimalSolution, Projection,
    DEFAULT_PROBE_SEED, DEFAULT_RANK_TOL,
};

/// Cells with weight above this are reported as support.
pub const SUPPORT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatherOptions {
    /// `n_v` may grow up to this multiple of the configured value.
    pub n_v_cap_factor: usize,
    pub rank_tol: f64,
    /// Defaults to `n_positions + 1`.
    pub n_probes: Option<usize>,
    pub probe_seed: u64,
}

impl Default for MatherOptions {
    fn default() -> Self {
        Self {
            n_v_cap_factor: 4,
            rank_tol: DEFAULT_RANK_TOL,
            n_probes: None,
            probe_seed: DEFAULT_PROBE_SEED,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct SupportCell {
    pub cell: usize,
    pub x_index: Vec<usize>,
    pub v_index: Vec<i64>,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct MatherResult {
    pub min_action: f64,
    /// An extremal (basic) minimizer.
    pub measure: DiscreteMeasure,
    pub face_dimension: usize,
    pub rotation_vector: Vec<f64>,
    pub support: Vec<SupportCell>,
    pub truncation_hit: bool,
    /// Grid actually solved on, after any velocity-range escalation.
    pub grid: GridConfig,
    pub escalations: usize,
    pub duality_gap: f64,
    pub closedness_residual: f64,
}

/// A solved action program together with the grid it lives on.
#[derive(Debug, Clone)]
pub struct SolvedProgram {
    pub space: DiscreteStateSpace,
    pub lp: LinearProgram,
    pub solution: OptimalSolution,
    pub escalations: usize,
}

impl SolvedProgram {
    pub fn truncation_hit(&self) -> bool {
        support_touches_bound(&self.solution.x, &self.space)
    }
}

fn support_touches_bound(x: &[f64], space: &DiscreteStateSpace) -> bool {
    x.iter()
        .enumerate()
        .any(|(cell, &w)| w > SUPPORT_TOL && space.on_velocity_boundary(space.velocity_of(cell)))
}

/// Solves `min objective(space)·μ` over closed measures, doubling the
/// velocity range while the optimal support touches it.
pub fn solve_with_escalation<F>(config: &GridConfig, cap_factor: usize, objective: F) -> Result<SolvedProgram>
where
    F: Fn(&DiscreteStateSpace) -> Result<Vec<f64>>,
{
    let cap = config.n_v * cap_factor.max(1);
    let mut grid = *config;
    let mut escalations = 0;
    loop {
        let space = DiscreteStateSpace::new(grid)?;
        let lp = LinearProgram::new(objective(&space)?, build_closed_measure_constraints(&space))?;
        let solution = solve_lp(&lp).require_optimal()?;
        if !support_touches_bound(&solution.x, &space) {
            return Ok(SolvedProgram {
                space,
                lp,
                solution,
                escalations,
            });
        }
        let next = grid.with_doubled_velocity_range();
        if next.n_v > cap {
            return Err(Error::TruncationExceeded { n_v: grid.n_v, cap });
        }
        grid = next;
        escalations += 1;
    }
}

fn face_dimension_of(program: &SolvedProgram, opts: &MatherOptions) -> Result<usize> {
    let projection = Projection::position_marginal(&program.space);
    let n_probes = opts.n_probes.unwrap_or(program.space.n_positions() + 1);
    Ok(probe_optimal_face(
        &program.lp,
        &program.solution,
        &projection,
        n_probes,
        opts.rank_tol,
        opts.probe_seed,
    )?
    .dimension)
}

pub fn minimize_action(spec: &LagrangianSpec, config: &GridConfig) -> Result<MatherResult> {
    minimize_action_with(spec, config, &MatherOptions::default())
}

pub fn minimize_action_with(
    spec: &LagrangianSpec,
    config: &GridConfig,
    opts: &MatherOptions,
) -> Result<MatherResult> {
    check_dim(config.dim, spec.dim())?;
    let program = solve_with_escalation(config, opts.n_v_cap_factor, |space| action_objective(spec, space))?;
    let face_dimension = face_dimension_of(&program, opts)?;
    let SolvedProgram {
        space,
        solution,
        escalations,
        ..
    } = program;
    let measure = solution.measure()?;
    let support = measure
        .support(SUPPORT_TOL)
        .into_iter()
        .map(|cell| SupportCell {
            cell,
            x_index: space.position_multi_index(space.position_of(cell)).to_vec(),
            v_index: space.velocity_offsets(space.velocity_of(cell)).to_vec(),
            weight: measure.weights()[cell],
        })
        .collect();
    Ok(MatherResult {
        min_action: solution.value,
        rotation_vector: rotation_vector(&measure, &space)?,
        truncation_hit: support_touches_bound(measure.weights(), &space),
        closedness_residual: crate::holonomy::closedness_residual(&measure, &space)?,
        duality_gap: solution.duality_gap(),
        grid: *space.config(),
        face_dimension,
        support,
        measure,
        escalations,
    })
}

/// `Σ v·μ`.
pub fn rotation_vector(measure: &DiscreteMeasure, space: &DiscreteStateSpace) -> Result<Vec<f64>> {
    space.check_measure(measure)?;
    let mut rho = vec![0.0; space.dim()];
    for (cell, &w) in measure.weights().iter().enumerate() {
        for (r, v) in rho.iter_mut().zip(space.v(cell)) {
            *r += v * w;
        }
    }
    Ok(rho)
}

/// `α(c) = −min ∫(L + c·v) dμ`.
pub fn alpha(spec: &LagrangianSpec, c: &CohomologyClass, config: &GridConfig) -> Result<f64> {
    let shifted = spec.shift_by_cohomology(c)?;
    check_dim(config.dim, spec.dim())?;
    let program = solve_with_escalation(config, MatherOptions::default().n_v_cap_factor, |space| {
        action_objective(&shifted, space)
    })?;
    Ok(-program.solution.value)
}

/// Minimal action among closed measures with rotation vector `rho`, on the
/// given grid (no escalation).
pub fn beta(spec: &LagrangianSpec, rho: &[f64], config: &GridConfig) -> Result<f64> {
    check_dim(config.dim, spec.dim())?;
    check_dim(spec.dim(), rho.len())?;
    let v_max = config.v_max();
    if rho.iter().any(|r| !r.is_finite() || r.abs() > v_max * (1.0 + 1e-12)) {
        return Err(Error::RotationOutOfRange(rho.to_vec()));
    }
    let space = DiscreteStateSpace::new(*config)?;
    let mut constraints = build_closed_measure_constraints(&space);
    for (axis, &target) in rho.iter().enumerate() {
        let entries: Vec<(usize, f64)> = (0..space.n_cells())
            .map(|cell| (cell, space.v(cell)[axis]))
            .collect();
        constraints = constraints.with_row(&entries, target)?;
    }
    let lp = LinearProgram::new(action_objective(spec, &space)?, constraints)?;
    let solution = solve_lp(&lp);
    match solution.status {
        LpStatus::Optimal => Ok(solution.value),
        LpStatus::Infeasible => Err(Error::RotationOutOfRange(rho.to_vec())),
        other => Err(Error::Solver(other)),
    }
}

/// Dimension of the subdifferential of `A(f) = sup_μ ∫(f − L) dμ` at `f`,
/// measured as the affine dimension of the hull of optimal position marginals.
pub fn subdifferential_dimension(
    spec: &LagrangianSpec,
    f: &PotentialSpec,
    config: &GridConfig,
) -> Result<usize> {
    subdifferential_dimension_with(spec, f, config, &MatherOptions::default())
}

pub fn subdifferential_dimension_with(
    spec: &LagrangianSpec,
    f: &PotentialSpec,
    config: &GridConfig,
    opts: &MatherOptions,
) -> Result<usize> {
    check_dim(config.dim, spec.dim())?;
    check_dim(spec.dim(), f.dim())?;
    // sup ∫(f − L) dμ is solved as min ∫−(f − L) dμ.
    let program = solve_with_escalation(config, opts.n_v_cap_factor, |space| {
        Ok((0..space.n_cells())
            .map(|cell| -(f.value(space.x(cell)) - spec.value(space.x(cell), space.v(cell))))
            .collect())
    })?;
    face_dimension_of(&program, opts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct GraphReport {
    pub max_velocities_per_position: usize,
    pub offending_positions: Vec<usize>,
    pub passed: bool,
}

pub const DEFAULT_MERGE_RADIUS: i64 = 1;

pub fn graph_property_check(measure: &DiscreteMeasure, space: &DiscreteStateSpace, tol: f64) -> Result<GraphReport> {
    graph_property_check_with_radius(measure, space, tol, DEFAULT_MERGE_RADIUS)
}

/// Counts, per position, the clusters of occupied velocity cells, where
/// cells within `merge_radius` (sup-norm on velocity indices) share a cluster.
pub fn graph_property_check_with_radius(
    measure: &DiscreteMeasure,
    space: &DiscreteStateSpace,
    tol: f64,
    merge_radius: i64,
) -> Result<GraphReport> {
    space.check_measure(measure)?;
    let mut max_clusters = 0;
    let mut offending = Vec::new();
    for p in 0..space.n_positions() {
        let occupied: Vec<&[i64]> = (0..space.n_velocities())
            .filter(|&q| measure.weights()[space.cell(p, q)] > tol)
            .map(|q| space.velocity_offsets(q))
            .collect();
        let clusters = count_clusters(&occupied, merge_radius);
        max_clusters = max_clusters.max(clusters);
        if clusters > 1 {
            offending.push(p);
        }
    }
    Ok(GraphReport {
        max_velocities_per_position: max_clusters,
        passed: max_clusters <= 1,
        offending_positions: offending,
    })
}

fn count_clusters(points: &[&[i64]], radius: i64) -> usize {
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..n {
        for j in i + 1..n {
            let close = points[i].iter().zip(points[j]).all(|(a, b)| (a - b).abs() <= radius);
            if close {
                let (ri, rj) = (root(&mut parent, i), root(&mut parent, j));
                parent[ri] = rj;
            }
        }
    }
    (0..n).filter(|&i| root(&mut parent, i) == i).count()
}
