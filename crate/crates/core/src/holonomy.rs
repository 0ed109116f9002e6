//! Discretized phase space and the polytope of discrete closed measures.
//!
//! Positions live on the uniform grid `{i·Δx}` of `T^d` with `Δx = 1/n_x`.
//! Velocities are `j·Δx/h` for `|j| ≤ (n_v−1)/2`, so one step of length `h`
//! moves a cell exactly `j` grid points and the transport map is an index
//! permutation. A measure on cells is closed when every position cell has
//! equal outflow and inflow under that transport.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::domain::LagrangianSpec;
use crate::error::{check_dim, Error, Result};

/// Weights above `-NEG_WEIGHT_TOL` are clamped to zero when a measure is built.
pub const NEG_WEIGHT_TOL: f64 = 1e-12;
pub const MASS_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct GridConfig {
    pub dim: usize,
    pub n_x: usize,
    pub n_v: usize,
    pub h: f64,
}

impl GridConfig {
    pub fn new(dim: usize, n_x: usize, n_v: usize, h: f64) -> Result<Self> {
        let config = Self { dim, n_x, n_v, h };
        config.validate()?;
        Ok(config)
    }

    /// Grid whose velocity step is `dv`, i.e. `h = Δx / dv`.
    pub fn with_velocity_step(dim: usize, n_x: usize, n_v: usize, dv: f64) -> Result<Self> {
        if !(dv > 0.0 && dv.is_finite()) {
            return Err(Error::InvalidArgument(format!("velocity step must be positive, got {dv}")));
        }
        Self::new(dim, n_x, n_v, 1.0 / (n_x as f64 * dv))
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim != 1 && self.dim != 2 {
            return Err(Error::InvalidArgument(format!(
                "grid dimension must be 1 or 2, got {}",
                self.dim
            )));
        }
        if self.n_x < 2 {
            return Err(Error::InvalidArgument(format!("n-x must be at least 2, got {}", self.n_x)));
        }
        if self.n_v % 2 == 0 {
            return Err(Error::InvalidArgument(format!("n-v must be odd, got {}", self.n_v)));
        }
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::InvalidArgument(format!("h must be positive, got {}", self.h)));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        1.0 / self.n_x as f64
    }

    pub fn dv(&self) -> f64 {
        self.dx() / self.h
    }

    /// Largest velocity index `(n_v − 1)/2`.
    pub fn j_max(&self) -> i64 {
        (self.n_v as i64 - 1) / 2
    }

    pub fn v_max(&self) -> f64 {
        self.j_max() as f64 * self.dv()
    }

    /// Same grid with the velocity bound doubled.
    pub fn with_doubled_velocity_range(&self) -> Self {
        Self {
            n_v: if self.n_v > 1 { 2 * self.n_v - 1 } else { 3 },
            ..*self
        }
    }

    /// Velocity index of `v`, when `v` is a grid velocity up to `tol` cells.
    pub fn velocity_index_of(&self, v: f64, tol: f64) -> Option<i64> {
        let j = v / self.dv();
        let r = j.round();
        ((j - r).abs() <= tol).then_some(r as i64)
    }
}

/// The cells `(x, v)` of the truncated grid and their transport successors.
///
/// Cell `k` has position index `k / n_vel` and velocity index `k % n_vel`;
/// multi-indices are flattened row-major.
#[derive(Debug, Clone)]
pub struct DiscreteStateSpace {
    config: GridConfig,
    n_pos: usize,
    n_vel: usize,
    pos_coords: Vec<f64>,
    pos_index: Vec<usize>,
    vel_values: Vec<f64>,
    vel_offsets: Vec<i64>,
    successor: Vec<usize>,
}

impl DiscreteStateSpace {
    pub fn new(config: GridConfig) -> Result<Self> {
        config.validate()?;
        let d = config.dim;
        let n_pos = config.n_x.pow(d as u32);
        let n_vel = config.n_v.pow(d as u32);
        let dx = config.dx();
        let dv = config.dv();
        let j_max = config.j_max();

        let mut pos_index = Vec::with_capacity(n_pos * d);
        let mut pos_coords = Vec::with_capacity(n_pos * d);
        for p in 0..n_pos {
            for i in unflatten(p, config.n_x, d) {
                pos_index.push(i);
                pos_coords.push(i as f64 * dx);
            }
        }
        let mut vel_offsets = Vec::with_capacity(n_vel * d);
        let mut vel_values = Vec::with_capacity(n_vel * d);
        for q in 0..n_vel {
            for i in unflatten(q, config.n_v, d) {
                let j = i as i64 - j_max;
                vel_offsets.push(j);
                vel_values.push(j as f64 * dv);
            }
        }

        let n = config.n_x as i64;
        let mut successor = Vec::with_capacity(n_pos * n_vel);
        for p in 0..n_pos {
            for q in 0..n_vel {
                let mut flat = 0usize;
                for axis in 0..d {
                    let i = pos_index[p * d + axis] as i64 + vel_offsets[q * d + axis];
                    flat = flat * config.n_x + i.rem_euclid(n) as usize;
                }
                successor.push(flat);
            }
        }

        Ok(Self {
            config,
            n_pos,
            n_vel,
            pos_coords,
            pos_index,
            vel_values,
            vel_offsets,
            successor,
        })
    }

    pub fn config(&self) -> &GridConfig {
        &self.config
    }

    pub fn dim(&self) -> usize {
        self.config.dim
    }

    pub fn n_cells(&self) -> usize {
        self.n_pos * self.n_vel
    }

    pub fn n_positions(&self) -> usize {
        self.n_pos
    }

    pub fn n_velocities(&self) -> usize {
        self.n_vel
    }

    pub fn cell(&self, position: usize, velocity: usize) -> usize {
        position * self.n_vel + velocity
    }

    pub fn position_of(&self, cell: usize) -> usize {
        cell / self.n_vel
    }

    pub fn velocity_of(&self, cell: usize) -> usize {
        cell % self.n_vel
    }

    /// Coordinates of a position cell in `[0, 1)^d`.
    pub fn position_coords(&self, position: usize) -> &[f64] {
        let d = self.dim();
        &self.pos_coords[position * d..(position + 1) * d]
    }

    pub fn position_multi_index(&self, position: usize) -> &[usize] {
        let d = self.dim();
        &self.pos_index[position * d..(position + 1) * d]
    }

    pub fn velocity_value(&self, velocity: usize) -> &[f64] {
        let d = self.dim();
        &self.vel_values[velocity * d..(velocity + 1) * d]
    }

    /// Signed velocity multi-index `j`, so that `v = j·Δv`.
    pub fn velocity_offsets(&self, velocity: usize) -> &[i64] {
        let d = self.dim();
        &self.vel_offsets[velocity * d..(velocity + 1) * d]
    }

    pub fn x(&self, cell: usize) -> &[f64] {
        self.position_coords(self.position_of(cell))
    }

    pub fn v(&self, cell: usize) -> &[f64] {
        self.velocity_value(self.velocity_of(cell))
    }

    /// Position index of `x + h·v (mod 1)`.
    pub fn successor(&self, cell: usize) -> usize {
        self.successor[cell]
    }

    /// Velocity index whose offsets are `j` (no bounds wrap).
    pub fn velocity_index(&self, j: &[i64]) -> Option<usize> {
        let j_max = self.config.j_max();
        let mut flat = 0usize;
        for &ji in j {
            if ji.abs() > j_max {
                return None;
            }
            flat = flat * self.config.n_v + (ji + j_max) as usize;
        }
        Some(flat)
    }

    /// Position index of the grid point nearest to `x` (reduced mod 1).
    pub fn nearest_position(&self, x: &[f64]) -> usize {
        let n = self.config.n_x as i64;
        x.iter().fold(0usize, |flat, &xi| {
            let i = (xi * n as f64).round() as i64;
            flat * self.config.n_x + i.rem_euclid(n) as usize
        })
    }

    /// Whether the velocity has some component at the truncation bound.
    pub fn on_velocity_boundary(&self, velocity: usize) -> bool {
        let j_max = self.config.j_max();
        j_max > 0 && self.velocity_offsets(velocity).iter().any(|j| j.abs() == j_max)
    }

    pub(crate) fn check_measure(&self, measure: &DiscreteMeasure) -> Result<()> {
        check_dim(self.n_cells(), measure.len())
    }
}

fn unflatten(mut flat: usize, base: usize, d: usize) -> Vec<usize> {
    let mut out = vec![0; d];
    for slot in out.iter_mut().rev() {
        *slot = flat % base;
        flat /= base;
    }
    out
}

pub fn build_state_space(config: GridConfig) -> Result<DiscreteStateSpace> {
    DiscreteStateSpace::new(config)
}

/// Nonnegative cell weights of total mass one.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct DiscreteMeasure {
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    /// Clamps weights in `[−1e−12, 0)` to zero and checks normalization.
    pub fn new(mut weights: Vec<f64>) -> Result<Self> {
        for (i, w) in weights.iter_mut().enumerate() {
            if !w.is_finite() || *w < -NEG_WEIGHT_TOL {
                return Err(Error::InvalidArgument(format!("weight {i} is {w}")));
            }
            if *w < 0.0 {
                *w = 0.0;
            }
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidArgument(format!("total mass is {total}, expected 1")));
        }
        Ok(Self { weights })
    }

    pub fn dirac(n_cells: usize, cell: usize) -> Self {
        let mut weights = vec![0.0; n_cells];
        weights[cell] = 1.0;
        Self { weights }
    }

    /// Equal weights on the given (distinct) cells.
    pub fn uniform_on(n_cells: usize, cells: &[usize]) -> Result<Self> {
        if cells.is_empty() {
            return Err(Error::InvalidArgument("empty support".into()));
        }
        let mut weights = vec![0.0; n_cells];
        let w = 1.0 / cells.len() as f64;
        for &c in cells {
            weights[c] += w;
        }
        Self::new(weights)
    }

    /// `(1 − t)·self + t·other`.
    pub fn mixture(&self, other: &DiscreteMeasure, t: f64) -> Result<Self> {
        check_dim(self.len(), other.len())?;
        Self::new(
            self.weights
                .iter()
                .zip(&other.weights)
                .map(|(a, b)| (1.0 - t) * a + t * b)
                .collect(),
        )
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Cells with weight above `tol`, in index order.
    pub fn support(&self, tol: f64) -> Vec<usize> {
        self.weights
            .iter()
            .enumerate()
            .filter(|(_, &w)| w > tol)
            .map(|(i, _)| i)
            .collect()
    }

    /// Mass per position cell.
    pub fn position_marginal(&self, space: &DiscreteStateSpace) -> Vec<f64> {
        let mut marginal = vec![0.0; space.n_positions()];
        for (cell, w) in self.weights.iter().enumerate() {
            marginal[space.position_of(cell)] += w;
        }
        marginal
    }
}

/// Column-major sparse matrix; columns are short (at most three entries for
/// the closed-measure system).
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_rows: usize,
    cols: Vec<Vec<(usize, f64)>>,
}

impl SparseMatrix {
    pub fn new(n_rows: usize, cols: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        for col in &cols {
            if let Some(&(r, _)) = col.iter().find(|(r, _)| *r >= n_rows) {
                return Err(Error::InvalidArgument(format!("row index {r} out of range")));
            }
        }
        Ok(Self { n_rows, cols })
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Result<Self> {
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut cols = vec![Vec::new(); n_cols];
        for (r, row) in rows.iter().enumerate() {
            check_dim(n_cols, row.len())?;
            for (c, &value) in row.iter().enumerate() {
                if value != 0.0 {
                    cols[c].push((r, value));
                }
            }
        }
        Self::new(rows.len(), cols)
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.cols.len()
    }

    pub fn col(&self, j: usize) -> &[(usize, f64)] {
        &self.cols[j]
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_rows];
        for (col, &xj) in self.cols.iter().zip(x) {
            for &(r, a) in col {
                out[r] += a * xj;
            }
        }
        out
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut rows = vec![vec![0.0; self.n_cols()]; self.n_rows];
        for (c, col) in self.cols.iter().enumerate() {
            for &(r, a) in col {
                rows[r][c] += a;
            }
        }
        rows
    }

    /// `(row, col, value)` entries sorted by row, then column.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        let mut out: Vec<_> = self
            .cols
            .iter()
            .enumerate()
            .flat_map(|(c, col)| col.iter().map(move |&(r, a)| (r, c, a)))
            .collect();
        out.sort_by_key(|&(r, c, _)| (r, c));
        out
    }

    fn push_row(&mut self, entries: &[(usize, f64)]) -> Result<()> {
        let r = self.n_rows;
        for &(c, a) in entries {
            if c >= self.n_cols() {
                return Err(Error::InvalidArgument(format!("column index {c} out of range")));
            }
            if a != 0.0 {
                self.cols[c].push((r, a));
            }
        }
        self.n_rows += 1;
        Ok(())
    }
}

/// `A μ = b, μ ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSystem {
    matrix: SparseMatrix,
    rhs: Vec<f64>,
}

impl ConstraintSystem {
    pub fn new(matrix: SparseMatrix, rhs: Vec<f64>) -> Result<Self> {
        check_dim(matrix.n_rows(), rhs.len())?;
        Ok(Self { matrix, rhs })
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    pub fn rhs(&self) -> &[f64] {
        &self.rhs
    }

    pub fn n_rows(&self) -> usize {
        self.matrix.n_rows()
    }

    pub fn n_vars(&self) -> usize {
        self.matrix.n_cols()
    }

    /// Appends the row `Σ coef·x_col = rhs`.
    pub fn with_row(mut self, entries: &[(usize, f64)], rhs: f64) -> Result<Self> {
        self.matrix.push_row(entries)?;
        self.rhs.push(rhs);
        Ok(self)
    }

    /// `max_r |(A x − b)_r|`.
    pub fn equality_residual(&self, x: &[f64]) -> f64 {
        self.matrix
            .mul_vec(x)
            .iter()
            .zip(&self.rhs)
            .map(|(ax, b)| (ax - b).abs())
            .fold(0.0, f64::max)
    }

    /// Writes the plain-text export: a `rows cols nnz` header, the triplets,
    /// then one `rhs row value` line per row.
    pub fn write_triplets<W: Write>(&self, mut out: W) -> io::Result<()> {
        let triplets = self.matrix.triplets();
        writeln!(out, "{} {} {}", self.n_rows(), self.n_vars(), triplets.len())?;
        for (r, c, a) in triplets {
            writeln!(out, "{r} {c} {a:?}")?;
        }
        for (r, b) in self.rhs.iter().enumerate() {
            writeln!(out, "rhs {r} {b:?}")?;
        }
        Ok(())
    }
}

/// Balance rows (one per position: outflow minus inflow) followed by the
/// normalization row. Balance rows sum to zero, so the system has rank at
/// most `n_positions`.
pub fn build_closed_measure_constraints(space: &DiscreteStateSpace) -> ConstraintSystem {
    let n_pos = space.n_positions();
    let cols = (0..space.n_cells())
        .map(|cell| {
            let from = space.position_of(cell);
            let to = space.successor(cell);
            let mut col = Vec::with_capacity(3);
            if from != to {
                col.push((from, 1.0));
                col.push((to, -1.0));
            }
            col.push((n_pos, 1.0));
            col
        })
        .collect();
    let mut rhs = vec![0.0; n_pos + 1];
    rhs[n_pos] = 1.0;
    ConstraintSystem {
        matrix: SparseMatrix { n_rows: n_pos + 1, cols },
        rhs,
    }
}

/// Per-position `outflow − inflow`.
pub fn balance_violations(measure: &DiscreteMeasure, space: &DiscreteStateSpace) -> Result<Vec<f64>> {
    space.check_measure(measure)?;
    let mut balance = vec![0.0; space.n_positions()];
    for (cell, &w) in measure.weights().iter().enumerate() {
        balance[space.position_of(cell)] += w;
        balance[space.successor(cell)] -= w;
    }
    Ok(balance)
}

/// `max_x |outflow(x) − inflow(x)| + |Σμ − 1|`; zero exactly on the polytope.
pub fn closedness_residual(measure: &DiscreteMeasure, space: &DiscreteStateSpace) -> Result<f64> {
    let worst = balance_violations(measure, space)?
        .into_iter()
        .map(f64::abs)
        .fold(0.0, f64::max);
    Ok(worst + (measure.total_mass() - 1.0).abs())
}

/// `L` evaluated at every cell; the LP objective of the action.
pub fn action_objective(spec: &LagrangianSpec, space: &DiscreteStateSpace) -> Result<Vec<f64>> {
    check_dim(space.dim(), spec.dim())?;
    Ok((0..space.n_cells())
        .map(|cell| spec.value(space.x(cell), space.v(cell)))
        .collect())
}

/// `Σ_cells L(x, v)·μ(x, v)`.
pub fn discrete_action(
    spec: &LagrangianSpec,
    measure: &DiscreteMeasure,
    space: &DiscreteStateSpace,
) -> Result<f64> {
    space.check_measure(measure)?;
    Ok(action_objective(spec, space)?
        .iter()
        .zip(measure.weights())
        .map(|(l, w)| l * w)
        .sum())
}
