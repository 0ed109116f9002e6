//! Affine dimension of the (projected) optimal face of a linear program.
//!
//! For any optimal dual, a feasible point is optimal iff it vanishes on every
//! column with positive reduced cost, so dropping those columns leaves a
//! program whose feasible set is exactly the optimal face. Each probe draws a
//! random direction orthogonal to the span found so far and minimizes and
//! maximizes it over the face; a zero width certifies the span is complete
//! (with probability one over the direction).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{solve_lp, LinearProgram, OptimalSolution};
use crate::error::{check_dim, Error, Result};
use crate::holonomy::{ConstraintSystem, DiscreteStateSpace, SparseMatrix};

pub const DEFAULT_RANK_TOL: f64 = 1e-7;
/// Reduced-cost slack (relative to the objective scale) admitted into the face.
pub const FACE_VALUE_TOL: f64 = 1e-9;
pub const DEFAULT_PROBE_SEED: u64 = 0x6d61_7468_6572;

/// Linear map from LP variables to a report space, stored per variable.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    out_dim: usize,
    columns: Vec<Vec<(usize, f64)>>,
}

impl Projection {
    pub fn new(out_dim: usize, columns: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        if columns.iter().flatten().any(|&(k, _)| k >= out_dim) {
            return Err(Error::InvalidArgument("projection index out of range".into()));
        }
        Ok(Self { out_dim, columns })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            out_dim: n,
            columns: (0..n).map(|j| vec![(j, 1.0)]).collect(),
        }
    }

    /// Cell weights summed per position cell.
    pub fn position_marginal(space: &DiscreteStateSpace) -> Self {
        Self {
            out_dim: space.n_positions(),
            columns: (0..space.n_cells())
                .map(|cell| vec![(space.position_of(cell), 1.0)])
                .collect(),
        }
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn n_vars(&self) -> usize {
        self.columns.len()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.out_dim];
        for (col, &xj) in self.columns.iter().zip(x) {
            for &(k, a) in col {
                out[k] += a * xj;
            }
        }
        out
    }

    fn pull_back(&self, w: &[f64], j: usize) -> f64 {
        self.columns[j].iter().map(|&(k, a)| w[k] * a).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaceProbe {
    pub dimension: usize,
    /// Projected optimal vertices, starting with the primary solution.
    pub points: Vec<Vec<f64>>,
    pub vertices: Vec<Vec<f64>>,
    pub probes_used: usize,
    /// Whether a zero-width probe confirmed the span (or it filled the space).
    pub certified: bool,
}

/// Rank of `points[i] − points[0]` by Gaussian elimination with complete
/// pivoting; pivots at or below `tol` count as zero.
pub fn affine_rank(points: &[Vec<f64>], tol: f64) -> usize {
    let Some(origin) = points.first() else {
        return 0;
    };
    let mut rows: Vec<Vec<f64>> = points[1..]
        .iter()
        .map(|p| p.iter().zip(origin).map(|(a, b)| a - b).collect())
        .collect();
    let n_rows = rows.len();
    let n_cols = origin.len();
    let mut col_perm: Vec<usize> = (0..n_cols).collect();
    let mut rank = 0;
    while rank < n_rows.min(n_cols) {
        let mut best = (rank, rank, 0.0f64);
        for (i, row) in rows.iter().enumerate().skip(rank) {
            for (jj, &j) in col_perm.iter().enumerate().skip(rank) {
                if row[j].abs() > best.2 {
                    best = (i, jj, row[j].abs());
                }
            }
        }
        if best.2 <= tol {
            break;
        }
        rows.swap(rank, best.0);
        col_perm.swap(rank, best.1);
        let pc = col_perm[rank];
        let pivot_row = rows[rank].clone();
        for row in rows.iter_mut().skip(rank + 1) {
            let f = row[pc] / pivot_row[pc];
            if f != 0.0 {
                for (r, p) in row.iter_mut().zip(&pivot_row) {
                    *r -= f * p;
                }
            }
        }
        rank += 1;
    }
    rank
}

fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) {
    // Two passes of modified Gram–Schmidt.
    for _ in 0..2 {
        for q in basis {
            let dot: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
            for (a, b) in v.iter_mut().zip(q) {
                *a -= dot * b;
            }
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(a, b)| a * b).sum()
}

/// Probes the optimal face of `lp` around an optimal `solution`.
///
/// At most `n_probes` directions are tried; `n_probes ≥ out_dim + 1`
/// suffices for a certified answer.
pub fn probe_optimal_face(
    lp: &LinearProgram,
    solution: &OptimalSolution,
    projection: &Projection,
    n_probes: usize,
    tol: f64,
    seed: u64,
) -> Result<FaceProbe> {
    check_dim(lp.n_vars(), projection.n_vars())?;
    if !solution.is_optimal() {
        return Err(Error::Solver(solution.status));
    }
    check_dim(lp.n_vars(), solution.x.len())?;

    let scale = lp.objective().iter().fold(1.0f64, |acc, c| acc.max(c.abs()));
    let face_cols: Vec<usize> = (0..lp.n_vars())
        .filter(|&j| solution.reduced_costs[j] <= FACE_VALUE_TOL * scale)
        .collect();
    let matrix = lp.constraints().matrix();
    let face_system = ConstraintSystem::new(
        SparseMatrix::new(
            matrix.n_rows(),
            face_cols.iter().map(|&j| matrix.col(j).to_vec()).collect(),
        )?,
        lp.constraints().rhs().to_vec(),
    )?;

    let p0 = projection.apply(&solution.x);
    let mut points = vec![p0.clone()];
    let mut vertices = vec![solution.x.clone()];
    let mut span: Vec<Vec<f64>> = Vec::new();
    let mut certified = false;
    let mut probes_used = 0;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut admit = |x: Vec<f64>, span: &mut Vec<Vec<f64>>, points: &mut Vec<Vec<f64>>| {
        let p = projection.apply(&x);
        let mut d: Vec<f64> = p.iter().zip(&p0).map(|(a, b)| a - b).collect();
        orthogonalize(&mut d, span);
        let len = norm(&d);
        if len > tol {
            d.iter_mut().for_each(|a| *a /= len);
            span.push(d);
            points.push(p);
            vertices.push(x);
        }
    };

    for _ in 0..n_probes {
        let mut w: Vec<f64> = (0..projection.out_dim())
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        orthogonalize(&mut w, &span);
        let len = norm(&w);
        if len < 1e-12 {
            certified = true;
            break;
        }
        w.iter_mut().for_each(|a| *a /= len);
        probes_used += 1;

        let cost: Vec<f64> = face_cols.iter().map(|&j| projection.pull_back(&w, j)).collect();
        let lo = solve_face(&face_system, cost.clone())?;
        let hi = solve_face(&face_system, cost.iter().map(|c| -c).collect())?;
        let lift = |xs: Vec<f64>| {
            let mut x = vec![0.0; lp.n_vars()];
            for (&j, v) in face_cols.iter().zip(xs) {
                x[j] = v;
            }
            x
        };
        let (x_lo, x_hi) = (lift(lo), lift(hi));
        let s_lo = dot(&w, &projection.apply(&x_lo));
        let s_hi = dot(&w, &projection.apply(&x_hi));
        if s_hi - s_lo <= tol {
            certified = true;
            break;
        }
        admit(x_lo, &mut span, &mut points);
        admit(x_hi, &mut span, &mut points);
    }

    Ok(FaceProbe {
        dimension: affine_rank(&points, tol),
        points,
        vertices,
        probes_used,
        certified,
    })
}

fn solve_face(system: &ConstraintSystem, cost: Vec<f64>) -> Result<Vec<f64>> {
    let lp = LinearProgram::new(cost, system.clone())?;
    Ok(solve_lp(&lp).require_optimal()?.x)
}

/// Solves `lp` and returns the affine dimension of the projection of its
/// optimal face. The answer is a lower bound, exact once `n_probes` exceeds
/// the report-space dimension.
pub fn optimal_face_dimension(
    lp: &LinearProgram,
    projection: &Projection,
    n_probes: usize,
    tol: f64,
) -> Result<usize> {
    let solution = solve_lp(lp).require_optimal()?;
    Ok(probe_optimal_face(lp, &solution, projection, n_probes, tol, DEFAULT_PROBE_SEED)?.dimension)
}
