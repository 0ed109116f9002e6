//! Linear programs over constraint systems `A x = b, x ≥ 0`.

mod face;
mod lu;
mod simplex;
mod vertices;

use std::fmt;
use std::io::{self, Write};
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::holonomy::{ConstraintSystem, DiscreteMeasure};

pub use face::{
    affine_rank, optimal_face_dimension, probe_optimal_face, FaceProbe, Projection,
    DEFAULT_PROBE_SEED, DEFAULT_RANK_TOL, FACE_VALUE_TOL,
};
pub use vertices::{enumerate_vertices_bruteforce, BRUTE_FORCE_LIMIT};

pub const FEASIBILITY_TOL: f64 = 1e-10;
pub const DUALITY_GAP_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

impl fmt::Display for LpStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LpStatus::Optimal => "optimal",
            LpStatus::Infeasible => "infeasible",
            LpStatus::Unbounded => "unbounded",
            LpStatus::IterationLimit => "iteration-limit",
        })
    }
}

/// `min objective·x` subject to a constraint system.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    objective: Vec<f64>,
    constraints: ConstraintSystem,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>, constraints: ConstraintSystem) -> Result<Self> {
        check_dim(constraints.n_vars(), objective.len())?;
        if objective.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument("objective has non-finite entries".into()));
        }
        Ok(Self {
            objective,
            constraints,
        })
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn constraints(&self) -> &ConstraintSystem {
        &self.constraints
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn value_at(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, x)| c * x).sum()
    }

    /// Same constraints, different objective.
    pub fn with_objective(&self, objective: Vec<f64>) -> Result<Self> {
        Self::new(objective, self.constraints.clone())
    }

    /// Triplet export of the constraints followed by `obj col value` lines.
    pub fn write_dump<W: Write>(&self, mut out: W) -> io::Result<()> {
        self.constraints.write_triplets(&mut out)?;
        for (j, c) in self.objective.iter().enumerate() {
            writeln!(out, "obj {j} {c:?}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimalSolution {
    pub status: LpStatus,
    /// Primal objective; NaN unless optimal.
    pub value: f64,
    /// Basic solution; empty unless optimal.
    pub x: Vec<f64>,
    pub duals: Vec<f64>,
    /// `b·y`; NaN unless optimal.
    pub dual_value: f64,
    pub reduced_costs: Vec<f64>,
    pub basis: Vec<usize>,
    pub iterations: usize,
}

impl OptimalSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    pub fn duality_gap(&self) -> f64 {
        (self.value - self.dual_value).abs()
    }

    /// Turns a non-optimal status into [`Error::Solver`].
    pub fn require_optimal(self) -> Result<Self> {
        if self.is_optimal() {
            Ok(self)
        } else {
            Err(Error::Solver(self.status))
        }
    }

    pub fn measure(&self) -> Result<DiscreteMeasure> {
        if !self.is_optimal() {
            return Err(Error::Solver(self.status));
        }
        DiscreteMeasure::new(self.x.clone())
    }
}

static SOLVES: AtomicU64 = AtomicU64::new(0);
static MAX_GAP_BITS: AtomicU64 = AtomicU64::new(0);
static MAX_RESIDUAL_BITS: AtomicU64 = AtomicU64::new(0);

/// Process-wide certificate counters over every optimal solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub optimal_solves: u64,
    pub max_duality_gap: f64,
    pub max_primal_residual: f64,
}

pub fn solve_stats() -> SolveStats {
    SolveStats {
        optimal_solves: SOLVES.load(Ordering::SeqCst),
        max_duality_gap: f64::from_bits(MAX_GAP_BITS.load(Ordering::SeqCst)),
        max_primal_residual: f64::from_bits(MAX_RESIDUAL_BITS.load(Ordering::SeqCst)),
    }
}

pub fn reset_solve_stats() {
    SOLVES.store(0, Ordering::SeqCst);
    MAX_GAP_BITS.store(0, Ordering::SeqCst);
    MAX_RESIDUAL_BITS.store(0, Ordering::SeqCst);
}

fn record(gap: f64, residual: f64) {
    SOLVES.fetch_add(1, Ordering::SeqCst);
    // Bit patterns of nonnegative floats order like the floats.
    MAX_GAP_BITS.fetch_max(gap.abs().to_bits(), Ordering::SeqCst);
    MAX_RESIDUAL_BITS.fetch_max(residual.abs().to_bits(), Ordering::SeqCst);
}

/// Deterministic: identical programs give bit-identical solutions.
pub fn solve_lp(lp: &LinearProgram) -> OptimalSolution {
    let cons = lp.constraints();
    let raw = simplex::solve(&lp.objective, cons.matrix(), cons.rhs());
    if raw.status != LpStatus::Optimal {
        return OptimalSolution {
            status: raw.status,
            value: f64::NAN,
            x: Vec::new(),
            duals: Vec::new(),
            dual_value: f64::NAN,
            reduced_costs: Vec::new(),
            basis: raw.basis,
            iterations: raw.iterations,
        };
    }
    let value = lp.value_at(&raw.x);
    let dual_value: f64 = raw.duals.iter().zip(cons.rhs()).map(|(y, b)| y * b).sum();
    let reduced_costs = (0..lp.n_vars())
        .map(|j| {
            lp.objective[j]
                - cons
                    .matrix()
                    .col(j)
                    .iter()
                    .map(|&(r, a)| raw.duals[r] * a)
                    .sum::<f64>()
        })
        .collect();
    record(value - dual_value, cons.equality_residual(&raw.x));
    OptimalSolution {
        status: raw.status,
        value,
        x: raw.x,
        duals: raw.duals,
        dual_value,
        reduced_costs,
        basis: raw.basis,
        iterations: raw.iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::holonomy::SparseMatrix;

    fn lp(rows: &[Vec<f64>], b: Vec<f64>, c: Vec<f64>) -> LinearProgram {
        let cons = ConstraintSystem::new(SparseMatrix::from_dense(rows).unwrap(), b).unwrap();
        LinearProgram::new(c, cons).unwrap()
    }

    #[test]
    fn two_variable_program() {
        let sol = solve_lp(&lp(&[vec![1.0, 1.0]], vec![1.0], vec![1.0, 0.0]));
        assert!(sol.is_optimal());
        assert_eq!(sol.value, 0.0);
        assert_eq!(sol.x, vec![0.0, 1.0]);
        assert!(sol.duality_gap() <= DUALITY_GAP_TOL);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let infeasible = lp(&[vec![1.0, 1.0], vec![1.0, 1.0]], vec![1.0, 2.0], vec![0.0, 0.0]);
        assert_eq!(solve_lp(&infeasible).status, LpStatus::Infeasible);
        let unbounded = lp(&[vec![1.0, -1.0]], vec![0.0], vec![-1.0, 0.0]);
        assert_eq!(solve_lp(&unbounded).status, LpStatus::Unbounded);
        assert!(matches!(
            solve_lp(&unbounded).require_optimal(),
            Err(Error::Solver(LpStatus::Unbounded))
        ));
    }

    #[test]
    fn negative_rhs_and_redundant_rows() {
        // x1 - x2 = -1 twice, x1 + x2 + x3 = 3
        let p = lp(
            &[vec![1.0, -1.0, 0.0], vec![2.0, -2.0, 0.0], vec![1.0, 1.0, 1.0]],
            vec![-1.0, -2.0, 3.0],
            vec![1.0, 1.0, 3.0],
        );
        let sol = solve_lp(&p);
        assert!(sol.is_optimal());
        assert!((sol.value - 3.0).abs() < 1e-12);
        assert!(p.constraints().equality_residual(&sol.x) < 1e-12);
        assert!(sol.duality_gap() < 1e-12);
        assert!(sol.reduced_costs.iter().all(|&d| d > -1e-10));
    }

    #[test]
    fn beale_cycling_example_terminates() {
        // Beale's classic cycling instance in equality form with slacks.
        let rows = vec![
            vec![0.25, -8.0, -1.0, 9.0, 1.0, 0.0, 0.0],
            vec![0.5, -12.0, -0.5, 3.0, 0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
        ];
        let p = lp(&rows, vec![0.0, 0.0, 1.0], vec![-0.75, 20.0, -0.5, 6.0, 0.0, 0.0, 0.0]);
        let sol = solve_lp(&p);
        assert!(sol.is_optimal());
        assert!((sol.value + 1.25).abs() < 1e-12);
    }

    #[test]
    fn dump_format() {
        let p = lp(&[vec![1.0, 1.0]], vec![1.0], vec![1.0, 0.0]);
        let mut buf = Vec::new();
        p.write_dump(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "1 2 2\n0 0 1.0\n0 1 1.0\nrhs 0 1.0\nobj 0 1.0\nobj 1 0.0\n"
        );
    }
}
