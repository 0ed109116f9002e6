//! Two-phase revised simplex on `min c·x, A x = b, x ≥ 0`.
//!
//! The basis inverse is kept explicitly (dense, `m × m`), updated by
//! elementary row operations on each pivot and rebuilt from a fresh LU
//! factorization every `REFACTOR_EVERY` pivots. Pricing is Dantzig's rule;
//! after `STALL_LIMIT` consecutive degenerate pivots the solver switches to
//! Bland's rule until the objective strictly improves.

use super::lu;
use super::LpStatus;
use crate::holonomy::SparseMatrix;

const PIVOT_TOL: f64 = 1e-9;
const OPT_TOL: f64 = 1e-10;
const PHASE1_TOL: f64 = 1e-9;
const DEGENERATE_STEP: f64 = 1e-12;
const REFACTOR_EVERY: usize = 64;
const STALL_LIMIT: usize = 32;

pub(crate) struct RawSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    /// Duals in the sign convention of the original rows.
    pub duals: Vec<f64>,
    pub basis: Vec<usize>,
    pub iterations: usize,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Pricing {
    Dantzig,
    Bland,
}

enum PhaseEnd {
    Optimal,
    Unbounded,
    IterationLimit,
}

struct Solver {
    m: usize,
    n: usize,
    /// Columns with each row multiplied by its sign so that `rhs ≥ 0`.
    cols: Vec<Vec<(usize, f64)>>,
    rhs: Vec<f64>,
    row_sign: Vec<f64>,
    /// Variable per basis position; `n + r` is the artificial of row `r`.
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    binv: Vec<f64>,
    xb: Vec<f64>,
    since_refactor: usize,
    iterations: usize,
    max_iterations: usize,
}

impl Solver {
    fn new(a: &SparseMatrix, b: &[f64]) -> Self {
        let m = a.n_rows();
        let n = a.n_cols();
        let row_sign: Vec<f64> = b.iter().map(|&v| if v < 0.0 { -1.0 } else { 1.0 }).collect();
        let cols = (0..n)
            .map(|j| a.col(j).iter().map(|&(r, v)| (r, v * row_sign[r])).collect())
            .collect();
        let rhs: Vec<f64> = b.iter().zip(&row_sign).map(|(v, s)| v * s).collect();
        let mut binv = vec![0.0; m * m];
        for i in 0..m {
            binv[i * m + i] = 1.0;
        }
        let mut is_basic = vec![false; n + m];
        is_basic[n..].iter_mut().for_each(|b| *b = true);
        Self {
            m,
            n,
            cols,
            xb: rhs.clone(),
            rhs,
            row_sign,
            basis: (n..n + m).collect(),
            is_basic,
            binv,
            since_refactor: 0,
            iterations: 0,
            max_iterations: 200 * (n + m) + 10_000,
        }
    }

    fn ftran(&self, j: usize) -> Vec<f64> {
        let m = self.m;
        if j >= self.n {
            let r = j - self.n;
            return (0..m).map(|i| self.binv[i * m + r]).collect();
        }
        let mut alpha = vec![0.0; m];
        for &(r, a) in &self.cols[j] {
            for (i, slot) in alpha.iter_mut().enumerate() {
                *slot += self.binv[i * m + r] * a;
            }
        }
        alpha
    }

    fn duals(&self, cost: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut y = vec![0.0; m];
        for (i, &var) in self.basis.iter().enumerate() {
            let cb = cost[var];
            if cb != 0.0 {
                let row = &self.binv[i * m..(i + 1) * m];
                for (yr, &b) in y.iter_mut().zip(row) {
                    *yr += cb * b;
                }
            }
        }
        y
    }

    fn reduced_cost(&self, j: usize, cost: &[f64], y: &[f64]) -> f64 {
        cost[j] - self.cols[j].iter().map(|&(r, a)| y[r] * a).sum::<f64>()
    }

    fn refactor(&mut self) {
        let m = self.m;
        self.since_refactor = 0;
        if m == 0 {
            return;
        }
        let mut dense = vec![0.0; m * m];
        for (i, &var) in self.basis.iter().enumerate() {
            if var >= self.n {
                dense[(var - self.n) * m + i] = 1.0;
            } else {
                for &(r, a) in &self.cols[var] {
                    dense[r * m + i] = a;
                }
            }
        }
        // A failed refactor keeps the updated inverse; the basis is
        // nonsingular by construction, so this only guards round-off.
        if let Some(inv) = lu::invert(&dense, m, 1e-13) {
            self.binv = inv;
            self.xb = (0..m)
                .map(|i| (0..m).map(|k| self.binv[i * m + k] * self.rhs[k]).sum())
                .collect();
        }
    }

    fn pivot(&mut self, r: usize, q: usize, alpha: &[f64]) {
        let m = self.m;
        let piv = alpha[r];
        let theta = self.xb[r] / piv;
        for (i, x) in self.xb.iter_mut().enumerate() {
            if i != r {
                *x -= theta * alpha[i];
            }
        }
        self.xb[r] = theta;

        let pivot_row: Vec<f64> = self.binv[r * m..(r + 1) * m].iter().map(|v| v / piv).collect();
        for (i, &ai) in alpha.iter().enumerate() {
            if i == r || ai == 0.0 {
                continue;
            }
            let row = &mut self.binv[i * m..(i + 1) * m];
            for (b, p) in row.iter_mut().zip(&pivot_row) {
                *b -= ai * p;
            }
        }
        self.binv[r * m..(r + 1) * m].copy_from_slice(&pivot_row);

        self.is_basic[self.basis[r]] = false;
        self.basis[r] = q;
        self.is_basic[q] = true;
        self.iterations += 1;
        self.since_refactor += 1;
        if self.since_refactor >= REFACTOR_EVERY {
            self.refactor();
        }
    }

    fn choose_entering(&self, cost: &[f64], y: &[f64], pricing: Pricing) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..self.n {
            if self.is_basic[j] {
                continue;
            }
            let d = self.reduced_cost(j, cost, y);
            if d >= -OPT_TOL {
                continue;
            }
            match pricing {
                Pricing::Bland => return Some(j),
                Pricing::Dantzig => {
                    if best.is_none_or(|(_, bd)| d < bd) {
                        best = Some((j, d));
                    }
                }
            }
        }
        best.map(|(j, _)| j)
    }

    fn choose_leaving(&self, alpha: &[f64], pricing: Pricing) -> Option<usize> {
        let theta = alpha
            .iter()
            .zip(&self.xb)
            .filter(|(a, _)| **a > PIVOT_TOL)
            .map(|(a, x)| x.max(0.0) / a)
            .fold(f64::INFINITY, f64::min);
        if !theta.is_finite() {
            return None;
        }
        let mut best: Option<usize> = None;
        for (i, (&a, &x)) in alpha.iter().zip(&self.xb).enumerate() {
            if a <= PIVOT_TOL || x.max(0.0) / a > theta + DEGENERATE_STEP {
                continue;
            }
            best = match best {
                None => Some(i),
                Some(b) => {
                    let better = match pricing {
                        Pricing::Bland => self.basis[i] < self.basis[b],
                        Pricing::Dantzig => a > alpha[b],
                    };
                    Some(if better { i } else { b })
                }
            };
        }
        best
    }

    fn run_phase(&mut self, cost: &[f64]) -> PhaseEnd {
        let mut pricing = Pricing::Dantzig;
        let mut degenerate_run = 0usize;
        loop {
            if self.iterations >= self.max_iterations {
                return PhaseEnd::IterationLimit;
            }
            let y = self.duals(cost);
            let Some(q) = self.choose_entering(cost, &y, pricing) else {
                return PhaseEnd::Optimal;
            };
            let alpha = self.ftran(q);
            let Some(r) = self.choose_leaving(&alpha, pricing) else {
                return PhaseEnd::Unbounded;
            };
            let step = self.xb[r].max(0.0) / alpha[r];
            self.pivot(r, q, &alpha);
            if step <= DEGENERATE_STEP {
                degenerate_run += 1;
                if degenerate_run >= STALL_LIMIT {
                    pricing = Pricing::Bland;
                }
            } else {
                degenerate_run = 0;
                pricing = Pricing::Dantzig;
            }
        }
    }

    /// Pivots zero-level artificials out of the basis where some structural
    /// column can replace them. Artificials that remain sit on redundant rows.
    fn expel_artificials(&mut self) {
        let m = self.m;
        for r in 0..m {
            if self.basis[r] < self.n {
                continue;
            }
            let row = &self.binv[r * m..(r + 1) * m];
            let mut best: Option<(usize, f64)> = None;
            for j in 0..self.n {
                if self.is_basic[j] {
                    continue;
                }
                let v: f64 = self.cols[j].iter().map(|&(k, a)| row[k] * a).sum();
                if v.abs() > PIVOT_TOL && best.is_none_or(|(_, bv)| v.abs() > bv) {
                    best = Some((j, v.abs()));
                }
            }
            if let Some((j, _)) = best {
                let alpha = self.ftran(j);
                self.pivot(r, j, &alpha);
            }
        }
    }

    fn phase_one_infeasibility(&self) -> f64 {
        self.basis
            .iter()
            .zip(&self.xb)
            .filter(|(&var, _)| var >= self.n)
            .map(|(_, &x)| x.abs())
            .sum()
    }

    fn finish(mut self, status: LpStatus, cost: &[f64]) -> RawSolution {
        if status != LpStatus::Optimal {
            return RawSolution {
                status,
                x: Vec::new(),
                duals: Vec::new(),
                basis: self.basis,
                iterations: self.iterations,
            };
        }
        self.refactor();
        let mut x = vec![0.0; self.n];
        for (&var, &v) in self.basis.iter().zip(&self.xb) {
            if var < self.n {
                x[var] = if v < 0.0 && v > -PHASE1_TOL { 0.0 } else { v };
            }
        }
        let y = self.duals(cost);
        let duals = y.iter().zip(&self.row_sign).map(|(y, s)| y * s).collect();
        RawSolution {
            status,
            x,
            duals,
            basis: self.basis,
            iterations: self.iterations,
        }
    }
}

pub(crate) fn solve(objective: &[f64], a: &SparseMatrix, b: &[f64]) -> RawSolution {
    let mut solver = Solver::new(a, b);
    let (m, n) = (solver.m, solver.n);

    let mut cost = vec![0.0; n + m];
    cost[n..].iter_mut().for_each(|c| *c = 1.0);
    match solver.run_phase(&cost) {
        PhaseEnd::Optimal => {}
        // Phase one is bounded below by zero.
        PhaseEnd::Unbounded => unreachable!("phase one cannot be unbounded"),
        PhaseEnd::IterationLimit => return solver.finish(LpStatus::IterationLimit, &cost),
    }
    solver.refactor();
    let scale = b.iter().fold(1.0f64, |acc, v| acc.max(v.abs()));
    if solver.phase_one_infeasibility() > PHASE1_TOL * scale {
        return solver.finish(LpStatus::Infeasible, &cost);
    }
    solver.expel_artificials();

    cost[..n].copy_from_slice(objective);
    cost[n..].iter_mut().for_each(|c| *c = 0.0);
    let status = match solver.run_phase(&cost) {
        PhaseEnd::Optimal => LpStatus::Optimal,
        PhaseEnd::Unbounded => LpStatus::Unbounded,
        PhaseEnd::IterationLimit => LpStatus::IterationLimit,
    };
    solver.finish(status, &cost)
}
