//! Exhaustive basic-feasible-solution enumeration for tiny systems.
//!
//! Works from a dense SVD of each candidate basis, so it shares no numerics
//! with the simplex path it is used to check.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::holonomy::ConstraintSystem;

pub const BRUTE_FORCE_LIMIT: usize = 24;

const RANK_TOL: f64 = 1e-9;
const FEAS_TOL: f64 = 1e-9;
const DEDUP_TOL: f64 = 1e-9;

/// Every vertex of `{x ≥ 0 : A x = b}`, deduplicated, in discovery order.
pub fn enumerate_vertices_bruteforce(constraints: &ConstraintSystem) -> Result<Vec<Vec<f64>>> {
    let n = constraints.n_vars();
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge {
            vars: n,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let m = constraints.n_rows();
    let dense = constraints.matrix().to_dense();
    let a = DMatrix::from_fn(m, n, |r, c| dense[r][c]);
    let b = DVector::from_column_slice(constraints.rhs());
    let rank = a.clone().svd(false, false).rank(RANK_TOL);

    let mut vertices: Vec<Vec<f64>> = Vec::new();
    let mut subset: Vec<usize> = (0..rank).collect();
    loop {
        if let Some(x) = basic_solution(&a, &b, &subset, n) {
            let duplicate = vertices.iter().any(|v| {
                v.iter().zip(&x).all(|(p, q)| (p - q).abs() <= DEDUP_TOL)
            });
            if !duplicate {
                vertices.push(x);
            }
        }
        if !next_combination(&mut subset, n) {
            break;
        }
    }
    Ok(vertices)
}

fn basic_solution(a: &DMatrix<f64>, b: &DVector<f64>, subset: &[usize], n: usize) -> Option<Vec<f64>> {
    let cols: Vec<_> = subset.iter().map(|&j| a.column(j)).collect();
    let a_s = if cols.is_empty() {
        DMatrix::zeros(a.nrows(), 0)
    } else {
        DMatrix::from_columns(&cols)
    };
    let x_s = if subset.is_empty() {
        DVector::zeros(0)
    } else {
        let svd = a_s.clone().svd(true, true);
        if svd.rank(RANK_TOL) < subset.len() {
            return None;
        }
        svd.solve(b, 1e-14).ok()?
    };
    let residual = (&a_s * &x_s - b).amax();
    if residual > FEAS_TOL || x_s.iter().any(|&v| v < -FEAS_TOL) {
        return None;
    }
    let mut x = vec![0.0; n];
    for (&j, &v) in subset.iter().zip(x_s.iter()) {
        x[j] = v.max(0.0);
    }
    Some(x)
}

/// Advances `subset` to the next `k`-combination of `0..n` in lexicographic order.
fn next_combination(subset: &mut [usize], n: usize) -> bool {
    let k = subset.len();
    for i in (0..k).rev() {
        if subset[i] < n - k + i {
            subset[i] += 1;
            for j in i + 1..k {
                subset[j] = subset[j - 1] + 1;
            }
            return true;
        }
    }
    false
}
