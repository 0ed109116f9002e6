//! Dense LU with partial pivoting, used to refactor the simplex basis.

/// Row-major `m × m` inverse of `a`, or `None` when a pivot falls below `tol`.
pub(crate) fn invert(a: &[f64], m: usize, tol: f64) -> Option<Vec<f64>> {
    debug_assert_eq!(a.len(), m * m);
    let mut lu = a.to_vec();
    let mut perm: Vec<usize> = (0..m).collect();

    for k in 0..m {
        let (p, pivot) = (k..m)
            .map(|i| (i, lu[i * m + k].abs()))
            .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pivot <= tol {
            return None;
        }
        if p != k {
            for j in 0..m {
                lu.swap(k * m + j, p * m + j);
            }
            perm.swap(k, p);
        }
        let diag = lu[k * m + k];
        for i in k + 1..m {
            let factor = lu[i * m + k] / diag;
            lu[i * m + k] = factor;
            if factor != 0.0 {
                for j in k + 1..m {
                    lu[i * m + j] -= factor * lu[k * m + j];
                }
            }
        }
    }

    // Solve L U X = P for each unit column.
    let mut inv = vec![0.0; m * m];
    let mut col = vec![0.0; m];
    for e in 0..m {
        for (i, slot) in col.iter_mut().enumerate() {
            *slot = if perm[i] == e { 1.0 } else { 0.0 };
        }
        for i in 0..m {
            let mut s = col[i];
            for j in 0..i {
                s -= lu[i * m + j] * col[j];
            }
            col[i] = s;
        }
        for i in (0..m).rev() {
            let mut s = col[i];
            for j in i + 1..m {
                s -= lu[i * m + j] * col[j];
            }
            col[i] = s / lu[i * m + i];
        }
        for i in 0..m {
            inv[i * m + e] = col[i];
        }
    }
    Some(inv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverts_a_permuted_matrix() {
        let a = [0.0, 2.0, 1.0, 1.0, 1.0, 0.0, 3.0, 0.0, 1.0];
        let inv = invert(&a, 3, 1e-12).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let s: f64 = (0..3).map(|k| a[i * 3 + k] * inv[k * 3 + j]).sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((s - expected).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn singular_is_refused() {
        assert!(invert(&[1.0, 2.0, 2.0, 4.0], 2, 1e-12).is_none());
    }
}
