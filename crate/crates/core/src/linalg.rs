use alloc::vec::Vec;

/// Solves the dense square system `a x = b` by Gaussian elimination with
/// partial pivoting. `a` is row-major `n × n`. Returns `None` when a pivot
/// falls below `singular_tol`.
pub fn solve(a: Vec<f64>, b: Vec<f64>, singular_tol: f64) -> Option<Vec<f64>> {
    solve_many(a, b, 1, singular_tol)
}

/// Like [`solve`] for `rhs` right-hand sides at once; `b` and the result
/// are row-major `n × rhs`.
pub fn solve_many(mut a: Vec<f64>, mut b: Vec<f64>, rhs: usize, singular_tol: f64) -> Option<Vec<f64>> {
    let n = b.len() / rhs;
    debug_assert_eq!(a.len(), n * n);
    debug_assert_eq!(b.len(), n * rhs);
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))?;
        if a[pivot * n + col].abs() < singular_tol {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                a.swap(pivot * n + k, col * n + k);
            }
            for k in 0..rhs {
                b.swap(pivot * rhs + k, col * rhs + k);
            }
        }
        let diag = a[col * n + col];
        for row in col + 1..n {
            let factor = a[row * n + col] / diag;
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row * n + k] -= factor * a[col * n + k];
            }
            for k in 0..rhs {
                b[row * rhs + k] -= factor * b[col * rhs + k];
            }
        }
    }
    let mut x = alloc::vec![0.0; n * rhs];
    for row in (0..n).rev() {
        for j in 0..rhs {
            let mut acc = b[row * rhs + j];
            for k in row + 1..n {
                acc -= a[row * n + k] * x[k * rhs + j];
            }
            x[row * rhs + j] = acc / a[row * n + row];
        }
    }
    Some(x)
}
