//! Dense linear solves for the small systems that arise in this crate:
//! rate-interpolation systems of order ≤ 6 and KKT systems of order ≤ 4.

/// Solves `a · x = b` by Gaussian elimination with partial pivoting.
///
/// `a` is row-major and consumed as scratch space along with `b`. Returns
/// `None` when the best available pivot falls below `1e-12` relative to the
/// largest entry of `a`, which we treat as numerically singular.
pub(crate) fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    debug_assert_eq!(a.len(), n);
    debug_assert!(a.iter().all(|row| row.len() == n));
    let scale = a
        .iter()
        .flatten()
        .fold(0.0_f64, |acc, &v| acc.max(v.abs()))
        .max(1.0);
    let pivot_floor = 1e-12 * scale;

    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&p, &q| a[p][col].abs().total_cmp(&a[q][col].abs()))
            .expect("column range is nonempty");
        if a[pivot_row][col].abs() <= pivot_floor {
            return None;
        }
        a.swap(col, pivot_row);
        b.swap(col, pivot_row);
        let (upper, lower) = a.split_at_mut(col + 1);
        let pivot = &upper[col];
        for (offset, row) in lower.iter_mut().enumerate() {
            let factor = row[col] / pivot[col];
            if factor == 0.0 {
                continue;
            }
            for (target, &source) in row[col..].iter_mut().zip(&pivot[col..]) {
                *target -= factor * source;
            }
            b[col + 1 + offset] -= factor * b[col];
        }
    }

    for col in (0..n).rev() {
        let mut sum = b[col];
        for k in col + 1..n {
            sum -= a[col][k] * b[k];
        }
        b[col] = sum / a[col][col];
    }
    Some(b)
}
