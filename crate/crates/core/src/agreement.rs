//! Comparing clusterings whose labels are arbitrary.

use crate::matrix::Matrix;

/// Minimum-cost assignment of rows to columns (Hungarian algorithm).
///
/// Requires `cost.rows() <= cost.cols()`. Returns the column chosen for each
/// row.
pub fn min_cost_assignment(cost: &Matrix) -> Vec<usize> {
    let (n, m) = (cost.rows(), cost.cols());
    assert!(n <= m, "more rows than columns");
    // 1-based potentials; column 0 is a sentinel.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut owner = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0;
        let mut min_v = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let reduced = cost.get(i0 - 1, j - 1) - u[i0] - v[j];
                if reduced < min_v[j] {
                    min_v[j] = reduced;
                    way[j] = j0;
                }
                if min_v[j] < delta {
                    delta = min_v[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    min_v[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut result = vec![0; n];
    for j in 1..=m {
        if owner[j] != 0 {
            result[owner[j] - 1] = j - 1;
        }
    }
    result
}

/// Fraction of points on which two labelings agree after the best
/// one-to-one relabeling of `b` onto `a`.
pub fn matched_agreement(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len());
    if a.is_empty() {
        return 1.0;
    }
    let k = a.iter().chain(b).max().map_or(0, |m| m + 1);
    let mut cost = Matrix::zeros(k, k);
    for (&x, &y) in a.iter().zip(b) {
        cost.set(x, y, cost.get(x, y) - 1.0);
    }
    let matching = min_cost_assignment(&cost);
    let hits: f64 = matching.iter().enumerate().map(|(i, &j)| -cost.get(i, j)).sum();
    hits / a.len() as f64
}
