//! O(n^3) Hungarian method with row/column potentials and shortest
//! augmenting paths, over dense `f64` costs.

/// Minimum-cost perfect assignment of an `n x n` row-major cost matrix.
/// Returns the column assigned to each row.
pub fn min_cost_assignment(n: usize, costs: &[f64]) -> Vec<usize> {
    assert_eq!(costs.len(), n * n, "cost matrix must be n x n");
    if n == 0 {
        return Vec::new();
    }

    // 1-based potentials; column 0 is the virtual root of each search.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut minv = vec![f64::INFINITY; n + 1];
    let mut used = vec![false; n + 1];

    for row in 1..=n {
        p[0] = row;
        let mut j0 = 0usize;
        minv.fill(f64::INFINITY);
        used.fill(false);

        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            let cost_row = &costs[(i0 - 1) * n..i0 * n];

            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost_row[j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }

            for j in 0..=n {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }

            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }

        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut row_to_col = vec![0usize; n];
    for j in 1..=n {
        if p[j] > 0 {
            row_to_col[p[j] - 1] = j - 1;
        }
    }
    row_to_col
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_known_instance() {
        let costs = [4.0, 1.0, 3.0, 2.0, 0.0, 5.0, 3.0, 2.0, 2.0];
        let assignment = min_cost_assignment(3, &costs);
        let total: f64 = assignment
            .iter()
            .enumerate()
            .map(|(i, &j)| costs[i * 3 + j])
            .sum();
        assert_eq!(total, 5.0);
        let mut cols = assignment.clone();
        cols.sort_unstable();
        assert_eq!(cols, vec![0, 1, 2]);
    }

    #[test]
    fn empty_and_singleton() {
        assert!(min_cost_assignment(0, &[]).is_empty());
        assert_eq!(min_cost_assignment(1, &[-3.0]), vec![0]);
    }
}
