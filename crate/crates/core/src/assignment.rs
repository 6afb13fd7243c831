//! Dense linear assignment.
//!
//! `solve` runs the O(n³) shortest-augmenting-path Hungarian method on a
//! square cost matrix and returns the row→column assignment together with
//! the dual potentials. `lexicographic_optimum` then selects, among all
//! optimal assignments, the lexicographically smallest one by searching
//! perfect matchings in the equality subgraph of the optimal duals.

/// Optimal assignment of a square cost matrix.
#[derive(Debug, Clone)]
pub struct Assignment {
    /// `cols[i]` is the column assigned to row `i`.
    pub cols: Vec<usize>,
    /// Row potentials `u`.
    pub u: Vec<f64>,
    /// Column potentials `v`; `cost[i][j] - u[i] - v[j] >= 0` at optimum.
    pub v: Vec<f64>,
    pub total: f64,
}

/// Minimum-cost perfect assignment. `cost` is row-major, `n × n`.
pub fn solve(cost: &[f64], n: usize) -> Assignment {
    assert_eq!(cost.len(), n * n, "cost matrix must be n×n");
    if n == 0 {
        return Assignment {
            cols: Vec::new(),
            u: Vec::new(),
            v: Vec::new(),
            total: 0.0,
        };
    }

    // 1-based bookkeeping with a virtual column 0.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
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

    let mut cols = vec![0usize; n];
    for j in 1..=n {
        cols[p[j] - 1] = j - 1;
    }
    let total = cols.iter().enumerate().map(|(i, &j)| cost[i * n + j]).sum();
    Assignment {
        cols,
        u: u[1..].to_vec(),
        v: v[1..].to_vec(),
        total,
    }
}

/// Lexicographically smallest optimal assignment.
///
/// Edges whose reduced cost is within `tol` of zero form the equality
/// subgraph; every optimal assignment is a perfect matching of it. Rows are
/// fixed greedily to their smallest admissible column such that the
/// remaining rows can still be perfectly matched.
pub fn lexicographic_optimum(cost: &[f64], n: usize, tol: f64) -> Vec<usize> {
    let opt = solve(cost, n);
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| cost[i * n + j] - opt.u[i] - opt.v[j] <= tol)
                .collect()
        })
        .collect();

    let mut fixed = vec![usize::MAX; n];
    let mut col_taken = vec![false; n];
    for i in 0..n {
        let mut chosen = None;
        for &j in &adj[i] {
            if col_taken[j] {
                continue;
            }
            col_taken[j] = true;
            if has_perfect_matching(&adj, i + 1, &col_taken) {
                chosen = Some(j);
                break;
            }
            col_taken[j] = false;
        }
        match chosen {
            Some(j) => fixed[i] = j,
            // Tolerance made the equality graph inconsistent; the Hungarian
            // optimum is always a valid answer.
            None => return opt.cols,
        }
    }
    fixed
}

/// Kuhn's augmenting-path test: can rows `from..n` be matched into free columns?
fn has_perfect_matching(adj: &[Vec<usize>], from: usize, col_taken: &[bool]) -> bool {
    let n = adj.len();
    let mut match_col: Vec<Option<usize>> = vec![None; n];
    for row in from..n {
        let mut seen = vec![false; n];
        if !augment(row, adj, col_taken, &mut match_col, &mut seen) {
            return false;
        }
    }
    true
}

fn augment(
    row: usize,
    adj: &[Vec<usize>],
    col_taken: &[bool],
    match_col: &mut [Option<usize>],
    seen: &mut [bool],
) -> bool {
    for &j in &adj[row] {
        if col_taken[j] || seen[j] {
            continue;
        }
        seen[j] = true;
        let free = match match_col[j] {
            None => true,
            Some(other) => augment(other, adj, col_taken, match_col, seen),
        };
        if free {
            match_col[j] = Some(row);
            return true;
        }
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_force(cost: &[f64], n: usize) -> f64 {
        let mut perm: Vec<usize> = (0..n).collect();
        let mut best = f64::INFINITY;
        loop {
            let c: f64 = perm.iter().enumerate().map(|(i, &j)| cost[i * n + j]).sum();
            best = best.min(c);
            if !next_permutation(&mut perm) {
                break;
            }
        }
        best
    }

    fn next_permutation(p: &mut [usize]) -> bool {
        let n = p.len();
        if n < 2 {
            return false;
        }
        let mut i = n - 1;
        while i > 0 && p[i - 1] >= p[i] {
            i -= 1;
        }
        if i == 0 {
            return false;
        }
        let mut j = n - 1;
        while p[j] <= p[i - 1] {
            j -= 1;
        }
        p.swap(i - 1, j);
        p[i..].reverse();
        true
    }

    #[test]
    fn matches_enumeration_on_small_matrices() {
        let mut state = 12345u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64) / ((1u64 << 53) as f64)
        };
        for n in 1..=6 {
            for _ in 0..50 {
                let cost: Vec<f64> = (0..n * n).map(|_| next() * 10.0 - 3.0).collect();
                let a = solve(&cost, n);
                assert!((a.total - brute_force(&cost, n)).abs() < 1e-9);
                for i in 0..n {
                    for j in 0..n {
                        assert!(cost[i * n + j] - a.u[i] - a.v[j] > -1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn all_ties_give_identity() {
        let cost = vec![1.0; 16];
        assert_eq!(lexicographic_optimum(&cost, 4, 1e-12), vec![0, 1, 2, 3]);
    }

    #[test]
    fn partial_ties_pick_smallest() {
        // rows 0 and 1 are interchangeable, row 2 is forced to column 0.
        let cost = vec![
            5.0, 1.0, 1.0, //
            5.0, 1.0, 1.0, //
            0.0, 9.0, 9.0,
        ];
        assert_eq!(lexicographic_optimum(&cost, 3, 1e-12), vec![1, 2, 0]);
    }

    #[test]
    fn empty_matrix() {
        assert!(solve(&[], 0).cols.is_empty());
    }
}
