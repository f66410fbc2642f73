use super::AssignError;

#[derive(Debug, Clone, PartialEq)]
pub struct HungarianResult {
    /// Column matched to each row; `None` for rows left over when there are more rows than columns.
    pub assignment: Vec<Option<usize>>,
    /// Sum of the matched entries, accumulated in row order.
    pub total: f64,
}

/// Minimum-cost one-to-one matching of `min(n, m)` pairs for an `n x m` cost matrix.
///
/// Among equally cheap matchings the lexicographically smallest row-to-column
/// vector is returned, with unmatched rows ordering after every real column.
/// The solver runs the shortest-augmenting-path Hungarian method on the
/// zero-padded square matrix, then searches the tight-edge subgraph of the
/// optimal dual for the lexicographically first perfect matching: by
/// complementary slackness every optimal matching lives in that subgraph.
pub fn hungarian_assign(costs: &[Vec<f64>]) -> Result<HungarianResult, AssignError> {
    let n = costs.len();
    let m = costs.first().map_or(0, Vec::len);
    if costs.iter().any(|r| r.len() != m) {
        return Err(AssignError::Ragged);
    }
    if costs.iter().flatten().any(|c| !c.is_finite()) {
        return Err(AssignError::NonFinite);
    }
    if n == 0 || m == 0 {
        return Ok(HungarianResult { assignment: vec![None; n], total: 0.0 });
    }

    let size = n.max(m);
    let cost = |i: usize, j: usize| if i < n && j < m { costs[i][j] } else { 0.0 };
    let (u, v, row_to_col) = solve_square(size, &cost);

    let scale = 1.0 + costs.iter().flatten().fold(0.0f64, |a, &c| a.max(c.abs()));
    let eps = 1e-9 * scale;
    let tight: Vec<Vec<usize>> = (0..size)
        .map(|i| (0..size).filter(|&j| cost(i, j) - u[i] - v[j] <= eps).collect())
        .collect();
    let matching = lexicographic_perfect_matching(&tight, row_to_col);

    let assignment: Vec<Option<usize>> = (0..n).map(|i| Some(matching[i]).filter(|&j| j < m)).collect();
    let total = assignment.iter().enumerate().filter_map(|(i, j)| j.map(|j| costs[i][j])).sum();
    Ok(HungarianResult { assignment, total })
}

/// Returns row potentials, column potentials and the optimal row-to-column matching.
fn solve_square(size: usize, cost: &impl Fn(usize, usize) -> f64) -> (Vec<f64>, Vec<f64>, Vec<usize>) {
    // 1-based arrays; index 0 is the virtual root column.
    let mut u = vec![0.0f64; size + 1];
    let mut v = vec![0.0f64; size + 1];
    let mut col_owner = vec![0usize; size + 1];
    let mut way = vec![0usize; size + 1];
    for i in 1..=size {
        col_owner[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; size + 1];
        let mut used = vec![false; size + 1];
        loop {
            used[j0] = true;
            let i0 = col_owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=size {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=size {
                if used[j] {
                    u[col_owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if col_owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            col_owner[j0] = col_owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut row_to_col = vec![0usize; size];
    for j in 1..=size {
        row_to_col[col_owner[j] - 1] = j - 1;
    }
    (u[1..].to_vec(), v[1..].to_vec(), row_to_col)
}

/// Lexicographically smallest perfect matching of a bipartite graph given one
/// perfect matching to start from.
fn lexicographic_perfect_matching(adj: &[Vec<usize>], mut row_to_col: Vec<usize>) -> Vec<usize> {
    let size = adj.len();
    let mut col_to_row = vec![0usize; size];
    for (r, &c) in row_to_col.iter().enumerate() {
        col_to_row[c] = r;
    }
    let mut fixed_col = vec![false; size];
    for i in 0..size {
        for &j in &adj[i] {
            if j == row_to_col[i] {
                break;
            }
            if fixed_col[j] {
                continue;
            }
            // Give column j to row i; the row that held j must reach i's old column
            // through an alternating path over unfixed rows and columns.
            let displaced = col_to_row[j];
            let freed = row_to_col[i];
            let mut trial_r2c = row_to_col.clone();
            let mut trial_c2r = col_to_row.clone();
            trial_r2c[i] = j;
            trial_c2r[j] = i;
            let mut blocked = fixed_col.clone();
            blocked[j] = true;
            let mut visited = vec![false; size];
            if reroute(adj, displaced, freed, &blocked, &mut visited, &mut trial_r2c, &mut trial_c2r) {
                row_to_col = trial_r2c;
                col_to_row = trial_c2r;
                break;
            }
        }
        fixed_col[row_to_col[i]] = true;
    }
    row_to_col
}

/// Moves `row` onto some column so that `target` ends up owned, shifting other
/// rows along alternating paths. Columns in `blocked` are off limits.
fn reroute(
    adj: &[Vec<usize>],
    row: usize,
    target: usize,
    blocked: &[bool],
    visited: &mut [bool],
    r2c: &mut [usize],
    c2r: &mut [usize],
) -> bool {
    for &c in &adj[row] {
        if blocked[c] || visited[c] {
            continue;
        }
        visited[c] = true;
        if c == target {
            r2c[row] = c;
            c2r[c] = row;
            return true;
        }
        let owner = c2r[c];
        if owner != row && reroute(adj, owner, target, blocked, visited, r2c, c2r) {
            r2c[row] = c;
            c2r[c] = row;
            return true;
        }
    }
    false
}
