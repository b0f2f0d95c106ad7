//! Minimum-cost rectangular assignment.
//!
//! The matrix is padded to square with zero-cost dummies and solved with the
//! shortest-augmenting-path Hungarian method, which also yields optimal dual
//! potentials. Every optimal assignment uses only edges with zero reduced
//! cost, so the lexicographically smallest optimum is recovered by walking
//! rows in order and rerouting the current matching along tight alternating
//! paths whenever a smaller column is available.

use crate::error::{MotError, Result};

/// Relative slack under which a reduced cost counts as zero.
const TIGHT_RTOL: f64 = 1e-11;

/// Solves min-cost assignment on a row-major `R × C` cost matrix.
///
/// Returns `min(R, C)` `(row, col)` pairs sorted by row. Among optimal
/// assignments the lexicographically smallest pair list is returned.
pub fn hungarian(cost: &[Vec<f64>]) -> Result<Vec<(usize, usize)>> {
    let rows = cost.len();
    if rows == 0 {
        return Ok(Vec::new());
    }
    let cols = cost[0].len();
    for (r, row) in cost.iter().enumerate() {
        if row.len() != cols {
            return Err(MotError::InvalidCost(format!(
                "row {r} has {} entries, expected {cols}",
                row.len()
            )));
        }
        if let Some((c, v)) = row.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(MotError::InvalidCost(format!("entry ({r}, {c}) is {v}")));
        }
    }
    if cols == 0 {
        return Ok(Vec::new());
    }

    let n = rows.max(cols);
    let at = |r: usize, c: usize| -> f64 {
        if r < rows && c < cols {
            cost[r][c]
        } else {
            0.0
        }
    };

    let (col_of, u, v) = solve_square(n, &at);

    let scale = cost
        .iter()
        .flat_map(|r| r.iter())
        .fold(1.0f64, |m, x| m.max(x.abs()));
    let eps = TIGHT_RTOL * scale * n as f64;
    let tight: Vec<Vec<usize>> = (0..n)
        .map(|r| (0..n).filter(|&c| at(r, c) - u[r] - v[c] <= eps).collect())
        .collect();

    let col_of = lexicographic_refine(n, rows, cols, col_of, &tight);

    Ok((0..rows)
        .filter_map(|r| (col_of[r] < cols).then_some((r, col_of[r])))
        .collect())
}

/// Classic O(n³) potentials method on an `n × n` matrix.
/// Returns the column of each row and the row/column potentials.
fn solve_square(n: usize, at: &dyn Fn(usize, usize) -> f64) -> (Vec<usize>, Vec<f64>, Vec<f64>) {
    // 1-based internally; index 0 is the virtual root.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut owner = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        owner[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = at(i0 - 1, j - 1) - u[i0] - v[j];
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
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
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
    let mut col_of = vec![0usize; n];
    for j in 1..=n {
        col_of[owner[j] - 1] = j - 1;
    }
    (col_of, u[1..].to_vec(), v[1..].to_vec())
}

fn lexicographic_refine(
    n: usize,
    rows: usize,
    cols: usize,
    mut col_of: Vec<usize>,
    tight: &[Vec<usize>],
) -> Vec<usize> {
    let mut owner = vec![0usize; n];
    for (r, &c) in col_of.iter().enumerate() {
        owner[c] = r;
    }
    let mut fixed_row = vec![false; n];
    let mut fixed_col = vec![false; n];

    for r in 0..rows {
        let cur = col_of[r];
        let limit = cur.min(cols);
        for &j in tight[r].iter().take_while(|&&j| j < limit) {
            if fixed_col[j] {
                continue;
            }
            let other = owner[j];
            let mut visited = vec![false; n];
            visited[j] = true;
            fixed_row[r] = true;
            let moved = reroute(
                other,
                cur,
                tight,
                &fixed_row,
                &fixed_col,
                &mut visited,
                &mut col_of,
                &mut owner,
            );
            fixed_row[r] = false;
            if moved {
                col_of[r] = j;
                owner[j] = r;
                break;
            }
        }
        fixed_row[r] = true;
        fixed_col[col_of[r]] = true;
    }
    col_of
}

/// Finds an alternating path from `row` that ends by taking the vacated
/// column `target`, rewiring the matching along it.
#[allow(clippy::too_many_arguments)]
fn reroute(
    row: usize,
    target: usize,
    tight: &[Vec<usize>],
    fixed_row: &[bool],
    fixed_col: &[bool],
    visited: &mut [bool],
    col_of: &mut [usize],
    owner: &mut [usize],
) -> bool {
    for &k in &tight[row] {
        if fixed_col[k] || visited[k] {
            continue;
        }
        visited[k] = true;
        let ok = k == target || {
            let next = owner[k];
            !fixed_row[next]
                && reroute(next, target, tight, fixed_row, fixed_col, visited, col_of, owner)
        };
        if ok {
            col_of[row] = k;
            owner[k] = row;
            return true;
        }
    }
    false
}

/// Sum of `cost[r][c]` over an assignment.
pub fn assignment_cost(cost: &[Vec<f64>], pairs: &[(usize, usize)]) -> f64 {
    pairs.iter().map(|&(r, c)| cost[r][c]).sum()
}
