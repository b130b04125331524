//! Minimum-cost rectangular assignment (Hungarian method with potentials).

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Optimal matching of rows to columns. Every row is matched when
/// `rows <= cols`, every column otherwise.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pub row_to_col: Vec<Option<usize>>,
    pub cost: f64,
}

/// `rows <= cols`; returns the column of each row.
fn solve_wide(a: &DMatrix<f64>) -> Vec<usize> {
    let (n, m) = a.shape();
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    // p[j]: row (1-based) matched to column j; column 0 is the virtual start
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = a[(i0 - 1, j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
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
    let mut out = vec![0; n];
    for j in 1..=m {
        if p[j] != 0 {
            out[p[j] - 1] = j - 1;
        }
    }
    out
}

pub fn solve(cost: &DMatrix<f64>) -> Result<Assignment> {
    if cost.iter().any(|c| !c.is_finite()) {
        return Err(Error::Domain("assignment costs must be finite".into()));
    }
    let (n, m) = cost.shape();
    let mut row_to_col = vec![None; n];
    if n == 0 || m == 0 {
        return Ok(Assignment {
            row_to_col,
            cost: 0.0,
        });
    }
    if n <= m {
        for (i, j) in solve_wide(cost).into_iter().enumerate() {
            row_to_col[i] = Some(j);
        }
    } else {
        for (j, i) in solve_wide(&cost.transpose()).into_iter().enumerate() {
            row_to_col[i] = Some(j);
        }
    }
    let total = row_to_col
        .iter()
        .enumerate()
        .filter_map(|(i, j)| j.map(|j| cost[(i, j)]))
        .sum();
    Ok(Assignment {
        row_to_col,
        cost: total,
    })
}
