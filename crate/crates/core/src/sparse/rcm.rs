use std::collections::VecDeque;

use super::CsrMatrix;
use crate::{Error, Result};

/// Reverse Cuthill–McKee ordering of a symmetric pattern, as `perm[new] = old`.
///
/// Each connected component is started from its unvisited vertex of minimum
/// degree (lowest index on ties); neighbors are queued by ascending degree,
/// then ascending index. Diagonal entries do not count towards the degree.
pub fn rcm_permutation(a: &CsrMatrix) -> Result<Vec<usize>> {
    if !a.has_symmetric_pattern() {
        return Err(Error::NonSymmetricPattern);
    }
    let n = a.n_rows();
    let degree: Vec<usize> = (0..n)
        .map(|i| a.row(i).0.iter().filter(|&&j| j != i).count())
        .collect();
    let mut by_degree: Vec<usize> = (0..n).collect();
    by_degree.sort_by_key(|&i| (degree[i], i));

    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::new();
    let mut nbrs = Vec::new();
    for &start in &by_degree {
        if visited[start] {
            continue;
        }
        visited[start] = true;
        queue.push_back(start);
        while let Some(v) = queue.pop_front() {
            order.push(v);
            nbrs.clear();
            nbrs.extend(a.row(v).0.iter().copied().filter(|&j| !visited[j]));
            nbrs.sort_by_key(|&j| (degree[j], j));
            for &j in &nbrs {
                visited[j] = true;
                queue.push_back(j);
            }
        }
    }
    order.reverse();
    Ok(order)
}
