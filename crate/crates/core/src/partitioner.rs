//! Candidate partitions of a measurement scan.
//!
//! With `minPts = 1` DBSCAN reduces to single-linkage connected components at
//! radius ε, so a sweep over ε is a union-find over the ε-graph per threshold.

use std::collections::HashSet;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::combinatorics::enumerate_partitions;
use crate::error::{Error, Result};

/// A non-empty, sorted set of measurement indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell(Vec<usize>);

impl Cell {
    pub fn new(mut indices: Vec<usize>) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::Domain(
                "a cell must contain at least one measurement".into(),
            ));
        }
        indices.sort_unstable();
        if indices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Domain(format!(
                "duplicate index in cell {indices:?}"
            )));
        }
        Ok(Self(indices))
    }

    pub fn singleton(i: usize) -> Self {
        Self(vec![i])
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_subset_of(&self, other: &Cell) -> bool {
        self.0.iter().all(|i| other.0.binary_search(i).is_ok())
    }
}

/// A grouping of the scan into disjoint cells. Cells are kept ordered by
/// their smallest index so equal partitions compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PartitionProposal {
    cells: Vec<Cell>,
}

impl PartitionProposal {
    pub fn new(mut cells: Vec<Cell>) -> Self {
        cells.sort();
        Self { cells }
    }

    pub fn empty() -> Self {
        Self { cells: Vec::new() }
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    /// True when the cells are disjoint, non-empty and cover `0..m`.
    pub fn is_partition_of(&self, m: usize) -> bool {
        let mut seen = vec![false; m];
        for cell in &self.cells {
            if cell.is_empty() {
                return false;
            }
            for &i in cell.indices() {
                if i >= m || seen[i] {
                    return false;
                }
                seen[i] = true;
            }
        }
        seen.into_iter().all(|s| s)
    }

    /// True when every cell of `self` lies inside some cell of `coarser`.
    pub fn refines(&self, coarser: &PartitionProposal) -> bool {
        self.cells
            .iter()
            .all(|c| coarser.cells.iter().any(|d| c.is_subset_of(d)))
    }
}

/// Distance-threshold sweep `min, min + step, …, max` (both ends included), metres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DbscanSweep {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl Default for DbscanSweep {
    fn default() -> Self {
        Self {
            min: 0.1,
            max: 8.0,
            step: 0.1,
        }
    }
}

impl DbscanSweep {
    pub fn thresholds(&self) -> Vec<f64> {
        if self.max < self.min || self.step <= 0.0 {
            return vec![self.min];
        }
        let n = ((self.max - self.min) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| self.min + i as f64 * self.step).collect()
    }
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // smaller root wins so component ids are deterministic
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }

    fn partition(&mut self) -> PartitionProposal {
        let n = self.parent.len();
        let mut groups: Vec<Vec<usize>> = vec![Vec::new(); n];
        for i in 0..n {
            let r = self.find(i);
            groups[r].push(i);
        }
        PartitionProposal::new(
            groups
                .into_iter()
                .filter(|g| !g.is_empty())
                .map(Cell)
                .collect(),
        )
    }
}

/// Connected components of the graph linking measurements at distance `<= eps`.
pub fn single_linkage(z: &[DVector<f64>], eps: f64) -> PartitionProposal {
    let mut ds = DisjointSet::new(z.len());
    for i in 0..z.len() {
        for j in (i + 1)..z.len() {
            if (&z[i] - &z[j]).norm() <= eps {
                ds.union(i, j);
            }
        }
    }
    ds.partition()
}

/// One single-linkage partition per sweep threshold, duplicates removed,
/// in order of first appearance (finest first).
pub fn dbscan_sweep(z: &[DVector<f64>], sweep: &DbscanSweep) -> Vec<PartitionProposal> {
    if z.is_empty() {
        return vec![PartitionProposal::empty()];
    }
    let mut edges: Vec<(f64, usize, usize)> = Vec::with_capacity(z.len() * (z.len() - 1) / 2);
    for i in 0..z.len() {
        for j in (i + 1)..z.len() {
            edges.push(((&z[i] - &z[j]).norm(), i, j));
        }
    }
    edges.sort_by(|a, b| a.0.total_cmp(&b.0));

    // The ε-graph only gains edges as ε grows, so the union-find is carried forward.
    let mut ds = DisjointSet::new(z.len());
    let mut next = 0;
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for eps in sweep.thresholds() {
        let mut changed = out.is_empty();
        while next < edges.len() && edges[next].0 <= eps {
            let (_, i, j) = edges[next];
            if ds.find(i) != ds.find(j) {
                ds.union(i, j);
                changed = true;
            }
            next += 1;
        }
        if changed {
            let p = ds.partition();
            if seen.insert(p.clone()) {
                out.push(p);
            }
        }
    }
    out
}

/// Every distinct cell across `proposals`, in order of first appearance.
pub fn unique_cells(proposals: &[PartitionProposal]) -> Vec<Cell> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for p in proposals {
        for c in p.cells() {
            if seen.insert(c.clone()) {
                out.push(c.clone());
            }
        }
    }
    out
}

/// All partitions of `0..m` (exhaustive; `m <= 10`).
pub fn exhaustive_proposals(m: usize) -> Result<Vec<PartitionProposal>> {
    Ok(enumerate_partitions(m)?.partitions)
}
