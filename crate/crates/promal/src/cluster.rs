//! Agglomerative hierarchical clustering over a distance matrix.
//!
//! The merge loop keeps the active-cluster distances in a working copy of the
//! matrix and updates them with the Lance–Williams recurrences for single,
//! complete, and average linkage. Squared-form input is converted to root
//! form first (with a logged notice), since these linkage criteria expect a
//! metric. Ties are broken deterministically toward the smallest node-id
//! pair.

use crate::distance::DistanceMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Linkage {
    Single,
    Complete,
    Average,
}

impl Linkage {
    pub fn name(self) -> &'static str {
        match self {
            Linkage::Single => "single",
            Linkage::Complete => "complete",
            Linkage::Average => "average",
        }
    }
}

/// One merge step: nodes `a` and `b` joined at `height` into node `id`.
/// Leaves are numbered 0..N-1; the s-th merge (1-based) creates node N-1+s.
#[derive(Debug, Clone, PartialEq)]
pub struct Merge {
    pub a: usize,
    pub b: usize,
    pub height: f64,
    pub id: usize,
}

/// A stepwise dendrogram: N−1 merges over N labeled leaves.
#[derive(Debug, Clone)]
pub struct Dendrogram {
    pub merges: Vec<Merge>,
    pub leaf_labels: Vec<String>,
}

impl Dendrogram {
    pub fn leaves(&self) -> usize {
        self.leaf_labels.len()
    }
}

/// Builds the dendrogram by repeated nearest-pair merging.
pub fn agglomerate(d: &DistanceMatrix, linkage: Linkage) -> Result<Dendrogram> {
    let n = d.len();
    if n < 2 {
        return Err(Error::Config(format!(
            "clustering needs at least 2 items, got {n}"
        )));
    }
    let root = d.to_root_form();

    // Active clusters: (node id, member count). Distances mirror the active
    // list by position.
    let mut nodes: Vec<(usize, usize)> = (0..n).map(|i| (i, 1)).collect();
    let mut dist: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| root.get(i, j)).collect())
        .collect();
    let mut merges = Vec::with_capacity(n - 1);

    for step in 0..(n - 1) {
        // nearest active pair, first minimal (i, j) in scan order wins
        let mut best = (0usize, 1usize);
        let mut best_d = f64::INFINITY;
        for i in 0..nodes.len() {
            for j in (i + 1)..nodes.len() {
                if dist[i][j] < best_d {
                    best_d = dist[i][j];
                    best = (i, j);
                }
            }
        }
        let (i, j) = best;
        let (id_a, size_a) = nodes[i];
        let (id_b, size_b) = nodes[j];
        let new_id = n + step;
        merges.push(Merge {
            a: id_a.min(id_b),
            b: id_a.max(id_b),
            height: best_d,
            id: new_id,
        });

        // Lance-Williams update of every other active cluster against the
        // merged pair; the merged cluster takes position i, position j is
        // removed.
        let merged_size = size_a + size_b;
        for k in 0..nodes.len() {
            if k == i || k == j {
                continue;
            }
            let dak = dist[i][k];
            let dbk = dist[j][k];
            let updated = match linkage {
                Linkage::Single => dak.min(dbk),
                Linkage::Complete => dak.max(dbk),
                Linkage::Average => {
                    (size_a as f64 * dak + size_b as f64 * dbk) / merged_size as f64
                }
            };
            dist[i][k] = updated;
            dist[k][i] = updated;
        }
        nodes[i] = (new_id, merged_size);
        nodes.remove(j);
        dist.remove(j);
        for row in &mut dist {
            row.remove(j);
        }
    }

    Ok(Dendrogram {
        merges,
        leaf_labels: root.labels().to_vec(),
    })
}

/// Cuts the tree into exactly `k` flat clusters. Cluster ids are stable:
/// the cluster containing the lowest-indexed leaf gets id 0, and so on.
pub fn cut(dend: &Dendrogram, k: usize) -> Result<Vec<usize>> {
    let n = dend.leaves();
    if k == 0 || k > n {
        return Err(Error::BadK { k, n });
    }
    // Undo the last k-1 merges: apply only the first n-k.
    let mut parent: Vec<usize> = (0..2 * n - 1).collect();
    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for merge in dend.merges.iter().take(n - k) {
        let ra = find(&mut parent, merge.a);
        let rb = find(&mut parent, merge.b);
        parent[ra] = merge.id;
        parent[rb] = merge.id;
    }
    let mut assignment = vec![usize::MAX; n];
    let mut next_id = 0usize;
    let mut seen: Vec<(usize, usize)> = Vec::new(); // (root, cluster id)
    for leaf in 0..n {
        let root = find(&mut parent, leaf);
        let id = match seen.iter().find(|(r, _)| *r == root) {
            Some((_, id)) => *id,
            None => {
                let id = next_id;
                seen.push((root, id));
                next_id += 1;
                id
            }
        };
        assignment[leaf] = id;
    }
    debug_assert_eq!(next_id, k);
    Ok(assignment)
}

/// Rand index between two flat clusterings: the fraction of item pairs on
/// which they agree (same/different cluster). 1.0 means identical
/// partitions.
pub fn rand_index(a: &[usize], b: &[usize]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::dims(format!("{}", a.len()), format!("{}", b.len())));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::Config("rand index needs at least 2 items".into()));
    }
    let mut agree = 0usize;
    let mut total = 0usize;
    for i in 0..n {
        for j in (i + 1)..n {
            let same_a = a[i] == a[j];
            let same_b = b[i] == b[j];
            if same_a == same_b {
                agree += 1;
            }
            total += 1;
        }
    }
    Ok(agree as f64 / total as f64)
}
