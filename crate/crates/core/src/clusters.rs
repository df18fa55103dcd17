//! Connected components and cluster statistics of a sampled
//! configuration.
//!
//! Components are extracted with a union-find forest (path compression
//! plus union by size). In the mixed model, closed vertices carry no
//! edges by construction and are excluded from the statistics entirely.

use crate::error::{Error, Result};
use crate::rng::{stream, Purpose};
use crate::sampler::Configuration;
use rand::Rng;
use std::collections::{BTreeMap, HashSet};

/// Mutable partition of the labels `[0, N^n)`.
#[derive(Debug, Clone)]
pub struct DisjointSetForest {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl DisjointSetForest {
    pub fn new(len: usize) -> Result<Self> {
        if len > u32::MAX as usize {
            return Err(Error::Capacity(format!("{len} vertices exceed index width")));
        }
        Ok(DisjointSetForest {
            parent: (0..len as u32).collect(),
            size: vec![1; len],
        })
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn find(&mut self, x: usize) -> usize {
        let mut x = x as u32;
        while self.parent[x as usize] != x {
            let grandparent = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = grandparent;
            x = grandparent;
        }
        x as usize
    }

    pub fn union(&mut self, x: usize, y: usize) {
        let mut rx = self.find(x);
        let mut ry = self.find(y);
        if rx == ry {
            return;
        }
        if self.size[rx] < self.size[ry] {
            std::mem::swap(&mut rx, &mut ry);
        }
        self.parent[ry] = rx as u32;
        self.size[rx] += self.size[ry];
    }

    pub fn connected(&mut self, x: usize, y: usize) -> bool {
        self.find(x) == self.find(y)
    }

    /// Size of the component containing `x`.
    pub fn component_size(&mut self, x: usize) -> u64 {
        let r = self.find(x);
        self.size[r] as u64
    }
}

/// Statistics of one configuration's partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterStats {
    /// `|C_n(0)|`; 0 when the origin is closed.
    pub origin_cluster_size: u64,
    /// `|C^m_n(0)|`, the size of the largest cluster of open vertices.
    pub max_cluster_size: u64,
    /// Root label of one maximal cluster, tie-broken uniformly.
    pub max_cluster_root: u64,
    /// cluster size -> number of clusters of that size (open vertices only).
    pub histogram: BTreeMap<u64, u64>,
}

/// Union-find components of a configuration. Two labels share a root
/// iff a path of edges joins them; closed vertices stay singletons.
pub fn components(c: &Configuration) -> Result<DisjointSetForest> {
    let size = c.params.vertex_count()?;
    let mut forest = DisjointSetForest::new(size as usize)?;
    for &(u, v) in &c.edges {
        if u == v || u.max(v) >= size {
            return Err(Error::Parameter(format!(
                "edge ({u},{v}) invalid for a ball of {size} vertices"
            )));
        }
        forest.union(u as usize, v as usize);
    }
    Ok(forest)
}

/// Exact statistics of the partition. The maximal-cluster tie-break
/// consumes a dedicated stream derived from the configuration's seed so
/// it never perturbs edge sampling.
pub fn stats(forest: &mut DisjointSetForest, c: &Configuration) -> Result<ClusterStats> {
    let size = c.params.vertex_count()?;
    if forest.len() != size as usize {
        return Err(Error::Parameter(format!(
            "forest of {} entries does not match ball of {size} vertices",
            forest.len()
        )));
    }
    let mut root_size: BTreeMap<usize, u64> = BTreeMap::new();
    for x in 0..size as usize {
        if !c.is_open(x as u64) {
            continue;
        }
        *root_size.entry(forest.find(x)).or_insert(0) += 1;
    }
    let mut histogram = BTreeMap::new();
    for &s in root_size.values() {
        *histogram.entry(s).or_insert(0) += 1;
    }
    let max_cluster_size = root_size.values().copied().max().unwrap_or(0);
    let maximal: Vec<u64> = root_size
        .iter()
        .filter(|&(_, &s)| s == max_cluster_size)
        .map(|(&r, _)| r as u64)
        .collect();
    let max_cluster_root = if maximal.is_empty() {
        0
    } else {
        let mut rng = stream(c.params.seed, c.params.replicate, 0, Purpose::TieBreak);
        maximal[rng.gen_range(0..maximal.len())]
    };
    let origin_cluster_size = if c.is_open(0) {
        *root_size.get(&forest.find(0)).expect("origin root present")
    } else {
        0
    };
    Ok(ClusterStats {
        origin_cluster_size,
        max_cluster_size,
        max_cluster_root,
        histogram,
    })
}

/// True iff at least one edge of `c` joins the disjoint label sets.
pub fn connects(c: &Configuration, s1: &[u64], s2: &[u64]) -> Result<bool> {
    let set1: HashSet<u64> = s1.iter().copied().collect();
    let set2: HashSet<u64> = s2.iter().copied().collect();
    if set1.intersection(&set2).next().is_some() {
        return Err(Error::Parameter("connects requires disjoint sets".into()));
    }
    Ok(c.edges.iter().any(|&(u, v)| {
        (set1.contains(&u) && set2.contains(&v)) || (set1.contains(&v) && set2.contains(&u))
    }))
}
