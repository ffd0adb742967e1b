//! Agglomerative clustering over a fixed dissimilarity matrix.
//!
//! Unlike the spectral merger, the matrix is computed once and never
//! re-estimated; cluster-to-cluster distances follow the Lance–Williams
//! update for complete or average linkage.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::distances::{DissimilarityMatrix, Measure};
use crate::error::{Error, Result};
use crate::history::{MergeHistory, MergeStep};
use crate::hsm::closest_pair;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Linkage {
    #[default]
    Complete,
    Average,
}

impl fmt::Display for Linkage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Linkage::Complete => "complete",
            Linkage::Average => "average",
        })
    }
}

impl FromStr for Linkage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "complete" => Ok(Linkage::Complete),
            "average" => Ok(Linkage::Average),
            _ => Err(Error::UnknownName(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkageSpec {
    pub linkage: Linkage,
    pub measure: Measure,
}

impl LinkageSpec {
    pub fn new(linkage: Linkage, measure: Measure) -> Self {
        LinkageSpec { linkage, measure }
    }
}

/// Agglomerates the items of `d`. Ties go to the lexicographically smallest
/// pair of cluster ids.
pub fn linkage_cluster(d: &DissimilarityMatrix, spec: &LinkageSpec) -> Result<MergeHistory> {
    let n = d.len();
    if n < 2 {
        return Err(Error::TooFewItems { min: 2, got: n });
    }
    let total = 2 * n - 1;
    // dense matrix over all cluster ids; only rows of live clusters are read
    let mut dist = vec![f64::NAN; total * total];
    for i in 0..n {
        for j in 0..n {
            dist[i * total + j] = d.get(i, j);
        }
    }
    let mut sizes = vec![1usize; n];
    let mut active: Vec<usize> = (0..n).collect();
    let mut steps = Vec::with_capacity(n - 1);
    for s in 0..n - 1 {
        let (i, j, height) = closest_pair(&active, |a, b| dist[a * total + b]);
        let new_id = n + s;
        active.retain(|&c| c != i && c != j);
        let (ni, nj) = (sizes[i] as f64, sizes[j] as f64);
        for &c in &active {
            let (di, dj) = (dist[c * total + i], dist[c * total + j]);
            let v = match spec.linkage {
                Linkage::Complete => di.max(dj),
                Linkage::Average => (ni * di + nj * dj) / (ni + nj),
            };
            dist[c * total + new_id] = v;
            dist[new_id * total + c] = v;
        }
        dist[new_id * total + new_id] = 0.0;
        sizes.push(sizes[i] + sizes[j]);
        active.push(new_id);
        steps.push(MergeStep { left: i, right: j, tv: height, new_id });
    }
    let method = format!("{}-{}", spec.measure, spec.linkage);
    MergeHistory::new(method, d.labels().to_vec(), steps)
}

/// Linkage value between two disjoint sets of item indices.
pub fn linkage_value(a: &[usize], b: &[usize], d: &DissimilarityMatrix, linkage: Linkage) -> Result<f64> {
    linkage_value_by(a, b, |i, j| d.get(i, j), d.len(), linkage)
}

pub(crate) fn linkage_value_by(
    a: &[usize],
    b: &[usize],
    dist: impl Fn(usize, usize) -> f64,
    n: usize,
    linkage: Linkage,
) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyCluster);
    }
    if a.iter().chain(b).any(|&i| i >= n) {
        return Err(Error::InvalidParameter(format!("member index out of range for {n} items")));
    }
    if a.iter().any(|i| b.contains(i)) {
        return Err(Error::InvalidParameter("clusters overlap".into()));
    }
    let cross = a.iter().flat_map(|&i| b.iter().map(move |&j| (i, j)));
    Ok(match linkage {
        Linkage::Complete => cross.map(|(i, j)| dist(i, j)).fold(f64::NEG_INFINITY, f64::max),
        Linkage::Average => cross.map(|(i, j)| dist(i, j)).sum::<f64>() / (a.len() * b.len()) as f64,
    })
}
