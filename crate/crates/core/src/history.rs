//! Record of an agglomerative run.
//!
//! Cluster ids follow the usual dendrogram convention: the `N` input series
//! are clusters `0..N`, and the cluster created by step `s` gets id `N + s`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectra::SpectralDensity;

/// One merge: clusters `left < right` joined at height `tv` into `new_id`.
///
/// For the spectral merger `tv` is the minimum TV distance; for linkage
/// runs it is the linkage height.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MergeStep {
    pub left: usize,
    pub right: usize,
    pub tv: f64,
    pub new_id: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MergeHistory {
    method: String,
    series_ids: Vec<String>,
    steps: Vec<MergeStep>,
    sizes: Vec<usize>,
    representatives: Vec<SpectralDensity>,
}

impl MergeHistory {
    /// Validates a full merge sequence over `series_ids.len()` leaves.
    pub fn new(method: impl Into<String>, series_ids: Vec<String>, steps: Vec<MergeStep>) -> Result<Self> {
        let n = series_ids.len();
        if n < 2 {
            return Err(Error::TooFewItems { min: 2, got: n });
        }
        if steps.len() != n - 1 {
            return Err(Error::InvalidParameter(format!("{} steps for {n} series", steps.len())));
        }
        let mut alive = vec![true; n];
        let mut sizes = vec![1; n];
        for (s, step) in steps.iter().enumerate() {
            let ok = step.left < step.right
                && step.right < alive.len()
                && alive[step.left]
                && alive[step.right]
                && step.new_id == n + s
                && step.tv.is_finite();
            if !ok {
                return Err(Error::InvalidParameter(format!("invalid merge step {s}: {step:?}")));
            }
            alive[step.left] = false;
            alive[step.right] = false;
            alive.push(true);
            sizes.push(sizes[step.left] + sizes[step.right]);
        }
        Ok(MergeHistory { method: method.into(), series_ids, steps, sizes, representatives: Vec::new() })
    }

    pub(crate) fn with_representatives(mut self, reps: Vec<SpectralDensity>) -> Self {
        debug_assert_eq!(reps.len(), self.sizes.len());
        self.representatives = reps;
        self
    }

    pub fn method(&self) -> &str {
        &self.method
    }

    /// Number of input series `N`.
    pub fn n(&self) -> usize {
        self.series_ids.len()
    }

    pub fn series_ids(&self) -> &[String] {
        &self.series_ids
    }

    pub fn steps(&self) -> &[MergeStep] {
        &self.steps
    }

    /// Merge heights in merge order (`N - 1` values).
    pub fn trajectory(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.tv).collect()
    }

    /// Number of series in cluster `id`.
    pub fn size(&self, id: usize) -> usize {
        self.sizes[id]
    }

    /// Representative spectrum of cluster `id`; only spectral-merger runs
    /// keep these.
    pub fn representative(&self, id: usize) -> Option<&SpectralDensity> {
        self.representatives.get(id)
    }

    /// Series indices in cluster `id`, ascending.
    pub fn members(&self, id: usize) -> Vec<usize> {
        let n = self.n();
        let mut out = Vec::with_capacity(self.sizes[id]);
        let mut stack = vec![id];
        while let Some(c) = stack.pop() {
            if c < n {
                out.push(c);
            } else {
                let s = &self.steps[c - n];
                stack.push(s.left);
                stack.push(s.right);
            }
        }
        out.sort_unstable();
        out
    }

    /// The merge that reduces `k` clusters to `k - 1`, for `2 <= k <= N`.
    pub fn merge_into(&self, k: usize) -> Result<&MergeStep> {
        let n = self.n();
        if !(2..=n).contains(&k) {
            return Err(Error::ClusterCountOutOfRange { k, n });
        }
        Ok(&self.steps[n - k])
    }

    /// Block label of every series when the tree is cut at `k` clusters.
    ///
    /// Blocks are numbered `0..k` in order of their smallest member.
    pub fn labels_at(&self, k: usize) -> Result<Vec<usize>> {
        let n = self.n();
        if !(1..=n).contains(&k) {
            return Err(Error::ClusterCountOutOfRange { k, n });
        }
        // root[c] for every cluster id created so far
        let mut parent: Vec<usize> = (0..2 * n - 1).collect();
        for step in &self.steps[..n - k] {
            parent[step.left] = step.new_id;
            parent[step.right] = step.new_id;
        }
        let root = |mut c: usize| {
            while parent[c] != c {
                c = parent[c];
            }
            c
        };
        let mut names = std::collections::HashMap::new();
        Ok((0..n)
            .map(|i| {
                let next = names.len();
                *names.entry(root(i)).or_insert(next)
            })
            .collect())
    }

    pub fn to_document(&self) -> HistoryDocument {
        let n = self.n();
        HistoryDocument {
            method: self.method.clone(),
            series: self.series_ids.clone(),
            steps: self.steps.clone(),
            labels: (1..=n).rev().map(|k| LabelsAtK { k, labels: self.labels_at(k).expect("k in range") }).collect(),
        }
    }

    pub fn from_document(doc: &HistoryDocument) -> Result<Self> {
        let h = MergeHistory::new(doc.method.clone(), doc.series.clone(), doc.steps.clone())?;
        for entry in &doc.labels {
            if h.labels_at(entry.k)? != entry.labels {
                return Err(Error::InvalidParameter(format!("labels at k = {} disagree with steps", entry.k)));
            }
        }
        Ok(h)
    }
}

/// Serialized shape of a [`MergeHistory`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryDocument {
    pub method: String,
    pub series: Vec<String>,
    pub steps: Vec<MergeStep>,
    pub labels: Vec<LabelsAtK>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelsAtK {
    pub k: usize,
    pub labels: Vec<usize>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("s{i}")).collect()
    }

    fn sample() -> MergeHistory {
        let steps = vec![
            MergeStep { left: 1, right: 3, tv: 0.1, new_id: 4 },
            MergeStep { left: 0, right: 2, tv: 0.2, new_id: 5 },
            MergeStep { left: 4, right: 5, tv: 0.6, new_id: 6 },
        ];
        MergeHistory::new("test", ids(4), steps).unwrap()
    }

    #[test]
    fn labels_unwind_merges() {
        let h = sample();
        assert_eq!(h.labels_at(4).unwrap(), vec![0, 1, 2, 3]);
        assert_eq!(h.labels_at(3).unwrap(), vec![0, 1, 2, 1]);
        assert_eq!(h.labels_at(2).unwrap(), vec![0, 1, 0, 1]);
        assert_eq!(h.labels_at(1).unwrap(), vec![0, 0, 0, 0]);
        assert!(h.labels_at(0).is_err());
        assert!(h.labels_at(5).is_err());
        assert_eq!(h.members(6), vec![0, 1, 2, 3]);
        assert_eq!(h.members(4), vec![1, 3]);
        assert_eq!(h.size(5), 2);
        assert_eq!(h.merge_into(2).unwrap().new_id, 6);
        assert_eq!(h.merge_into(4).unwrap().new_id, 4);
    }

    #[test]
    fn rejects_inconsistent_steps() {
        let bad = vec![
            MergeStep { left: 0, right: 1, tv: 0.1, new_id: 3 },
            MergeStep { left: 0, right: 2, tv: 0.2, new_id: 4 },
        ];
        assert!(MergeHistory::new("x", ids(3), bad).is_err());
        assert!(MergeHistory::new("x", ids(1), vec![]).is_err());
    }

    #[test]
    fn document_round_trip() {
        let h = sample();
        let json = serde_json::to_string(&h.to_document()).unwrap();
        let doc: HistoryDocument = serde_json::from_str(&json).unwrap();
        assert_eq!(MergeHistory::from_document(&doc).unwrap(), h);
        assert_eq!(doc.labels.len(), 4);
        assert_eq!(doc.labels[0].k, 4);
        let mut tampered = doc.clone();
        tampered.labels[1].labels = vec![0, 0, 0, 1];
        assert!(MergeHistory::from_document(&tampered).is_err());
    }
}
