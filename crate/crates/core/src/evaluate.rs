//! Scoring clusterings and running Monte Carlo comparisons.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distances::{
    cepstral_coefficients, cepstral_distance_from_coefficients, pairwise_matrix, spectral_matrix, Measure,
    DEFAULT_CEPSTRAL_ORDER,
};
use crate::error::{Error, Result};
use crate::hsm::{hsm_cluster, HsmConfig, Variant};
use crate::linkage::{linkage_cluster, Linkage, LinkageSpec};
use crate::seed::Seed;
use crate::simulate::{jonswap_spectrum, simulate_from_spectrum, simulate_mixture, JonswapParams, MixtureDesign};
use crate::spectra::{normalized_spectrum, BandwidthPolicy, FrequencyGrid, TimeSeries};

/// Assignment of items `0..n` to blocks, stored as canonical labels
/// (blocks numbered in order of their smallest member).
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Partition {
    labels: Vec<usize>,
}

impl Partition {
    /// Builds a partition from arbitrary block labels.
    pub fn from_labels<L: Eq + std::hash::Hash>(labels: &[L]) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::EmptyCluster);
        }
        let mut names: HashMap<&L, usize> = HashMap::new();
        let labels = labels
            .iter()
            .map(|l| {
                let next = names.len();
                *names.entry(l).or_insert(next)
            })
            .collect();
        Ok(Partition { labels })
    }

    /// Builds a partition of `0..n` from explicit blocks.
    pub fn from_blocks(blocks: &[Vec<usize>], n: usize) -> Result<Self> {
        let mut labels = vec![usize::MAX; n];
        for (b, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(Error::EmptyCluster);
            }
            for &i in block {
                if i >= n || labels[i] != usize::MAX {
                    return Err(Error::InvalidParameter(format!("item {i} out of range or in two blocks")));
                }
                labels[i] = b;
            }
        }
        if labels.contains(&usize::MAX) {
            return Err(Error::InvalidParameter("blocks do not cover every item".into()));
        }
        Partition::from_labels(&labels)
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_blocks(&self) -> usize {
        self.labels.iter().max().map_or(0, |m| m + 1)
    }

    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_blocks()];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l].push(i);
        }
        out
    }
}

/// Mean over true blocks of the best Dice overlap with any found block.
///
/// Equals 1 exactly when the partitions coincide.
pub fn similarity_index(truth: &Partition, found: &Partition) -> Result<f64> {
    if truth.len() != found.len() {
        return Err(Error::PartitionMismatch(truth.len(), found.len()));
    }
    let (g, k) = (truth.n_blocks(), found.n_blocks());
    let mut overlap = vec![0usize; g * k];
    let mut tsize = vec![0usize; g];
    let mut fsize = vec![0usize; k];
    for (&t, &f) in truth.labels.iter().zip(&found.labels) {
        overlap[t * k + f] += 1;
        tsize[t] += 1;
        fsize[f] += 1;
    }
    let total: f64 = (0..g)
        .map(|i| (0..k).map(|j| 2.0 * overlap[i * k + j] as f64 / (tsize[i] + fsize[j]) as f64).fold(0.0, f64::max))
        .sum();
    Ok(total / g as f64)
}

/// Clustering methods compared in experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "NP")]
    Np,
    #[serde(rename = "LNP")]
    Lnp,
    #[serde(rename = "CEP")]
    Cep,
    #[serde(rename = "TV")]
    Tv,
    #[serde(rename = "SKL")]
    Skl,
    #[serde(rename = "HSM1")]
    Hsm1,
    #[serde(rename = "HSM2")]
    Hsm2,
}

impl Method {
    pub const ALL: [Method; 7] =
        [Method::Np, Method::Lnp, Method::Cep, Method::Tv, Method::Skl, Method::Hsm1, Method::Hsm2];

    pub fn name(self) -> &'static str {
        match self {
            Method::Np => "NP",
            Method::Lnp => "LNP",
            Method::Cep => "CEP",
            Method::Tv => "TV",
            Method::Skl => "SKL",
            Method::Hsm1 => "HSM1",
            Method::Hsm2 => "HSM2",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(t))
            .ok_or_else(|| Error::UnknownName(s.to_string()))
    }
}

/// Parses a comma-separated method list.
pub fn parse_methods(list: &str) -> Result<Vec<Method>> {
    list.split(',').filter(|s| !s.trim().is_empty()).map(str::parse).collect()
}

/// Clusters `xs` with `method` and cuts the tree at `k` clusters.
///
/// Distance-based methods use complete linkage on normalized Parzen
/// spectra (cepstral coefficients for CEP).
pub fn cluster_with(method: Method, xs: &[TimeSeries], k: usize) -> Result<Partition> {
    let history = match method {
        Method::Hsm1 => hsm_cluster(xs, &HsmConfig::new(Variant::Single))?,
        Method::Hsm2 => hsm_cluster(xs, &HsmConfig::new(Variant::Average))?,
        Method::Cep => {
            let coef =
                xs.par_iter().map(|x| cepstral_coefficients(x, DEFAULT_CEPSTRAL_ORDER)).collect::<Result<Vec<_>>>()?;
            let d = pairwise_matrix(&coef, |a, b| Ok(cepstral_distance_from_coefficients(a, b)))?;
            linkage_cluster(&d, &LinkageSpec::new(Linkage::Complete, Measure::Cep))?
        }
        Method::Np | Method::Lnp | Method::Tv | Method::Skl => {
            let measure = match method {
                Method::Np => Measure::Np,
                Method::Lnp => Measure::Lnp,
                Method::Tv => Measure::Tv,
                _ => Measure::Skl,
            };
            let spectra =
                xs.par_iter().map(|x| normalized_spectrum(x, BandwidthPolicy::Default)).collect::<Result<Vec<_>>>()?;
            let d = spectral_matrix(&spectra, measure)?;
            linkage_cluster(&d, &LinkageSpec::new(Linkage::Complete, measure))?
        }
    };
    Partition::from_labels(&history.labels_at(k)?)
}

/// Data-generating design for an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Design {
    /// Gaussian processes with JONSWAP spectra, `replicates` series per
    /// spectrum, sampled at `fs` Hz.
    Jonswap {
        params: Vec<JonswapParams>,
        fs: f64,
        replicates: usize,
    },
    Mixture(MixtureDesign),
}

impl Design {
    /// Two JONSWAP spectra with `Hs = 3` m and peak periods `3.6 sqrt(Hs)`
    /// and `4.1 sqrt(Hs)` s, five series each at 1.28 Hz.
    pub fn experiment1() -> Self {
        let hs: f64 = 3.0;
        let params = [3.6, 4.1].map(|c| JonswapParams::new(hs, c * hs.sqrt()).expect("valid")).to_vec();
        Design::Jonswap { params, fs: 1.28, replicates: 5 }
    }

    /// Three-cluster AR(2) mixture, see [`MixtureDesign::three_peaks`].
    pub fn experiment2() -> Self {
        Design::Mixture(MixtureDesign::three_peaks())
    }

    /// Number of true clusters.
    pub fn k(&self) -> usize {
        match self {
            Design::Jonswap { params, .. } => params.len(),
            Design::Mixture(d) => d.k(),
        }
    }

    /// One draw of the design: the series and their true partition.
    pub fn simulate(&self, len: usize, seed: Seed) -> Result<(Vec<TimeSeries>, Partition)> {
        match self {
            Design::Jonswap { params, fs, replicates } => {
                if params.is_empty() || *replicates == 0 {
                    return Err(Error::InvalidParameter("empty JONSWAP design".into()));
                }
                let grid = FrequencyGrid::new(*fs, len)?;
                let mut xs = Vec::with_capacity(params.len() * replicates);
                let mut labels = Vec::with_capacity(xs.capacity());
                for (c, p) in params.iter().enumerate() {
                    let spec = jonswap_spectrum(p, &grid)?;
                    for r in 0..*replicates {
                        let s = seed.derive((c * replicates + r) as u64);
                        let x = simulate_from_spectrum(&spec, len, *fs, s)?;
                        xs.push(x.with_id(format!("c{}r{}", c + 1, r + 1)));
                        labels.push(c);
                    }
                }
                Ok((xs, Partition::from_labels(&labels)?))
            }
            Design::Mixture(d) => {
                let draws = simulate_mixture(d, len, seed)?;
                let labels: Vec<usize> = draws.iter().map(|x| x.label).collect();
                Ok((draws.into_iter().map(|x| x.series).collect(), Partition::from_labels(&labels)?))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub design: Design,
    /// Series lengths to run.
    pub lengths: Vec<usize>,
    pub methods: Vec<Method>,
    /// Monte Carlo replicates per length.
    pub replicates: usize,
    pub seed: Seed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawIndex {
    pub replicate: usize,
    pub len: usize,
    pub method: Method,
    pub index: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub lengths: Vec<usize>,
    pub methods: Vec<Method>,
    pub replicates: usize,
    pub seed: Seed,
    /// `means[l][m]`: mean index for `lengths[l]` and `methods[m]`.
    pub means: Vec<Vec<f64>>,
    /// Every replicate's index, ordered by length, replicate, method.
    pub raw: Vec<RawIndex>,
}

impl ExperimentReport {
    pub fn mean(&self, len: usize, method: Method) -> Option<f64> {
        let l = self.lengths.iter().position(|&t| t == len)?;
        let m = self.methods.iter().position(|&x| x == method)?;
        Some(self.means[l][m])
    }
}

/// Seed of replicate `r` at length `len`.
///
/// Depends only on the root seed, the length and the replicate, so a
/// replicate's data is the same whatever else the run contains, and every
/// method sees the same data.
pub fn replicate_seed(root: Seed, len: usize, r: usize) -> Seed {
    root.derive(len as u64).derive(r as u64)
}

/// Simulates, clusters with every method cut at the true `K`, and scores.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    if config.replicates == 0 || config.lengths.is_empty() || config.methods.is_empty() {
        return Err(Error::InvalidParameter("experiment needs replicates, lengths and methods".into()));
    }
    let k = config.design.k();
    let mut means = Vec::with_capacity(config.lengths.len());
    let mut raw = Vec::new();
    for &len in &config.lengths {
        let rows = (0..config.replicates)
            .into_par_iter()
            .map(|r| {
                let (xs, truth) = config.design.simulate(len, replicate_seed(config.seed, len, r))?;
                config
                    .methods
                    .iter()
                    .map(|&m| {
                        let found = cluster_with(m, &xs, k)?;
                        Ok(RawIndex { replicate: r, len, method: m, index: similarity_index(&truth, &found)? })
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let mut sums = vec![0.0; config.methods.len()];
        for row in &rows {
            for (s, v) in sums.iter_mut().zip(row) {
                *s += v.index;
            }
        }
        means.push(sums.into_iter().map(|s| s / config.replicates as f64).collect());
        raw.extend(rows.into_iter().flatten());
    }
    Ok(ExperimentReport {
        lengths: config.lengths.clone(),
        methods: config.methods.clone(),
        replicates: config.replicates,
        seed: config.seed,
        means,
        raw,
    })
}

/// A maximal run of equal labels, `start..end`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment<L> {
    pub start: usize,
    pub end: usize,
    pub label: L,
}

impl<L> Segment<L> {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

/// Run-length encodes a time-ordered label sequence.
pub fn contiguous_segments<L: PartialEq + Clone>(labels: &[L]) -> Vec<Segment<L>> {
    let mut out: Vec<Segment<L>> = Vec::new();
    for (i, l) in labels.iter().enumerate() {
        match out.last_mut() {
            Some(s) if s.label == *l => s.end = i + 1,
            _ => out.push(Segment { start: i, end: i + 1, label: l.clone() }),
        }
    }
    out
}
