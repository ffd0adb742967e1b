//! Hierarchical spectral merger.
//!
//! Every series starts as its own cluster, represented by its normalized
//! Parzen spectrum. At each step the two clusters whose representatives are
//! closest in TV distance are merged, and the merged cluster gets a fresh
//! representative:
//!
//! - [`Variant::Single`]: the smoothed spectrum of the concatenated member
//!   series (members in ascending input order, each segment mean-centered).
//! - [`Variant::Average`]: the member-count weighted mean of the two
//!   representatives, which equals the plain mean of the members'
//!   individual spectra whatever the merge order.
//!
//! Only distances from the new cluster to the survivors are computed at each
//! step; the other entries of the dissimilarity matrix are unchanged.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distances::tv_distance;
use crate::error::{Error, Result};
use crate::history::{MergeHistory, MergeStep};
use crate::spectra::{
    average_spectrum, concat_spectrum_on, normalize, smoothed_spectrum_on, BandwidthPolicy, FrequencyGrid,
    SpectralDensity, TimeSeries,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Single,
    #[default]
    Average,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Single => "single",
            Variant::Average => "average",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "single" | "hsm1" => Ok(Variant::Single),
            "average" | "hsm2" => Ok(Variant::Average),
            _ => Err(Error::UnknownName(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct HsmConfig {
    pub variant: Variant,
    pub bandwidth: BandwidthPolicy,
}

impl HsmConfig {
    pub fn new(variant: Variant) -> Self {
        HsmConfig { variant, bandwidth: BandwidthPolicy::Default }
    }
}

/// A cluster during the merge loop.
#[derive(Debug, Clone, PartialEq)]
pub struct Cluster {
    pub id: usize,
    /// Input indices, ascending.
    pub members: Vec<usize>,
    pub representative: SpectralDensity,
}

/// Picks the lexicographically smallest `(i, j)` among tied candidate pairs.
pub fn tie_break(candidates: &[(usize, usize)]) -> Option<(usize, usize)> {
    candidates.iter().copied().min()
}

/// Closest pair among `ids` (ascending) under `dist`, ties broken by [`tie_break`].
pub(crate) fn closest_pair(ids: &[usize], dist: impl Fn(usize, usize) -> f64) -> (usize, usize, f64) {
    let mut best = f64::INFINITY;
    let mut tied: Vec<(usize, usize)> = Vec::new();
    for (a, &i) in ids.iter().enumerate() {
        for &j in &ids[a + 1..] {
            let d = dist(i, j);
            if d < best {
                best = d;
                tied.clear();
                tied.push((i, j));
            } else if d == best {
                tied.push((i, j));
            }
        }
    }
    let (i, j) = tie_break(&tied).expect("at least two clusters");
    (i, j, best)
}

fn key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Runs the merger on raw series.
///
/// Series must share a sampling frequency. All representatives are
/// evaluated on the grid of the longest series.
pub fn hsm_cluster(xs: &[TimeSeries], config: &HsmConfig) -> Result<MergeHistory> {
    if xs.len() < 2 {
        return Err(Error::TooFewItems { min: 2, got: xs.len() });
    }
    let fs = xs[0].fs();
    if let Some(x) = xs.iter().find(|x| x.fs() != fs) {
        return Err(Error::MixedSamplingFrequency(fs, x.fs()));
    }
    let longest = xs.iter().max_by_key(|x| x.len()).expect("nonempty");
    let grid = longest.grid()?;
    let policy = config.bandwidth;
    let initial = xs
        .par_iter()
        .map(|x| normalize(&smoothed_spectrum_on(x, policy.resolve(x.len())?, &grid)?))
        .collect::<Result<Vec<_>>>()?;
    let ids = xs.iter().map(|x| x.id().to_string()).collect();
    match config.variant {
        Variant::Average => agglomerate("hsm-average", ids, initial, merge_average),
        Variant::Single => agglomerate("hsm-single", ids, initial, |_, _, members: &[usize]| {
            concat_representative(xs, members, policy, &grid)
        }),
    }
}

/// Average-variant merger on precomputed normalized spectra sharing one grid.
pub fn hsm_cluster_spectra(ids: Vec<String>, spectra: Vec<SpectralDensity>) -> Result<MergeHistory> {
    if spectra.len() < 2 {
        return Err(Error::TooFewItems { min: 2, got: spectra.len() });
    }
    if spectra.iter().any(|s| !s.is_normalized()) {
        return Err(Error::NotNormalized);
    }
    if spectra.iter().any(|s| s.grid() != spectra[0].grid()) {
        return Err(Error::GridMismatch("spectra do not share a grid".into()));
    }
    agglomerate("hsm-average", ids, spectra, merge_average)
}

fn merge_average(a: &Cluster, b: &Cluster, _members: &[usize]) -> Result<SpectralDensity> {
    average_spectrum(
        &[a.representative.clone(), b.representative.clone()],
        &[a.members.len() as f64, b.members.len() as f64],
    )
}

/// Normalized smoothed spectrum of the concatenated members, on `grid`.
pub fn concat_representative(
    xs: &[TimeSeries],
    members: &[usize],
    policy: BandwidthPolicy,
    grid: &FrequencyGrid,
) -> Result<SpectralDensity> {
    let series: Vec<TimeSeries> = members.iter().map(|&m| xs[m].clone()).collect();
    normalize(&concat_spectrum_on(&series, policy, grid)?)
}

fn agglomerate<F>(method: &str, ids: Vec<String>, initial: Vec<SpectralDensity>, merge: F) -> Result<MergeHistory>
where
    F: Fn(&Cluster, &Cluster, &[usize]) -> Result<SpectralDensity>,
{
    let n = initial.len();
    let mut reps: Vec<SpectralDensity> = initial.clone();
    let mut active: Vec<Cluster> = initial
        .into_iter()
        .enumerate()
        .map(|(i, representative)| Cluster { id: i, members: vec![i], representative })
        .collect();

    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let mut dist: HashMap<(usize, usize), f64> =
        pairs.par_iter().map(|&(i, j)| Ok(((i, j), tv_distance(&reps[i], &reps[j])?.value))).collect::<Result<_>>()?;

    let mut steps = Vec::with_capacity(n - 1);
    for s in 0..n - 1 {
        let active_ids: Vec<usize> = active.iter().map(|c| c.id).collect();
        let (i, j, tv) = closest_pair(&active_ids, |a, b| dist[&key(a, b)]);
        let new_id = n + s;

        let pos_j = active.iter().position(|c| c.id == j).expect("active");
        let cj = active.remove(pos_j);
        let pos_i = active.iter().position(|c| c.id == i).expect("active");
        let ci = active.remove(pos_i);

        let mut members: Vec<usize> = ci.members.iter().chain(&cj.members).copied().collect();
        members.sort_unstable();
        let representative = merge(&ci, &cj, &members)?;

        let fresh: Vec<((usize, usize), f64)> = active
            .par_iter()
            .map(|c| Ok(((c.id, new_id), tv_distance(&c.representative, &representative)?.value)))
            .collect::<Result<_>>()?;
        dist.retain(|&(a, b), _| a != i && a != j && b != i && b != j);
        dist.extend(fresh);

        reps.push(representative.clone());
        active.push(Cluster { id: new_id, members, representative });
        steps.push(MergeStep { left: i, right: j, tv, new_id });
    }
    Ok(MergeHistory::new(method, ids, steps)?.with_representatives(reps))
}
