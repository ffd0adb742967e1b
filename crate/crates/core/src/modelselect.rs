//! Choosing the number of clusters.
//!
//! Two criteria are offered. The elbow criterion reads the merge-height
//! trajectory and picks the cluster count where its decrease slows most
//! sharply. The bootstrap test compares the height of one merge with its
//! distribution under the hypothesis that the two merged clusters share a
//! single spectrum.
//!
//! A bootstrap draw multiplies the common spectrum pointwise by the
//! smoothed periodogram of fresh standard Gaussian noise of the original
//! length, then renormalizes. For the spectral merger the statistic is the
//! TV distance between two such draws. For linkage methods it is the
//! linkage value between a set of `g1` draws and a set of `g2` draws, where
//! `g1` and `g2` are the sizes of the merged clusters.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distances::tv_distance;
use crate::error::{Error, Result};
use crate::history::MergeHistory;
use crate::linkage::{linkage_value_by, Linkage};
use crate::seed::Seed;
use crate::simulate::simulate_white_noise;
use crate::spectra::{average_spectrum, normalize, smoothed_spectrum_on, BandwidthPolicy, SpectralDensity, TimeSeries};

/// Default number of bootstrap draws.
pub const DEFAULT_REPLICATES: usize = 500;

/// Fewest bootstrap draws accepted.
pub const MIN_REPLICATES: usize = 100;

/// Second differences at or below this are treated as no curvature.
const CURVATURE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElbowReport {
    /// Merge height that produced `k` clusters, for `k = N-1, ..., 1`.
    pub trajectory: Vec<f64>,
    pub suggested_k: usize,
    /// `(k, v(k-1) - 2 v(k) + v(k+1))` for `k = N-2, ..., 2`.
    pub drop_scores: Vec<(usize, f64)>,
    /// Set when the trajectory has no positive curvature anywhere.
    pub low_confidence: bool,
}

impl ElbowReport {
    /// Merge height that produced `k` clusters.
    pub fn height(&self, k: usize) -> Option<f64> {
        let n = self.trajectory.len() + 1;
        (1..n).contains(&k).then(|| self.trajectory[n - 1 - k])
    }
}

/// Elbow of the merge-height trajectory by discrete second difference.
pub fn elbow(h: &MergeHistory) -> Result<ElbowReport> {
    elbow_from_trajectory(&h.trajectory())
}

/// Elbow of a trajectory given in merge order (`N - 1` heights).
pub fn elbow_from_trajectory(trajectory: &[f64]) -> Result<ElbowReport> {
    let n = trajectory.len() + 1;
    if n < 4 {
        return Err(Error::TooFewItems { min: 4, got: n });
    }
    let v = |k: usize| trajectory[n - 1 - k];
    let drop_scores: Vec<(usize, f64)> = (2..=n - 2).rev().map(|k| (k, v(k - 1) - 2.0 * v(k) + v(k + 1))).collect();
    // first maximum in ascending k, so ties favour fewer clusters
    let best = drop_scores
        .iter()
        .rev()
        .fold(None::<(usize, f64)>, |acc, &(k, s)| match acc {
            Some((_, b)) if b >= s => acc,
            _ => Some((k, s)),
        })
        .expect("at least one score");
    let low_confidence = best.1 <= CURVATURE_TOL;
    Ok(ElbowReport {
        trajectory: trajectory.to_vec(),
        suggested_k: if low_confidence { 1 } else { best.0 },
        drop_scores,
        low_confidence,
    })
}

/// Which statistic a bootstrap draw computes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BootstrapCase {
    /// TV distance between two draws.
    Hsm,
    /// Linkage value between `g1` and `g2` draws.
    Linkage { g1: usize, g2: usize, linkage: Linkage },
}

/// One bootstrap spectrum: `f` times the smoothed periodogram of Gaussian
/// noise of length `series_len`, renormalized.
pub fn bootstrap_spectrum(
    f: &SpectralDensity,
    series_len: usize,
    bandwidth: BandwidthPolicy,
    seed: Seed,
) -> Result<SpectralDensity> {
    let noise = simulate_white_noise(series_len, seed)?;
    let noise = TimeSeries::new("noise", noise.into_values(), f.grid().fs())?;
    let z = smoothed_spectrum_on(&noise, bandwidth.resolve(series_len)?, f.grid())?;
    let values: Vec<f64> = f.values().iter().zip(z.values()).map(|(a, b)| a * b).collect();
    normalize(&SpectralDensity::new(*f.grid(), values)?)
}

/// `m` draws of the null statistic for common spectrum `f`.
///
/// Draw `i` uses `seed.derive(i)`, and its `r`-th bootstrap spectrum uses a
/// further `derive(r)`, so the sample is identical however the work is
/// scheduled.
pub fn bootstrap_tv_sample(
    f: &SpectralDensity,
    series_len: usize,
    m: usize,
    seed: Seed,
    case: BootstrapCase,
    bandwidth: BandwidthPolicy,
) -> Result<Vec<f64>> {
    if m < MIN_REPLICATES {
        return Err(Error::InvalidParameter(format!("{m} bootstrap draws, need at least {MIN_REPLICATES}")));
    }
    if !f.is_normalized() {
        return Err(Error::NotNormalized);
    }
    let (g1, g2) = match case {
        BootstrapCase::Hsm => (1, 1),
        BootstrapCase::Linkage { g1, g2, .. } => (g1, g2),
    };
    if g1 == 0 || g2 == 0 {
        return Err(Error::EmptyCluster);
    }
    (0..m)
        .into_par_iter()
        .map(|i| {
            let s = seed.derive(i as u64);
            let draws = (0..g1 + g2)
                .map(|r| bootstrap_spectrum(f, series_len, bandwidth, s.derive(r as u64)))
                .collect::<Result<Vec<_>>>()?;
            match case {
                BootstrapCase::Hsm => Ok(tv_distance(&draws[0], &draws[1])?.value),
                BootstrapCase::Linkage { linkage, .. } => {
                    let n = g1 + g2;
                    let mut d = vec![0.0; n * n];
                    for a in 0..g1 {
                        for b in g1..n {
                            d[a * n + b] = tv_distance(&draws[a], &draws[b])?.value;
                        }
                    }
                    let left: Vec<usize> = (0..g1).collect();
                    let right: Vec<usize> = (g1..n).collect();
                    linkage_value_by(&left, &right, |a, b| d[a * n + b], n, linkage)
                }
            }
        })
        .collect()
}

/// `(1 + #{b >= observed}) / (M + 1)`.
pub fn p_value(observed: f64, sample: &[f64]) -> f64 {
    let exceed = sample.iter().filter(|&&b| b >= observed).count();
    (1 + exceed) as f64 / (sample.len() + 1) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BootstrapParams {
    pub replicates: usize,
    pub alpha: f64,
    pub seed: Seed,
    /// Length of the original series.
    pub series_len: usize,
    pub bandwidth: BandwidthPolicy,
}

impl BootstrapParams {
    pub fn new(series_len: usize, seed: Seed) -> Self {
        BootstrapParams {
            replicates: DEFAULT_REPLICATES,
            alpha: 0.05,
            seed,
            series_len,
            bandwidth: BandwidthPolicy::Default,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidParameter(format!("alpha {} outside (0, 1)", self.alpha)));
        }
        Ok(())
    }
}

/// How the null spectrum and statistic are formed for a history.
#[derive(Debug, Clone, Copy)]
pub enum NullModel<'a> {
    /// Spectral-merger history with stored representatives: the null
    /// spectrum is the size-weighted mean of the two merged representatives.
    Hsm,
    /// Linkage history: the null spectrum is the mean of the members'
    /// individual normalized spectra.
    Linkage { linkage: Linkage, spectra: &'a [SpectralDensity] },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapTestResult {
    /// Tested cluster count: `k - 1` clusters under the null, `k` under the alternative.
    pub k: usize,
    pub observed: f64,
    pub boot_sample: Vec<f64>,
    pub p_value: f64,
    pub alpha: f64,
    pub reject: bool,
}

/// Tests `k - 1` clusters against `k`, using the merge that turns `k`
/// clusters into `k - 1`.
pub fn test_k_vs_k_minus_1(
    h: &MergeHistory,
    k: usize,
    params: &BootstrapParams,
    null: NullModel<'_>,
) -> Result<BootstrapTestResult> {
    params.validate()?;
    let step = *h.merge_into(k)?;
    let (left, right) = (step.left, step.right);
    let (f, case) = match null {
        NullModel::Hsm => {
            let (a, b) = match (h.representative(left), h.representative(right)) {
                (Some(a), Some(b)) => (a, b),
                _ => return Err(Error::InvalidParameter("history has no representatives".into())),
            };
            let f = average_spectrum(&[a.clone(), b.clone()], &[h.size(left) as f64, h.size(right) as f64])?;
            (normalize(&f)?, BootstrapCase::Hsm)
        }
        NullModel::Linkage { linkage, spectra } => {
            if spectra.len() != h.n() {
                return Err(Error::InvalidParameter(format!("{} spectra for {} series", spectra.len(), h.n())));
            }
            let members: Vec<SpectralDensity> =
                h.members(left).into_iter().chain(h.members(right)).map(|i| spectra[i].clone()).collect();
            let f = normalize(&average_spectrum(&members, &vec![1.0; members.len()])?)?;
            (f, BootstrapCase::Linkage { g1: h.size(left), g2: h.size(right), linkage })
        }
    };
    let seed = params.seed.derive(k as u64);
    let boot_sample = bootstrap_tv_sample(&f, params.series_len, params.replicates, seed, case, params.bandwidth)?;
    let p = p_value(step.tv, &boot_sample);
    Ok(BootstrapTestResult {
        k,
        observed: step.tv,
        boot_sample,
        p_value: p,
        alpha: params.alpha,
        reject: p < params.alpha,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionMethod {
    Elbow,
    Bootstrap,
}

impl std::str::FromStr for SelectionMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "elbow" => Ok(SelectionMethod::Elbow),
            "bootstrap" => Ok(SelectionMethod::Bootstrap),
            _ => Err(Error::UnknownName(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Selection {
    pub k: usize,
    /// Tests run by the bootstrap walk, in order.
    pub tests: Vec<BootstrapTestResult>,
    pub elbow: Option<ElbowReport>,
}

/// Chooses the number of clusters.
///
/// The bootstrap walk starts at the root and tests `k = 2, 3, ...`,
/// returning `k - 1` at the first test that is not rejected, or `N` if
/// every test rejects.
pub fn choose_k(
    h: &MergeHistory,
    method: SelectionMethod,
    params: &BootstrapParams,
    null: NullModel<'_>,
) -> Result<Selection> {
    match method {
        SelectionMethod::Elbow => {
            let report = elbow(h)?;
            Ok(Selection { k: report.suggested_k, tests: Vec::new(), elbow: Some(report) })
        }
        SelectionMethod::Bootstrap => {
            let mut tests = Vec::new();
            for k in 2..=h.n() {
                let t = test_k_vs_k_minus_1(h, k, params, null)?;
                let reject = t.reject;
                tests.push(t);
                if !reject {
                    return Ok(Selection { k: k - 1, tests, elbow: None });
                }
            }
            Ok(Selection { k: h.n(), tests, elbow: None })
        }
    }
}
