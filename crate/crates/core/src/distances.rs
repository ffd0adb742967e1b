//! Dissimilarities between spectral densities.
//!
//! [`tv_distance`] is the measure the merger algorithm is built on. The
//! others (`NP`, `LNP`, `CEP`, `SKL`) are the usual spectral competitors and
//! are only used with the classical linkage baseline.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectra::{align, periodogram_ordinates, SpectralDensity, TimeSeries, MIN_SERIES_LEN};

/// Floor applied to ordinates before any logarithm.
pub const LOG_FLOOR: f64 = 1e-12;

/// Default number of cepstral coefficients compared by [`cepstral_distance`].
pub const DEFAULT_CEPSTRAL_ORDER: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Measure {
    #[serde(rename = "TV")]
    Tv,
    #[serde(rename = "NP")]
    Np,
    #[serde(rename = "LNP")]
    Lnp,
    #[serde(rename = "CEP")]
    Cep,
    #[serde(rename = "SKL")]
    Skl,
}

impl Measure {
    pub const ALL: [Measure; 5] = [Measure::Np, Measure::Lnp, Measure::Cep, Measure::Tv, Measure::Skl];

    pub fn name(self) -> &'static str {
        match self {
            Measure::Tv => "TV",
            Measure::Np => "NP",
            Measure::Lnp => "LNP",
            Measure::Cep => "CEP",
            Measure::Skl => "SKL",
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Measure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Measure::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::UnknownName(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dissimilarity {
    pub value: f64,
    pub kind: Measure,
}

fn require_normalized(f: &SpectralDensity) -> Result<()> {
    if f.is_normalized() {
        Ok(())
    } else {
        Err(Error::NotNormalized)
    }
}

/// `1 - sum_k min(f_k, g_k) df`, clamped to `[0, 1]`.
pub fn tv_distance(f: &SpectralDensity, g: &SpectralDensity) -> Result<Dissimilarity> {
    require_normalized(f)?;
    require_normalized(g)?;
    let (f, g) = align(f, g)?;
    let common: f64 = f.values().iter().zip(g.values()).map(|(a, b)| a.min(*b)).sum::<f64>() * f.grid().df();
    Ok(Dissimilarity { value: (1.0 - common).clamp(0.0, 1.0), kind: Measure::Tv })
}

/// `(1/n) * sqrt(sum_k (f_k - g_k)^2)`.
pub fn np_distance(f: &SpectralDensity, g: &SpectralDensity) -> Result<Dissimilarity> {
    let (f, g) = align(f, g)?;
    let value = euclid(f.values().iter().zip(g.values()).map(|(a, b)| a - b)) / f.len() as f64;
    Ok(Dissimilarity { value, kind: Measure::Np })
}

/// `(1/n) * sqrt(sum_k (log f_k - log g_k)^2)` with ordinates floored at [`LOG_FLOOR`].
pub fn lnp_distance(f: &SpectralDensity, g: &SpectralDensity) -> Result<Dissimilarity> {
    let (f, g) = align(f, g)?;
    let value =
        euclid(f.values().iter().zip(g.values()).map(|(a, b)| floored_ln(*a) - floored_ln(*b))) / f.len() as f64;
    Ok(Dissimilarity { value, kind: Measure::Lnp })
}

/// Symmetric Kullback-Leibler divergence `KL(f, g) + KL(g, f)` by Riemann sums.
pub fn skl_distance(f: &SpectralDensity, g: &SpectralDensity) -> Result<Dissimilarity> {
    require_normalized(f)?;
    require_normalized(g)?;
    let (f, g) = align(f, g)?;
    let df = f.grid().df();
    let kl = |p: &[f64], q: &[f64]| -> f64 {
        p.iter().zip(q).map(|(a, b)| a * (floored_ln(*a) - floored_ln(*b))).sum::<f64>() * df
    };
    let value = kl(f.values(), g.values()) + kl(g.values(), f.values());
    Ok(Dissimilarity { value: value.max(0.0), kind: Measure::Skl })
}

/// Cepstral coefficients `theta_0..=theta_order` of the log periodogram.
///
/// With `lambda_j = j / T`, `theta_k = (1/T) sum_{j=0}^{T-1} log I(lambda_j) cos(2 pi k lambda_j)`
/// over the full symmetric grid of the centered series. Centering zeroes
/// `I(0)`, so its log is replaced by the mean of the other log ordinates;
/// a flat periodogram then gives `theta_k = 0` for every `k >= 1`.
pub fn cepstral_coefficients(x: &TimeSeries, order: usize) -> Result<Vec<f64>> {
    let t = x.len();
    if t < MIN_SERIES_LEN {
        return Err(Error::SeriesTooShort { id: x.id().to_string(), len: t, min: MIN_SERIES_LEN });
    }
    let available = (t - 1) / 2;
    if order > available {
        return Err(Error::CepstralOrder { order, available });
    }
    let mut logs: Vec<f64> = periodogram_ordinates(&x.centered()).into_iter().map(floored_ln).collect();
    logs[0] = logs[1..].iter().sum::<f64>() / (t - 1) as f64;
    let step = 2.0 * std::f64::consts::PI / t as f64;
    Ok((0..=order)
        .map(|k| logs.iter().enumerate().map(|(j, l)| l * (step * ((k * j) % t) as f64).cos()).sum::<f64>() / t as f64)
        .collect())
}

/// `sum_{k=1}^{p} (theta_k^x - theta_k^y)^2`; `theta_0` is left out.
pub fn cepstral_distance(x: &TimeSeries, y: &TimeSeries, order: usize) -> Result<Dissimilarity> {
    if order == 0 {
        return Err(Error::InvalidParameter("cepstral order must be at least 1".into()));
    }
    let a = cepstral_coefficients(x, order)?;
    let b = cepstral_coefficients(y, order)?;
    Ok(Dissimilarity { value: cepstral_distance_from_coefficients(&a, &b), kind: Measure::Cep })
}

/// Distance between precomputed coefficient vectors (index 0 is `theta_0`).
pub fn cepstral_distance_from_coefficients(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).skip(1).map(|(u, v)| (u - v) * (u - v)).sum()
}

fn floored_ln(v: f64) -> f64 {
    v.max(LOG_FLOOR).ln()
}

fn euclid(diffs: impl Iterator<Item = f64>) -> f64 {
    diffs.map(|d| d * d).sum::<f64>().sqrt()
}

/// Dispatches a spectral measure by kind. `CEP` needs the raw series and is
/// rejected here; use [`cepstral_distance`].
pub fn spectral_distance(kind: Measure, f: &SpectralDensity, g: &SpectralDensity) -> Result<Dissimilarity> {
    match kind {
        Measure::Tv => tv_distance(f, g),
        Measure::Np => np_distance(f, g),
        Measure::Lnp => lnp_distance(f, g),
        Measure::Skl => skl_distance(f, g),
        Measure::Cep => Err(Error::InvalidParameter("CEP is computed from time series, not densities".into())),
    }
}

/// Symmetric matrix with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DissimilarityMatrix {
    labels: Vec<String>,
    entries: Vec<f64>,
}

impl DissimilarityMatrix {
    /// Builds from a row-major `n x n` array, checking symmetry, zero
    /// diagonal and nonnegative finite entries.
    pub fn new(labels: Vec<String>, entries: Vec<f64>) -> Result<Self> {
        let n = labels.len();
        if entries.len() != n * n {
            return Err(Error::MalformedMatrix(format!("{} entries for {n} labels", entries.len())));
        }
        for i in 0..n {
            if entries[i * n + i] != 0.0 {
                return Err(Error::MalformedMatrix(format!("nonzero diagonal at {i}")));
            }
            for j in 0..n {
                let v = entries[i * n + j];
                if !(v.is_finite() && v >= 0.0) {
                    return Err(Error::MalformedMatrix(format!("entry ({i}, {j}) = {v}")));
                }
                if v != entries[j * n + i] {
                    return Err(Error::MalformedMatrix(format!("asymmetric at ({i}, {j})")));
                }
            }
        }
        Ok(DissimilarityMatrix { labels, entries })
    }

    /// Builds from the strict upper triangle, row by row.
    pub fn from_upper(labels: Vec<String>, upper: &[f64]) -> Result<Self> {
        let n = labels.len();
        if upper.len() != n * n.saturating_sub(1) / 2 {
            return Err(Error::MalformedMatrix(format!("{} upper entries for {n} labels", upper.len())));
        }
        let mut entries = vec![0.0; n * n];
        let mut it = upper.iter();
        for i in 0..n {
            for j in i + 1..n {
                let v = *it.next().expect("length checked");
                entries[i * n + j] = v;
                entries[j * n + i] = v;
            }
        }
        Self::new(labels, entries)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.len() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.len();
        &self.entries[i * n..(i + 1) * n]
    }
}

/// Evaluates `measure` on every unordered pair, in parallel.
pub fn pairwise_matrix<T, F>(items: &[T], measure: F) -> Result<DissimilarityMatrix>
where
    T: Sync,
    F: Fn(&T, &T) -> Result<f64> + Sync,
{
    let n = items.len();
    if n < 2 {
        return Err(Error::TooFewItems { min: 2, got: n });
    }
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let upper = pairs.par_iter().map(|&(i, j)| measure(&items[i], &items[j])).collect::<Result<Vec<f64>>>()?;
    DissimilarityMatrix::from_upper((0..n).map(|i| i.to_string()).collect(), &upper)
}

/// Pairwise matrix of a spectral measure over densities.
pub fn spectral_matrix(spectra: &[SpectralDensity], kind: Measure) -> Result<DissimilarityMatrix> {
    pairwise_matrix(spectra, |f, g| spectral_distance(kind, f, g).map(|d| d.value))
}
