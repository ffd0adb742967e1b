//! Synthetic series: AR(2) processes, mixtures of latent AR(2) processes,
//! Gaussian processes with a JONSWAP spectrum, and white noise.
//!
//! Every generator is a pure function of its parameters and a [`Seed`].
//! Generators that need several independent streams take them from
//! [`Seed::derive`], so output never depends on thread scheduling.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::Seed;
use crate::spectra::{resample, FrequencyGrid, SpectralDensity, TimeSeries, MIN_SERIES_LEN};

const GRAVITY: f64 = 9.81;

/// AR(2) process with a spectral peak at `eta` Hz and characteristic
/// roots of magnitude `m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ar2Spec {
    eta: f64,
    m: f64,
    fs: f64,
}

impl Ar2Spec {
    pub fn new(eta: f64, m: f64, fs: f64) -> Result<Self> {
        if !(fs.is_finite() && fs > 0.0) {
            return Err(Error::InvalidSamplingFrequency(fs));
        }
        if !(eta.is_finite() && eta > 0.0 && eta < fs / 2.0) {
            return Err(Error::InvalidParameter(format!("peak frequency {eta} outside (0, {})", fs / 2.0)));
        }
        if !(m.is_finite() && m > 1.0) {
            return Err(Error::InvalidParameter(format!("root magnitude {m} must exceed 1")));
        }
        Ok(Ar2Spec { eta, m, fs })
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    /// Peak location in radians per sample.
    pub fn w0(&self) -> f64 {
        2.0 * PI * self.eta / self.fs
    }

    /// Samples discarded before the recorded stretch.
    pub fn burn_in(&self) -> usize {
        (10.0 * self.m / (self.m - 1.0)).ceil() as usize
    }
}

/// `(phi1, phi2)` of `Z_t = phi1 Z_{t-1} + phi2 Z_{t-2} + e_t`.
pub fn ar2_coefficients(spec: &Ar2Spec) -> (f64, f64) {
    let m = spec.m;
    (2.0 * spec.w0().cos() / m, -1.0 / (m * m))
}

/// Theoretical AR(2) spectrum on `grid`, up to a constant factor
/// (unit innovation variance).
pub fn ar2_spectrum(spec: &Ar2Spec, grid: &FrequencyGrid) -> Result<SpectralDensity> {
    if grid.fs() != spec.fs {
        return Err(Error::MixedSamplingFrequency(spec.fs, grid.fs()));
    }
    let (p1, p2) = ar2_coefficients(spec);
    let values = grid
        .freqs()
        .into_iter()
        .map(|f| {
            let w = 2.0 * PI * f / spec.fs;
            let z = Complex::from_polar(1.0, -w);
            let a = Complex::new(1.0, 0.0) - p1 * z - p2 * z * z;
            1.0 / a.norm_sqr()
        })
        .collect();
    SpectralDensity::new(*grid, values)
}

fn check_len(len: usize) -> Result<()> {
    if len < MIN_SERIES_LEN {
        return Err(Error::SeriesTooShort { id: String::new(), len, min: MIN_SERIES_LEN });
    }
    Ok(())
}

fn normals(len: usize, seed: Seed) -> Vec<f64> {
    let mut rng = seed.rng();
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}

fn ar2_values(spec: &Ar2Spec, len: usize, seed: Seed) -> Vec<f64> {
    let (p1, p2) = ar2_coefficients(spec);
    let burn = spec.burn_in();
    let e = normals(len + burn, seed);
    let mut z = vec![0.0; len + burn];
    for t in 0..len + burn {
        let z1 = if t >= 1 { z[t - 1] } else { 0.0 };
        let z2 = if t >= 2 { z[t - 2] } else { 0.0 };
        z[t] = p1 * z1 + p2 * z2 + e[t];
    }
    z.split_off(burn)
}

/// AR(2) draw of length `len` with unit-variance Gaussian innovations,
/// started at zero with [`Ar2Spec::burn_in`] samples discarded.
pub fn simulate_ar2(spec: &Ar2Spec, len: usize, seed: Seed) -> Result<TimeSeries> {
    check_len(len)?;
    TimeSeries::new(format!("ar2-{}", seed), ar2_values(spec, len, seed), spec.fs)
}

/// Standard Gaussian white noise at unit sampling frequency.
pub fn simulate_white_noise(len: usize, seed: Seed) -> Result<TimeSeries> {
    check_len(len)?;
    TimeSeries::new(format!("noise-{}", seed), normals(len, seed), 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JonswapParams {
    /// Significant wave height in meters.
    pub hs: f64,
    /// Peak period in seconds.
    pub tp: f64,
}

impl JonswapParams {
    pub fn new(hs: f64, tp: f64) -> Result<Self> {
        if !(hs.is_finite() && hs > 0.0 && tp.is_finite() && tp > 0.0) {
            return Err(Error::InvalidParameter(format!("JONSWAP needs Hs > 0 and Tp > 0, got {hs}, {tp}")));
        }
        Ok(JonswapParams { hs, tp })
    }

    /// Peak angular frequency.
    pub fn omega_p(&self) -> f64 {
        PI / self.tp
    }

    /// Peak enhancement factor.
    pub fn gamma(&self) -> f64 {
        let (hs, tp) = (self.hs, self.tp);
        (3.484 * (1.0 - 0.1975 * (0.036 - 0.0056 * tp / hs.sqrt()) * tp.powi(4) / hs.powi(2))).exp()
    }

    /// Unscaled spectral shape at angular frequency `omega > 0`.
    pub fn shape(&self, omega: f64) -> f64 {
        let wp = self.omega_p();
        let s = if omega <= wp { 0.07 } else { 0.09 };
        let r = (-(omega - wp).powi(2) / (2.0 * wp * wp * s * s)).exp();
        GRAVITY * GRAVITY / omega.powi(5) * (-1.25 * (wp / omega).powi(4)).exp() * self.gamma().powf(r)
    }
}

/// JONSWAP spectrum tabulated at `omega = 2 pi f` on the grid, scaled so
/// that `4 sqrt(sum S df) = hs`.
pub fn jonswap_spectrum(p: &JonswapParams, grid: &FrequencyGrid) -> Result<SpectralDensity> {
    let raw: Vec<f64> = grid.freqs().into_iter().map(|f| p.shape(2.0 * PI * f)).collect();
    let area: f64 = raw.iter().sum::<f64>() * grid.df();
    if !(area.is_finite() && area > 0.0) {
        return Err(Error::DegenerateSpectrum);
    }
    let target = (p.hs / 4.0).powi(2);
    SpectralDensity::new(*grid, raw.into_iter().map(|v| v * target / area).collect())
}

/// Gaussian series whose spectrum is `f`, by random-phase synthesis.
///
/// Each grid frequency contributes a cosine of amplitude `sqrt(2 S df)` with
/// an independent uniform phase, so the sample variance equals
/// `sum S df`. If `f` is not on the grid of a length-`len` record at `fs`,
/// it is linearly interpolated onto that grid first.
pub fn simulate_from_spectrum(f: &SpectralDensity, len: usize, fs: f64, seed: Seed) -> Result<TimeSeries> {
    check_len(len)?;
    if f.is_empty() {
        return Err(Error::DegenerateSpectrum);
    }
    if f.grid().fs() != fs {
        return Err(Error::MixedSamplingFrequency(f.grid().fs(), fs));
    }
    let grid = FrequencyGrid::new(fs, len)?;
    let f = resample(f, &grid)?;
    let df = grid.df();
    let mut rng = seed.rng();
    let mut buf = vec![Complex::new(0.0, 0.0); len];
    for (k, s) in f.values().iter().enumerate() {
        let phase: f64 = rng.gen::<f64>() * 2.0 * PI;
        buf[k + 1] = Complex::from_polar((2.0 * s * df).sqrt(), phase);
    }
    crate::spectra::inverse_fft_in_place(&mut buf);
    TimeSeries::new(format!("gp-{}", seed), buf.into_iter().map(|c| c.re).collect(), fs)
}

/// Observed series are loadings times latent AR(2) processes plus noise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureDesign {
    pub latent: Vec<Ar2Spec>,
    /// One row per cluster, one column per latent.
    pub loadings: Vec<Vec<f64>>,
    pub noise_sd: f64,
    /// Replicates per row.
    pub replicates: usize,
}

impl MixtureDesign {
    pub fn new(latent: Vec<Ar2Spec>, loadings: Vec<Vec<f64>>, noise_sd: f64, replicates: usize) -> Result<Self> {
        let d = MixtureDesign { latent, loadings, noise_sd, replicates };
        d.validate()?;
        Ok(d)
    }

    pub fn validate(&self) -> Result<()> {
        let first = self.latent.first().ok_or(Error::TooFewItems { min: 1, got: 0 })?;
        if let Some(s) = self.latent.iter().find(|s| s.fs != first.fs) {
            return Err(Error::MixedSamplingFrequency(first.fs, s.fs));
        }
        if self.loadings.is_empty() {
            return Err(Error::InvalidParameter("design has no rows".into()));
        }
        for (i, row) in self.loadings.iter().enumerate() {
            if row.len() != self.latent.len() {
                return Err(Error::InvalidParameter(format!(
                    "row {i} has {} loadings for {} latents",
                    row.len(),
                    self.latent.len()
                )));
            }
            if row.iter().any(|w| !(w.is_finite() && *w >= 0.0)) || row.iter().all(|w| *w == 0.0) {
                return Err(Error::InvalidParameter(format!("row {i} needs nonnegative loadings, not all zero")));
            }
        }
        if !(self.noise_sd.is_finite() && self.noise_sd >= 0.0) {
            return Err(Error::InvalidParameter(format!("noise sd {}", self.noise_sd)));
        }
        if self.replicates == 0 {
            return Err(Error::InvalidParameter("replicates must be positive".into()));
        }
        Ok(())
    }

    pub fn fs(&self) -> f64 {
        self.latent[0].fs
    }

    /// Number of clusters `K`.
    pub fn k(&self) -> usize {
        self.loadings.len()
    }

    /// Total number of series, `K n`.
    pub fn n_series(&self) -> usize {
        self.k() * self.replicates
    }

    /// Three clusters of five series at 1 Hz from latents peaking at 0.1,
    /// 0.13 and 0.16 Hz (`M = 1.1`) with loadings (1,0,0), (0,1,0), (0,1,1).
    pub fn three_peaks() -> Self {
        let latent = [0.1, 0.13, 0.16].map(|eta| Ar2Spec::new(eta, 1.1, 1.0).expect("valid"));
        let loadings = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 1.0, 1.0]];
        MixtureDesign::new(latent.to_vec(), loadings, 1.0, 5).expect("valid")
    }

    /// Five sharp latents at 2, 6, 10, 21 and 40 Hz (`M = 1.01`, 100 Hz);
    /// cluster `i` loads on latent `i` alone, for `1 <= k <= 5`.
    pub fn five_latents(k: usize, replicates: usize) -> Result<Self> {
        if !(1..=5).contains(&k) {
            return Err(Error::InvalidParameter(format!("five-latent design supports 1..=5 clusters, got {k}")));
        }
        let latent = [2.0, 6.0, 10.0, 21.0, 40.0]
            .iter()
            .map(|&eta| Ar2Spec::new(eta, 1.01, 100.0))
            .collect::<Result<Vec<_>>>()?;
        let loadings = (0..k).map(|i| (0..5).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        MixtureDesign::new(latent, loadings, 1.0, replicates)
    }
}

/// A simulated series with the index of the design row that generated it.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSeries {
    pub series: TimeSeries,
    pub label: usize,
}

/// Simulates every replicate of every design row.
///
/// Series are ordered row by row. Each replicate draws its own latent paths
/// and noise: series `s` uses `seed.derive(s)`, and within it latent `j`
/// uses `derive(j)` and the noise uses `derive(latent count)`.
pub fn simulate_mixture(design: &MixtureDesign, len: usize, seed: Seed) -> Result<Vec<LabeledSeries>> {
    design.validate()?;
    check_len(len)?;
    let nl = design.latent.len();
    let mut out = Vec::with_capacity(design.n_series());
    for (row, weights) in design.loadings.iter().enumerate() {
        for rep in 0..design.replicates {
            let s = row * design.replicates + rep;
            let base = seed.derive(s as u64);
            let mut x = vec![0.0; len];
            for (j, (spec, w)) in design.latent.iter().zip(weights).enumerate() {
                if *w == 0.0 {
                    continue;
                }
                for (acc, z) in x.iter_mut().zip(ar2_values(spec, len, base.derive(j as u64))) {
                    *acc += w * z;
                }
            }
            if design.noise_sd > 0.0 {
                for (acc, e) in x.iter_mut().zip(normals(len, base.derive(nl as u64))) {
                    *acc += design.noise_sd * e;
                }
            }
            let series = TimeSeries::new(format!("c{}r{}", row + 1, rep + 1), x, design.fs())?;
            out.push(LabeledSeries { series, label: row });
        }
    }
    Ok(out)
}
