//! Raw, smoothed and normalized spectral density estimates.
//!
//! All estimates live on the positive Fourier grid of a series of length
//! `T` sampled at `fs` Hz: `f_k = k * fs / T` for `k = 1..=n` with
//! `n = floor((T - 1) / 2)`. Zero frequency and the Nyquist ordinate are
//! excluded, and every integral is a left Riemann sum with `df = fs / T`.
//!
//! The smoothed estimator is the Parzen lag-window estimate. Its bandwidth
//! is the lag-truncation point expressed as a fraction of the series
//! length: a bandwidth `b` keeps autocovariances up to lag
//! `L = round(b * T)`. The default bandwidth is `100 / T`, i.e. a fixed
//! truncation at 100 lags.

use std::borrow::Cow;
use std::cell::RefCell;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shortest series accepted by any spectral operation.
pub const MIN_SERIES_LEN: usize = 8;

/// Number of lags kept by the default bandwidth `100 / T`.
pub const DEFAULT_LAG_SPAN: f64 = 100.0;

/// Upper clamp applied to the default bandwidth for short series
/// (`T <= 400`), where `100 / T` would leave the valid range.
pub const MAX_DEFAULT_BANDWIDTH: f64 = 0.25;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn forward_fft(len: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(len))
}

fn inverse_fft(len: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(len))
}

/// Unnormalized inverse DFT in place.
pub(crate) fn inverse_fft_in_place(buf: &mut [Complex<f64>]) {
    inverse_fft(buf.len()).process(buf);
}

/// A uniformly sampled, real-valued signal.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    id: String,
    values: Vec<f64>,
    fs: f64,
}

impl TimeSeries {
    pub fn new(id: impl Into<String>, values: Vec<f64>, fs: f64) -> Result<Self> {
        let id = id.into();
        if !(fs.is_finite() && fs > 0.0) {
            return Err(Error::InvalidSamplingFrequency(fs));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteSample { id, index });
        }
        Ok(TimeSeries { id, values, fs })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        if self.values.is_empty() {
            return 0.0;
        }
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Sample variance with divisor `T`.
    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / self.values.len() as f64
    }

    pub fn centered(&self) -> Vec<f64> {
        let m = self.mean();
        self.values.iter().map(|v| v - m).collect()
    }

    /// The natural estimation grid of this series.
    pub fn grid(&self) -> Result<FrequencyGrid> {
        FrequencyGrid::new(self.fs, self.values.len())
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    fn check_spectral_len(&self) -> Result<()> {
        if self.values.len() < MIN_SERIES_LEN {
            return Err(Error::SeriesTooShort { id: self.id.clone(), len: self.values.len(), min: MIN_SERIES_LEN });
        }
        Ok(())
    }
}

/// Positive Fourier frequencies of a length-`T` record sampled at `fs` Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    fs: f64,
    series_len: usize,
}

impl FrequencyGrid {
    pub fn new(fs: f64, series_len: usize) -> Result<Self> {
        if !(fs.is_finite() && fs > 0.0) {
            return Err(Error::InvalidSamplingFrequency(fs));
        }
        if series_len < 3 {
            return Err(Error::TooFewItems { min: 3, got: series_len });
        }
        Ok(FrequencyGrid { fs, series_len })
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    /// Length `T` of the record the grid belongs to.
    pub fn series_len(&self) -> usize {
        self.series_len
    }

    /// Number of ordinates, `floor((T - 1) / 2)`.
    pub fn len(&self) -> usize {
        (self.series_len - 1) / 2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Grid spacing in Hz.
    pub fn df(&self) -> f64 {
        self.fs / self.series_len as f64
    }

    /// Frequency of ordinate `i` (0-based), in Hz.
    pub fn freq(&self, i: usize) -> f64 {
        (i + 1) as f64 * self.fs / self.series_len as f64
    }

    pub fn freqs(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.freq(i)).collect()
    }
}

/// A nonnegative spectral density tabulated on a [`FrequencyGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDensity {
    grid: FrequencyGrid,
    values: Vec<f64>,
    normalized: bool,
    bandwidth: Option<f64>,
}

impl SpectralDensity {
    /// Wraps raw ordinates. Values must be finite and nonnegative.
    pub fn new(grid: FrequencyGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!("{} ordinates for a grid of {}", values.len(), grid.len())));
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidOrdinate { index, value });
        }
        Ok(SpectralDensity { grid, values, normalized: false, bandwidth: None })
    }

    pub fn grid(&self) -> &FrequencyGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn freqs(&self) -> Vec<f64> {
        self.grid.freqs()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Smoothing bandwidth used to produce this estimate, if any.
    pub fn bandwidth(&self) -> Option<f64> {
        self.bandwidth
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Riemann sum of the ordinates.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.df()
    }

    /// Frequency (Hz) of the largest ordinate; first one wins on ties.
    pub fn peak_frequency(&self) -> f64 {
        self.grid.freq(self.peak_index())
    }

    pub fn peak_index(&self) -> usize {
        let mut best = 0;
        for (i, v) in self.values.iter().enumerate() {
            if *v > self.values[best] {
                best = i;
            }
        }
        best
    }

    /// Multiplies every ordinate by `c > 0`. The result is unnormalized.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::InvalidParameter(format!("scale factor {c}")));
        }
        Ok(SpectralDensity {
            grid: self.grid,
            values: self.values.iter().map(|v| v * c).collect(),
            normalized: false,
            bandwidth: self.bandwidth,
        })
    }

    pub(crate) fn from_parts(grid: FrequencyGrid, values: Vec<f64>, normalized: bool, bandwidth: Option<f64>) -> Self {
        debug_assert_eq!(grid.len(), values.len());
        SpectralDensity { grid, values, normalized, bandwidth }
    }
}

/// How the smoothing bandwidth is chosen for a series of a given length.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub enum BandwidthPolicy {
    /// `100 / T`, clamped to [`MAX_DEFAULT_BANDWIDTH`].
    #[default]
    Default,
    Fixed(f64),
}

impl BandwidthPolicy {
    pub fn resolve(self, series_len: usize) -> Result<f64> {
        let b = match self {
            BandwidthPolicy::Default => default_bandwidth(series_len),
            BandwidthPolicy::Fixed(b) => b,
        };
        check_bandwidth(b)?;
        Ok(b)
    }
}

pub fn default_bandwidth(series_len: usize) -> f64 {
    (DEFAULT_LAG_SPAN / series_len as f64).min(MAX_DEFAULT_BANDWIDTH)
}

fn check_bandwidth(b: f64) -> Result<()> {
    if b.is_finite() && b > 0.0 && b < 0.5 {
        Ok(())
    } else {
        Err(Error::BandwidthOutOfRange(b))
    }
}

/// Lag-truncation point for bandwidth `b` on a record of `series_len` samples.
pub fn max_lag(bandwidth: f64, series_len: usize) -> usize {
    let lag = (bandwidth * series_len as f64).round() as usize;
    lag.clamp(1, series_len.saturating_sub(1).max(1))
}

/// Parzen lag window on `|u| <= 1`.
pub fn parzen_window(u: f64) -> f64 {
    let u = u.abs();
    if u <= 0.5 {
        1.0 - 6.0 * u * u + 6.0 * u * u * u
    } else if u <= 1.0 {
        2.0 * (1.0 - u).powi(3)
    } else {
        0.0
    }
}

/// `T^{-1} |sum_t x_t e^{-2 pi i k t / T}|^2` for every `k = 0..T`.
///
/// The input is used as given; callers center it first.
pub fn periodogram_ordinates(x: &[f64]) -> Vec<f64> {
    let t = x.len();
    if t == 0 {
        return Vec::new();
    }
    let mut buf: Vec<Complex<f64>> = x.iter().map(|&v| Complex::new(v, 0.0)).collect();
    forward_fft(t).process(&mut buf);
    buf.iter().map(|c| c.norm_sqr() / t as f64).collect()
}

/// Biased sample autocovariances `gamma(0..=max_lag)` of an already
/// centered sequence (divisor `T`).
pub fn autocovariances(x: &[f64], max_lag: usize) -> Vec<f64> {
    let t = x.len();
    let max_lag = max_lag.min(t.saturating_sub(1));
    let m = (2 * t).next_power_of_two();
    let mut buf = vec![Complex::new(0.0, 0.0); m];
    for (b, &v) in buf.iter_mut().zip(x) {
        b.re = v;
    }
    forward_fft(m).process(&mut buf);
    for c in buf.iter_mut() {
        *c = Complex::new(c.norm_sqr(), 0.0);
    }
    inverse_fft(m).process(&mut buf);
    let scale = 1.0 / (m as f64 * t as f64);
    buf[..=max_lag].iter().map(|c| c.re * scale).collect()
}

/// Raw periodogram on the positive grid, after mean-centering.
pub fn periodogram(x: &TimeSeries) -> Result<SpectralDensity> {
    x.check_spectral_len()?;
    let grid = x.grid()?;
    let full = periodogram_ordinates(&x.centered());
    let values = full[1..=grid.len()].to_vec();
    Ok(SpectralDensity::from_parts(grid, values, false, None))
}

/// Parzen lag-window estimate on the series' own grid.
pub fn smoothed_spectrum(x: &TimeSeries, bandwidth: f64) -> Result<SpectralDensity> {
    let grid = x.grid()?;
    smoothed_spectrum_on(x, bandwidth, &grid)
}

/// Parzen lag-window estimate evaluated on an arbitrary grid sharing the
/// series' sampling frequency.
///
/// The estimate is a trigonometric polynomial in frequency, so it can be
/// evaluated exactly on any grid; this is how spectra of series with
/// different lengths are placed on a common grid.
pub fn smoothed_spectrum_on(x: &TimeSeries, bandwidth: f64, grid: &FrequencyGrid) -> Result<SpectralDensity> {
    x.check_spectral_len()?;
    check_bandwidth(bandwidth)?;
    if grid.fs() != x.fs() {
        return Err(Error::MixedSamplingFrequency(x.fs(), grid.fs()));
    }
    let lag = max_lag(bandwidth, x.len());
    let acov = autocovariances(&x.centered(), lag);
    let values = lag_window_on_grid(&acov, lag, grid);
    Ok(SpectralDensity::from_parts(*grid, values, false, Some(bandwidth)))
}

/// `sum_{|h| <= L} w(h / L) gamma(h) e^{-i omega_k h}` at the grid's angular
/// frequencies, via one FFT of the grid's record length. Lags beyond the
/// record length wrap around, which is exact because the exponential is
/// periodic in `h`.
fn lag_window_on_grid(acov: &[f64], lag: usize, grid: &FrequencyGrid) -> Vec<f64> {
    let g = grid.series_len();
    let mut buf = vec![Complex::new(0.0, 0.0); g];
    let mut abs_total = 0.0;
    for (h, &gamma) in acov.iter().enumerate().take(lag + 1) {
        let c = parzen_window(h as f64 / lag as f64) * gamma;
        abs_total += c.abs();
        if h == 0 {
            buf[0].re += c;
        } else {
            buf[h % g].re += c;
            buf[(g - h % g) % g].re += c;
        }
    }
    forward_fft(g).process(&mut buf);
    let tol = 1e-12 * abs_total.max(f64::MIN_POSITIVE);
    buf[1..=grid.len()]
        .iter()
        .map(|c| {
            // The Parzen spectral window is nonnegative, so anything below
            // zero is rounding.
            debug_assert!(c.re >= -tol, "ordinate {} below rounding tolerance", c.re);
            c.re.max(0.0)
        })
        .collect()
}

/// Rescales to unit Riemann sum. Already-normalized input is returned as is.
pub fn normalize(f: &SpectralDensity) -> Result<SpectralDensity> {
    if f.normalized {
        return Ok(f.clone());
    }
    let mass = f.mass();
    if !(mass.is_finite() && mass > 0.0) {
        return Err(Error::DegenerateSpectrum);
    }
    let values = f.values.iter().map(|v| v / mass).collect();
    Ok(SpectralDensity::from_parts(f.grid, values, true, f.bandwidth))
}

/// Normalized Parzen estimate with the bandwidth chosen by `policy`.
pub fn normalized_spectrum(x: &TimeSeries, policy: BandwidthPolicy) -> Result<SpectralDensity> {
    let b = policy.resolve(x.len())?;
    normalize(&smoothed_spectrum(x, b)?)
}

/// Joins mean-centered copies of `xs` in the given order.
pub fn concat_series(xs: &[TimeSeries]) -> Result<TimeSeries> {
    let first = xs.first().ok_or(Error::TooFewItems { min: 1, got: 0 })?;
    let fs = first.fs();
    let mut values = Vec::with_capacity(xs.iter().map(TimeSeries::len).sum());
    for x in xs {
        if x.fs() != fs {
            return Err(Error::MixedSamplingFrequency(fs, x.fs()));
        }
        values.extend(x.centered());
    }
    let id = xs.iter().map(TimeSeries::id).collect::<Vec<_>>().join("+");
    TimeSeries::new(id, values, fs)
}

/// Smoothed spectrum of the concatenation of `xs`, on the concatenation's
/// own grid. The bandwidth policy is resolved against the total length.
pub fn concat_spectrum(xs: &[TimeSeries], policy: BandwidthPolicy) -> Result<SpectralDensity> {
    let joined = concat_series(xs)?;
    let b = policy.resolve(joined.len())?;
    smoothed_spectrum(&joined, b)
}

/// Like [`concat_spectrum`], evaluated on `grid`.
pub fn concat_spectrum_on(xs: &[TimeSeries], policy: BandwidthPolicy, grid: &FrequencyGrid) -> Result<SpectralDensity> {
    let joined = concat_series(xs)?;
    let b = policy.resolve(joined.len())?;
    smoothed_spectrum_on(&joined, b, grid)
}

/// Pointwise convex combination of densities on one grid.
///
/// Weights are rescaled to sum to one. If every input is normalized, the
/// result is renormalized as well.
pub fn average_spectrum(densities: &[SpectralDensity], weights: &[f64]) -> Result<SpectralDensity> {
    let first = densities.first().ok_or(Error::TooFewItems { min: 1, got: 0 })?;
    if weights.len() != densities.len() {
        return Err(Error::InvalidWeights(format!("{} weights for {} densities", weights.len(), densities.len())));
    }
    if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::InvalidWeights("weights must be finite and nonnegative".into()));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return Err(Error::InvalidWeights("weights sum to zero".into()));
    }
    for d in densities {
        if d.grid != first.grid {
            return Err(Error::GridMismatch("densities to average differ in grid".into()));
        }
    }
    let mut values = vec![0.0; first.len()];
    for (d, w) in densities.iter().zip(weights) {
        let w = w / total;
        for (acc, v) in values.iter_mut().zip(&d.values) {
            *acc += w * v;
        }
    }
    let bandwidth = first.bandwidth.filter(|b| densities.iter().all(|d| d.bandwidth == Some(*b)));
    let avg = SpectralDensity::from_parts(first.grid, values, false, bandwidth);
    if densities.iter().all(|d| d.normalized) {
        normalize(&avg)
    } else {
        Ok(avg)
    }
}

/// Linear interpolation onto `grid` (flat beyond the source's end points),
/// renormalized when the source was normalized.
pub fn resample(f: &SpectralDensity, grid: &FrequencyGrid) -> Result<SpectralDensity> {
    if f.grid == *grid {
        return Ok(f.clone());
    }
    let src = f.grid;
    let df = src.df();
    let last = f.len() - 1;
    let values = (0..grid.len())
        .map(|i| {
            // position in source index units; source ordinate i sits at (i + 1) * df
            let pos = grid.freq(i) / df - 1.0;
            if pos <= 0.0 {
                f.values[0]
            } else if pos >= last as f64 {
                f.values[last]
            } else {
                let lo = pos.floor() as usize;
                let frac = pos - lo as f64;
                f.values[lo] * (1.0 - frac) + f.values[lo + 1] * frac
            }
        })
        .collect();
    let out = SpectralDensity::from_parts(*grid, values, false, f.bandwidth);
    if f.normalized {
        normalize(&out)
    } else {
        Ok(out)
    }
}

/// Brings two densities onto a common grid: the coarser one is resampled
/// onto the finer one. Grids must share the sampling frequency.
pub fn align<'a>(
    f: &'a SpectralDensity,
    g: &'a SpectralDensity,
) -> Result<(Cow<'a, SpectralDensity>, Cow<'a, SpectralDensity>)> {
    if f.grid == g.grid {
        return Ok((Cow::Borrowed(f), Cow::Borrowed(g)));
    }
    if f.grid.fs() != g.grid.fs() {
        return Err(Error::GridMismatch(format!("sampling frequencies {} Hz and {} Hz", f.grid.fs(), g.grid.fs())));
    }
    if f.grid.series_len() >= g.grid.series_len() {
        Ok((Cow::Borrowed(f), Cow::Owned(resample(g, &f.grid)?)))
    } else {
        Ok((Cow::Owned(resample(f, &g.grid)?), Cow::Borrowed(g)))
    }
}
