//! Subcommand implementations.

use std::path::PathBuf;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;
use rayon::prelude::*;
use serde::Serialize;

use specmerge::distances::{
    cepstral_coefficients, cepstral_distance_from_coefficients, pairwise_matrix, spectral_matrix, Measure,
    DEFAULT_CEPSTRAL_ORDER,
};
use specmerge::evaluate::{contiguous_segments, parse_methods, run_experiment, Design, ExperimentConfig, Method};
use specmerge::history::{HistoryDocument, MergeHistory};
use specmerge::hsm::{hsm_cluster, HsmConfig, Variant};
use specmerge::linkage::{linkage_cluster, Linkage, LinkageSpec};
use specmerge::modelselect::{choose_k, BootstrapParams, NullModel, Selection, SelectionMethod, DEFAULT_REPLICATES};
use specmerge::simulate::MixtureDesign;
use specmerge::spectra::{normalized_spectrum, BandwidthPolicy, SpectralDensity, TimeSeries};
use specmerge::Seed;

use crate::config::ConfigFile;
use crate::io::{ingest_csv, num, read_column, Outputs};

const DEFAULT_SEED: u64 = 1;

/// Built-in data-generating designs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DesignName {
    /// Two JONSWAP wave spectra, five series each.
    Exp1,
    /// Three-cluster AR(2) mixture.
    Exp2,
    /// K clusters of unit loadings on five AR(2) latents.
    Elbow,
}

impl FromStr for DesignName {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "exp1" | "1" | "jonswap" => Ok(DesignName::Exp1),
            "exp2" | "2" | "mixture" => Ok(DesignName::Exp2),
            "elbow" => Ok(DesignName::Elbow),
            _ => Err(format!("unknown design `{s}` (exp1, exp2, elbow)")),
        }
    }
}

#[derive(Args, Debug, Default)]
pub struct DesignArgs {
    /// exp1, exp2 or elbow [default: exp1]
    #[arg(long)]
    design: Option<DesignName>,
    /// Sampling rate for exp1 [default: 1.28]
    #[arg(long, allow_hyphen_values = true)]
    fs: Option<f64>,
    /// Standard deviation of the observation noise in mixture designs.
    #[arg(long)]
    noise_sd: Option<f64>,
    /// Number of clusters for the elbow design [default: 3]
    #[arg(long)]
    clusters: Option<usize>,
    /// Series per cluster [default: 5]
    #[arg(long)]
    per_cluster: Option<usize>,
}

impl DesignArgs {
    fn resolve(self, cfg: &ConfigFile) -> Result<Design> {
        let name = cfg.or(self.design, "design", DesignName::Exp1)?;
        let fs = cfg.pick(self.fs, "fs")?;
        let noise = cfg.pick(self.noise_sd, "noise-sd")?;
        let per = cfg.pick(self.per_cluster, "per-cluster")?;
        let mut design = match name {
            DesignName::Exp1 => Design::experiment1(),
            DesignName::Exp2 => Design::experiment2(),
            DesignName::Elbow => {
                let k = cfg.or(self.clusters, "clusters", 3)?;
                Design::Mixture(MixtureDesign::five_latents(k, per.unwrap_or(5))?)
            }
        };
        match &mut design {
            Design::Jonswap { fs: design_fs, replicates, .. } => {
                if noise.is_some() {
                    bail!("--noise-sd applies to mixture designs only");
                }
                if let Some(f) = fs {
                    if !(f.is_finite() && f > 0.0) {
                        bail!("invalid sampling frequency {f}");
                    }
                    *design_fs = f;
                }
                if let Some(p) = per {
                    *replicates = p;
                }
            }
            Design::Mixture(m) => {
                if let Some(f) = fs {
                    if f != m.fs() {
                        bail!("sampling frequency {f} differs from the design's {}", m.fs());
                    }
                }
                if let Some(s) = noise {
                    m.noise_sd = s;
                }
                if let Some(p) = per {
                    m.replicates = p;
                }
                m.validate()?;
            }
        }
        Ok(design)
    }
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(flatten)]
    design: DesignArgs,
    /// Samples per series [default: 1000]
    #[arg(long)]
    len: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Serialize)]
struct SimulationDocument<'a> {
    seed: u64,
    len: usize,
    design: &'a Design,
    series: Vec<&'a str>,
    labels: &'a [usize],
}

pub fn simulate(a: SimulateArgs, cfg: &ConfigFile, mut out: Outputs) -> Result<Vec<PathBuf>> {
    out.check_free(&["simulated.csv", "simulated.json"])?;
    let design = a.design.resolve(cfg)?;
    let len = cfg.or(a.len, "len", 1000)?;
    let seed = cfg.or(a.seed, "seed", DEFAULT_SEED)?;
    let (xs, truth) = design.simulate(len, Seed(seed))?;
    let header: Vec<&str> = xs.iter().map(TimeSeries::id).collect();
    let rows: Vec<Vec<String>> = (0..len).map(|t| xs.iter().map(|x| num(x.values()[t])).collect()).collect();
    out.csv("simulated.csv", seed, &header, &rows)?;
    out.json(
        "simulated.json",
        &SimulationDocument { seed, len, design: &design, series: header.clone(), labels: truth.labels() },
    )?;
    out.commit()
}

/// Options shared by `cluster` and `nclusters`.
#[derive(Args, Debug)]
pub struct FitArgs {
    /// CSV with one series per column and ids in the header row.
    input: PathBuf,
    /// Sampling rate of the input [default: 1]
    #[arg(long, allow_hyphen_values = true)]
    fs: Option<f64>,
    /// hsm1, hsm2, tv, np, lnp, skl or cep [default: hsm2]
    #[arg(long)]
    method: Option<Method>,
    /// complete or average, for distance methods [default: complete]
    #[arg(long)]
    linkage: Option<Linkage>,
    /// Lag-window bandwidth as a fraction of the record [default: 100 lags]
    #[arg(long)]
    bandwidth: Option<f64>,
    /// elbow or bootstrap
    #[arg(long)]
    select: Option<SelectionMethod>,
    /// Bootstrap draws per test [default: 500]
    #[arg(long)]
    replicates: Option<usize>,
    /// Test level [default: 0.05]
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

struct Fitted {
    xs: Vec<TimeSeries>,
    method: Method,
    history: MergeHistory,
    /// Normalized spectra, for distance methods on spectra.
    spectra: Option<Vec<SpectralDensity>>,
    linkage: Linkage,
    bandwidth: BandwidthPolicy,
    seed: u64,
}

impl FitArgs {
    fn fit(&self, cfg: &ConfigFile) -> Result<Fitted> {
        let fs = cfg.or(self.fs, "fs", 1.0)?;
        let method = cfg.or(self.method, "method", Method::Hsm2)?;
        let linkage = cfg.or(self.linkage, "linkage", Linkage::Complete)?;
        let bandwidth = match cfg.pick(self.bandwidth, "bandwidth")? {
            Some(b) => BandwidthPolicy::Fixed(b),
            None => BandwidthPolicy::Default,
        };
        let seed = cfg.or(self.seed, "seed", DEFAULT_SEED)?;
        let xs = ingest_csv(&self.input, fs)?;
        if xs.len() < 2 {
            bail!("need at least two series, got {}", xs.len());
        }
        let (history, spectra) = match method {
            Method::Hsm1 | Method::Hsm2 => {
                let variant = if method == Method::Hsm1 { Variant::Single } else { Variant::Average };
                (hsm_cluster(&xs, &HsmConfig { variant, bandwidth })?, None)
            }
            Method::Cep => {
                let coef = xs
                    .par_iter()
                    .map(|x| cepstral_coefficients(x, DEFAULT_CEPSTRAL_ORDER))
                    .collect::<specmerge::Result<Vec<_>>>()?;
                let d = pairwise_matrix(&coef, |a, b| Ok(cepstral_distance_from_coefficients(a, b)))?;
                (linkage_cluster(&d, &LinkageSpec::new(linkage, Measure::Cep))?, None)
            }
            Method::Np | Method::Lnp | Method::Tv | Method::Skl => {
                let measure: Measure = method.name().parse()?;
                let spectra =
                    xs.par_iter().map(|x| normalized_spectrum(x, bandwidth)).collect::<specmerge::Result<Vec<_>>>()?;
                let d = spectral_matrix(&spectra, measure)?;
                (linkage_cluster(&d, &LinkageSpec::new(linkage, measure))?, Some(spectra))
            }
        };
        Ok(Fitted { xs, method, history, spectra, linkage, bandwidth, seed })
    }

    fn select(&self, cfg: &ConfigFile, fit: &Fitted, default: SelectionMethod) -> Result<Selection> {
        let how = cfg.or(self.select, "select", default)?;
        let mut params = BootstrapParams::new(fit.xs[0].len(), Seed(fit.seed));
        params.replicates = cfg.or(self.replicates, "replicates", DEFAULT_REPLICATES)?;
        params.alpha = cfg.or(self.alpha, "alpha", params.alpha)?;
        params.bandwidth = fit.bandwidth;
        let null = match (fit.method, &fit.spectra) {
            (Method::Hsm1 | Method::Hsm2, _) => NullModel::Hsm,
            (Method::Tv, Some(spectra)) => NullModel::Linkage { linkage: fit.linkage, spectra },
            _ if how == SelectionMethod::Elbow => NullModel::Hsm,
            _ => bail!("the bootstrap test needs a TV-based method (hsm1, hsm2 or tv), not {}", fit.method),
        };
        Ok(choose_k(&fit.history, how, &params, null)?)
    }
}

#[derive(Args, Debug)]
pub struct ClusterArgs {
    #[command(flatten)]
    fit: FitArgs,
    /// Cut the tree at this many clusters instead of selecting.
    #[arg(long)]
    k: Option<usize>,
}

#[derive(Serialize)]
struct HistoryOutput {
    seed: u64,
    k: usize,
    #[serde(flatten)]
    history: HistoryDocument,
}

pub fn cluster(a: ClusterArgs, cfg: &ConfigFile, mut out: Outputs) -> Result<Vec<PathBuf>> {
    out.check_free(&["history.json", "labels.csv", "trajectory.csv"])?;
    let fit = a.fit.fit(cfg)?;
    let n = fit.history.n();
    let k = match cfg.pick(a.k, "k")? {
        Some(k) if (1..=n).contains(&k) => k,
        Some(k) => bail!("k = {k} outside 1..={n}"),
        None => a.fit.select(cfg, &fit, SelectionMethod::Elbow)?.k,
    };
    let labels = fit.history.labels_at(k)?;
    let rows: Vec<[String; 2]> =
        fit.history.series_ids().iter().zip(&labels).map(|(id, l)| [id.clone(), l.to_string()]).collect();
    // the merge at step s leaves n - 1 - s clusters
    let traj: Vec<[String; 2]> =
        fit.history.steps().iter().enumerate().map(|(s, m)| [(n - 1 - s).to_string(), num(m.tv)]).collect();
    out.json("history.json", &HistoryOutput { seed: fit.seed, k, history: fit.history.to_document() })?;
    out.csv("labels.csv", fit.seed, &["series", "label"], &rows)?;
    out.csv("trajectory.csv", fit.seed, &["k", "height"], &traj)?;
    out.commit()
}

#[derive(Args, Debug)]
pub struct NclustersArgs {
    #[command(flatten)]
    fit: FitArgs,
}

#[derive(Serialize)]
struct TestRow {
    k: usize,
    observed: f64,
    p_value: f64,
    reject: bool,
}

#[derive(Serialize)]
struct NclustersOutput {
    seed: u64,
    method: String,
    trajectory: Vec<f64>,
    suggested_k: usize,
    tests: Vec<TestRow>,
    #[serde(skip_serializing_if = "Option::is_none")]
    low_confidence: Option<bool>,
}

pub fn nclusters(a: NclustersArgs, cfg: &ConfigFile, mut out: Outputs) -> Result<Vec<PathBuf>> {
    out.check_free(&["nclusters.json"])?;
    let fit = a.fit.fit(cfg)?;
    let sel = a.fit.select(cfg, &fit, SelectionMethod::Bootstrap)?;
    let doc = NclustersOutput {
        seed: fit.seed,
        method: fit.history.method().to_string(),
        trajectory: fit.history.trajectory(),
        suggested_k: sel.k,
        tests: sel
            .tests
            .iter()
            .map(|t| TestRow { k: t.k, observed: t.observed, p_value: t.p_value, reject: t.reject })
            .collect(),
        low_confidence: sel.elbow.as_ref().map(|e| e.low_confidence),
    };
    out.json("nclusters.json", &doc)?;
    out.commit()
}

#[derive(Args, Debug)]
pub struct ExperimentArgs {
    #[command(flatten)]
    design: DesignArgs,
    /// Comma-separated series lengths [default: 500,1000,2000]
    #[arg(long)]
    lengths: Option<String>,
    /// Comma-separated methods [default: all]
    #[arg(long)]
    methods: Option<String>,
    /// Monte Carlo replicates per length [default: 100]
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

fn parse_lengths(s: &str) -> Result<Vec<usize>> {
    s.split(',').map(|t| t.trim().parse::<usize>().map_err(|e| anyhow!("length `{t}`: {e}"))).collect()
}

pub fn experiment(a: ExperimentArgs, cfg: &ConfigFile, mut out: Outputs) -> Result<Vec<PathBuf>> {
    out.check_free(&["experiment.csv", "experiment_raw.csv"])?;
    let design = a.design.resolve(cfg)?;
    let lengths = parse_lengths(&cfg.or(a.lengths, "lengths", "500,1000,2000".to_string())?)?;
    let methods = match cfg.pick(a.methods, "methods")? {
        Some(list) => parse_methods(&list)?,
        None => Method::ALL.to_vec(),
    };
    let replicates = cfg.or(a.replicates, "replicates", 100)?;
    let seed = cfg.or(a.seed, "seed", DEFAULT_SEED)?;
    let report = run_experiment(&ExperimentConfig { design, lengths, methods, replicates, seed: Seed(seed) })
        .context("running experiment")?;

    let mut header = vec!["T"];
    header.extend(report.methods.iter().map(|m| m.name()));
    let table: Vec<Vec<String>> = report
        .lengths
        .iter()
        .zip(&report.means)
        .map(|(t, row)| std::iter::once(t.to_string()).chain(row.iter().map(|v| format!("{v:.4}"))).collect())
        .collect();
    let raw: Vec<[String; 4]> = report
        .raw
        .iter()
        .map(|r| [r.replicate.to_string(), r.len.to_string(), r.method.name().to_string(), num(r.index)])
        .collect();
    out.csv("experiment.csv", seed, &header, &table)?;
    out.csv("experiment_raw.csv", seed, &["replicate", "T", "method", "index"], &raw)?;
    out.commit()
}

#[derive(Args, Debug)]
pub struct SegmentsArgs {
    /// CSV holding one label per row, in time order.
    input: PathBuf,
    /// Name of the label column [default: label]
    #[arg(long)]
    column: Option<String>,
    /// Duration of one row, used for the time columns [default: 1]
    #[arg(long)]
    width: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
}

pub fn segments(a: SegmentsArgs, cfg: &ConfigFile, mut out: Outputs) -> Result<Vec<PathBuf>> {
    out.check_free(&["segments.csv"])?;
    let column = cfg.or(a.column, "column", "label".to_string())?;
    let width = cfg.or(a.width, "width", 1.0)?;
    if !(width.is_finite() && width > 0.0) {
        bail!("invalid row width {width}");
    }
    let seed = cfg.or(a.seed, "seed", DEFAULT_SEED)?;
    let labels = read_column(&a.input, &column)?;
    if labels.is_empty() {
        bail!("{}: no labels", a.input.display());
    }
    let rows: Vec<[String; 6]> = contiguous_segments(&labels)
        .into_iter()
        .map(|s| {
            [
                s.start.to_string(),
                s.end.to_string(),
                s.len().to_string(),
                num(s.start as f64 * width),
                num(s.end as f64 * width),
                s.label,
            ]
        })
        .collect();
    out.csv("segments.csv", seed, &["start", "end", "length", "start_time", "end_time", "label"], &rows)?;
    out.commit()
}
