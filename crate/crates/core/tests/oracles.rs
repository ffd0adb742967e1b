//! Checks against independent reference computations and seeded Monte
//! Carlo runs.

use std::f64::consts::PI;

use specmerge::distances::{cepstral_coefficients, cepstral_distance, lnp_distance, np_distance, tv_distance};
use specmerge::evaluate::{contiguous_segments, similarity_index, Design, Partition};
use specmerge::history::MergeHistory;
use specmerge::hsm::{hsm_cluster, HsmConfig, Variant};
use specmerge::linkage::Linkage;
use specmerge::modelselect::{
    bootstrap_tv_sample, choose_k, test_k_vs_k_minus_1, BootstrapCase, BootstrapParams, NullModel, SelectionMethod,
};
use specmerge::seed::Seed;
use specmerge::simulate::{
    ar2_coefficients, ar2_spectrum, jonswap_spectrum, simulate_ar2, simulate_from_spectrum, simulate_white_noise,
    Ar2Spec, JonswapParams,
};
use specmerge::spectra::{
    concat_spectrum, normalize, normalized_spectrum, smoothed_spectrum, BandwidthPolicy, FrequencyGrid,
    SpectralDensity, TimeSeries,
};

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn quantile(mut v: Vec<f64>, q: f64) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v[((v.len() - 1) as f64 * q).round() as usize]
}

fn spectrum(x: &TimeSeries) -> SpectralDensity {
    normalized_spectrum(x, BandwidthPolicy::Default).unwrap()
}

fn ar2_pair(len: usize, seed: Seed, a: &Ar2Spec, b: &Ar2Spec) -> TimeSeries {
    let x = simulate_ar2(a, len, seed.derive(0)).unwrap();
    let y = simulate_ar2(b, len, seed.derive(1)).unwrap();
    let v = x.values().iter().zip(y.values()).map(|(u, w)| u + w).collect();
    TimeSeries::new("mix", v, a.fs()).unwrap()
}

#[test]
fn two_model_illustration_recovers_models() {
    // 3 series with peaks at 10 and 21 Hz, 3 with peaks at 10 and 40 Hz
    let p = |eta| Ar2Spec::new(eta, 1.01, 100.0).unwrap();
    let (p10, p21, p40) = (p(10.0), p(21.0), p(40.0));
    let truth = Partition::from_labels(&[0, 0, 0, 1, 1, 1]).unwrap();
    let mut hits = 0;
    for r in 0..100u64 {
        let s = Seed(600).derive(r);
        let xs: Vec<TimeSeries> = (0..6)
            .map(|i| {
                let other = if i < 3 { &p21 } else { &p40 };
                ar2_pair(1000, s.derive(i), &p10, other)
            })
            .collect();
        let h = hsm_cluster(&xs, &HsmConfig::new(Variant::Single)).unwrap();
        let found = Partition::from_labels(&h.labels_at(2).unwrap()).unwrap();
        if similarity_index(&truth, &found).unwrap() == 1.0 {
            hits += 1;
        }
    }
    assert!(hits >= 90, "{hits} of 100");
}

#[test]
fn same_process_draws_are_close() {
    let spec = Ar2Spec::new(0.1, 1.1, 1.0).unwrap();
    let d: Vec<f64> = (0..100u64)
        .map(|r| {
            let s = Seed(610).derive(r);
            let x = simulate_ar2(&spec, 2000, s.derive(0)).unwrap();
            let y = simulate_ar2(&spec, 2000, s.derive(1)).unwrap();
            tv_distance(&spectrum(&x), &spectrum(&y)).unwrap().value
        })
        .collect();
    let q95 = quantile(d, 0.95);
    assert!(q95 < 0.15, "95th percentile {q95}");
}

#[test]
fn concatenation_is_closer_to_the_truth() {
    let spec = Ar2Spec::new(0.1, 1.1, 1.0).unwrap();
    let grid = FrequencyGrid::new(1.0, 1000).unwrap();
    let truth = normalize(&ar2_spectrum(&spec, &grid).unwrap()).unwrap();
    let (mut single, mut joined) = (0.0, 0.0);
    for r in 0..100u64 {
        let s = Seed(620).derive(r);
        let x = simulate_ar2(&spec, 1000, s.derive(0)).unwrap();
        let y = simulate_ar2(&spec, 1000, s.derive(1)).unwrap();
        single += tv_distance(&spectrum(&x), &truth).unwrap().value;
        let c = normalize(&concat_spectrum(&[x, y], BandwidthPolicy::Default).unwrap()).unwrap();
        joined += tv_distance(&c, &truth).unwrap().value;
    }
    assert!(joined < single, "concatenated {joined} vs single {single}");
}

#[test]
fn self_concatenation_keeps_the_peak() {
    let spec = Ar2Spec::new(0.13, 1.1, 1.0).unwrap();
    let x = simulate_ar2(&spec, 1000, Seed(630)).unwrap();
    let one = spectrum(&x);
    let two = concat_spectrum(&[x.clone(), x], BandwidthPolicy::Default).unwrap();
    assert!((one.peak_frequency() - two.peak_frequency()).abs() <= one.grid().df().max(two.grid().df()));
}

#[test]
fn lag_one_autocorrelation_matches_yule_walker() {
    let spec = Ar2Spec::new(0.1, 1.1, 1.0).unwrap();
    let (p1, p2) = ar2_coefficients(&spec);
    let rho1 = p1 / (1.0 - p2);
    let r: Vec<f64> = (0..200u64)
        .map(|i| {
            let x = simulate_ar2(&spec, 1000, Seed(640).derive(i)).unwrap();
            let c = x.centered();
            let num: f64 = c.windows(2).map(|w| w[0] * w[1]).sum();
            num / c.iter().map(|v| v * v).sum::<f64>()
        })
        .collect();
    let mean = r.iter().sum::<f64>() / r.len() as f64;
    let sd = (r.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r.len() - 1) as f64).sqrt();
    assert!((mean - rho1).abs() <= 4.0 * sd / (r.len() as f64).sqrt() + 2.0 / 1000.0, "{mean} vs {rho1}");
}

#[test]
fn ar2_estimates_converge_with_length() {
    let spec = Ar2Spec::new(0.13, 1.1, 1.0).unwrap();
    let dist_at = |len: usize| {
        let truth = normalize(&ar2_spectrum(&spec, &FrequencyGrid::new(1.0, len).unwrap()).unwrap()).unwrap();
        median(
            (0..100u64)
                .map(|r| {
                    let x = simulate_ar2(&spec, len, Seed(650).derive(r)).unwrap();
                    tv_distance(&spectrum(&x), &truth).unwrap().value
                })
                .collect(),
        )
    };
    let (short, long) = (dist_at(500), dist_at(2000));
    assert!(long < short, "{long} vs {short}");
}

#[test]
fn flat_spectrum_synthesis_is_white() {
    let grid = FrequencyGrid::new(1.0, 2000).unwrap();
    let flat = SpectralDensity::new(grid, vec![1.0; grid.len()]).unwrap();
    let x = simulate_from_spectrum(&flat, 2000, 1.0, Seed(660)).unwrap();
    let c = x.centered();
    let r1: f64 = c.windows(2).map(|w| w[0] * w[1]).sum::<f64>() / c.iter().map(|v| v * v).sum::<f64>();
    assert!(r1.abs() < 3.0 / 2000f64.sqrt(), "{r1}");
}

#[test]
fn white_noise_moments() {
    let t = 4000;
    let x = simulate_white_noise(t, Seed(670)).unwrap();
    assert!(x.mean().abs() < 4.0 / (t as f64).sqrt());
    assert!((x.variance() - 1.0).abs() < 4.0 * (2.0 / t as f64).sqrt());
}

#[test]
fn jonswap_shape_and_pair_distance() {
    let hs: f64 = 3.0;
    let a = JonswapParams::new(hs, 3.6 * hs.sqrt()).unwrap();
    let b = JonswapParams::new(hs, 4.1 * hs.sqrt()).unwrap();
    let grid = FrequencyGrid::new(1.28, 2000).unwrap();
    let sa = jonswap_spectrum(&a, &grid).unwrap();
    let fp = a.omega_p() / (2.0 * PI);
    assert!((sa.peak_frequency() - fp).abs() <= grid.df());
    let sb = jonswap_spectrum(&b, &grid).unwrap();
    let d = tv_distance(&normalize(&sa).unwrap(), &normalize(&sb).unwrap()).unwrap().value;
    // regression constant recorded at first run
    assert!(d > 0.0 && d < 0.5);
    assert!((d - 0.338_382).abs() < 1e-6, "{d}");
}

#[test]
fn jonswap_synthesis_recovers_its_spectrum() {
    let a = JonswapParams::new(3.0, 3.6 * 3f64.sqrt()).unwrap();
    let grid = FrequencyGrid::new(1.28, 2000).unwrap();
    let target = normalize(&jonswap_spectrum(&a, &grid).unwrap()).unwrap();
    let d: Vec<f64> = (0..50u64)
        .map(|r| {
            let x = simulate_from_spectrum(&target, 2000, 1.28, Seed(680).derive(r)).unwrap();
            tv_distance(&spectrum(&x), &target).unwrap().value
        })
        .collect();
    let m = median(d);
    assert!(m < 0.2, "{m}");
}

/// Cepstral coefficient by direct quadrature over `lambda = j / T`, using
/// a plain DFT for the periodogram.
fn cepstrum_by_quadrature(x: &TimeSeries, k: usize) -> f64 {
    let c = x.centered();
    let t = c.len();
    let logs: Vec<f64> = (0..t)
        .map(|j| {
            let (mut re, mut im) = (0.0, 0.0);
            for (s, v) in c.iter().enumerate() {
                let a = -2.0 * PI * (j * s) as f64 / t as f64;
                re += v * a.cos();
                im += v * a.sin();
            }
            ((re * re + im * im) / t as f64).max(1e-12).ln()
        })
        .collect();
    let fill = logs[1..].iter().sum::<f64>() / (t - 1) as f64;
    (0..t)
        .map(|j| {
            let l = if j == 0 { fill } else { logs[j] };
            l * (2.0 * PI * (k * j) as f64 / t as f64).cos()
        })
        .sum::<f64>()
        / t as f64
}

#[test]
fn cepstrum_matches_quadrature() {
    let spec = Ar2Spec::new(0.2, 1.2, 1.0).unwrap();
    let x = simulate_ar2(&spec, 257, Seed(690)).unwrap();
    let y = simulate_white_noise(257, Seed(691)).unwrap();
    let cx = cepstral_coefficients(&x, 10).unwrap();
    for (k, c) in cx.iter().enumerate() {
        assert!((c - cepstrum_by_quadrature(&x, k)).abs() < 1e-10, "k = {k}");
    }
    let cy = cepstral_coefficients(&y, 10).unwrap();
    let direct: f64 = (1..=10).map(|k| (cx[k] - cy[k]).powi(2)).sum();
    assert!((cepstral_distance(&x, &y, 10).unwrap().value - direct).abs() < 1e-12);
}

#[test]
fn np_and_lnp_match_direct_sums() {
    let grid = FrequencyGrid::new(1.0, 41).unwrap();
    let f: Vec<f64> = (0..20).map(|i| 1.0 + (i as f64 * 0.7).sin().abs()).collect();
    let g: Vec<f64> = (0..20).map(|i| 0.5 + (i as f64 * 0.3).cos().abs()).collect();
    let (fd, gd) = (SpectralDensity::new(grid, f.clone()).unwrap(), SpectralDensity::new(grid, g.clone()).unwrap());
    let np = (f.iter().zip(&g).map(|(a, b)| (a - b).powi(2)).sum::<f64>()).sqrt() / 20.0;
    let lnp = (f.iter().zip(&g).map(|(a, b)| (a.ln() - b.ln()).powi(2)).sum::<f64>()).sqrt() / 20.0;
    assert!((np_distance(&fd, &gd).unwrap().value - np).abs() < 1e-14);
    assert!((lnp_distance(&fd, &gd).unwrap().value - lnp).abs() < 1e-14);
}

#[test]
fn segment_durations_match_run_lengths() {
    let x = simulate_white_noise(138, Seed(700)).unwrap();
    let labels: Vec<u8> = x
        .values()
        .iter()
        .map(|v| {
            if *v > 0.5 {
                2
            } else if *v > -0.5 {
                1
            } else {
                0
            }
        })
        .collect();
    // reference encoder: count boundaries
    let mut lengths = Vec::new();
    let mut run = 1;
    for i in 1..labels.len() {
        if labels[i] == labels[i - 1] {
            run += 1;
        } else {
            lengths.push(run);
            run = 1;
        }
    }
    lengths.push(run);
    let segs = contiguous_segments(&labels);
    assert_eq!(segs.iter().map(|s| s.len()).collect::<Vec<_>>(), lengths);
    assert_eq!(lengths.iter().sum::<usize>(), 138);
}

#[test]
fn bootstrap_spread_shrinks_with_length() {
    let spec = Ar2Spec::new(0.13, 1.1, 1.0).unwrap();
    let mean_at = |len: usize| {
        let f = normalize(&ar2_spectrum(&spec, &FrequencyGrid::new(1.0, len).unwrap()).unwrap()).unwrap();
        let s = bootstrap_tv_sample(&f, len, 200, Seed(710), BootstrapCase::Hsm, BandwidthPolicy::Default).unwrap();
        s.iter().sum::<f64>() / s.len() as f64
    };
    assert!(mean_at(2000) < mean_at(500));
}

#[test]
fn case_two_complete_not_below_average() {
    let spec = Ar2Spec::new(0.13, 1.1, 1.0).unwrap();
    let f = normalize(&ar2_spectrum(&spec, &FrequencyGrid::new(1.0, 500).unwrap()).unwrap()).unwrap();
    let run = |linkage| {
        let case = BootstrapCase::Linkage { g1: 2, g2: 3, linkage };
        bootstrap_tv_sample(&f, 500, 100, Seed(720), case, BandwidthPolicy::Default).unwrap()
    };
    let (c, a) = (run(Linkage::Complete), run(Linkage::Average));
    assert!(c.iter().zip(&a).all(|(x, y)| x >= y));
}

fn ar2_group(n: usize, spec: &Ar2Spec, len: usize, seed: Seed) -> Vec<TimeSeries> {
    (0..n).map(|i| simulate_ar2(spec, len, seed.derive(i as u64)).unwrap()).collect()
}

#[test]
fn test_size_is_calibrated_on_one_cluster() {
    // both merged clusters come from one spectrum, so rejections are false
    let spec = Ar2Spec::new(0.13, 1.1, 1.0).unwrap();
    let alpha = 0.1;
    let reps = 40;
    let mut rejections = 0;
    for r in 0..reps {
        let xs = ar2_group(6, &spec, 1000, Seed(730).derive(r));
        let h = hsm_cluster(&xs, &HsmConfig::new(Variant::Average)).unwrap();
        let params = BootstrapParams { replicates: 200, alpha, ..BootstrapParams::new(1000, Seed(731).derive(r)) };
        if test_k_vs_k_minus_1(&h, 2, &params, NullModel::Hsm).unwrap().reject {
            rejections += 1;
        }
    }
    let rate = rejections as f64 / reps as f64;
    assert!(rate <= alpha + 3.0 * (alpha / reps as f64).sqrt(), "{rate}");
}

#[test]
fn choose_k_on_one_and_two_groups() {
    let a = Ar2Spec::new(0.1, 1.05, 1.0).unwrap();
    let b = Ar2Spec::new(0.3, 1.05, 1.0).unwrap();
    let params = BootstrapParams { replicates: 200, ..BootstrapParams::new(1000, Seed(740)) };

    let one = ar2_group(6, &a, 1000, Seed(741));
    let h = hsm_cluster(&one, &HsmConfig::default()).unwrap();
    assert_eq!(choose_k(&h, SelectionMethod::Bootstrap, &params, NullModel::Hsm).unwrap().k, 1);

    let mut two = ar2_group(4, &a, 1000, Seed(742));
    two.extend(ar2_group(4, &b, 1000, Seed(743)));
    let h = hsm_cluster(&two, &HsmConfig::default()).unwrap();
    let boot = choose_k(&h, SelectionMethod::Bootstrap, &params, NullModel::Hsm).unwrap();
    assert_eq!(boot.k, 2);
    assert_eq!(boot.tests.len(), 2);
    assert_eq!(choose_k(&h, SelectionMethod::Elbow, &params, NullModel::Hsm).unwrap().k, 2);
}

#[test]
fn linkage_null_model_runs() {
    let a = Ar2Spec::new(0.1, 1.05, 1.0).unwrap();
    let b = Ar2Spec::new(0.3, 1.05, 1.0).unwrap();
    let mut xs = ar2_group(3, &a, 800, Seed(750));
    xs.extend(ar2_group(3, &b, 800, Seed(751)));
    let spectra: Vec<SpectralDensity> = xs.iter().map(spectrum).collect();
    let d = specmerge::distances::spectral_matrix(&spectra, specmerge::distances::Measure::Tv).unwrap();
    let spec = specmerge::linkage::LinkageSpec::new(Linkage::Complete, specmerge::distances::Measure::Tv);
    let h: MergeHistory = specmerge::linkage::linkage_cluster(&d, &spec).unwrap();
    let params = BootstrapParams { replicates: 200, ..BootstrapParams::new(800, Seed(752)) };
    let null = NullModel::Linkage { linkage: Linkage::Complete, spectra: &spectra };
    assert!(test_k_vs_k_minus_1(&h, 2, &params, null).unwrap().reject);
    assert!(test_k_vs_k_minus_1(&h, 2, &params, NullModel::Hsm).is_err());
}

#[test]
fn designs_are_reproducible() {
    for design in [Design::experiment1(), Design::experiment2()] {
        let (a, ta) = design.simulate(300, Seed(760)).unwrap();
        let (b, tb) = design.simulate(300, Seed(760)).unwrap();
        assert_eq!(a, b);
        assert_eq!(ta, tb);
        let (c, _) = design.simulate(300, Seed(761)).unwrap();
        assert_ne!(a, c);
    }
}

#[test]
fn smoothing_keeps_white_noise_level() {
    let x = simulate_white_noise(2000, Seed(770)).unwrap();
    let raw = specmerge::spectra::periodogram(&x).unwrap();
    let sm = smoothed_spectrum(&x, BandwidthPolicy::Default.resolve(2000).unwrap()).unwrap();
    let (a, b) = (raw.mass(), sm.mass());
    assert!((a - b).abs() / a < 0.05);
}
