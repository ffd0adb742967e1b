//! Property tests over randomly generated inputs.

use proptest::prelude::*;

use specmerge::distances::{tv_distance, DissimilarityMatrix, Measure};
use specmerge::evaluate::{contiguous_segments, similarity_index, Partition};
use specmerge::hsm::{hsm_cluster, HsmConfig, Variant};
use specmerge::linkage::{linkage_cluster, linkage_value, Linkage, LinkageSpec};
use specmerge::modelselect::p_value;
use specmerge::seed::Seed;
use specmerge::simulate::{ar2_coefficients, simulate_ar2, simulate_white_noise, Ar2Spec};
use specmerge::spectra::{
    normalize, periodogram_ordinates, smoothed_spectrum, FrequencyGrid, SpectralDensity, TimeSeries,
};

fn density(values: Vec<f64>) -> SpectralDensity {
    let grid = FrequencyGrid::new(1.0, 2 * values.len() + 1).unwrap();
    normalize(&SpectralDensity::new(grid, values).unwrap()).unwrap()
}

fn positive_vec(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(1e-6..10.0f64, n)
}

fn triple() -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
    (4usize..80).prop_flat_map(|n| (positive_vec(n), positive_vec(n), positive_vec(n)))
}

fn series() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1e3..1e3f64, 8..400)
}

fn matrix(n: usize) -> impl Strategy<Value = DissimilarityMatrix> {
    prop::collection::vec(0.0..1.0f64, n * (n - 1) / 2)
        .prop_map(move |u| DissimilarityMatrix::from_upper((0..n).map(|i| i.to_string()).collect(), &u).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn tv_is_a_bounded_pseudo_metric((a, b, c) in triple()) {
        let (f, g, h) = (density(a), density(b), density(c));
        let d = |x, y| tv_distance(x, y).unwrap().value;
        prop_assert_eq!(d(&f, &g), d(&g, &f));
        prop_assert!((0.0..=1.0).contains(&d(&f, &g)));
        prop_assert!(d(&f, &h) <= d(&f, &g) + d(&g, &h) + 1e-12);
        prop_assert!(d(&f, &f) <= 1e-15);
    }

    #[test]
    fn normalize_is_idempotent_and_unit_mass(v in positive_vec(50), e in -20i32..20) {
        let grid = FrequencyGrid::new(3.0, 101).unwrap();
        let raw = SpectralDensity::new(grid, v).unwrap();
        let once = normalize(&raw).unwrap();
        prop_assert_eq!(&normalize(&once).unwrap(), &once);
        prop_assert!((once.mass() - 1.0).abs() <= 1e-9);
        // power-of-two factors scale without rounding
        let scaled = normalize(&raw.scaled(2f64.powi(e)).unwrap()).unwrap();
        prop_assert_eq!(scaled.values(), once.values());
    }

    #[test]
    fn parseval_holds(x in series()) {
        let ts = TimeSeries::new("x", x, 1.0).unwrap();
        let ords = periodogram_ordinates(&ts.centered());
        let t = ts.len();
        let total: f64 = ords.iter().sum::<f64>() / t as f64;
        let var = ts.variance();
        prop_assert!((total - var).abs() <= 1e-8 * var.max(1e-300));
    }

    #[test]
    fn smoothed_ordinates_are_nonnegative(x in series(), b in 0.01..0.49f64) {
        let ts = TimeSeries::new("x", x, 1.0).unwrap();
        let s = smoothed_spectrum(&ts, b).unwrap();
        prop_assert!(s.values().iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn linkage_heights_never_invert(d in (2usize..12).prop_flat_map(matrix), avg in any::<bool>()) {
        let l = if avg { Linkage::Average } else { Linkage::Complete };
        let h = linkage_cluster(&d, &LinkageSpec::new(l, Measure::Tv)).unwrap();
        let t = h.trajectory();
        prop_assert!(t.windows(2).all(|w| w[0] <= w[1] + 1e-12));
    }

    #[test]
    fn complete_dominates_average(d in matrix(7), split in 1usize..6) {
        let a: Vec<usize> = (0..split).collect();
        let b: Vec<usize> = (split..7).collect();
        let c = linkage_value(&a, &b, &d, Linkage::Complete).unwrap();
        let m = linkage_value(&a, &b, &d, Linkage::Average).unwrap();
        prop_assert!(c >= m);
    }

    #[test]
    fn similarity_index_is_label_free(labels in prop::collection::vec(0usize..4, 2..30), other in prop::collection::vec(0usize..4, 30)) {
        let n = labels.len();
        let truth = Partition::from_labels(&labels).unwrap();
        let found = Partition::from_labels(&other[..n]).unwrap();
        let v = similarity_index(&truth, &found).unwrap();
        prop_assert!((0.0..=1.0).contains(&v));
        prop_assert_eq!(similarity_index(&truth, &truth).unwrap(), 1.0);
        let renamed: Vec<usize> = other[..n].iter().map(|l| 10 + 3 * l).collect();
        prop_assert_eq!(similarity_index(&truth, &Partition::from_labels(&renamed).unwrap()).unwrap(), v);
        prop_assert_eq!(v == 1.0, truth == found);
    }

    #[test]
    fn segments_expand_to_input(labels in prop::collection::vec(0u8..3, 1..200)) {
        let segs = contiguous_segments(&labels);
        let expanded: Vec<u8> = segs.iter().flat_map(|s| std::iter::repeat(s.label).take(s.len())).collect();
        prop_assert_eq!(expanded, labels);
        prop_assert!(segs.windows(2).all(|w| w[0].label != w[1].label && w[0].end == w[1].start));
    }

    #[test]
    fn p_value_is_monotone(sample in prop::collection::vec(0.0..1.0f64, 1..300), a in 0.0..1.0f64, b in 0.0..1.0f64) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (plo, phi) = (p_value(lo, &sample), p_value(hi, &sample));
        prop_assert!(phi <= plo);
        prop_assert!((0.0..=1.0).contains(&plo) && phi > 0.0);
    }

    #[test]
    fn ar2_roots_round_trip(fs in 0.5..1000.0f64, frac in 0.005..0.495f64, m in 1.0001..5.0f64) {
        let spec = Ar2Spec::new(frac * fs, m, fs).unwrap();
        let (p1, p2) = ar2_coefficients(&spec);
        let disc = num_complex::Complex::new(p1 * p1 + 4.0 * p2, 0.0).sqrt();
        for z in [(-p1 + disc) / (2.0 * p2), (-p1 - disc) / (2.0 * p2)] {
            prop_assert!((z.norm() - m).abs() <= 1e-10);
            prop_assert!((z.arg().abs() - spec.w0()).abs() <= 1e-10);
        }
    }

    #[test]
    fn generators_repeat_under_a_seed(s in any::<u64>()) {
        let spec = Ar2Spec::new(0.2, 1.05, 1.0).unwrap();
        prop_assert_eq!(simulate_ar2(&spec, 64, Seed(s)).unwrap(), simulate_ar2(&spec, 64, Seed(s)).unwrap());
        prop_assert_eq!(simulate_white_noise(64, Seed(s)).unwrap(), simulate_white_noise(64, Seed(s)).unwrap());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn merge_history_is_a_partition_chain(seed in any::<u64>(), n in 2usize..9, single in any::<bool>()) {
        let xs: Vec<TimeSeries> =
            (0..n).map(|i| simulate_white_noise(128, Seed(seed).derive(i as u64)).unwrap()).collect();
        let v = if single { Variant::Single } else { Variant::Average };
        let h = hsm_cluster(&xs, &HsmConfig::new(v)).unwrap();
        prop_assert_eq!(h.steps().len(), n - 1);
        prop_assert!(h.trajectory().iter().all(|t| (0.0..=1.0).contains(t)));
        prop_assert_eq!(h.labels_at(n).unwrap(), (0..n).collect::<Vec<_>>());
        prop_assert!(h.labels_at(1).unwrap().iter().all(|&l| l == 0));
        for k in 2..=n {
            let fine = Partition::from_labels(&h.labels_at(k).unwrap()).unwrap();
            let coarse = Partition::from_labels(&h.labels_at(k - 1).unwrap()).unwrap();
            prop_assert_eq!(fine.n_blocks(), k);
            // every fine block sits inside one coarse block
            for block in fine.blocks() {
                let l = coarse.labels()[block[0]];
                prop_assert!(block.iter().all(|&i| coarse.labels()[i] == l));
            }
        }
    }

    #[test]
    fn average_merger_ignores_input_order(seed in any::<u64>(), n in 3usize..7, rot in 1usize..6) {
        // distinct distances almost surely, so the partitions are order free
        let xs: Vec<TimeSeries> =
            (0..n).map(|i| simulate_white_noise(160, Seed(seed).derive(i as u64)).unwrap()).collect();
        let rot = rot % n;
        let mut perm: Vec<usize> = (0..n).collect();
        perm.rotate_left(rot);
        let ys: Vec<TimeSeries> = perm.iter().map(|&i| xs[i].clone()).collect();
        let cfg = HsmConfig::new(Variant::Average);
        let (hx, hy) = (hsm_cluster(&xs, &cfg).unwrap(), hsm_cluster(&ys, &cfg).unwrap());
        for k in 1..=n {
            let lx = hx.labels_at(k).unwrap();
            let ly = hy.labels_at(k).unwrap();
            let mut back = vec![0; n];
            for (pos, &orig) in perm.iter().enumerate() {
                back[orig] = ly[pos];
            }
            prop_assert_eq!(Partition::from_labels(&lx).unwrap(), Partition::from_labels(&back).unwrap());
        }
    }
}
