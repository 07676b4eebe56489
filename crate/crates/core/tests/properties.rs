mod common;

use std::collections::BTreeMap;

use otbench_core::augment::{augment_pair, flip_h, flip_v, rotate90, SampleImage, SamplePair};
use otbench_core::harness::{balanced_batches, stratified_kfold, ScoreTable};
use otbench_core::imgproc::{
    clahe, clahe_mappings, gaussian_filter, gaussian_kernel, invert_channel, mean_filter, nlmd, preprocess,
    ClaheParams, ImagePlane, NlmdParams, PreprocessConfig, RgbImage,
};
use otbench_core::metrics::{aggregate_folds, dice_score, iou_score, pixel_accuracy, BinaryMask, FoldSummary, MetricName};
use otbench_core::optim::{
    adam_step, predict_label, predict_mask, scce_loss, soft_dice_loss, soft_jaccard_loss, AdamConfig, AdamState,
    ImageClassifierModel, ParamVector, PixelFeatureConfig, PixelSegmenterModel, IMAGE_FEATURES, PIXEL_FEATURES,
};
use proptest::prelude::*;

fn plane(max_side: usize) -> impl Strategy<Value = ImagePlane> {
    plane_between(1, max_side)
}

fn plane_between(min_side: usize, max_side: usize) -> impl Strategy<Value = ImagePlane> {
    (min_side..=max_side, min_side..=max_side).prop_flat_map(|(w, h)| {
        prop::collection::vec(0.0..=1.0f64, w * h).prop_map(move |d| ImagePlane::new(w, h, d).unwrap())
    })
}

fn mask_pair(max_side: usize) -> impl Strategy<Value = (BinaryMask, BinaryMask)> {
    (1..=max_side, 1..=max_side).prop_flat_map(|(w, h)| {
        (prop::collection::vec(any::<bool>(), w * h), prop::collection::vec(any::<bool>(), w * h))
            .prop_map(move |(a, b)| (BinaryMask::new(w, h, a).unwrap(), BinaryMask::new(w, h, b).unwrap()))
    })
}

fn plane_with_mask(max_side: usize) -> impl Strategy<Value = (ImagePlane, BinaryMask)> {
    (1..=max_side, 1..=max_side).prop_flat_map(|(w, h)| {
        (prop::collection::vec(0.0..=1.0f64, w * h), prop::collection::vec(any::<bool>(), w * h)).prop_map(
            move |(d, m)| (ImagePlane::new(w, h, d).unwrap(), BinaryMask::new(w, h, m).unwrap()),
        )
    })
}

fn probs_and_target(max_len: usize) -> impl Strategy<Value = (Vec<f64>, Vec<bool>)> {
    (1..=max_len).prop_flat_map(|n| (prop::collection::vec(0.0..=1.0f64, n), prop::collection::vec(any::<bool>(), n)))
}

fn sorted_multiset(p: &ImagePlane) -> Vec<u64> {
    let mut v: Vec<u64> = p.data().iter().map(|x| x.to_bits()).collect();
    v.sort_unstable();
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn filters_stay_in_unit_range(p in plane_between(2, 12), k in prop::sample::select(vec![1usize, 3, 5, 9]), sigma in 0.3..4.0f64) {
        prop_assert!(mean_filter(&p, k).unwrap().is_unit_range());
        prop_assert!(gaussian_filter(&p, sigma, k).unwrap().is_unit_range());
        let params = NlmdParams { search_radius: 2, patch_radius: 1, h: 0.3 };
        prop_assert!(nlmd(&p, &params).unwrap().is_unit_range());
        let grid = ClaheParams { tile_rows: 2, tile_cols: 2, ..ClaheParams::default() };
        prop_assert!(clahe(&p, &grid).unwrap().is_unit_range());
    }

    #[test]
    fn smoothing_filters_commute_with_flips(p in plane(12), k in prop::sample::select(vec![1usize, 3, 5, 7]), sigma in 0.3..4.0f64) {
        for flip in [flip_h::<ImagePlane>, flip_v::<ImagePlane>] {
            prop_assert_eq!(mean_filter(&flip(&p), k).unwrap(), flip(&mean_filter(&p, k).unwrap()));
            prop_assert_eq!(gaussian_filter(&flip(&p), sigma, k).unwrap(), flip(&gaussian_filter(&p, sigma, k).unwrap()));
        }
    }

    #[test]
    fn gaussian_weights_sum_to_one(sigma in 0.05..30.0f64, half in 0usize..40) {
        let kernel = gaussian_kernel(sigma, 2 * half + 1).unwrap();
        let total: f64 = kernel.weights().iter().sum();
        prop_assert!((total - 1.0).abs() <= 1e-9);
        prop_assert!(kernel.weights().iter().all(|&w| w >= 0.0));
    }

    #[test]
    fn inversion_is_an_involution(p in plane(16)) {
        let twice = invert_channel(&invert_channel(&p));
        prop_assert!(twice.data().iter().zip(p.data()).all(|(a, b)| (a - b).abs() <= 1e-15));
    }

    #[test]
    fn clahe_mappings_are_monotone(p in plane_between(3, 32), grid in 1usize..4, clip in 0.5..6.0f64) {
        let params = ClaheParams { tile_rows: grid, tile_cols: grid, clip_limit: clip, bins: 64 };
        let maps = clahe_mappings(&p, &params).unwrap();
        for r in 0..maps.tile_rows() {
            for c in 0..maps.tile_cols() {
                prop_assert!(maps.lut(r, c).windows(2).all(|w| w[0] <= w[1]));
            }
        }
        let (row, col) = (p.height() / 2, p.width() / 2);
        let mapped: Vec<f64> = (0..=100).map(|i| maps.map(row, col, i as f64 / 100.0)).collect();
        prop_assert!(mapped.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn rotations_form_a_group((p, m) in plane_with_mask(10)) {
        let mut q = p.clone();
        for _ in 0..4 {
            q = rotate90(&q, 1).unwrap();
        }
        prop_assert_eq!(&q, &p);
        prop_assert_eq!(rotate90(&p, 2).unwrap(), flip_v(&flip_h(&p)));
        prop_assert_eq!(flip_h(&flip_h(&m)), m.clone());
        prop_assert!(rotate90(&p, 4).is_err());
    }

    #[test]
    fn augmentation_permutes_pixels((p, m) in plane_with_mask(10)) {
        let set = augment_pair(&SamplePair::gray(p.clone(), Some(m.clone())).unwrap()).unwrap();
        prop_assert_eq!(set.len(), 6);
        for a in &set {
            let out_mask = a.pair.mask().unwrap();
            prop_assert_eq!(out_mask.count(), m.count());
            let SampleImage::Gray(img) = a.pair.image() else { panic!("gray in, gray out") };
            prop_assert_eq!(img.dims(), out_mask.dims());
            if a.tag.as_str() != "normalized" {
                prop_assert_eq!(sorted_multiset(img), sorted_multiset(&p));
            }
        }
        prop_assert_eq!(set, augment_pair(&SamplePair::gray(p, Some(m)).unwrap()).unwrap());
    }

    #[test]
    fn mask_metrics_are_symmetric_and_bounded((a, b) in mask_pair(10)) {
        for f in [dice_score, iou_score, pixel_accuracy] {
            let ab = f(&a, &b).unwrap();
            prop_assert_eq!(ab, f(&b, &a).unwrap());
            prop_assert!((0.0..=1.0).contains(&ab));
        }
        let d = dice_score(&a, &b).unwrap();
        prop_assert!((iou_score(&a, &b).unwrap() - d / (2.0 - d)).abs() <= 1e-12);
    }

    #[test]
    fn losses_are_bounded((p, t) in probs_and_target(50), eps in 1e-6..4.0f64) {
        let dl = soft_dice_loss(&p, &t, eps).unwrap().loss;
        let jl = soft_jaccard_loss(&p, &t, eps).unwrap().loss;
        prop_assert!((0.0..=1.0).contains(&dl));
        prop_assert!((0.0..=1.0).contains(&jl));
        prop_assert!(jl >= dl);
    }

    #[test]
    fn cross_entropy_is_nonnegative(logits in prop::collection::vec(-30.0..30.0f64, 2..12), pick in any::<prop::sample::Index>()) {
        let label = pick.index(logits.len());
        let v = scce_loss(&logits, label).unwrap();
        prop_assert!(v.loss >= 0.0 && v.loss.is_finite());
        prop_assert!(v.grad.iter().sum::<f64>().abs() <= 1e-12);
    }

    #[test]
    fn adam_keeps_parameters_under_zero_gradient(values in prop::collection::vec(-10.0..10.0f64, 1..20), steps in 1usize..5) {
        let n = values.len();
        let start = ParamVector::new(values).unwrap();
        let mut state = AdamState::new(n, AdamConfig::default()).unwrap();
        let mut params = start.clone();
        for _ in 0..steps {
            (params, state) = adam_step(params, &vec![0.0; n], state).unwrap();
        }
        prop_assert_eq!(params, start);
    }

    #[test]
    fn raising_threshold_never_adds_foreground(p in plane(12), w in prop::collection::vec(-3.0..3.0f64, PIXEL_FEATURES + 1), lo in 0.0..1.0f64, step in 0.0..0.5f64) {
        let model = PixelSegmenterModel::new(ParamVector::new(w).unwrap(), PixelFeatureConfig::default(), 0.5).unwrap();
        let low = predict_mask(&model, &p, lo);
        let high = predict_mask(&model, &p, lo + step);
        prop_assert!(high.data().iter().zip(low.data()).all(|(&h, &l)| !h || l));
        prop_assert_eq!(predict_mask(&model, &p, 0.0).count(), p.len());
        prop_assert_eq!(predict_mask(&model, &p, 1.0 + 1e-9).count(), 0);
    }

    #[test]
    fn class_probabilities_sum_to_one(p in plane(12), classes in 2usize..5, seed in any::<u64>()) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let weights = (0..classes * (IMAGE_FEATURES + 1)).map(|_| rng.random_range(-2.0..2.0)).collect();
        let model = ImageClassifierModel::new(
            classes,
            ParamVector::new(weights).unwrap(),
            [0.5; IMAGE_FEATURES],
            [0.2; IMAGE_FEATURES],
        )
        .unwrap();
        let (label, probs) = predict_label(&model, &p);
        prop_assert!(label < classes);
        prop_assert!((probs.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn folds_partition_and_stratify(counts in prop::collection::vec(5usize..30, 2..4), k in 2usize..6, seed in any::<u64>()) {
        let labels: Vec<usize> = counts.iter().enumerate().flat_map(|(c, &n)| std::iter::repeat_n(c, n)).collect();
        let plan = stratified_kfold(&labels, k, seed).unwrap();
        let mut seen = vec![0; labels.len()];
        for f in 0..k {
            for i in plan.validation_indices(f) {
                seen[i] += 1;
            }
            for (class, &n) in counts.iter().enumerate() {
                let in_fold = plan.validation_indices(f).iter().filter(|&&i| labels[i] == class).count() as f64;
                prop_assert!((in_fold - n as f64 / k as f64).abs() <= 1.0);
            }
        }
        prop_assert!(seen.iter().all(|&s| s == 1));
        prop_assert_eq!(&plan, &stratified_kfold(&labels, k, seed).unwrap());
    }

    #[test]
    fn batches_hold_equal_class_shares(counts in prop::collection::vec(1usize..25, 2..4), per_class in 1usize..5, seed in any::<u64>()) {
        let labels: Vec<usize> = counts.iter().enumerate().flat_map(|(c, &n)| std::iter::repeat_n(c, n)).collect();
        let classes = counts.len();
        let batches = balanced_batches(&labels, per_class * classes, seed).unwrap();
        let mut hits = vec![0usize; labels.len()];
        for b in &batches {
            prop_assert_eq!(b.len(), per_class * classes);
            for c in 0..classes {
                prop_assert_eq!(b.iter().filter(|&&i| labels[i] == c).count(), per_class);
            }
            b.iter().for_each(|&i| hits[i] += 1);
        }
        prop_assert!(hits.iter().all(|&h| h >= 1));
        prop_assert_eq!(batches, balanced_batches(&labels, per_class * classes, seed).unwrap());
    }

    #[test]
    fn aggregate_row_matches_fold_rows(rows in prop::collection::vec(prop::collection::vec(0.0..=1.0f64, 3), 2..8)) {
        let names = [MetricName::Dice, MetricName::Iou, MetricName::PixelAccuracy];
        let folds: Vec<FoldSummary> = rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let mut s = FoldSummary::new(i + 1);
                for (name, &v) in names.iter().zip(r) {
                    s.insert(*name, v).unwrap();
                }
                s
            })
            .collect();
        let table = ScoreTable::from_folds(folds).unwrap();
        let expected: BTreeMap<MetricName, _> = names
            .iter()
            .enumerate()
            .map(|(j, n)| (*n, aggregate_folds(&rows.iter().map(|r| r[j]).collect::<Vec<_>>()).unwrap()))
            .collect();
        prop_assert_eq!(table.aggregate, expected);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn preprocess_is_deterministic(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let img: RgbImage = common::random_rgb(&mut rng, 40, 30);
        let cfg = PreprocessConfig::default();
        prop_assert_eq!(preprocess(&img, &cfg).unwrap(), preprocess(&img.clone(), &cfg).unwrap());
    }
}
