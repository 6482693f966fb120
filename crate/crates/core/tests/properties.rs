//! Property tests for the invariants of every module.

mod common;

use proptest::prelude::*;
use proptest::sample::subsequence;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use semcom_core::channel::{transmit_bits, BudgetPolicy, ChannelConfig};
use semcom_core::codec::{parse_caption, serialize_caption};
use semcom_core::goal::crop_seed;
use semcom_core::metrics::{cumulative_average, mean};
use semcom_core::pipeline::{AveragingPolicy, PipelineOptions};
use semcom_core::prelude::*;
use semcom_core::selector::choose;

use common::{brute_force_select, random_scene, vocab, CLASSES};

fn arb_scene(max_objects: usize) -> impl Strategy<Value = SceneImage> {
    any::<u64>()
        .prop_map(move |s| random_scene(&mut ChaCha8Rng::seed_from_u64(s), "p".into(), max_objects))
}

fn arb_counts(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0u32..20, len).prop_map(|v| v.into_iter().map(f64::from).collect())
}

fn vector(counts: Vec<f64>) -> SemanticVector {
    SemanticVector::from_counts(counts).unwrap()
}

fn summary(name: String, g: f64, e: f64) -> EvaluationSummary {
    let mut s = EvaluationSummary::from_records(name, vec![], AveragingPolicy::default());
    s.mean_gain = g;
    s.mean_error = e;
    s.mean_weighted_error = (1.0 - g) * e;
    s
}

/// Summaries on a coarse grid, so ties in every key are common.
fn arb_summaries() -> impl Strategy<Value = Vec<EvaluationSummary>> {
    (1usize..=5, prop::collection::vec((0u8..5, 0u8..5), 5)).prop_flat_map(|(n, values)| {
        subsequence(vec!["a", "b", "c", "d", "e", "f", "g"], n).prop_map(move |names| {
            names
                .into_iter()
                .zip(&values)
                .map(|(name, (g, e))| {
                    summary(name.into(), f64::from(*g) / 4.0, f64::from(*e) / 4.0)
                })
                .collect()
        })
    })
}

proptest! {
    #[test]
    fn binary_size_strictly_monotone(w in 1u32..500, h in 1u32..500, b in 1u32..256) {
        let size = |w, h, b| SceneImage::new("x", w, h, b, vec![]).unwrap().binary_size();
        let base = size(w, h, b);
        prop_assert_eq!(base, u64::from(w) * u64::from(h) * u64::from(b));
        prop_assert!(size(w + 1, h, b) > base);
        prop_assert!(size(w, h + 1, b) > base);
        prop_assert!(size(w, h, b + 1) > base);
    }

    #[test]
    fn truth_sums_to_object_count_and_ignores_order(scene in arb_scene(12), key in any::<u64>()) {
        let v = vocab();
        let truth = scene.semantic_truth(&v).unwrap();
        prop_assert_eq!(truth.sum(), scene.objects.len() as f64);
        let mut shuffled = scene.clone();
        let n = shuffled.objects.len();
        if n > 1 {
            shuffled.objects.rotate_left((key as usize) % n);
            shuffled.objects.swap(0, n - 1);
        }
        prop_assert_eq!(shuffled.semantic_truth(&v).unwrap(), truth);
    }

    #[test]
    fn noiseless_caption_round_trip(scene in arb_scene(10), k in 1usize..=5, seed in any::<u64>()) {
        let v = vocab();
        let payload = encode_caption(&scene, &v, k, &CaptionNoise::NOISELESS, seed).unwrap();
        let sketches = decode_caption(&payload, &v, &CaptionNoise::NOISELESS, seed ^ 1).unwrap();
        prop_assert_eq!(sketches.len(), k);
        let truth = scene.semantic_truth(&v).unwrap();
        for s in &sketches {
            prop_assert_eq!(&s.to_vector(&v).unwrap(), &truth);
        }
    }

    #[test]
    fn crop_codec_is_semantically_lossless(scene in arb_scene(10)) {
        let v = vocab();
        let sketch = decode_crops(&encode_crops(&scene)).unwrap();
        prop_assert_eq!(sketch.to_vector(&v).unwrap(), scene.semantic_truth(&v).unwrap());
    }

    #[test]
    fn caption_size_is_eight_bits_per_byte(scene in arb_scene(10), k in 1usize..=5, seed in any::<u64>()) {
        let noise = CaptionNoise { p_mention: 0.5, p_realize: 1.0, count_jitter: 0 };
        let payload = encode_caption(&scene, &vocab(), k, &noise, seed).unwrap();
        let PayloadBody::Captions(set) = payload.body() else { unreachable!() };
        prop_assert_eq!(payload.size_bits(), 8 * set.serialize().len() as u64);
    }

    #[test]
    fn crops_never_exceed_raw_when_boxes_fit(scene in arb_scene(6)) {
        let total: u64 = scene.objects.iter().map(|o| o.bbox.area()).sum();
        prop_assume!(total <= scene.area());
        let crops = encode_crops(&scene).size_bits();
        let raw = encode_raw(&scene).size_bits();
        prop_assert!(crops <= raw);
        prop_assert_eq!(crops == raw, total == scene.area());
    }

    #[test]
    fn grammar_round_trips(counts in prop::collection::vec(0u64..1000, CLASSES.len())) {
        let v = vocab();
        let text = serialize_caption(&v, &counts);
        let items = parse_caption(&text, &v).unwrap();
        let mut back = vec![0u64; counts.len()];
        for (class, n) in items {
            back[class] = n;
        }
        prop_assert_eq!(&back, &counts);
        prop_assert_eq!(serialize_caption(&v, &back), text);
    }

    #[test]
    fn semantic_error_basic_properties(x in arb_counts(4), y in arb_counts(4), alpha in 1e-3f64..1e3) {
        prop_assume!(x.iter().any(|c| *c > 0.0));
        let e = semantic_error(&vector(x.clone()), &vector(y.clone())).unwrap();
        prop_assert!(e >= 0.0);
        prop_assert_eq!(e == 0.0, x == y);
        let scaled = semantic_error(&vector(x).scaled(alpha), &vector(y).scaled(alpha)).unwrap();
        prop_assert!((e - scaled).abs() <= 1e-12 * e.max(1.0));
    }

    #[test]
    fn gain_strictly_decreasing_in_payload(source in 1u64..1 << 40, a in 0u64..1 << 40, b in 0u64..1 << 40) {
        prop_assume!(a != b);
        let (lo, hi) = (a.min(b), a.max(b));
        prop_assert!(gain(source, lo).unwrap() > gain(source, hi).unwrap());
    }

    #[test]
    fn weighted_error_identity(g in -2.0f64..1.0, e in 0.0f64..3.0) {
        prop_assert_eq!(weighted_error(g, e), (1.0 - g) * e);
    }

    #[test]
    fn cumulative_average_ends_at_the_mean(series in prop::collection::vec(0.0f64..10.0, 1..300)) {
        let c = cumulative_average(&series).unwrap();
        prop_assert_eq!(c.len(), series.len());
        let m = mean(&series).unwrap();
        prop_assert!((c[c.len() - 1] - m).abs() <= 1e-9 * m.abs().max(f64::MIN_POSITIVE));
    }

    #[test]
    fn mean_weighted_error_bound(pairs in prop::collection::vec((0.0f64..1.0, 0.0f64..2.0), 1..50)) {
        let ew: Vec<f64> = pairs.iter().map(|(g, e)| weighted_error(*g, *e)).collect();
        let es: Vec<f64> = pairs.iter().map(|(_, e)| *e).collect();
        let worst = pairs.iter().map(|(g, _)| 1.0 - g).fold(0.0, f64::max);
        prop_assert!(mean(&ew).unwrap() <= worst * mean(&es).unwrap() + 1e-12);
    }

    #[test]
    fn channel_properties(size in 0u64..1 << 30, budget in 1u64..1 << 30, rate in 1.0f64..1e9, seed in any::<u64>()) {
        let cfg = ChannelConfig { rate_bps: rate, ..ChannelConfig::with_budget(budget) };
        let r = transmit_bits(size, &cfg, seed);
        prop_assert!((r.latency_s - size as f64 / rate).abs() <= 1e-12 * r.latency_s.max(1.0));
        let twice = transmit_bits(2 * size, &cfg, seed);
        prop_assert!((twice.latency_s - 2.0 * r.latency_s).abs() <= 1e-12 * twice.latency_s.max(1.0));
        if size < budget {
            prop_assert!(r.delivered && !r.violated_budget);
        }
        let drop = ChannelConfig { policy: BudgetPolicy::Drop, ..cfg };
        prop_assert_eq!(transmit_bits(size, &drop, seed).delivered, size < budget);
    }

    #[test]
    fn budget_depends_on_size_only(scene in arb_scene(6), seed in any::<u64>()) {
        let v = vocab();
        let cfg = ChannelConfig { erasure_prob: 0.3, ..ChannelConfig::with_budget(5000) };
        let caption = encode_caption(&scene, &v, 3, &CaptionNoise::NOISELESS, seed).unwrap();
        let by_payload = transmit(&caption, &cfg, seed);
        prop_assert_eq!(by_payload, transmit_bits(caption.size_bits(), &cfg, seed));
    }

    #[test]
    fn detector_is_deterministic_and_perfect_is_truth(scene in arb_scene(10), seed in any::<u64>()) {
        let v = vocab();
        let noisy = DetectorModel { false_positive_rate: 0.5, ..DetectorModel::with_detect_prob(0.6) };
        let a = detect(Evaluable::Scene(&scene), &noisy, &v, seed).unwrap();
        prop_assert_eq!(a, detect(Evaluable::Scene(&scene), &noisy, &v, seed).unwrap());
        let perfect = detect(Evaluable::Scene(&scene), &DetectorModel::perfect(), &v, seed).unwrap();
        prop_assert_eq!(perfect, scene.semantic_truth(&v).unwrap());
        let crops = encode_crops(&scene);
        let PayloadBody::Crops(list) = crops.body() else { unreachable!() };
        let from_crops = detect_objects_list(list, &DetectorModel::perfect(), &v, seed).unwrap();
        prop_assert_eq!(from_crops, scene.semantic_truth(&v).unwrap());
    }

    #[test]
    fn raising_detect_prob_never_lowers_counts(scene in arb_scene(12), p in 0.0f64..1.0, dp in 0.0f64..1.0, seed in any::<u64>()) {
        let v = vocab();
        let q = (p + dp).min(1.0);
        let with = |prob: f64| DetectorModel {
            per_class_detect_prob: [("car".to_string(), prob)].into(),
            ..DetectorModel::with_detect_prob(0.7)
        };
        let lo = detect(Evaluable::Scene(&scene), &with(p), &v, seed).unwrap();
        let hi = detect(Evaluable::Scene(&scene), &with(q), &v, seed).unwrap();
        prop_assert!(hi.get(1) >= lo.get(1));
        prop_assert_eq!(hi.get(0), lo.get(0));
    }

    #[test]
    fn crop_list_is_sum_of_singletons(scene in arb_scene(8), seed in any::<u64>()) {
        let v = vocab();
        let m = DetectorModel { false_positive_rate: 0.2, ..DetectorModel::with_detect_prob(0.5) };
        let crops = encode_crops(&scene);
        let PayloadBody::Crops(list) = crops.body() else { unreachable!() };
        let total = detect_objects_list(list, &m, &v, seed).unwrap();
        let mut acc = SemanticVector::zeros(v.len());
        for (i, c) in list.iter().enumerate() {
            let d = detect(Evaluable::Crops(std::slice::from_ref(c)), &m, &v, crop_seed(seed, i)).unwrap();
            acc.add_assign(&d).unwrap();
        }
        prop_assert_eq!(total, acc);
    }

    #[test]
    fn choose_matches_brute_force(summaries in arb_summaries(), g0 in 0u8..4, eps0 in 1u8..5) {
        let (g0, eps0) = (f64::from(g0) / 4.0, f64::from(eps0) / 4.0);
        let spec = ConstraintSpec::new(g0, eps0).unwrap();
        prop_assert_eq!(choose(&summaries, &spec).unwrap(), brute_force_select(&summaries, g0, eps0));
    }

    #[test]
    fn choose_ignores_order(summaries in arb_summaries(), key in any::<usize>()) {
        let spec = ConstraintSpec::new(0.5, 0.5).unwrap();
        let mut permuted = summaries.clone();
        permuted.reverse();
        let n = permuted.len();
        permuted.rotate_left(key % n);
        prop_assert_eq!(choose(&summaries, &spec).unwrap(), choose(&permuted, &spec).unwrap());
    }

    #[test]
    fn dominated_candidate_changes_nothing(summaries in arb_summaries(), extra in 0.01f64..1.0) {
        let spec = ConstraintSpec::new(0.25, 0.75).unwrap();
        let before = choose(&summaries, &spec).unwrap();
        if let Some(winner) = before.selected() {
            let w = summaries.iter().find(|s| s.config == winner).unwrap();
            let mut dominated = summary("zz-dominated".into(), w.mean_gain, w.mean_error);
            dominated.mean_weighted_error = w.mean_weighted_error + extra;
            let mut more = summaries.clone();
            more.push(dominated);
            prop_assert_eq!(choose(&more, &spec).unwrap(), before);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn report_columns_are_consistent(seed in any::<u64>(), images in 1usize..25) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let dataset = common::random_dataset(&mut r, images, 6);
        let noise = CaptionNoise { p_mention: 0.7, p_realize: 0.7, count_jitter: 1 };
        let mut cfg = semcom_core::harness::RunConfig::new(CodecConfig::caption("cap", 3, noise));
        cfg.detector = DetectorModel::with_detect_prob(0.8);
        cfg.seed = seed;
        let report = run(&cfg, &dataset).unwrap();
        prop_assert_eq!(report.cum_gain.len(), images);
        let gains: Vec<f64> = report.records().iter().map(|rec| rec.gain).collect();
        let expect = cumulative_average(&gains).unwrap();
        prop_assert_eq!(report.cum_gain.iter().map(|g| g.unwrap()).collect::<Vec<_>>(), expect);
        let errors: Vec<f64> = report.records().iter().filter_map(|rec| rec.error).collect();
        let defined: Vec<f64> = report.cum_error.iter().zip(report.records())
            .filter(|(_, rec)| rec.error.is_some())
            .map(|(c, _)| c.unwrap())
            .collect();
        if !errors.is_empty() {
            prop_assert_eq!(defined, cumulative_average(&errors).unwrap());
        }
        for rec in report.records() {
            if let (Some(e), Some(ew)) = (rec.error, rec.weighted_error) {
                prop_assert!((ew - (1.0 - rec.gain) * e).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn selection_is_permutation_invariant_end_to_end(seed in any::<u64>()) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let dataset = common::random_dataset(&mut r, 8, 5);
        let configs: Vec<CodecConfig> = ["p", "q", "r", "s"]
            .iter()
            .map(|n| common::random_codec(&mut r, (*n).into()))
            .collect();
        let det = DetectorModel::with_detect_prob(0.9);
        let spec = ConstraintSpec::new(0.5, 0.5).unwrap();
        let ch = ChannelConfig::default();
        let a = select(&configs, &dataset, &det, &ch, PipelineOptions::default(), &spec, seed).unwrap();
        let mut rev = configs.clone();
        rev.reverse();
        let b = select(&rev, &dataset, &det, &ch, PipelineOptions::default(), &spec, seed).unwrap();
        prop_assert_eq!(a, b);
    }
}
