mod common;

use semcom_core::coco::{import_coco_str, CocoImportOptions};
use semcom_core::harness::{csv_string, export_csv, RunConfig, CSV_HEADER};
use semcom_core::plot::{render, render_plot};
use semcom_core::prelude::*;

use common::{scene_a, vocab};

fn three_images() -> Dataset {
    let mut r = common::rng(8);
    let mut scenes: Vec<SceneImage> = (0..3)
        .map(|i| common::random_scene(&mut r, format!("im{i}"), 5))
        .collect();
    scenes[0] = SceneImage {
        id: "im0".into(),
        ..scene_a()
    };
    Dataset::new(vocab(), scenes).unwrap()
}

fn noisy_caption_run(seed: u64) -> RunReport {
    let noise = CaptionNoise {
        p_mention: 0.6,
        p_realize: 0.8,
        count_jitter: 1,
    };
    let mut cfg = RunConfig::new(CodecConfig::caption("caption", 5, noise));
    cfg.seed = seed;
    cfg.detector = DetectorModel::with_detect_prob(0.9);
    run_algorithm1(&cfg, &three_images()).unwrap()
}

fn parse(csv_text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut rdr = csv::Reader::from_reader(csv_text.as_bytes());
    let header = rdr.headers().unwrap().iter().map(String::from).collect();
    let rows = rdr
        .records()
        .map(|r| r.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

#[test]
fn csv_has_header_and_one_row_per_image() {
    let report = noisy_caption_run(1);
    let (header, rows) = parse(&csv_string(&report).unwrap());
    assert_eq!(header, CSV_HEADER);
    assert_eq!(rows.len(), 3);
    let errors: Vec<f64> = rows.iter().filter_map(|r| r[5].parse().ok()).collect();
    let last_cum: f64 = rows[2][9].parse().unwrap();
    let mean = errors.iter().sum::<f64>() / errors.len() as f64;
    assert!((last_cum - mean).abs() <= 1e-12);
    for r in &rows {
        let (g, e, ew): (f64, f64, f64) = (
            r[4].parse().unwrap(),
            r[5].parse().unwrap(),
            r[6].parse().unwrap(),
        );
        assert!((ew - (1.0 - g) * e).abs() <= 1e-12);
        assert_eq!(r[7], "true");
    }
}

#[test]
fn csv_is_reproducible_and_seed_sensitive() {
    let a = csv_string(&noisy_caption_run(5)).unwrap();
    assert_eq!(a, csv_string(&noisy_caption_run(5)).unwrap());
    assert_ne!(a, csv_string(&noisy_caption_run(6)).unwrap());
}

#[test]
fn empty_truth_rows_leave_error_cells_blank() {
    let d = Dataset::new(
        vocab(),
        vec![SceneImage::new("e", 8, 8, 192, vec![]).unwrap(), scene_a()],
    )
    .unwrap();
    let report = run_algorithm2(&RunConfig::new(CodecConfig::crops("crops")), &d).unwrap();
    let (_, rows) = parse(&csv_string(&report).unwrap());
    assert_eq!(&rows[0][4..10], ["1", "", "", "true", "1", ""]);
    assert_eq!(rows[1][9], "0");
}

#[test]
fn unwritable_path_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("missing").join("out.csv");
    let err = export_csv(&noisy_caption_run(1), &path).unwrap_err();
    assert!(matches!(err, Error::Io { .. }));
    assert!(err.to_string().contains("missing"), "{err}");
    let err = render_plot(
        &[noisy_caption_run(1)],
        dir.path().join("nope").join("p.png"),
    )
    .unwrap_err();
    assert!(err.to_string().contains("nope"), "{err}");
}

#[test]
fn plot_overlays_two_codecs() {
    let d = three_images();
    let caption = noisy_caption_run(2);
    let raw = run(&RunConfig::new(CodecConfig::raw("raw")), &d).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("curves.png");
    render_plot(&[caption.clone(), raw.clone()], &path).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    assert_eq!(&bytes[..8], b"\x89PNG\r\n\x1a\n");
    let one = render(std::slice::from_ref(&caption)).unwrap();
    let two = render(&[caption, raw]).unwrap();
    assert_ne!(one, two);
    assert!(render(&[]).is_err());
}

#[test]
fn single_caption_and_crops_on_perfect_pipeline() {
    let d = three_images();
    let cap = run_algorithm1(
        &RunConfig::new(CodecConfig::caption("k1", 1, CaptionNoise::NOISELESS)),
        &d,
    )
    .unwrap();
    let crops = run_algorithm2(&RunConfig::new(CodecConfig::crops("crops")), &d).unwrap();
    for r in cap.records().iter().chain(crops.records()) {
        assert!(r.error.is_none() || r.error == Some(0.0));
    }
    let caption_bytes: u64 = cap.records().iter().map(|r| r.payload_bits / 8).sum();
    let crop_bits: u64 = crops.records().iter().map(|r| r.payload_bits).sum();
    assert!(caption_bytes < crop_bits / 8);
    assert!(crops.summary.mean_gain <= cap.summary.mean_gain);
}

#[test]
fn run_config_resolves_paths_next_to_the_file() {
    let dir = tempfile::tempdir().unwrap();
    three_images().save(dir.path().join("data.json")).unwrap();
    let cfg_path = dir.path().join("run.json");
    std::fs::write(
        &cfg_path,
        r#"{"dataset": "data.json", "codec": {"name": "c", "codec": "crops"},
            "constraints": {"min_gain": 0.5, "max_error": 0.1}, "seed": 3, "csv_out": "out.csv"}"#,
    )
    .unwrap();
    let cfg = RunConfig::load(&cfg_path).unwrap();
    assert_eq!(
        cfg.dataset.as_deref(),
        Some(dir.path().join("data.json").as_path())
    );
    let d = cfg.load_dataset().unwrap();
    assert_eq!(d, three_images());
    let report = run(&cfg, &d).unwrap();
    assert!(report.verdict.is_some());
    export_csv(&report, cfg.csv_out.as_ref().unwrap()).unwrap();
    assert!(dir.path().join("out.csv").exists());
}

#[test]
fn vocabulary_override_must_cover_the_dataset() {
    let mut cfg = RunConfig::new(CodecConfig::raw("r"));
    cfg.synthetic = Some(semcom_core::synth::SynthConfig {
        images: 3,
        width: 16,
        height: 16,
        pixel_bits: 24,
        classes: vec!["cat".into()],
        min_objects: 1,
        max_objects: 2,
        layout: semcom_core::synth::Layout::Random {
            min_side: 1,
            max_side: 4,
        },
    });
    cfg.vocabulary = Some(vec!["cat".into(), "owl".into()]);
    assert_eq!(cfg.load_dataset().unwrap().vocabulary.len(), 2);
    cfg.vocabulary = Some(vec!["owl".into()]);
    assert!(cfg.load_dataset().is_err());
}

#[test]
fn dataset_schema_errors_carry_the_json_path() {
    let err = Dataset::from_json_str(
        r#"{"vocabulary": ["a"], "images": [{"id": "x", "width": "wide", "height": 4}]}"#,
    )
    .unwrap_err();
    assert!(matches!(err, Error::Schema { .. }));
    assert!(err.to_string().contains("images[0].width"), "{err}");

    let err = Dataset::from_json_str(
        r#"{"vocabulary": ["a"], "images": [{"id": "x", "width": 4, "height": 4,
            "objects": [{"class": "b", "bbox": [0, 0, 1, 1]}]}]}"#,
    )
    .unwrap_err();
    assert!(matches!(err, Error::InvalidScene { .. }), "{err}");
}

#[test]
fn coco_errors() {
    let missing_category = r#"{"images": [{"id": 1, "width": 8, "height": 8}],
        "annotations": [{"id": 1, "image_id": 1, "category_id": 9, "bbox": [0, 0, 1, 1]}],
        "categories": [{"id": 1, "name": "person"}]}"#;
    assert!(matches!(
        import_coco_str(missing_category, &CocoImportOptions::default()),
        Err(Error::UnknownCategory { .. })
    ));
    let bad = r#"{"images": [{"id": 1, "width": 8}], "annotations": [], "categories": []}"#;
    let err = import_coco_str(bad, &CocoImportOptions::default()).unwrap_err();
    assert!(err.to_string().contains("images[0]"), "{err}");

    let empty = r#"{"images": [{"id": 3, "width": 8, "height": 8}, {"id": 1, "width": 4, "height": 4}],
        "annotations": [], "categories": [{"id": 1, "name": "person"}]}"#;
    let d = import_coco_str(
        empty,
        &CocoImportOptions {
            max_images: Some(1),
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(d.len(), 1);
    assert_eq!(d.images[0].id, "1");
    assert!(d.images[0].objects.is_empty());
}
