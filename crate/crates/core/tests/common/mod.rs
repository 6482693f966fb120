//! Fixtures and reference implementations shared by the integration tests.

#![allow(dead_code)]

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use semcom_core::prelude::*;
use semcom_core::selector::SelectionOutcome;

pub const CLASSES: [&str; 3] = ["person", "car", "dog"];

pub fn vocab() -> ClassVocabulary {
    ClassVocabulary::new(CLASSES).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Three people, two cars and a dog on a 64×64 image.
pub fn scene_a() -> SceneImage {
    let objects = [("person", 3), ("car", 2), ("dog", 1)]
        .into_iter()
        .flat_map(|(c, n)| std::iter::repeat_n(c, n))
        .enumerate()
        .map(|(i, c)| ObjectInstance::new(c, BBox::new(i as u32 * 8, 0, 8, 8)))
        .collect();
    SceneImage::new("scene-a", 64, 64, 192, objects).unwrap()
}

/// A valid scene with `0..=max_objects` objects drawn from [`CLASSES`].
pub fn random_scene(rng: &mut impl Rng, id: String, max_objects: usize) -> SceneImage {
    let width = rng.random_range(8..=96);
    let height = rng.random_range(8..=96);
    let pixel_bits = *[8u32, 24, 192].get(rng.random_range(0..3)).unwrap();
    let n = rng.random_range(0..=max_objects);
    let objects = (0..n)
        .map(|_| {
            let w = rng.random_range(1..=width);
            let h = rng.random_range(1..=height);
            let x = rng.random_range(0..=width - w);
            let y = rng.random_range(0..=height - h);
            ObjectInstance::new(
                CLASSES[rng.random_range(0..CLASSES.len())],
                BBox::new(x, y, w, h),
            )
        })
        .collect();
    SceneImage::new(id, width, height, pixel_bits, objects).unwrap()
}

pub fn random_dataset(rng: &mut impl Rng, images: usize, max_objects: usize) -> Dataset {
    let scenes = (0..images)
        .map(|i| random_scene(rng, format!("img-{i:04}"), max_objects))
        .collect();
    Dataset::new(vocab(), scenes).unwrap()
}

/// Reference selection rule, written without sorting: a feasible candidate
/// wins if no other feasible candidate beats it on (weighted error, error,
/// name); an infeasible candidate's rank is the number of candidates with a
/// smaller (violation, name).
pub fn brute_force_select(summaries: &[EvaluationSummary], g0: f64, eps0: f64) -> SelectionOutcome {
    let feasible = |s: &EvaluationSummary| s.mean_gain >= g0 && s.mean_error <= eps0;
    let key = |s: &EvaluationSummary| (s.mean_weighted_error, s.mean_error, s.config.clone());
    let mut winners = Vec::new();
    for a in summaries.iter().filter(|s| feasible(s)) {
        let beaten = summaries
            .iter()
            .filter(|s| feasible(s))
            .any(|b| b.config != a.config && lex_less(&key(b), &key(a)));
        if !beaten {
            winners.push(a.config.clone());
        }
    }
    if !winners.is_empty() {
        assert_eq!(
            winners.len(),
            1,
            "names are unique, so the winner is unique"
        );
        return SelectionOutcome::Selected {
            config: winners.remove(0),
        };
    }
    let violation =
        |s: &EvaluationSummary| (g0 - s.mean_gain).max(0.0) + (s.mean_error - eps0).max(0.0);
    let mut ranking = vec![String::new(); summaries.len()];
    for a in summaries {
        let rank = summaries
            .iter()
            .filter(|b| {
                let (vb, va) = (violation(b), violation(a));
                vb < va || (vb == va && b.config < a.config)
            })
            .count();
        ranking[rank] = a.config.clone();
    }
    SelectionOutcome::Infeasible { ranking }
}

fn lex_less(a: &(f64, f64, String), b: &(f64, f64, String)) -> bool {
    if a.0 != b.0 {
        return a.0 < b.0;
    }
    if a.1 != b.1 {
        return a.1 < b.1;
    }
    a.2 < b.2
}

/// A random candidate: caption with random `K` and noise, crops, or raw.
pub fn random_codec(rng: &mut impl Rng, name: String) -> CodecConfig {
    match rng.random_range(0..4) {
        0 | 1 => {
            let grid = [0.3, 0.6, 1.0];
            let noise = CaptionNoise {
                p_mention: grid[rng.random_range(0..3)],
                p_realize: grid[rng.random_range(0..3)],
                count_jitter: rng.random_range(0..=2),
            };
            CodecConfig::caption(name, rng.random_range(1..=5), noise)
        }
        2 => CodecConfig::crops(name),
        _ => CodecConfig::raw(name),
    }
}
