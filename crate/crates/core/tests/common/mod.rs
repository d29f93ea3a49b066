#![allow(dead_code)]

use std::fs;
use std::path::Path;

use convmr::data::{Dataset, RawTriple, Triple, Vocabulary};
use convmr::trainer::TrainConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// 20 entities, 5 relations: two ring relations plus pairs joined by two
/// or three relations at once.
pub fn toy_kg() -> Dataset {
    Dataset::from_raw("toy", &toy_raw(), &[], &[]).unwrap()
}

pub fn toy_raw() -> Vec<RawTriple> {
    let mut raw = Vec::new();
    let e = |i: usize| format!("e{}", i % 20);
    for i in 0..20 {
        raw.push(RawTriple::new(e(i), "r0", e(i + 1)));
        raw.push(RawTriple::new(e(i), "r1", e(i + 3)));
    }
    for i in 0..12 {
        raw.push(RawTriple::new(e(i), "r2", e(i + 7)));
        raw.push(RawTriple::new(e(i), "r3", e(i + 7)));
        if i % 3 == 0 {
            raw.push(RawTriple::new(e(i), "r4", e(i + 7)));
        }
    }
    raw
}

/// Writes `train.txt`, `valid.txt` and `test.txt` under `dir`.
pub fn write_splits(dir: &Path, train: &[RawTriple], valid: &[RawTriple], test: &[RawTriple]) {
    fs::create_dir_all(dir).unwrap();
    for (name, rows) in [("train", train), ("valid", valid), ("test", test)] {
        let text: String = rows
            .iter()
            .map(|t| format!("{}\t{}\t{}\n", t.subject, t.relation, t.object))
            .collect();
        fs::write(dir.join(format!("{name}.txt")), text).unwrap();
    }
}

/// Toy graph on disk with every 7th triple held out for test and every
/// 11th for validation.
pub fn write_toy_dir(dir: &Path) {
    let raw = toy_raw();
    let (mut train, mut valid, mut test) = (Vec::new(), Vec::new(), Vec::new());
    for (i, t) in raw.into_iter().enumerate() {
        if i % 7 == 3 {
            test.push(t);
        } else if i % 11 == 5 {
            valid.push(t);
        } else {
            train.push(t);
        }
    }
    write_splits(dir, &train, &valid, &test);
}

pub fn toy_config() -> TrainConfig {
    TrainConfig {
        epochs: 200,
        k: 32,
        tau: 8,
        num_batches: 4,
        initial_lr: 0.2,
        lr_decay_factor: 1.0,
        lr_decay_every: 5,
        lambda: 0.0,
        seed: 3,
        ..Default::default()
    }
}

/// Random KG with at most `max_entities` entities over `relations`
/// relations, split into train / valid / test.
pub fn random_kg(seed: u64, max_entities: usize, relations: usize) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ne = rng.gen_range(3..=max_entities);
    let nr = rng.gen_range(1..=relations);
    let n = rng.gen_range(ne..=3 * ne);
    let mut all: Vec<Triple> = (0..n)
        .map(|_| {
            Triple::new(
                rng.gen_range(0..ne),
                rng.gen_range(0..nr),
                rng.gen_range(0..ne),
            )
        })
        .collect();
    all.sort();
    all.dedup();
    let vocab = Vocabulary::from_labels(
        (0..ne).map(|i| format!("e{i}")).collect(),
        (0..nr).map(|i| format!("r{i}")).collect(),
    );
    let mut train = Vec::new();
    let mut valid = Vec::new();
    let mut test = Vec::new();
    for t in all {
        match rng.gen_range(0..10) {
            0 => valid.push(t),
            1 | 2 => test.push(t),
            _ => train.push(t),
        }
    }
    if test.is_empty() {
        test.push(train.pop().unwrap_or(Triple::new(0, 0, 1)));
    }
    Dataset::from_encoded(format!("random{seed}"), vocab, train, valid, test)
}
