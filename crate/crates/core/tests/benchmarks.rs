//! Checks against the public benchmark files. Run with
//! `CONVMR_DATA_DIR=... cargo test --test benchmarks -- --ignored`.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use convmr::data::{load_triples, Dataset, FilterIndex};
use convmr::multirel::{generate, multirel_stats};

fn data_root() -> PathBuf {
    std::env::var_os("CONVMR_DATA_DIR")
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data"))
}

fn dataset(name: &str) -> Dataset {
    Dataset::load(data_root().join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn top_relation_set(ds: &Dataset) -> Vec<String> {
    let stats = multirel_stats(&generate(&ds.train));
    stats.ranking[0]
        .0
        .iter()
        .map(|&r| ds.vocab.relation_label(r).unwrap().to_string())
        .collect()
}

#[test]
#[ignore = "needs the benchmark files under CONVMR_DATA_DIR"]
fn wordnet_train_split_size() {
    let raw = load_triples(data_root().join("WN18RR/train.txt")).unwrap();
    assert_eq!(raw.len(), 86835);
}

#[test]
#[ignore = "needs the benchmark files under CONVMR_DATA_DIR"]
fn wordnet_most_frequent_relation_set() {
    let top = top_relation_set(&dataset("WN18RR"));
    assert_eq!(top.len(), 2, "{top:?}");
    assert!(
        top.iter()
            .any(|r| r.contains("derivationally_related_form")),
        "{top:?}"
    );
    assert!(
        top.iter().any(|r| r.contains("synset_domain_topic_of")),
        "{top:?}"
    );
}

#[test]
#[ignore = "needs the benchmark files under CONVMR_DATA_DIR"]
fn freebase_most_frequent_relation_set() {
    let top = top_relation_set(&dataset("FB15k-237"));
    assert_eq!(top.len(), 2, "{top:?}");
    assert!(top.iter().any(|r| r.ends_with("award_winner")), "{top:?}");
    assert!(top.iter().any(|r| r.ends_with("award_nominee")), "{top:?}");
}

#[test]
#[ignore = "needs the benchmark files under CONVMR_DATA_DIR"]
fn freebase_filter_keys_match_a_direct_scan() {
    let ds = dataset("FB15k-237");
    let index = FilterIndex::build(&ds);
    let mut keys = BTreeSet::new();
    let mut triples = BTreeSet::new();
    for t in ds.train.iter().chain(&ds.valid).chain(&ds.test) {
        keys.insert((t.r, t.s));
        triples.insert((t.s, t.r, t.o));
    }
    assert_eq!(index.num_subject_keys(), keys.len());
    assert_eq!(index.num_triples(), triples.len());
}
