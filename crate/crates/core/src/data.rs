//! Triple files, vocabularies, encoded datasets and the filter index used
//! by the filtered ranking protocol.
//!
//! Triple files are UTF-8, one `subject<TAB>relation<TAB>object` triple per
//! line, the layout both public benchmark distributions use. A dataset
//! directory holds `train.txt`, `valid.txt` and `test.txt`.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use indexmap::IndexMap;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub type EntityId = usize;
pub type RelationId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RawTriple {
    pub subject: String,
    pub relation: String,
    pub object: String,
}

impl RawTriple {
    pub fn new(s: impl Into<String>, r: impl Into<String>, o: impl Into<String>) -> Self {
        Self {
            subject: s.into(),
            relation: r.into(),
            object: o.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub s: EntityId,
    pub r: RelationId,
    pub o: EntityId,
}

impl Triple {
    pub fn new(s: EntityId, r: RelationId, o: EntityId) -> Self {
        Self { s, r, o }
    }
}

/// Reads a tab-separated triple file. Blank lines are skipped; every other
/// line must carry exactly three non-empty fields.
pub fn load_triples(path: impl AsRef<Path>) -> Result<Vec<RawTriple>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_triples(BufReader::new(file), path)
}

pub fn parse_triples(reader: impl BufRead, origin: &Path) -> Result<Vec<RawTriple>> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(origin, e))?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(Error::Malformed {
                path: origin.to_path_buf(),
                line: line_no,
                reason: format!("expected 3 tab-separated fields, found {}", fields.len()),
            });
        }
        if fields.iter().any(|f| f.is_empty()) {
            return Err(Error::Malformed {
                path: origin.to_path_buf(),
                line: line_no,
                reason: "empty field".into(),
            });
        }
        out.push(RawTriple::new(fields[0], fields[1], fields[2]));
    }
    Ok(out)
}

/// Dense, first-appearance ids for entity and relation labels.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    entities: IndexMap<String, ()>,
    relations: IndexMap<String, ()>,
}

impl Vocabulary {
    /// Assigns ids in order of first appearance across `splits`, visiting
    /// subject before object within each triple.
    pub fn build(splits: &[&[RawTriple]]) -> Result<Self> {
        let mut vocab = Self::default();
        for t in splits.iter().flat_map(|s| s.iter()) {
            vocab.entities.entry(t.subject.clone()).or_default();
            vocab.relations.entry(t.relation.clone()).or_default();
            vocab.entities.entry(t.object.clone()).or_default();
        }
        if vocab.entities.is_empty() {
            return Err(Error::EmptyInput("triple list"));
        }
        Ok(vocab)
    }

    /// Builds a vocabulary from explicit label lists (ids follow list order).
    pub fn from_labels(entities: Vec<String>, relations: Vec<String>) -> Self {
        Self {
            entities: entities.into_iter().map(|e| (e, ())).collect(),
            relations: relations.into_iter().map(|r| (r, ())).collect(),
        }
    }

    pub fn num_entities(&self) -> usize {
        self.entities.len()
    }

    pub fn num_relations(&self) -> usize {
        self.relations.len()
    }

    pub fn entity_id(&self, label: &str) -> Option<EntityId> {
        self.entities.get_index_of(label)
    }

    pub fn relation_id(&self, label: &str) -> Option<RelationId> {
        self.relations.get_index_of(label)
    }

    pub fn entity_label(&self, id: EntityId) -> Option<&str> {
        self.entities.get_index(id).map(|(k, _)| k.as_str())
    }

    pub fn relation_label(&self, id: RelationId) -> Option<&str> {
        self.relations.get_index(id).map(|(k, _)| k.as_str())
    }

    pub fn entity_labels(&self) -> impl Iterator<Item = &str> {
        self.entities.keys().map(String::as_str)
    }

    pub fn relation_labels(&self) -> impl Iterator<Item = &str> {
        self.relations.keys().map(String::as_str)
    }

    /// SHA-256 over every label in id order, hex encoded.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for e in self.entities.keys() {
            h.update(b"E");
            h.update(e.as_bytes());
            h.update([0u8]);
        }
        for r in self.relations.keys() {
            h.update(b"R");
            h.update(r.as_bytes());
            h.update([0u8]);
        }
        hex::encode(h.finalize())
    }
}

/// Translates labels to ids, preserving order. Line numbers in errors are
/// 1-based positions within `raw`.
pub fn encode(vocab: &Vocabulary, raw: &[RawTriple]) -> Result<Vec<Triple>> {
    raw.iter()
        .enumerate()
        .map(|(i, t)| {
            let unknown = |kind, label: &str| Error::UnknownLabel {
                kind,
                label: label.to_string(),
                line: i + 1,
            };
            Ok(Triple {
                s: vocab
                    .entity_id(&t.subject)
                    .ok_or_else(|| unknown("entity", &t.subject))?,
                r: vocab
                    .relation_id(&t.relation)
                    .ok_or_else(|| unknown("relation", &t.relation))?,
                o: vocab
                    .entity_id(&t.object)
                    .ok_or_else(|| unknown("entity", &t.object))?,
            })
        })
        .collect()
}

pub fn decode(vocab: &Vocabulary, triples: &[Triple]) -> Result<Vec<RawTriple>> {
    triples
        .iter()
        .map(|t| {
            let ent = |id| {
                vocab
                    .entity_label(id)
                    .ok_or(Error::UnknownId { kind: "entity", id })
            };
            let rel = vocab.relation_label(t.r).ok_or(Error::UnknownId {
                kind: "relation",
                id: t.r,
            })?;
            Ok(RawTriple::new(ent(t.s)?, rel, ent(t.o)?))
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub train: Vec<Triple>,
    pub valid: Vec<Triple>,
    pub test: Vec<Triple>,
    pub vocab: Vocabulary,
}

impl Dataset {
    /// Loads `train.txt`, `valid.txt` and `test.txt` from `dir`. The
    /// vocabulary covers all three splits, in that order.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let read = |name: &str| -> Result<Vec<RawTriple>> {
            let p: PathBuf = dir.join(name);
            load_triples(p)
        };
        let (train, valid, test) = (read("train.txt")?, read("valid.txt")?, read("test.txt")?);
        let name = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| dir.display().to_string());
        Self::from_raw(name, &train, &valid, &test)
    }

    pub fn from_raw(
        name: impl Into<String>,
        train: &[RawTriple],
        valid: &[RawTriple],
        test: &[RawTriple],
    ) -> Result<Self> {
        let vocab = Vocabulary::build(&[train, valid, test])?;
        Ok(Self {
            name: name.into(),
            train: encode(&vocab, train)?,
            valid: encode(&vocab, valid)?,
            test: encode(&vocab, test)?,
            vocab,
        })
    }

    pub fn from_encoded(
        name: impl Into<String>,
        vocab: Vocabulary,
        train: Vec<Triple>,
        valid: Vec<Triple>,
        test: Vec<Triple>,
    ) -> Self {
        Self {
            name: name.into(),
            train,
            valid,
            test,
            vocab,
        }
    }

    pub fn all_triples(&self) -> impl Iterator<Item = &Triple> {
        self.train.iter().chain(&self.valid).chain(&self.test)
    }

    pub fn stats(&self) -> DatasetStats {
        DatasetStats {
            name: self.name.clone(),
            entities: self.vocab.num_entities(),
            relations: self.vocab.num_relations(),
            train: self.train.len(),
            valid: self.valid.len(),
            test: self.test.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetStats {
    pub name: String,
    pub entities: usize,
    pub relations: usize,
    pub train: usize,
    pub valid: usize,
    pub test: usize,
}

impl DatasetStats {
    pub const CSV_HEADER: &'static str = "dataset,entities,relations,train,valid,test";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.name, self.entities, self.relations, self.train, self.valid, self.test
        )
    }
}

/// Every known triple, keyed for candidate filtering on either side.
#[derive(Debug, Clone, Default)]
pub struct FilterIndex {
    objects: HashMap<(RelationId, EntityId), HashSet<EntityId>>,
    subjects: HashMap<(RelationId, EntityId), HashSet<EntityId>>,
}

impl FilterIndex {
    pub fn build(dataset: &Dataset) -> Self {
        Self::from_triples(dataset.all_triples())
    }

    pub fn from_triples<'a>(triples: impl IntoIterator<Item = &'a Triple>) -> Self {
        let mut idx = Self::default();
        for t in triples {
            idx.objects.entry((t.r, t.s)).or_default().insert(t.o);
            idx.subjects.entry((t.r, t.o)).or_default().insert(t.s);
        }
        idx
    }

    pub fn contains(&self, t: &Triple) -> bool {
        self.objects
            .get(&(t.r, t.s))
            .is_some_and(|set| set.contains(&t.o))
    }

    /// Known objects of `(subject, relation, ?)`.
    pub fn objects(&self, r: RelationId, s: EntityId) -> Option<&HashSet<EntityId>> {
        self.objects.get(&(r, s))
    }

    /// Known subjects of `(?, relation, object)`.
    pub fn subjects(&self, r: RelationId, o: EntityId) -> Option<&HashSet<EntityId>> {
        self.subjects.get(&(r, o))
    }

    /// Number of distinct `(relation, subject)` keys.
    pub fn num_subject_keys(&self) -> usize {
        self.objects.len()
    }

    /// Number of distinct `(relation, object)` keys.
    pub fn num_object_keys(&self) -> usize {
        self.subjects.len()
    }

    /// Total distinct triples indexed.
    pub fn num_triples(&self) -> usize {
        self.objects.values().map(HashSet::len).sum()
    }
}
