//! Multi-relation training instances.
//!
//! Every `(subject, object)` pair linked by two or more distinct relations
//! becomes one extra instance carrying the whole relation set. Plain
//! triples are kept alongside as singleton instances.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use indexmap::IndexMap;

use crate::data::{EntityId, RelationId, Triple, Vocabulary};
use crate::error::{Error, Result};

/// `(s, {r_1, ..., r_N}, o)` with the relation ids sorted ascending and
/// free of duplicates.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MultiRelationInstance {
    pub s: EntityId,
    relations: Vec<RelationId>,
    pub o: EntityId,
}

impl MultiRelationInstance {
    /// Canonicalizes `relations` (sort + dedup). Fails on an empty set.
    pub fn new(
        s: EntityId,
        relations: impl IntoIterator<Item = RelationId>,
        o: EntityId,
    ) -> Result<Self> {
        let set: BTreeSet<RelationId> = relations.into_iter().collect();
        if set.is_empty() {
            return Err(Error::EmptyInput("relation set"));
        }
        Ok(Self {
            s,
            relations: set.into_iter().collect(),
            o,
        })
    }

    pub fn single(t: Triple) -> Self {
        Self {
            s: t.s,
            relations: vec![t.r],
            o: t.o,
        }
    }

    pub fn relations(&self) -> &[RelationId] {
        &self.relations
    }

    pub fn len(&self) -> usize {
        self.relations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.relations.is_empty()
    }

    pub fn with_entities(&self, s: EntityId, o: EntityId) -> Self {
        Self {
            s,
            relations: self.relations.clone(),
            o,
        }
    }
}

/// One instance per `(s, o)` pair with more than one distinct relation,
/// in order of the pair's first appearance in `triples`.
pub fn generate(triples: &[Triple]) -> Vec<MultiRelationInstance> {
    let mut pair_to_relations: IndexMap<(EntityId, EntityId), BTreeSet<RelationId>> =
        IndexMap::new();
    for t in triples {
        pair_to_relations.entry((t.s, t.o)).or_default().insert(t.r);
    }
    pair_to_relations
        .into_iter()
        .filter(|(_, rels)| rels.len() > 1)
        .map(|((s, o), rels)| MultiRelationInstance {
            s,
            relations: rels.into_iter().collect(),
            o,
        })
        .collect()
}

/// Originals (as singleton instances) followed by the multi-relation ones.
pub fn merge_training_set(
    triples: &[Triple],
    multi: &[MultiRelationInstance],
) -> Vec<MultiRelationInstance> {
    triples
        .iter()
        .copied()
        .map(MultiRelationInstance::single)
        .chain(multi.iter().cloned())
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiRelStats {
    /// Relation-set size to number of instances.
    pub size_histogram: BTreeMap<usize, usize>,
    /// Distinct relation sets by occurrence count, descending; ties in
    /// ascending lexicographic order of the id lists.
    pub ranking: Vec<(Vec<RelationId>, usize)>,
}

pub fn multirel_stats(multi: &[MultiRelationInstance]) -> MultiRelStats {
    let mut size_histogram = BTreeMap::new();
    let mut counts: HashMap<&[RelationId], usize> = HashMap::new();
    for m in multi {
        *size_histogram.entry(m.len()).or_insert(0) += 1;
        *counts.entry(m.relations()).or_insert(0) += 1;
    }
    let mut ranking: Vec<(Vec<RelationId>, usize)> =
        counts.into_iter().map(|(k, c)| (k.to_vec(), c)).collect();
    ranking.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    MultiRelStats {
        size_histogram,
        ranking,
    }
}

/// `s<TAB>r_1,...,r_N<TAB>o` per line using vocabulary labels.
pub fn to_tsv(vocab: &Vocabulary, instances: &[MultiRelationInstance]) -> Result<String> {
    let mut out = String::new();
    for m in instances {
        let ent = |id| {
            vocab
                .entity_label(id)
                .ok_or(Error::UnknownId { kind: "entity", id })
        };
        let rels = m
            .relations()
            .iter()
            .map(|&id| {
                vocab.relation_label(id).ok_or(Error::UnknownId {
                    kind: "relation",
                    id,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        writeln!(out, "{}\t{}\t{}", ent(m.s)?, rels.join(","), ent(m.o)?).unwrap();
    }
    Ok(out)
}
