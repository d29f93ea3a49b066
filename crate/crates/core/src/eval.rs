//! Filtered link-prediction ranking, relation categories and attention
//! inspection.
//!
//! For each evaluation triple both the subject and the object are replaced
//! by every entity. Candidates forming a known triple (any split) are
//! dropped, except the gold one. Lower scores are better, and ties count
//! against the gold entity.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use rayon::prelude::*;

use crate::data::{EntityId, FilterIndex, RelationId, Triple, Vocabulary};
use crate::error::{Error, Result};
use crate::model::{EncoderKind, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Subject,
    Object,
}

impl Side {
    pub fn as_str(self) -> &'static str {
        match self {
            Side::Subject => "subject",
            Side::Object => "object",
        }
    }
}

/// Scores every candidate entity for a query against fixed parameters.
///
/// Relation encodings for singleton sets are computed once up front.
pub struct Ranker<'p> {
    params: &'p ModelParams,
    relation_vectors: Vec<Vec<f64>>,
}

impl<'p> Ranker<'p> {
    pub fn new(params: &'p ModelParams) -> Result<Self> {
        let relation_vectors = (0..params.num_relations())
            .map(|r| params.encode_value(&[r]))
            .collect::<Result<_>>()?;
        Ok(Self {
            params,
            relation_vectors,
        })
    }

    pub fn params(&self) -> &ModelParams {
        self.params
    }

    /// Score of a plain triple; equal to the tape score bit for bit.
    pub fn score(&self, t: &Triple) -> f64 {
        let p = self.params;
        p.score_with_encoding(
            p.entity.row(t.s),
            p.entity.row(t.o),
            &self.relation_vectors[t.r],
        )
    }

    /// Scores of `t` with the entity on `side` replaced by each entity id.
    pub fn candidate_scores(&self, t: &Triple, side: Side) -> Vec<f64> {
        let p = self.params;
        let k = p.k;
        let vr = &self.relation_vectors[t.r];
        let filters = p.filters.values();
        let w = p.score_w.values();
        (0..p.num_entities())
            .map(|c| {
                let (vs, vo) = match side {
                    Side::Subject => (p.entity.row(c), p.entity.row(t.o)),
                    Side::Object => (p.entity.row(t.s), p.entity.row(c)),
                };
                let mut acc = 0.0;
                for (f, filt) in filters.chunks_exact(3).enumerate() {
                    let wf = &w[f * k..(f + 1) * k];
                    for i in 0..k {
                        let x = filt[0] * vs[i] + filt[1] * vo[i] + filt[2] * vr[i];
                        if x > 0.0 {
                            acc += wf[i] * x;
                        }
                    }
                }
                acc
            })
            .collect()
    }

    /// Rank of the gold entity on `side`. With a filter, candidates that
    /// form known triples (other than the gold one) are skipped.
    pub fn rank(&self, t: &Triple, side: Side, filter: Option<&FilterIndex>) -> Result<usize> {
        let p = self.params;
        let n = p.num_entities();
        if t.s >= n || t.o >= n {
            return Err(Error::UnknownId {
                kind: "entity",
                id: t.s.max(t.o),
            });
        }
        if t.r >= p.num_relations() {
            return Err(Error::UnknownId {
                kind: "relation",
                id: t.r,
            });
        }
        let scores = self.candidate_scores(t, side);
        let gold: EntityId = match side {
            Side::Subject => t.s,
            Side::Object => t.o,
        };
        let known: Option<&HashSet<EntityId>> = filter.and_then(|f| match side {
            Side::Subject => f.subjects(t.r, t.o),
            Side::Object => f.objects(t.r, t.s),
        });
        Ok(rank_from_scores(&scores, gold, known))
    }
}

/// `1 + #{c != gold, c not known : !(score[c] > score[gold])}`.
pub fn rank_from_scores(
    scores: &[f64],
    gold: EntityId,
    known: Option<&HashSet<EntityId>>,
) -> usize {
    let g = scores[gold];
    let mut rank = 1;
    for (c, &sc) in scores.iter().enumerate() {
        if c == gold || known.is_some_and(|k| k.contains(&c)) {
            continue;
        }
        // NaN is unordered and therefore counts against gold
        if sc.partial_cmp(&g) != Some(Ordering::Greater) {
            rank += 1;
        }
    }
    rank
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub queries: usize,
    pub mean_rank: f64,
    /// Percentage of ranks at most 10.
    pub hits_at_10: f64,
}

impl Metrics {
    pub fn from_ranks(ranks: &[usize]) -> Option<Self> {
        if ranks.is_empty() {
            return None;
        }
        let n = ranks.len();
        let sum: usize = ranks.iter().sum();
        let hits = ranks.iter().filter(|&&r| r <= 10).count();
        Some(Self {
            queries: n,
            mean_rank: sum as f64 / n as f64,
            hits_at_10: 100.0 * hits as f64 / n as f64,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalResult {
    /// All ranks of both sides pooled.
    pub overall: Metrics,
    pub subject: Metrics,
    pub object: Metrics,
}

impl EvalResult {
    pub fn from_ranks(subject: &[usize], object: &[usize]) -> Option<Self> {
        let all: Vec<usize> = subject.iter().chain(object).copied().collect();
        Some(Self {
            overall: Metrics::from_ranks(&all)?,
            subject: Metrics::from_ranks(subject)?,
            object: Metrics::from_ranks(object)?,
        })
    }
}

/// Filtered ranks of both sides of every triple, in input order.
pub fn rank_all(
    triples: &[Triple],
    ranker: &Ranker,
    filter: &FilterIndex,
) -> Result<(Vec<usize>, Vec<usize>)> {
    let pairs: Vec<(usize, usize)> = triples
        .par_iter()
        .map(|t| {
            Ok((
                ranker.rank(t, Side::Subject, Some(filter))?,
                ranker.rank(t, Side::Object, Some(filter))?,
            ))
        })
        .collect::<Result<_>>()?;
    Ok(pairs.into_iter().unzip())
}

/// Runs on the current rayon pool; install a sized pool to bound threads.
pub fn evaluate(triples: &[Triple], ranker: &Ranker, filter: &FilterIndex) -> Result<EvalResult> {
    let (subject, object) = rank_all(triples, ranker, filter)?;
    EvalResult::from_ranks(&subject, &object).ok_or(Error::EmptyInput("evaluation split"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RelationCategory {
    OneToOne,
    OneToMany,
    ManyToOne,
    ManyToMany,
}

impl RelationCategory {
    pub const ALL: [RelationCategory; 4] = [
        RelationCategory::OneToOne,
        RelationCategory::OneToMany,
        RelationCategory::ManyToOne,
        RelationCategory::ManyToMany,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RelationCategory::OneToOne => "1-1",
            RelationCategory::OneToMany => "1-M",
            RelationCategory::ManyToOne => "M-1",
            RelationCategory::ManyToMany => "M-M",
        }
    }

    pub fn from_counts(n_s: f64, n_o: f64) -> Self {
        match (n_s > CATEGORY_THRESHOLD, n_o > CATEGORY_THRESHOLD) {
            (false, false) => RelationCategory::OneToOne,
            (false, true) => RelationCategory::OneToMany,
            (true, false) => RelationCategory::ManyToOne,
            (true, true) => RelationCategory::ManyToMany,
        }
    }
}

impl fmt::Display for RelationCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub const CATEGORY_THRESHOLD: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelationProfile {
    /// Mean subjects per distinct object.
    pub n_s: f64,
    /// Mean objects per distinct subject.
    pub n_o: f64,
    pub category: RelationCategory,
}

pub fn categorize_relations(triples: &[Triple]) -> BTreeMap<RelationId, RelationProfile> {
    #[derive(Default)]
    struct Acc {
        count: usize,
        subjects: HashSet<EntityId>,
        objects: HashSet<EntityId>,
    }
    let mut per: HashMap<RelationId, Acc> = HashMap::new();
    for t in triples {
        let a = per.entry(t.r).or_default();
        a.count += 1;
        a.subjects.insert(t.s);
        a.objects.insert(t.o);
    }
    per.into_iter()
        .map(|(r, a)| {
            let n_o = a.count as f64 / a.subjects.len() as f64;
            let n_s = a.count as f64 / a.objects.len() as f64;
            (
                r,
                RelationProfile {
                    n_s,
                    n_o,
                    category: RelationCategory::from_counts(n_s, n_o),
                },
            )
        })
        .collect()
}

/// Partitions `triples` by relation category. Relations missing from
/// `categories` are profiled from `fallback` (typically train + valid).
pub fn partition_by_category(
    triples: &[Triple],
    categories: &BTreeMap<RelationId, RelationProfile>,
    fallback: &[Triple],
) -> Result<BTreeMap<RelationCategory, Vec<Triple>>> {
    let mut extra: Option<BTreeMap<RelationId, RelationProfile>> = None;
    let mut parts: BTreeMap<RelationCategory, Vec<Triple>> = BTreeMap::new();
    for t in triples {
        let cat = match categories.get(&t.r) {
            Some(p) => p.category,
            None => {
                let fb = extra.get_or_insert_with(|| categorize_relations(fallback));
                fb.get(&t.r)
                    .ok_or(Error::UnknownId {
                        kind: "relation",
                        id: t.r,
                    })?
                    .category
            }
        };
        parts.entry(cat).or_default().push(*t);
    }
    Ok(parts)
}

/// Per-category results; empty categories are absent from the map.
pub fn evaluate_by_category(
    triples: &[Triple],
    ranker: &Ranker,
    filter: &FilterIndex,
    categories: &BTreeMap<RelationId, RelationProfile>,
    fallback: &[Triple],
) -> Result<BTreeMap<RelationCategory, EvalResult>> {
    partition_by_category(triples, categories, fallback)?
        .into_iter()
        .map(|(c, part)| Ok((c, evaluate(&part, ranker, filter)?)))
        .collect()
}

/// Percentage of `triples` in each category.
pub fn category_shares(
    triples: &[Triple],
    categories: &BTreeMap<RelationId, RelationProfile>,
    fallback: &[Triple],
) -> Result<BTreeMap<RelationCategory, f64>> {
    let parts = partition_by_category(triples, categories, fallback)?;
    let n = triples.len().max(1) as f64;
    Ok(parts
        .into_iter()
        .map(|(c, v)| (c, 100.0 * v.len() as f64 / n))
        .collect())
}

/// Attention weights for a labelled relation set, heaviest first.
pub fn inspect_attention(
    labels: &[&str],
    params: &ModelParams,
    vocab: &Vocabulary,
) -> Result<Vec<(String, f64)>> {
    if params.encoder != EncoderKind::AttnAverage {
        return Err(Error::WrongEncoder(params.encoder.to_string()));
    }
    let ids = labels
        .iter()
        .enumerate()
        .map(|(i, l)| {
            vocab.relation_id(l).ok_or_else(|| Error::UnknownLabel {
                kind: "relation",
                label: l.to_string(),
                line: i + 1,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let weights = params.attention_weights(&ids)?;
    let mut out: Vec<(String, f64)> = labels.iter().map(|l| l.to_string()).zip(weights).collect();
    out.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(out)
}

pub const RESULTS_HEADER: &str = "split,category,side,queries,mean_rank,hits_at_10";

/// Three CSV rows (both sides pooled, subject, object) for one result.
pub fn result_rows(split: &str, category: &str, r: &EvalResult) -> Vec<String> {
    [
        ("both", &r.overall),
        ("subject", &r.subject),
        ("object", &r.object),
    ]
    .into_iter()
    .map(|(side, m)| {
        format!(
            "{split},{category},{side},{},{},{}",
            m.queries, m.mean_rank, m.hits_at_10
        )
    })
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pessimistic_ties() {
        let scores = vec![1.0; 6];
        assert_eq!(rank_from_scores(&scores, 2, None), 6);
        let known: HashSet<EntityId> = [0, 4].into_iter().collect();
        assert_eq!(rank_from_scores(&scores, 2, Some(&known)), 4);
    }

    #[test]
    fn unique_minimum_ranks_first() {
        assert_eq!(rank_from_scores(&[0.3, -1.0, 0.2], 1, None), 1);
        assert_eq!(rank_from_scores(&[0.3, -1.0, 0.2], 0, None), 3);
    }

    #[test]
    fn filter_keeps_gold() {
        let known: HashSet<EntityId> = [1].into_iter().collect();
        assert_eq!(rank_from_scores(&[0.0, 0.5, 1.0], 1, Some(&known)), 2);
    }

    #[test]
    fn nan_counts_against_gold() {
        assert_eq!(rank_from_scores(&[f64::NAN, 0.0], 1, None), 2);
    }

    #[test]
    fn metrics_from_ranks() {
        let m = Metrics::from_ranks(&[1, 3, 11, 25]).unwrap();
        assert_eq!(m.queries, 4);
        assert_eq!(m.mean_rank, 10.0);
        assert_eq!(m.hits_at_10, 50.0);
        assert!(Metrics::from_ranks(&[]).is_none());
    }

    #[test]
    fn categories_by_hand() {
        // r0: one triple -> 1-1
        // r1: a->b, a->c, a->d -> n_o = 3, n_s = 1 -> 1-M
        let triples = vec![
            Triple::new(0, 0, 1),
            Triple::new(0, 1, 1),
            Triple::new(0, 1, 2),
            Triple::new(0, 1, 3),
        ];
        let c = categorize_relations(&triples);
        assert_eq!(c[&0].category, RelationCategory::OneToOne);
        assert_eq!((c[&0].n_s, c[&0].n_o), (1.0, 1.0));
        assert_eq!(c[&1].category, RelationCategory::OneToMany);
        assert_eq!((c[&1].n_s, c[&1].n_o), (1.0, 3.0));
    }

    #[test]
    fn threshold_is_inclusive_for_one() {
        assert_eq!(
            RelationCategory::from_counts(1.5, 1.5),
            RelationCategory::OneToOne
        );
        assert_eq!(
            RelationCategory::from_counts(1.51, 1.5),
            RelationCategory::ManyToOne
        );
    }

    #[test]
    fn missing_category_uses_fallback() {
        let cats = categorize_relations(&[Triple::new(0, 0, 1)]);
        let test = vec![Triple::new(0, 1, 2)];
        let parts = partition_by_category(&test, &cats, &[Triple::new(3, 1, 4)]).unwrap();
        assert_eq!(parts[&RelationCategory::OneToOne].len(), 1);
        assert!(partition_by_category(&test, &cats, &[]).is_err());
    }
}
