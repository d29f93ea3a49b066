//! Relation encoders, the convolutional scorer and parameter storage.
//!
//! A (multi-)relation set `H = [v_r1, ..., v_rN]` is first reduced to a
//! single k-vector `v_r'` by one of the [`EncoderKind`]s. The score of
//! `(s, H, o)` is then
//!
//! ```text
//! T = [v_s, v_o, v_r']                 (k x 3, columns in that order)
//! f = score_w . concat_f relu(T * filter_f)
//! ```
//!
//! Training minimizes `softplus(l * f)` with `l = +1` for observed triples,
//! so a LOWER score means a MORE plausible triple. Ranking relies on this
//! orientation.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{conv_1x3_values, Gradients, Tape, Tensor, Var};
use crate::data::{EntityId, RelationId};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncoderKind {
    /// Softmax attention over the relation set followed by an average.
    AttnAverage,
    /// Plain mean of the relation embeddings.
    Average,
    Gru,
    /// Forward and backward GRUs; the two final states are averaged.
    Bigru,
}

impl EncoderKind {
    pub const ALL: [EncoderKind; 4] = [
        EncoderKind::AttnAverage,
        EncoderKind::Average,
        EncoderKind::Gru,
        EncoderKind::Bigru,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            EncoderKind::AttnAverage => "attn_average",
            EncoderKind::Average => "average",
            EncoderKind::Gru => "gru",
            EncoderKind::Bigru => "bigru",
        }
    }

    pub fn gru_directions(self) -> usize {
        match self {
            EncoderKind::Gru => 1,
            EncoderKind::Bigru => 2,
            _ => 0,
        }
    }
}

impl fmt::Display for EncoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EncoderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EncoderKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown encoder {s:?}")))
    }
}

/// Names of the nine tensors of one GRU direction, in storage order.
pub const GRU_SLOTS: [&str; 9] = [
    "w_z", "u_z", "b_z", "w_r", "u_r", "b_r", "w_h", "u_h", "b_h",
];

/// One GRU direction: `W_*` act on the input, `U_*` on the hidden state.
///
/// ```text
/// z  = sigmoid(W_z x + U_z h + b_z)
/// r  = sigmoid(W_r x + U_r h + b_r)
/// h~ = tanh(W_h x + U_h (r * h) + b_h)
/// h' = h + z * (h~ - h)
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct GruCell {
    pub slots: Vec<Tensor>,
}

impl GruCell {
    pub fn zeros(k: usize) -> Self {
        let slots = GRU_SLOTS
            .iter()
            .map(|name| {
                if name.starts_with('b') {
                    Tensor::zeros(&[k])
                } else {
                    Tensor::zeros(&[k, k])
                }
            })
            .collect();
        Self { slots }
    }
}

/// Addresses one trainable unit: an embedding row or a dense block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ParamKey {
    Entity(EntityId),
    Relation(RelationId),
    AttnW,
    Filters,
    ScoreW,
    Gru { dir: usize, slot: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub k: usize,
    pub tau: usize,
    pub encoder: EncoderKind,
    /// Divide the attention-weighted sum by the set size, as the attention
    /// average is written. Off gives a plain softmax-weighted sum.
    pub attn_divide_by_n: bool,
    pub entity: Tensor,
    pub relation: Tensor,
    pub attn_w: Tensor,
    pub filters: Tensor,
    pub score_w: Tensor,
    pub gru: Vec<GruCell>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitStrategy {
    Random,
    Pretrained,
}

/// Shape of a model to initialize.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModelShape {
    pub k: usize,
    pub tau: usize,
    pub num_entities: usize,
    pub num_relations: usize,
    pub encoder: EncoderKind,
}

impl ModelParams {
    /// Uniform `[-6/sqrt(k), 6/sqrt(k)]` for every block except `score_w`,
    /// which starts at zero.
    pub fn random(shape: ModelShape, seed: u64) -> Result<Self> {
        let ModelShape {
            k,
            tau,
            num_entities,
            num_relations,
            encoder,
        } = shape;
        if k == 0 || tau == 0 {
            return Err(Error::Config("k and tau must be positive".into()));
        }
        let bound = init_bound(k);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut uniform =
            |shape: &[usize]| Tensor::from_fn(shape, |_| rng.gen_range(-bound..=bound));
        let entity = uniform(&[num_entities, k]);
        let relation = uniform(&[num_relations, k]);
        let attn_w = uniform(&[1, k]);
        let filters = uniform(&[tau, 3]);
        let gru = (0..encoder.gru_directions())
            .map(|_| GruCell {
                slots: GRU_SLOTS
                    .iter()
                    .map(|n| {
                        if n.starts_with('b') {
                            uniform(&[k])
                        } else {
                            uniform(&[k, k])
                        }
                    })
                    .collect(),
            })
            .collect();
        Ok(Self {
            k,
            tau,
            encoder,
            attn_divide_by_n: true,
            entity,
            relation,
            attn_w,
            filters,
            score_w: Tensor::zeros(&[tau * k]),
            gru,
        })
    }

    /// Random initialization with the entity and relation tables replaced
    /// by pretrained ones.
    pub fn with_pretrained(
        shape: ModelShape,
        seed: u64,
        entity: Tensor,
        relation: Tensor,
    ) -> Result<Self> {
        for t in [&entity, &relation] {
            if t.shape().len() != 2 || t.shape()[1] != shape.k {
                return Err(Error::DimensionMismatch {
                    found: t.shape().get(1).copied().unwrap_or(0),
                    expected: shape.k,
                });
            }
        }
        if entity.shape()[0] != shape.num_entities || relation.shape()[0] != shape.num_relations {
            return Err(Error::Config(format!(
                "pretrained tables cover {} entities / {} relations, vocabulary has {} / {}",
                entity.shape()[0],
                relation.shape()[0],
                shape.num_entities,
                shape.num_relations
            )));
        }
        let mut p = Self::random(shape, seed)?;
        p.entity = entity;
        p.relation = relation;
        Ok(p)
    }

    pub fn num_entities(&self) -> usize {
        self.entity.rows()
    }

    pub fn num_relations(&self) -> usize {
        self.relation.rows()
    }

    /// Every block with its storage name, in a fixed order.
    pub fn named_tensors(&self) -> Vec<(String, &Tensor)> {
        let mut out = vec![
            ("entity".to_string(), &self.entity),
            ("relation".to_string(), &self.relation),
            ("attn_w".to_string(), &self.attn_w),
            ("filters".to_string(), &self.filters),
            ("score_w".to_string(), &self.score_w),
        ];
        for (d, cell) in self.gru.iter().enumerate() {
            for (name, t) in GRU_SLOTS.iter().zip(&cell.slots) {
                out.push((format!("gru.{d}.{name}"), t));
            }
        }
        out
    }

    /// All blocks as owned tensors, in [`ModelParams::named_tensors`] order.
    pub fn to_tensors(&self) -> Vec<Tensor> {
        self.named_tensors()
            .into_iter()
            .map(|(_, t)| t.clone())
            .collect()
    }

    /// Inverse of [`ModelParams::to_tensors`]; shapes must match `self`.
    pub fn load_tensors(&mut self, tensors: &[Tensor]) -> Result<()> {
        let expected = self.named_tensors();
        if expected.len() != tensors.len() {
            return Err(Error::Config("tensor count mismatch".into()));
        }
        for ((name, e), t) in expected.iter().zip(tensors) {
            if e.shape() != t.shape() {
                return Err(Error::Config(format!(
                    "tensor {name}: shape {:?} vs {:?}",
                    t.shape(),
                    e.shape()
                )));
            }
        }
        let mut it = tensors.iter().cloned();
        self.entity = it.next().unwrap();
        self.relation = it.next().unwrap();
        self.attn_w = it.next().unwrap();
        self.filters = it.next().unwrap();
        self.score_w = it.next().unwrap();
        for cell in &mut self.gru {
            for slot in &mut cell.slots {
                *slot = it.next().unwrap();
            }
        }
        Ok(())
    }

    pub fn all_finite(&self) -> bool {
        self.named_tensors().iter().all(|(_, t)| t.all_finite())
    }

    /// Shape of the tensor stored under `key`.
    pub fn shape_of(&self, key: ParamKey) -> Vec<usize> {
        match key {
            ParamKey::Entity(_) | ParamKey::Relation(_) => vec![self.k],
            ParamKey::AttnW => self.attn_w.shape().to_vec(),
            ParamKey::Filters => self.filters.shape().to_vec(),
            ParamKey::ScoreW => self.score_w.shape().to_vec(),
            ParamKey::Gru { dir, slot } => self.gru[dir].slots[slot].shape().to_vec(),
        }
    }

    pub fn slice(&self, key: ParamKey) -> &[f64] {
        match key {
            ParamKey::Entity(i) => self.entity.row(i),
            ParamKey::Relation(i) => self.relation.row(i),
            ParamKey::AttnW => self.attn_w.values(),
            ParamKey::Filters => self.filters.values(),
            ParamKey::ScoreW => self.score_w.values(),
            ParamKey::Gru { dir, slot } => self.gru[dir].slots[slot].values(),
        }
    }

    pub fn slice_mut(&mut self, key: ParamKey) -> &mut [f64] {
        match key {
            ParamKey::Entity(i) => self.entity.row_mut(i),
            ParamKey::Relation(i) => self.relation.row_mut(i),
            ParamKey::AttnW => self.attn_w.values_mut(),
            ParamKey::Filters => self.filters.values_mut(),
            ParamKey::ScoreW => self.score_w.values_mut(),
            ParamKey::Gru { dir, slot } => self.gru[dir].slots[slot].values_mut(),
        }
    }

    fn check_entity(&self, id: EntityId) -> Result<()> {
        if id < self.num_entities() {
            Ok(())
        } else {
            Err(Error::UnknownId { kind: "entity", id })
        }
    }

    fn check_relations(&self, ids: &[RelationId]) -> Result<()> {
        if ids.is_empty() {
            return Err(Error::EmptyInput("relation set"));
        }
        match ids.iter().find(|&&r| r >= self.num_relations()) {
            Some(&id) => Err(Error::UnknownId {
                kind: "relation",
                id,
            }),
            None => Ok(()),
        }
    }

    /// Relation encoding without recording gradients.
    pub fn encode_value(&self, relations: &[RelationId]) -> Result<Vec<f64>> {
        let mut tape = Tape::new();
        let mut b = Binder::sparse(self);
        let v = encode(&mut tape, &mut b, relations)?;
        Ok(tape.value(v.vector).values().to_vec())
    }

    /// Attention weights over `relations` (same order as given).
    pub fn attention_weights(&self, relations: &[RelationId]) -> Result<Vec<f64>> {
        let mut tape = Tape::new();
        let mut b = Binder::sparse(self);
        let enc = encode_attn_average(&mut tape, &mut b, relations)?;
        Ok(tape.value(enc.weights.unwrap()).values().to_vec())
    }

    /// Score of `(s, relations, o)` without a tape.
    pub fn score_value(&self, s: EntityId, relations: &[RelationId], o: EntityId) -> Result<f64> {
        self.check_entity(s)?;
        self.check_entity(o)?;
        let r = self.encode_value(relations)?;
        Ok(self.score_with_encoding(self.entity.row(s), self.entity.row(o), &r))
    }

    /// Convolution, relu and projection for already-looked-up vectors.
    /// Summation order matches the tape path exactly.
    pub fn score_with_encoding(&self, vs: &[f64], vo: &[f64], vr: &[f64]) -> f64 {
        let mut t = Vec::with_capacity(self.k * 3);
        for i in 0..self.k {
            t.extend_from_slice(&[vs[i], vo[i], vr[i]]);
        }
        let feats = conv_1x3_values(&t, self.filters.values());
        let mut acc = 0.0;
        for (w, x) in self.score_w.values().iter().zip(feats) {
            acc += w * if x > 0.0 { x } else { 0.0 };
        }
        acc
    }
}

pub fn init_bound(k: usize) -> f64 {
    6.0 / (k as f64).sqrt()
}

enum BindMode {
    /// One leaf per touched row or block; gradients come back per key.
    Sparse,
    /// Whole tables are leaves and rows are taken with `embedding_lookup`.
    Dense { entity: Var, relation: Var },
}

/// Maps parameter keys to tape nodes, creating each at most once per tape
/// so fan-out gradients accumulate on a single node.
pub struct Binder<'p> {
    params: &'p ModelParams,
    mode: BindMode,
    vars: BTreeMap<ParamKey, Var>,
}

impl<'p> Binder<'p> {
    pub fn sparse(params: &'p ModelParams) -> Self {
        Self {
            params,
            mode: BindMode::Sparse,
            vars: BTreeMap::new(),
        }
    }

    /// Binds to leaves created from [`ModelParams::to_tensors`], in that
    /// order. Used for finite-difference checks over whole blocks.
    pub fn dense(params: &'p ModelParams, leaves: &[Var]) -> Self {
        let mut vars = BTreeMap::new();
        vars.insert(ParamKey::AttnW, leaves[2]);
        vars.insert(ParamKey::Filters, leaves[3]);
        vars.insert(ParamKey::ScoreW, leaves[4]);
        let mut i = 5;
        for dir in 0..params.gru.len() {
            for slot in 0..GRU_SLOTS.len() {
                vars.insert(ParamKey::Gru { dir, slot }, leaves[i]);
                i += 1;
            }
        }
        Self {
            params,
            mode: BindMode::Dense {
                entity: leaves[0],
                relation: leaves[1],
            },
            vars,
        }
    }

    pub fn params(&self) -> &'p ModelParams {
        self.params
    }

    pub fn var(&mut self, tape: &mut Tape, key: ParamKey) -> Result<Var> {
        if let Some(&v) = self.vars.get(&key) {
            return Ok(v);
        }
        let v = match (&self.mode, key) {
            (BindMode::Dense { entity, .. }, ParamKey::Entity(i)) => {
                tape.embedding_lookup(*entity, i)?
            }
            (BindMode::Dense { relation, .. }, ParamKey::Relation(i)) => {
                tape.embedding_lookup(*relation, i)?
            }
            _ => {
                let shape = self.params.shape_of(key);
                tape.leaf(Tensor::new(shape, self.params.slice(key).to_vec())?)
            }
        };
        self.vars.insert(key, v);
        Ok(v)
    }

    /// Bound keys with their gradients, in key order. Keys that did not
    /// reach the root are omitted.
    pub fn gradients(&self, grads: &Gradients) -> Vec<(ParamKey, Tensor)> {
        self.vars
            .iter()
            .filter_map(|(k, v)| grads.get(*v).map(|g| (*k, g.clone())))
            .collect()
    }
}

pub struct Encoded {
    pub vector: Var,
    /// Attention weights, for the attention encoder only.
    pub weights: Option<Var>,
}

fn relation_columns(tape: &mut Tape, b: &mut Binder, relations: &[RelationId]) -> Result<Vec<Var>> {
    b.params().check_relations(relations)?;
    relations
        .iter()
        .map(|&r| b.var(tape, ParamKey::Relation(r)))
        .collect()
}

/// `A = softmax(tanh(W H))`, `v = (sum_i a_i v_ri) / N` (or without the
/// `/ N` when `attn_divide_by_n` is off).
pub fn encode_attn_average(
    tape: &mut Tape,
    b: &mut Binder,
    relations: &[RelationId],
) -> Result<Encoded> {
    let cols = relation_columns(tape, b, relations)?;
    let n = cols.len();
    let h = tape.stack_columns(&cols)?;
    let w = b.var(tape, ParamKey::AttnW)?;
    let logits = tape.matmul(w, h)?;
    let logits = tape.reshape(logits, &[n])?;
    let act = tape.tanh(logits);
    let weights = tape.softmax(act)?;
    let mut vector = tape.matmul(h, weights)?;
    if b.params().attn_divide_by_n {
        vector = tape.scale(vector, 1.0 / n as f64);
    }
    Ok(Encoded {
        vector,
        weights: Some(weights),
    })
}

pub fn encode_average(tape: &mut Tape, b: &mut Binder, relations: &[RelationId]) -> Result<Var> {
    let cols = relation_columns(tape, b, relations)?;
    let n = cols.len();
    let total = tape.sum(&cols)?;
    Ok(tape.scale(total, 1.0 / n as f64))
}

fn gru_run(tape: &mut Tape, b: &mut Binder, dir: usize, inputs: &[Var]) -> Result<Var> {
    let k = b.params().k;
    let mut slot = |tape: &mut Tape, s: usize| b.var(tape, ParamKey::Gru { dir, slot: s });
    let p: Vec<Var> = (0..GRU_SLOTS.len())
        .map(|s| slot(tape, s))
        .collect::<Result<_>>()?;
    let [w_z, u_z, b_z, w_r, u_r, b_r, w_h, u_h, b_h] = p[..] else {
        unreachable!()
    };
    let mut h = tape.leaf(Tensor::zeros(&[k]));
    for &x in inputs {
        let gate = |tape: &mut Tape, w, u, bias, hh| -> Result<Var> {
            let wx = tape.matmul(w, x)?;
            let uh = tape.matmul(u, hh)?;
            let s = tape.add(wx, uh)?;
            Ok(tape.add(s, bias)?)
        };
        let z_pre = gate(tape, w_z, u_z, b_z, h)?;
        let z = tape.sigmoid(z_pre);
        let r_pre = gate(tape, w_r, u_r, b_r, h)?;
        let r = tape.sigmoid(r_pre);
        let rh = tape.mul(r, h)?;
        let c_pre = gate(tape, w_h, u_h, b_h, rh)?;
        let cand = tape.tanh(c_pre);
        let neg_h = tape.scale(h, -1.0);
        let diff = tape.add(cand, neg_h)?;
        let step = tape.mul(z, diff)?;
        h = tape.add(h, step)?;
    }
    Ok(h)
}

/// Final hidden state of the forward GRU over the relation embeddings.
pub fn encode_gru(tape: &mut Tape, b: &mut Binder, relations: &[RelationId]) -> Result<Var> {
    if b.params().gru.is_empty() {
        return Err(Error::Config("model has no GRU parameters".into()));
    }
    let cols = relation_columns(tape, b, relations)?;
    gru_run(tape, b, 0, &cols)
}

/// Mean of the forward GRU's final state and the backward GRU's final
/// state (the latter reads the sequence reversed).
pub fn encode_bigru(tape: &mut Tape, b: &mut Binder, relations: &[RelationId]) -> Result<Var> {
    if b.params().gru.len() < 2 {
        return Err(Error::Config("model has no backward GRU parameters".into()));
    }
    let cols = relation_columns(tape, b, relations)?;
    let fwd = gru_run(tape, b, 0, &cols)?;
    let rev: Vec<Var> = cols.iter().rev().copied().collect();
    let bwd = gru_run(tape, b, 1, &rev)?;
    let s = tape.add(fwd, bwd)?;
    Ok(tape.scale(s, 0.5))
}

/// Dispatches on the model's encoder kind.
pub fn encode(tape: &mut Tape, b: &mut Binder, relations: &[RelationId]) -> Result<Encoded> {
    let vector = match b.params().encoder {
        EncoderKind::AttnAverage => return encode_attn_average(tape, b, relations),
        EncoderKind::Average => encode_average(tape, b, relations)?,
        EncoderKind::Gru => encode_gru(tape, b, relations)?,
        EncoderKind::Bigru => encode_bigru(tape, b, relations)?,
    };
    Ok(Encoded {
        vector,
        weights: None,
    })
}

/// Records the score of `(s, relations, o)` on `tape`.
pub fn score(
    tape: &mut Tape,
    b: &mut Binder,
    s: EntityId,
    relations: &[RelationId],
    o: EntityId,
) -> Result<Var> {
    let params = b.params();
    params.check_entity(s)?;
    params.check_entity(o)?;
    if params.score_w.len() != params.tau * params.k || params.filters.rows() != params.tau {
        return Err(Error::DimensionMismatch {
            found: params.score_w.len(),
            expected: params.tau * params.k,
        });
    }
    let vs = b.var(tape, ParamKey::Entity(s))?;
    let vo = b.var(tape, ParamKey::Entity(o))?;
    let vr = encode(tape, b, relations)?.vector;
    let t = tape.stack_columns(&[vs, vo, vr])?;
    let filters = b.var(tape, ParamKey::Filters)?;
    let conv = tape.conv_1x3(t, filters)?;
    let act = tape.relu(conv);
    let w = b.var(tape, ParamKey::ScoreW)?;
    Ok(tape.dot(w, act)?)
}
