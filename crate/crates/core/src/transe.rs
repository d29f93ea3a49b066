//! Translation-based pretraining of the entity and relation tables.
//!
//! Minimizes `max(0, margin + d(s + r, o) - d(s' + r, o'))` with the L2
//! distance and one uniformly corrupted triple per positive, using plain
//! SGD. Entity rows are renormalized to unit length after every epoch.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::Tensor;
use crate::data::{Dataset, Triple};
use crate::error::{Error, Result};
use crate::model::init_bound;
use crate::multirel::MultiRelationInstance;
use crate::trainer::corrupt;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransEConfig {
    pub epochs: usize,
    pub lr: f64,
    pub margin: f64,
    pub k: usize,
    pub seed: u64,
}

impl Default for TransEConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            lr: 0.01,
            margin: 1.0,
            k: 100,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Embeddings {
    pub entity: Tensor,
    pub relation: Tensor,
}

impl Embeddings {
    /// `||s + r - o||_2`
    pub fn distance(&self, t: &Triple) -> f64 {
        distance(
            self.entity.row(t.s),
            self.relation.row(t.r),
            self.entity.row(t.o),
        )
    }
}

fn distance(s: &[f64], r: &[f64], o: &[f64]) -> f64 {
    s.iter()
        .zip(r)
        .zip(o)
        .map(|((s, r), o)| (s + r - o).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Unit direction of `s + r - o`, zero when the residual vanishes.
fn residual_direction(s: &[f64], r: &[f64], o: &[f64]) -> Vec<f64> {
    let d = distance(s, r, o);
    if d == 0.0 {
        return vec![0.0; s.len()];
    }
    s.iter()
        .zip(r)
        .zip(o)
        .map(|((s, r), o)| (s + r - o) / d)
        .collect()
}

/// Hinge value and the gradient of it with respect to the positive
/// residual direction `u_pos` and the negative one `u_neg`. The gradient
/// of `d(s + r, o)` is `u` for `s` and `r` and `-u` for `o`.
#[derive(Debug, Clone, PartialEq)]
pub struct HingeTerms {
    pub loss: f64,
    pub u_pos: Vec<f64>,
    pub u_neg: Vec<f64>,
}

pub fn hinge(
    pos: (&[f64], &[f64], &[f64]),
    neg: (&[f64], &[f64], &[f64]),
    margin: f64,
) -> HingeTerms {
    let k = pos.0.len();
    let loss = margin + distance(pos.0, pos.1, pos.2) - distance(neg.0, neg.1, neg.2);
    if loss > 0.0 {
        HingeTerms {
            loss,
            u_pos: residual_direction(pos.0, pos.1, pos.2),
            u_neg: residual_direction(neg.0, neg.1, neg.2),
        }
    } else {
        HingeTerms {
            loss: 0.0,
            u_pos: vec![0.0; k],
            u_neg: vec![0.0; k],
        }
    }
}

fn normalize_rows(t: &mut Tensor) {
    for i in 0..t.rows() {
        let row = t.row_mut(i);
        let n = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 0.0 {
            row.iter_mut().for_each(|x| *x /= n);
        }
    }
}

/// Trains on `dataset.train`; returns the tables and per-epoch mean hinge
/// loss.
pub fn pretrain_transe(dataset: &Dataset, config: &TransEConfig) -> Result<(Embeddings, Vec<f64>)> {
    if config.k == 0 {
        return Err(Error::Config("k must be positive".into()));
    }
    let ne = dataset.vocab.num_entities();
    let nr = dataset.vocab.num_relations();
    if ne < 2 {
        return Err(Error::Config("TransE needs at least two entities".into()));
    }
    let k = config.k;
    let bound = init_bound(k);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut entity = Tensor::from_fn(&[ne, k], |_| rng.gen_range(-bound..=bound));
    let mut relation = Tensor::from_fn(&[nr, k], |_| rng.gen_range(-bound..=bound));
    normalize_rows(&mut relation);
    normalize_rows(&mut entity);

    let mut order: Vec<Triple> = dataset.train.clone();
    let mut losses = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for t in &order {
            let (neg, _) = corrupt(&MultiRelationInstance::single(*t), ne, &mut rng);
            let h = hinge(
                (entity.row(t.s), relation.row(t.r), entity.row(t.o)),
                (entity.row(neg.s), relation.row(t.r), entity.row(neg.o)),
                config.margin,
            );
            if h.loss == 0.0 {
                continue;
            }
            total += h.loss;
            let lr = config.lr;
            // d loss / d x = grad d_pos - grad d_neg
            for i in 0..k {
                let (up, un) = (h.u_pos[i], h.u_neg[i]);
                entity.row_mut(t.s)[i] -= lr * up;
                entity.row_mut(t.o)[i] += lr * up;
                relation.row_mut(t.r)[i] -= lr * (up - un);
                entity.row_mut(neg.s)[i] += lr * un;
                entity.row_mut(neg.o)[i] -= lr * un;
            }
        }
        normalize_rows(&mut entity);
        losses.push(if order.is_empty() {
            0.0
        } else {
            total / order.len() as f64
        });
    }
    Ok((Embeddings { entity, relation }, losses))
}
