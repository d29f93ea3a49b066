//! Negative sampling, the logistic loss, AdaGrad and the epoch loop.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::autodiff::{grad_check, GradCheckReport, Tape, Tensor, Var};
use crate::checkpoint::Checkpoint;
use crate::data::{Dataset, EntityId, Triple};
use crate::error::{Error, Result};
use crate::model::{score, Binder, EncoderKind, InitStrategy, ModelParams, ModelShape, ParamKey};
use crate::multirel::{generate, merge_training_set, MultiRelationInstance};

/// Added to the base seed for the training stream so that it never shares
/// state with parameter initialization.
const TRAIN_STREAM: u64 = 0x5EED_0001;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub k: usize,
    pub tau: usize,
    pub num_batches: usize,
    pub initial_lr: f64,
    pub lr_decay_factor: f64,
    pub lr_decay_every: usize,
    pub lambda: f64,
    pub negatives_per_positive: usize,
    pub seed: u64,
    pub encoder: EncoderKind,
    pub init: InitStrategy,
    /// Checkpoint holding pretrained entity/relation tables, required when
    /// `init` is `pretrained`.
    pub pretrained_checkpoint: Option<PathBuf>,
    /// Add multi-relation instances to the training set.
    pub multirel: bool,
    pub attn_divide_by_n: bool,
    /// Worker threads per batch. 1 runs the whole batch on one tape.
    pub threads: usize,
    /// Fill the `seconds` log column with wall-clock time.
    pub record_timing: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            k: 100,
            tau: 64,
            num_batches: 800,
            initial_lr: 0.01,
            lr_decay_factor: 0.1,
            lr_decay_every: 5,
            lambda: 0.001,
            negatives_per_positive: 1,
            seed: 0,
            encoder: EncoderKind::AttnAverage,
            init: InitStrategy::Random,
            pretrained_checkpoint: None,
            multirel: true,
            attn_divide_by_n: true,
            threads: 1,
            record_timing: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("epochs", self.epochs),
            ("k", self.k),
            ("tau", self.tau),
            ("num_batches", self.num_batches),
            ("lr_decay_every", self.lr_decay_every),
            ("negatives_per_positive", self.negatives_per_positive),
            ("threads", self.threads),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{name} must be positive")));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config("lambda must be a finite value >= 0".into()));
        }
        if !(self.initial_lr > 0.0 && self.initial_lr.is_finite()) {
            return Err(Error::Config("initial_lr must be positive".into()));
        }
        if !(self.lr_decay_factor > 0.0 && self.lr_decay_factor.is_finite()) {
            return Err(Error::Config("lr_decay_factor must be positive".into()));
        }
        if self.init == InitStrategy::Pretrained && self.pretrained_checkpoint.is_none() {
            return Err(Error::Config(
                "init = pretrained needs pretrained_checkpoint".into(),
            ));
        }
        Ok(())
    }
}

/// `initial_lr * decay_factor ^ floor(epoch / decay_every)`, epoch 0-based.
pub fn lr_schedule(epoch: usize, config: &TrainConfig) -> f64 {
    let steps = (epoch / config.lr_decay_every) as i32;
    config.initial_lr * config.lr_decay_factor.powi(steps)
}

/// Which entity a negative replaced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Corrupted {
    Subject,
    Object,
}

/// Replaces the subject or the object (each with probability 1/2) by a
/// uniformly drawn different entity. The relation set is kept.
pub fn corrupt(
    instance: &MultiRelationInstance,
    num_entities: usize,
    rng: &mut impl Rng,
) -> (MultiRelationInstance, Corrupted) {
    debug_assert!(num_entities >= 2);
    let other = |rng: &mut dyn rand::RngCore, orig: EntityId| {
        let e = rng.gen_range(0..num_entities - 1);
        if e >= orig {
            e + 1
        } else {
            e
        }
    };
    if rng.gen_bool(0.5) {
        let s = other(rng, instance.s);
        (instance.with_entities(s, instance.o), Corrupted::Subject)
    } else {
        let o = other(rng, instance.o);
        (instance.with_entities(instance.s, o), Corrupted::Object)
    }
}

pub fn sample_negatives(
    instance: &MultiRelationInstance,
    num_entities: usize,
    count: usize,
    rng: &mut impl Rng,
) -> Result<Vec<MultiRelationInstance>> {
    if num_entities < 2 {
        return Err(Error::Config(
            "negative sampling needs at least two entities".into(),
        ));
    }
    Ok((0..count)
        .map(|_| corrupt(instance, num_entities, rng).0)
        .collect())
}

/// `sum softplus(l * f) + lambda / 2 * |score_w|^2` with `l = +1` for
/// positives and `-1` for negatives.
pub fn loss(
    tape: &mut Tape,
    binder: &mut Binder,
    positives: &[MultiRelationInstance],
    negatives: &[MultiRelationInstance],
    lambda: f64,
) -> Result<Var> {
    if positives.is_empty() && negatives.is_empty() {
        return Err(Error::EmptyInput("loss batch"));
    }
    let terms = instance_terms(tape, binder, positives, negatives)?;
    let mut total = tape.sum(&terms)?;
    if lambda != 0.0 {
        let w = binder.var(tape, ParamKey::ScoreW)?;
        let sq = tape.l2_norm_sq(w);
        let reg = tape.scale(sq, lambda / 2.0);
        total = tape.add(total, reg)?;
    }
    Ok(total)
}

fn instance_terms(
    tape: &mut Tape,
    binder: &mut Binder,
    positives: &[MultiRelationInstance],
    negatives: &[MultiRelationInstance],
) -> Result<Vec<Var>> {
    let labelled = positives
        .iter()
        .map(|m| (m, 1.0))
        .chain(negatives.iter().map(|m| (m, -1.0)));
    let mut terms = Vec::with_capacity(positives.len() + negatives.len());
    for (m, label) in labelled {
        let f = score(tape, binder, m.s, m.relations(), m.o)?;
        let fv = tape.value(f).item();
        if !fv.is_finite() {
            return Err(Error::NonFiniteScore(fv));
        }
        let signed = if label > 0.0 { f } else { tape.scale(f, -1.0) };
        terms.push(tape.softplus(signed));
    }
    Ok(terms)
}

/// Accumulated squared gradients, stored in a zeroed copy of the model.
#[derive(Debug, Clone)]
pub struct AdaGradState {
    acc: ModelParams,
    pub eps: f64,
}

impl AdaGradState {
    pub fn new(params: &ModelParams) -> Self {
        let mut acc = params.clone();
        let zeros: Vec<Tensor> = params
            .to_tensors()
            .iter()
            .map(|t| Tensor::zeros(t.shape()))
            .collect();
        acc.load_tensors(&zeros).expect("same shapes");
        Self { acc, eps: 1e-8 }
    }

    pub fn accumulator(&self, key: ParamKey) -> &[f64] {
        self.acc.slice(key)
    }
}

/// `acc += g^2; p -= lr * g / (sqrt(acc) + eps)` for every entry of every
/// key in `grads`. Keys absent from `grads` are untouched.
pub fn adagrad_step(
    params: &mut ModelParams,
    grads: &[(ParamKey, Tensor)],
    state: &mut AdaGradState,
    lr: f64,
) {
    let eps = state.eps;
    for (key, g) in grads {
        let acc = state.acc.slice_mut(*key);
        let p = params.slice_mut(*key);
        for ((p, a), &g) in p.iter_mut().zip(acc.iter_mut()).zip(g.values()) {
            *a += g * g;
            *p -= lr * g / (a.sqrt() + eps);
        }
    }
}

/// Training instances: the plain triples, optionally followed by the
/// multi-relation instances generated from them.
pub fn build_training_set(train: &[Triple], multirel: bool) -> Vec<MultiRelationInstance> {
    let multi = if multirel {
        generate(train)
    } else {
        Vec::new()
    };
    merge_training_set(train, &multi)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub mean_loss: f64,
    pub lr: f64,
    pub seconds: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub params: ModelParams,
    pub log: Vec<EpochLog>,
    pub training_set_size: usize,
}

/// Log CSV with the resolved configuration as `#` comment lines on top.
pub fn log_csv(config: &TrainConfig, log: &[EpochLog]) -> String {
    let mut out = String::new();
    out.push_str("# config: ");
    out.push_str(&serde_json::to_string(config).expect("config serializes"));
    out.push('\n');
    out.push_str("epoch,mean_loss,lr,seconds\n");
    for e in log {
        let secs = e.seconds.map(|s| format!("{s:.3}")).unwrap_or_default();
        out.push_str(&format!("{},{},{},{}\n", e.epoch, e.mean_loss, e.lr, secs));
    }
    out
}

/// Builds the initial parameters described by `config`.
pub fn initial_params(dataset: &Dataset, config: &TrainConfig) -> Result<ModelParams> {
    let shape = ModelShape {
        k: config.k,
        tau: config.tau,
        num_entities: dataset.vocab.num_entities(),
        num_relations: dataset.vocab.num_relations(),
        encoder: config.encoder,
    };
    let mut params = match (config.init, &config.pretrained_checkpoint) {
        (InitStrategy::Pretrained, Some(path)) => {
            let ck = Checkpoint::load(path)?;
            ck.check_vocab(&dataset.vocab);
            ModelParams::with_pretrained(shape, config.seed, ck.params.entity, ck.params.relation)?
        }
        (InitStrategy::Pretrained, None) => {
            return Err(Error::Config(
                "init = pretrained needs pretrained_checkpoint".into(),
            ))
        }
        (InitStrategy::Random, _) => ModelParams::random(shape, config.seed)?,
    };
    params.attn_divide_by_n = config.attn_divide_by_n;
    Ok(params)
}

pub fn train(dataset: &Dataset, config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    let params = initial_params(dataset, config)?;
    train_from(dataset, config, params)
}

/// Runs the epoch loop starting from `params`.
pub fn train_from(
    dataset: &Dataset,
    config: &TrainConfig,
    mut params: ModelParams,
) -> Result<TrainOutcome> {
    config.validate()?;
    let num_entities = params.num_entities();
    if num_entities < 2 {
        return Err(Error::Config("training needs at least two entities".into()));
    }
    let mut instances = build_training_set(&dataset.train, config.multirel);
    if instances.is_empty() {
        return Err(Error::EmptyInput("training split"));
    }
    let training_set_size = instances.len();
    let batch_size = training_set_size.div_ceil(config.num_batches);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(TRAIN_STREAM));
    let mut state = AdaGradState::new(&params);
    let pool = if config.threads > 1 {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(config.threads)
                .build()
                .map_err(|e| Error::Config(e.to_string()))?,
        )
    } else {
        None
    };

    let mut log = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let started = Instant::now();
        let lr = lr_schedule(epoch, config);
        instances.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        for (bi, batch) in instances.chunks(batch_size).enumerate() {
            let mut negatives = Vec::with_capacity(batch.len() * config.negatives_per_positive);
            for m in batch {
                negatives.extend(sample_negatives(
                    m,
                    num_entities,
                    config.negatives_per_positive,
                    &mut rng,
                )?);
            }
            let (value, grads) = match &pool {
                None => batch_gradients(&params, batch, &negatives, config.lambda)?,
                Some(pool) => {
                    pool.install(|| parallel_batch_gradients(&params, batch, &negatives, config))?
                }
            };
            if !value.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    batch: bi,
                    value,
                });
            }
            adagrad_step(&mut params, &grads, &mut state, lr);
            loss_sum += value / (batch.len() + negatives.len()) as f64;
            batches += 1;
        }
        let mean_loss = loss_sum / batches as f64;
        log::info!("epoch {epoch}: mean loss {mean_loss:.6}, lr {lr}");
        log.push(EpochLog {
            epoch,
            mean_loss,
            lr,
            seconds: config
                .record_timing
                .then(|| started.elapsed().as_secs_f64()),
        });
    }
    Ok(TrainOutcome {
        params,
        log,
        training_set_size,
    })
}

/// Batch loss value and its gradient per touched parameter key.
pub type BatchGradients = (f64, Vec<(ParamKey, Tensor)>);

/// Loss value and sparse gradients for one batch on a single tape.
pub fn batch_gradients(
    params: &ModelParams,
    positives: &[MultiRelationInstance],
    negatives: &[MultiRelationInstance],
    lambda: f64,
) -> Result<BatchGradients> {
    let mut tape = Tape::new();
    let mut binder = Binder::sparse(params);
    let root = loss(&mut tape, &mut binder, positives, negatives, lambda)?;
    let value = tape.value(root).item();
    let grads = tape.backward(root)?;
    Ok((value, binder.gradients(&grads)))
}

/// Splits the batch into `threads` contiguous chunks scored on independent
/// tapes; chunk results are merged in chunk order.
fn parallel_batch_gradients(
    params: &ModelParams,
    positives: &[MultiRelationInstance],
    negatives: &[MultiRelationInstance],
    config: &TrainConfig,
) -> Result<BatchGradients> {
    let labelled: Vec<(&MultiRelationInstance, bool)> = positives
        .iter()
        .map(|m| (m, true))
        .chain(negatives.iter().map(|m| (m, false)))
        .collect();
    let chunk = labelled.len().div_ceil(config.threads).max(1);
    let parts: Vec<Result<BatchGradients>> = labelled
        .par_chunks(chunk)
        .enumerate()
        .map(|(ci, part)| {
            let pos: Vec<MultiRelationInstance> =
                part.iter().filter(|x| x.1).map(|x| x.0.clone()).collect();
            let neg: Vec<MultiRelationInstance> =
                part.iter().filter(|x| !x.1).map(|x| x.0.clone()).collect();
            let lambda = if ci == 0 { config.lambda } else { 0.0 };
            batch_gradients(params, &pos, &neg, lambda)
        })
        .collect();
    let mut total = 0.0;
    let mut merged: BTreeMap<ParamKey, Tensor> = BTreeMap::new();
    for part in parts {
        let (v, grads) = part?;
        total += v;
        for (k, g) in grads {
            match merged.get_mut(&k) {
                Some(acc) => acc.add_assign(&g),
                None => {
                    merged.insert(k, g);
                }
            }
        }
    }
    Ok((total, merged.into_iter().collect()))
}

/// Setup for a finite-difference check of the full loss on a small random
/// model with non-zero projection weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossCheckSpec {
    pub encoder: EncoderKind,
    pub k: usize,
    pub tau: usize,
    /// Relation-set size of every instance in the batch.
    pub set_size: usize,
    pub seed: u64,
    pub step: f64,
    pub lambda: f64,
}

impl Default for LossCheckSpec {
    fn default() -> Self {
        Self {
            encoder: EncoderKind::AttnAverage,
            k: 8,
            tau: 4,
            set_size: 2,
            seed: 0,
            step: 1e-5,
            lambda: 0.01,
        }
    }
}

/// Compares tape gradients of the batch loss against central differences
/// over every parameter block.
pub fn loss_grad_check(spec: &LossCheckSpec) -> Result<GradCheckReport> {
    let num_relations = spec.set_size.max(5);
    let num_entities = 6;
    let mut params = ModelParams::random(
        ModelShape {
            k: spec.k,
            tau: spec.tau,
            num_entities,
            num_relations,
            encoder: spec.encoder,
        },
        spec.seed,
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed.wrapping_add(TRAIN_STREAM));
    for w in params.score_w.values_mut() {
        *w = rng.gen_range(-1.0..=1.0);
    }
    let mut relations: Vec<usize> = (0..num_relations).collect();
    let mut positives = Vec::new();
    for i in 0..2 {
        relations.shuffle(&mut rng);
        let s = rng.gen_range(0..num_entities);
        let o = (s + 1 + i) % num_entities;
        positives.push(MultiRelationInstance::new(
            s,
            relations[..spec.set_size].iter().copied(),
            o,
        )?);
    }
    let mut negatives = Vec::new();
    for m in &positives {
        negatives.extend(sample_negatives(m, num_entities, 1, &mut rng)?);
    }
    let tensors = params.to_tensors();
    grad_check(&tensors, spec.step, |tape, leaves| {
        let mut binder = Binder::dense(&params, leaves);
        loss(tape, &mut binder, &positives, &negatives, spec.lambda)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::softplus_value;

    fn tiny_params(encoder: EncoderKind, seed: u64) -> ModelParams {
        ModelParams::random(
            ModelShape {
                k: 4,
                tau: 2,
                num_entities: 6,
                num_relations: 3,
                encoder,
            },
            seed,
        )
        .unwrap()
    }

    #[test]
    fn defaults_mirror_published_schedule() {
        let c = TrainConfig::default();
        assert_eq!((c.epochs, c.k, c.num_batches), (20, 100, 800));
        assert_eq!(c.initial_lr, 0.01);
        c.validate().unwrap();
    }

    #[test]
    fn lr_decays_every_five_epochs() {
        let c = TrainConfig::default();
        assert_eq!(lr_schedule(0, &c), 0.01);
        for e in 0..5 {
            assert_eq!(lr_schedule(e, &c), 0.01);
        }
        for e in 5..10 {
            assert!((lr_schedule(e, &c) - 0.001).abs() < 1e-18);
        }
        let flat = TrainConfig {
            lr_decay_factor: 1.0,
            ..c
        };
        assert_eq!(lr_schedule(19, &flat), 0.01);
    }

    #[test]
    fn invalid_configs_rejected() {
        for bad in [
            TrainConfig {
                epochs: 0,
                ..Default::default()
            },
            TrainConfig {
                lambda: -1.0,
                ..Default::default()
            },
            TrainConfig {
                num_batches: 0,
                ..Default::default()
            },
            TrainConfig {
                init: InitStrategy::Pretrained,
                ..Default::default()
            },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn config_json_fills_defaults() {
        let c: TrainConfig = serde_json::from_str(r#"{"epochs": 3, "encoder": "bigru"}"#).unwrap();
        assert_eq!(c.epochs, 3);
        assert_eq!(c.encoder, EncoderKind::Bigru);
        assert_eq!(c.k, 100);
        assert!(serde_json::from_str::<TrainConfig>(r#"{"epoch": 3}"#).is_err());
    }

    #[test]
    fn two_entities_force_the_alternative() {
        let m = MultiRelationInstance::single(Triple::new(0, 0, 1));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let (neg, side) = corrupt(&m, 2, &mut rng);
            match side {
                Corrupted::Subject => assert_eq!((neg.s, neg.o), (1, 1)),
                Corrupted::Object => assert_eq!((neg.s, neg.o), (0, 0)),
            }
        }
    }

    #[test]
    fn negatives_keep_relations_and_differ() {
        let m = MultiRelationInstance::new(3, [0, 2], 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let negs = sample_negatives(&m, 10, 200, &mut rng).unwrap();
        assert_eq!(negs.len(), 200);
        for n in negs {
            assert_eq!(n.relations(), m.relations());
            assert_ne!(n, m);
            assert!(n.s == m.s || n.o == m.o);
        }
        assert!(sample_negatives(&m, 1, 1, &mut rng).is_err());
    }

    #[test]
    fn zero_weights_give_log_two_per_instance() {
        let p = tiny_params(EncoderKind::AttnAverage, 1);
        let pos = vec![
            MultiRelationInstance::single(Triple::new(0, 0, 1)),
            MultiRelationInstance::new(2, [0, 1, 2], 3).unwrap(),
        ];
        let neg = vec![MultiRelationInstance::single(Triple::new(5, 0, 1))];
        let (v, _) = batch_gradients(&p, &pos, &neg, 0.0).unwrap();
        assert!((v - 3.0 * std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn softplus_minus_ten() {
        assert!((softplus_value(-10.0) - 4.54e-5).abs() < 1e-7);
    }

    #[test]
    fn adagrad_first_step_closed_form() {
        let mut p = tiny_params(EncoderKind::Average, 1);
        let before = p.clone();
        let mut st = AdaGradState::new(&p);
        let g = Tensor::vector(vec![1.0; 4]);
        adagrad_step(&mut p, &[(ParamKey::Entity(2), g)], &mut st, 0.01);
        for (a, b) in p.entity.row(2).iter().zip(before.entity.row(2)) {
            assert!((a - (b - 0.01 / (1.0 + 1e-8))).abs() < 1e-15);
        }
        assert_eq!(p.entity.row(1), before.entity.row(1));
        assert_eq!(st.accumulator(ParamKey::Entity(2)), &[1.0; 4]);
    }

    #[test]
    fn adagrad_zero_gradient_is_a_no_op() {
        let mut p = tiny_params(EncoderKind::Average, 1);
        let before = p.clone();
        let mut st = AdaGradState::new(&p);
        adagrad_step(
            &mut p,
            &[(ParamKey::Filters, Tensor::zeros(&[2, 3]))],
            &mut st,
            0.5,
        );
        assert_eq!(p, before);
        assert!(st.accumulator(ParamKey::Filters).iter().all(|&a| a == 0.0));
    }

    #[test]
    fn adagrad_two_steps_by_hand() {
        // p0 = 1, g = 2 then -1, lr = 0.1
        // step 1: acc = 4, p = 1 - 0.1*2/(2+eps)
        // step 2: acc = 5, p -= 0.1*(-1)/(sqrt5+eps)
        let mut p = tiny_params(EncoderKind::Average, 1);
        p.score_w.values_mut()[0] = 1.0;
        let mut st = AdaGradState::new(&p);
        let mut g = Tensor::zeros(&[8]);
        g.values_mut()[0] = 2.0;
        adagrad_step(&mut p, &[(ParamKey::ScoreW, g.clone())], &mut st, 0.1);
        g.values_mut()[0] = -1.0;
        adagrad_step(&mut p, &[(ParamKey::ScoreW, g)], &mut st, 0.1);
        let eps = 1e-8;
        let expected = 1.0 - 0.1 * 2.0 / (2.0 + eps) + 0.1 / (5f64.sqrt() + eps);
        assert!((p.score_w.values()[0] - expected).abs() < 1e-15);
        assert_eq!(st.accumulator(ParamKey::ScoreW)[0], 5.0);
    }

    #[test]
    fn training_set_sizes() {
        let train = vec![
            Triple::new(0, 0, 1),
            Triple::new(0, 1, 1),
            Triple::new(1, 0, 2),
        ];
        assert_eq!(build_training_set(&train, false).len(), 3);
        assert_eq!(build_training_set(&train, true).len(), 4);
    }

    #[test]
    fn log_csv_layout() {
        let c = TrainConfig::default();
        let csv = log_csv(
            &c,
            &[EpochLog {
                epoch: 0,
                mean_loss: 0.5,
                lr: 0.01,
                seconds: None,
            }],
        );
        let lines: Vec<&str> = csv.lines().collect();
        assert!(lines[0].starts_with("# config: {"));
        assert!(lines[0].contains("\"lambda\":0.001"));
        assert_eq!(lines[1], "epoch,mean_loss,lr,seconds");
        assert_eq!(lines[2], "0,0.5,0.01,");
    }
}
