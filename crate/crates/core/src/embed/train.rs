//! Margin-based TransE training with negative sampling.
//!
//! Updates run lock-free: workers read and write the shared parameter
//! store without mutual exclusion, so concurrent updates may be lost or
//! observed half-applied. That is the intended trade; reproducibility is
//! promised only with a single worker.

use std::collections::BTreeSet;
use std::sync::atomic::{AtomicU64, Ordering};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::{EntityId, KnowledgeGraph, Object, RelationId};

use super::{trainable_facts, EmbeddingModel, Norm};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub dim: usize,
    pub margin: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    /// Corruptions sampled per positive fact per epoch.
    pub negatives: usize,
    pub seed: u64,
    pub norm: Norm,
    pub workers: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 50,
            margin: 1.0,
            learning_rate: 0.01,
            epochs: 100,
            negatives: 1,
            seed: 42,
            norm: Norm::L1,
            workers: 1,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::Config("embedding dimension must be at least 1".into()));
        }
        if self.margin < 0.0 {
            return Err(Error::Config("margin must be non-negative".into()));
        }
        if self.learning_rate <= 0.0 {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        if self.negatives == 0 {
            return Err(Error::Config("need at least one negative per positive".into()));
        }
        if self.workers == 0 {
            return Err(Error::Config("need at least one worker".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainReport {
    /// Summed hinge loss per epoch, in epoch order.
    pub epoch_losses: Vec<f64>,
    /// Corruptions accepted after the retry bound despite being in F.
    pub exhausted_corruptions: u64,
}

/// Hinge loss of one (positive, corrupted) pair:
/// [margin + ‖s+r−o‖ − ‖s'+r−o'‖]₊.
pub fn pair_loss(
    norm: Norm,
    margin: f64,
    s: &[f64],
    r: &[f64],
    o: &[f64],
    s_neg: &[f64],
    o_neg: &[f64],
) -> f64 {
    let pos = translate_diff(s, r, o);
    let neg = translate_diff(s_neg, r, o_neg);
    (margin + norm.apply(&pos) - norm.apply(&neg)).max(0.0)
}

fn translate_diff(s: &[f64], r: &[f64], o: &[f64]) -> Vec<f64> {
    (0..s.len()).map(|i| s[i] + r[i] - o[i]).collect()
}

/// Subgradients of [`pair_loss`] with respect to each of the five vectors,
/// treating them as independent slots. When the corruption aliases one of
/// the positive vectors (head corruption leaves o_neg = o), the caller
/// must sum the aliased contributions. All zero when the hinge is
/// inactive.
#[derive(Debug, Clone, PartialEq)]
pub struct PairGradients {
    pub s: Vec<f64>,
    pub r: Vec<f64>,
    pub o: Vec<f64>,
    pub s_neg: Vec<f64>,
    pub o_neg: Vec<f64>,
}

pub fn pair_gradients(
    norm: Norm,
    margin: f64,
    s: &[f64],
    r: &[f64],
    o: &[f64],
    s_neg: &[f64],
    o_neg: &[f64],
) -> PairGradients {
    let dim = s.len();
    let pos = translate_diff(s, r, o);
    let neg = translate_diff(s_neg, r, o_neg);
    let active = margin + norm.apply(&pos) - norm.apply(&neg) > 0.0;
    if !active {
        let zero = vec![0.0; dim];
        return PairGradients {
            s: zero.clone(),
            r: zero.clone(),
            o: zero.clone(),
            s_neg: zero.clone(),
            o_neg: zero,
        };
    }
    let g_pos = norm_gradient(norm, &pos);
    let g_neg = norm_gradient(norm, &neg);
    PairGradients {
        s: g_pos.clone(),
        r: (0..dim).map(|i| g_pos[i] - g_neg[i]).collect(),
        o: g_pos.iter().map(|x| -x).collect(),
        s_neg: g_neg.iter().map(|x| -x).collect(),
        o_neg: g_neg,
    }
}

/// ∂‖x‖/∂x: sign(x) for L1 (0 at kinks), x/‖x‖ for L2 (0 at the origin).
fn norm_gradient(norm: Norm, x: &[f64]) -> Vec<f64> {
    match norm {
        Norm::L1 => x
            .iter()
            .map(|v| {
                if *v > 0.0 {
                    1.0
                } else if *v < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            })
            .collect(),
        Norm::L2 => {
            let len = norm.apply(x);
            if len == 0.0 {
                vec![0.0; x.len()]
            } else {
                x.iter().map(|v| v / len).collect()
            }
        }
    }
}

const CORRUPTION_RETRIES: usize = 100;

/// Replace head or tail (fair coin) with a uniform entity other than the
/// one replaced, retrying while the result is a known fact. After the
/// retry bound the last sample is accepted and flagged. The sampling
/// universe is the entities of trainable facts.
pub fn sample_corruption(
    fact: (EntityId, RelationId, EntityId),
    kg: &KnowledgeGraph,
    rng: &mut impl Rng,
) -> Result<((EntityId, RelationId, EntityId), bool)> {
    let universe: Vec<EntityId> = trainable_facts(kg)
        .iter()
        .flat_map(|(s, _, o)| [*s, *o])
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    corrupt_in_universe(fact, kg, &universe, rng)
}

fn corrupt_in_universe(
    fact: (EntityId, RelationId, EntityId),
    kg: &KnowledgeGraph,
    universe: &[EntityId],
    rng: &mut impl Rng,
) -> Result<((EntityId, RelationId, EntityId), bool)> {
    if universe.len() < 2 {
        return Err(Error::Config(
            "corruption needs at least 2 entities in the training universe".into(),
        ));
    }
    let (s, r, o) = fact;
    let mut last = fact;
    for _ in 0..CORRUPTION_RETRIES {
        let corrupt_head = rng.random_bool(0.5);
        let replaced = if corrupt_head { s } else { o };
        let replacement = sample_other(universe, replaced, rng);
        last = if corrupt_head {
            (replacement, r, o)
        } else {
            (s, r, replacement)
        };
        if !kg.contains_fact(last.0, last.1, Object::Entity(last.2)) {
            return Ok((last, false));
        }
    }
    Ok((last, true))
}

/// Uniform draw from `universe` excluding `not`. Skips one slot, so the
/// original triple can never be reproduced even on retry exhaustion.
fn sample_other(universe: &[EntityId], not: EntityId, rng: &mut impl Rng) -> EntityId {
    let skip = universe.binary_search(&not).ok();
    match skip {
        None => universe[rng.random_range(0..universe.len())],
        Some(pos) => {
            let idx = rng.random_range(0..universe.len() - 1);
            universe[if idx >= pos { idx + 1 } else { idx }]
        }
    }
}

/// Lock-free parameter store: f64 bits in relaxed atomics, entities then
/// relations, flattened row-major.
struct Store {
    dim: usize,
    vals: Vec<AtomicU64>,
}

impl Store {
    fn new(slots: usize, dim: usize) -> Self {
        Store {
            dim,
            vals: (0..slots * dim).map(|_| AtomicU64::new(0f64.to_bits())).collect(),
        }
    }

    fn read(&self, slot: usize) -> Vec<f64> {
        let base = slot * self.dim;
        (0..self.dim)
            .map(|i| f64::from_bits(self.vals[base + i].load(Ordering::Relaxed)))
            .collect()
    }

    fn write(&self, slot: usize, v: &[f64]) {
        let base = slot * self.dim;
        for (i, x) in v.iter().enumerate() {
            self.vals[base + i].store(x.to_bits(), Ordering::Relaxed);
        }
    }

    fn step(&self, slot: usize, grad: &[f64], lr: f64) {
        let base = slot * self.dim;
        for (i, g) in grad.iter().enumerate() {
            if *g == 0.0 {
                continue;
            }
            let cell = &self.vals[base + i];
            let old = f64::from_bits(cell.load(Ordering::Relaxed));
            cell.store((old - lr * g).to_bits(), Ordering::Relaxed);
        }
    }

    fn renormalize(&self, slot: usize) {
        let v = self.read(slot);
        let len = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if len > 0.0 {
            let scaled: Vec<f64> = v.iter().map(|x| x / len).collect();
            self.write(slot, &scaled);
        }
    }
}

fn derive_seed(seed: u64, epoch: usize, worker: usize) -> u64 {
    seed ^ (epoch as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (worker as u64 + 1).wrapping_mul(0xBF58_476D_1CE4_E5B9)
}

/// Train on every entity-object fact of the KG.
pub fn train_transe(kg: &KnowledgeGraph, cfg: &TrainConfig) -> Result<(EmbeddingModel, TrainReport)> {
    cfg.validate()?;
    let facts = trainable_facts(kg);
    if facts.is_empty() {
        return Err(Error::Config(
            "no entity-object facts to train on (literal facts are excluded)".into(),
        ));
    }
    let entities: Vec<EntityId> = facts
        .iter()
        .flat_map(|(s, _, o)| [*s, *o])
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let relations: Vec<RelationId> = facts.iter().map(|(_, r, _)| *r).collect::<BTreeSet<_>>().into_iter().collect();
    if entities.len() < 2 {
        return Err(Error::Config(
            "corruption needs at least 2 entities in the training universe".into(),
        ));
    }

    let store = Store::new(entities.len() + relations.len(), cfg.dim);
    let rel_base = entities.len();
    let e_pos = |e: EntityId| entities.binary_search(&e).expect("trained entity");
    let r_pos = |r: RelationId| rel_base + relations.binary_search(&r).expect("trained relation");

    // uniform init in [−6/√d, 6/√d], one deterministic stream
    let bound = 6.0 / (cfg.dim as f64).sqrt();
    let mut init_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for slot in 0..entities.len() + relations.len() {
        let v: Vec<f64> = (0..cfg.dim).map(|_| init_rng.random_range(-bound..bound)).collect();
        store.write(slot, &v);
    }

    let exhausted = AtomicU64::new(0);
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(1));
    let mut order: Vec<usize> = (0..facts.len()).collect();

    for epoch in 0..cfg.epochs {
        for e in 0..entities.len() {
            store.renormalize(e);
        }
        order.shuffle(&mut shuffle_rng);
        let chunk_size = order.len().div_ceil(cfg.workers);
        let chunks: Vec<&[usize]> = order.chunks(chunk_size.max(1)).collect();
        let epoch_loss: f64 = std::thread::scope(|scope| {
            let handles: Vec<_> = chunks
                .iter()
                .enumerate()
                .map(|(worker, chunk)| {
                    let store = &store;
                    let facts = &facts;
                    let entities = &entities;
                    let exhausted = &exhausted;
                    scope.spawn(move || {
                        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, epoch, worker));
                        let mut loss = 0.0;
                        for &fact_idx in chunk.iter() {
                            let fact = facts[fact_idx];
                            for _ in 0..cfg.negatives {
                                let (neg, hit_bound) =
                                    corrupt_in_universe(fact, kg, entities, &mut rng)
                                        .expect("universe checked above");
                                if hit_bound {
                                    exhausted.fetch_add(1, Ordering::Relaxed);
                                }
                                loss += apply_pair(store, cfg, &e_pos, &r_pos, fact, neg);
                            }
                        }
                        loss
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("worker panicked")).sum()
        });
        epoch_losses.push(epoch_loss);
    }

    let mut model = EmbeddingModel::new(cfg.dim, cfg.norm);
    for (i, e) in entities.iter().enumerate() {
        model.insert_entity(*e, store.read(i));
    }
    for (i, r) in relations.iter().enumerate() {
        model.insert_relation(*r, store.read(rel_base + i));
    }
    Ok((
        model,
        TrainReport {
            epoch_losses,
            exhausted_corruptions: exhausted.load(Ordering::Relaxed),
        },
    ))
}

/// One SGD step on a (positive, corrupted) pair; returns the pair loss.
fn apply_pair(
    store: &Store,
    cfg: &TrainConfig,
    e_pos: &impl Fn(EntityId) -> usize,
    r_pos: &impl Fn(RelationId) -> usize,
    fact: (EntityId, RelationId, EntityId),
    neg: (EntityId, RelationId, EntityId),
) -> f64 {
    let (s, r, o) = fact;
    let (s_neg, _, o_neg) = neg;
    let sv = store.read(e_pos(s));
    let rv = store.read(r_pos(r));
    let ov = store.read(e_pos(o));
    let snv = store.read(e_pos(s_neg));
    let onv = store.read(e_pos(o_neg));
    let loss = pair_loss(cfg.norm, cfg.margin, &sv, &rv, &ov, &snv, &onv);
    if loss <= 0.0 {
        return 0.0;
    }
    let g = pair_gradients(cfg.norm, cfg.margin, &sv, &rv, &ov, &snv, &onv);
    // merge aliased entity slots before stepping: head corruption leaves
    // o_neg = o, tail corruption leaves s_neg = s
    let mut updates: Vec<(usize, Vec<f64>)> = vec![(e_pos(s), g.s), (r_pos(r), g.r), (e_pos(o), g.o)];
    for (slot_entity, grad) in [(s_neg, g.s_neg), (o_neg, g.o_neg)] {
        let slot = e_pos(slot_entity);
        match updates.iter_mut().find(|(existing, _)| *existing == slot) {
            Some((_, acc)) => {
                for (a, b) in acc.iter_mut().zip(&grad) {
                    *a += b;
                }
            }
            None => updates.push((slot, grad)),
        }
    }
    let rel_slot = r_pos(r);
    for (slot, grad) in &updates {
        store.step(*slot, grad, cfg.learning_rate);
        if *slot != rel_slot {
            store.renormalize(*slot);
        }
    }
    loss
}
