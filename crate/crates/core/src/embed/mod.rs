//! Translation embeddings: a true fact ⟨s,r,o⟩ should satisfy
//! vec(s) + vec(r) ≈ vec(o), so triple plausibility is the translation
//! distance under the configured norm.

mod io;
mod train;

pub use train::{pair_gradients, pair_loss, sample_corruption, train_transe, PairGradients, TrainConfig, TrainReport};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg::{EntityId, KnowledgeGraph, Object, RelationId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Norm {
    #[default]
    L1,
    L2,
}

impl Norm {
    pub fn parse(s: &str) -> Option<Norm> {
        match s {
            "l1" => Some(Norm::L1),
            "l2" => Some(Norm::L2),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Norm::L1 => "l1",
            Norm::L2 => "l2",
        }
    }

    pub fn apply(&self, diff: &[f64]) -> f64 {
        match self {
            Norm::L1 => diff.iter().map(|x| x.abs()).sum(),
            Norm::L2 => diff.iter().map(|x| x * x).sum::<f64>().sqrt(),
        }
    }
}

/// Trained vectors for the entities and relations that occur in
/// entity-object facts. Entities seen only in labels or literal facts
/// have no vector.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    pub dim: usize,
    pub norm: Norm,
    entity_vecs: BTreeMap<EntityId, Vec<f64>>,
    relation_vecs: BTreeMap<RelationId, Vec<f64>>,
}

impl EmbeddingModel {
    pub fn new(dim: usize, norm: Norm) -> Self {
        EmbeddingModel {
            dim,
            norm,
            entity_vecs: BTreeMap::new(),
            relation_vecs: BTreeMap::new(),
        }
    }

    pub fn insert_entity(&mut self, e: EntityId, vec: Vec<f64>) {
        assert_eq!(vec.len(), self.dim);
        self.entity_vecs.insert(e, vec);
    }

    pub fn insert_relation(&mut self, r: RelationId, vec: Vec<f64>) {
        assert_eq!(vec.len(), self.dim);
        self.relation_vecs.insert(r, vec);
    }

    pub fn entity_vec(&self, e: EntityId) -> Option<&[f64]> {
        self.entity_vecs.get(&e).map(Vec::as_slice)
    }

    pub fn relation_vec(&self, r: RelationId) -> Option<&[f64]> {
        self.relation_vecs.get(&r).map(Vec::as_slice)
    }

    pub fn entities(&self) -> impl Iterator<Item = EntityId> + '_ {
        self.entity_vecs.keys().copied()
    }

    pub fn relations(&self) -> impl Iterator<Item = RelationId> + '_ {
        self.relation_vecs.keys().copied()
    }

    pub fn entity_count(&self) -> usize {
        self.entity_vecs.len()
    }

    pub fn relation_count(&self) -> usize {
        self.relation_vecs.len()
    }

    /// ‖vec(s) + vec(r) − vec(o)‖ under the model norm.
    pub fn triple_distance(&self, s: EntityId, r: RelationId, o: EntityId) -> Result<f64> {
        let sv = self.required_entity(s)?;
        let rv = self
            .relation_vecs
            .get(&r)
            .ok_or_else(|| Error::Contract(format!("relation id {} missing from the model", r.0)))?;
        let ov = self.required_entity(o)?;
        let diff: Vec<f64> = (0..self.dim).map(|i| sv[i] + rv[i] - ov[i]).collect();
        Ok(self.norm.apply(&diff))
    }

    fn required_entity(&self, e: EntityId) -> Result<&Vec<f64>> {
        self.entity_vecs
            .get(&e)
            .ok_or_else(|| Error::Contract(format!("entity id {} missing from the model", e.0)))
    }

    /// Rank of `o` among all modeled entities by d(s+r, ·), counting only
    /// strictly closer entities, with other known-true tails filtered out.
    pub fn filtered_tail_rank(
        &self,
        kg: &KnowledgeGraph,
        s: EntityId,
        r: RelationId,
        o: EntityId,
    ) -> Result<usize> {
        let target = self.triple_distance(s, r, o)?;
        let mut closer = 0usize;
        for e in self.entities() {
            if e == o || kg.contains_fact(s, r, Object::Entity(e)) {
                continue;
            }
            if self.triple_distance(s, r, e)? < target {
                closer += 1;
            }
        }
        Ok(closer + 1)
    }

    /// Fraction of facts whose true tail ranks in the top k (filtered).
    pub fn filtered_hits_at_k(
        &self,
        kg: &KnowledgeGraph,
        facts: &[(EntityId, RelationId, EntityId)],
        k: usize,
    ) -> Result<f64> {
        if facts.is_empty() {
            return Ok(0.0);
        }
        let mut hits = 0usize;
        for (s, r, o) in facts {
            if self.filtered_tail_rank(kg, *s, *r, *o)? <= k {
                hits += 1;
            }
        }
        Ok(hits as f64 / facts.len() as f64)
    }

    pub fn save_text(&self, kg: &KnowledgeGraph, w: impl std::io::Write) -> Result<()> {
        io::save_text(self, kg, w)
    }

    pub fn load_text(kg: &KnowledgeGraph, r: impl std::io::BufRead) -> Result<EmbeddingModel> {
        io::load_text(kg, r)
    }

    pub fn save_binary(&self, kg: &KnowledgeGraph, w: impl std::io::Write) -> Result<()> {
        io::save_binary(self, kg, w)
    }

    pub fn load_binary(kg: &KnowledgeGraph, r: impl std::io::Read) -> Result<EmbeddingModel> {
        io::load_binary(kg, r)
    }
}

/// Entity-object facts: the trainable subset of F.
pub fn trainable_facts(kg: &KnowledgeGraph) -> Vec<(EntityId, RelationId, EntityId)> {
    kg.facts()
        .filter_map(|(s, r, o)| match o {
            Object::Entity(t) => Some((*s, *r, *t)),
            Object::Literal(_) => None,
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn toy_model() -> EmbeddingModel {
        let mut m = EmbeddingModel::new(2, Norm::L1);
        m.insert_entity(EntityId(0), vec![0.0, 0.0]);
        m.insert_entity(EntityId(1), vec![1.0, 1.0]);
        m.insert_entity(EntityId(2), vec![2.0, 0.0]);
        m.insert_relation(RelationId(0), vec![1.0, 1.0]);
        m
    }

    #[test]
    fn distance_hand_values() {
        let m = toy_model();
        let d = m
            .triple_distance(EntityId(0), RelationId(0), EntityId(1))
            .unwrap();
        assert_eq!(d, 0.0);
        let d = m
            .triple_distance(EntityId(0), RelationId(0), EntityId(2))
            .unwrap();
        assert_eq!(d, 2.0);
        let mut l2 = toy_model();
        l2.norm = Norm::L2;
        let d = l2
            .triple_distance(EntityId(0), RelationId(0), EntityId(2))
            .unwrap();
        assert!((d - 2.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn missing_ids_are_named() {
        let m = toy_model();
        let err = m
            .triple_distance(EntityId(9), RelationId(0), EntityId(1))
            .unwrap_err();
        assert!(err.to_string().contains("entity id 9"), "{err}");
        let err = m
            .triple_distance(EntityId(0), RelationId(7), EntityId(1))
            .unwrap_err();
        assert!(err.to_string().contains("relation id 7"), "{err}");
    }

    #[test]
    fn trainable_facts_exclude_literals() {
        let kg = fixtures::minimovies();
        // 7 facts, 2 with literal years
        assert_eq!(trainable_facts(&kg).len(), 5);
    }

    #[test]
    fn filtered_rank_ignores_other_true_tails() {
        // s has two true tails; ranking the second must not penalize the
        // first being closer
        let mut b = crate::kg::KgBuilder::new();
        let s = b.intern_entity("http://x/s");
        let t1 = b.intern_entity("http://x/t1");
        let t2 = b.intern_entity("http://x/t2");
        let mid = b.intern_entity("http://x/mid");
        let r = b.intern_relation("http://x/r");
        b.add_fact(s, r, Object::Entity(t1));
        b.add_fact(s, r, Object::Entity(t2));
        let kg = b.build();

        // s+r lands at 1.0: distances t1=0, mid=0.2, t2=0.5, s=1.0
        let mut m = EmbeddingModel::new(1, Norm::L1);
        m.insert_entity(s, vec![0.0]);
        m.insert_entity(t1, vec![1.0]);
        m.insert_entity(t2, vec![1.5]);
        m.insert_entity(mid, vec![1.2]);
        m.insert_relation(r, vec![1.0]);

        // raw rank of t2 would be 3; filtering removes t1, leaving mid
        assert_eq!(m.filtered_tail_rank(&kg, s, r, t2).unwrap(), 2);
        assert_eq!(m.filtered_tail_rank(&kg, s, r, t1).unwrap(), 1);
        let hits = m.filtered_hits_at_k(&kg, &[(s, r, t1), (s, r, t2)], 2).unwrap();
        assert_eq!(hits, 1.0);
        assert_eq!(m.filtered_hits_at_k(&kg, &[], 3).unwrap(), 0.0);
    }
}
