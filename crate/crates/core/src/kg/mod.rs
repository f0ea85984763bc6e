//! In-memory knowledge graph: entities, relations, facts, and per-entity
//! label sets partitioned by source.
//!
//! The graph is immutable once built; every downstream stage (index,
//! interpreter, trainer, evaluator) only reads it, so a single instance can
//! be shared across table workers.

mod ntriples;
mod tsv;

pub use ntriples::{parse_ntriples, write_ntriples_line};
pub use tsv::{parse_aux_labels, parse_tsv_triples};

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Interned entity identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EntityId(pub u32);

/// Interned relation identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RelationId(pub u32);

/// Interned literal identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LiteralId(pub u32);

/// A typed literal: lexical form plus optional datatype IRI or language tag.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub lexical: String,
    pub datatype: Option<String>,
    pub lang: Option<String>,
}

impl Literal {
    pub fn plain(lexical: impl Into<String>) -> Self {
        Literal {
            lexical: lexical.into(),
            datatype: None,
            lang: None,
        }
    }
}

/// The object position of a fact: an entity or a literal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Object {
    Entity(EntityId),
    Literal(LiteralId),
}

/// An attribute link ⟨relation, value⟩ of some entity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AttributeLink {
    pub relation: RelationId,
    pub value: Object,
}

/// Provenance tag of an entity label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelSource {
    Primary,
    Redirect,
    Disambiguation,
}

impl LabelSource {
    pub const ALL: [LabelSource; 3] = [
        LabelSource::Primary,
        LabelSource::Redirect,
        LabelSource::Disambiguation,
    ];

    pub fn parse(s: &str) -> Option<LabelSource> {
        match s {
            "primary" => Some(LabelSource::Primary),
            "redirect" => Some(LabelSource::Redirect),
            "disambiguation" => Some(LabelSource::Disambiguation),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            LabelSource::Primary => "primary",
            LabelSource::Redirect => "redirect",
            LabelSource::Disambiguation => "disambiguation",
        }
    }
}

/// Which relations carry entity labels, e.g. `rdfs:label`.
///
/// Triples whose predicate is one of these become label entries instead of
/// facts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelConfig {
    pub label_relations: Vec<String>,
}

pub const RDFS_LABEL: &str = "http://www.w3.org/2000/01/rdf-schema#label";

impl Default for LabelConfig {
    fn default() -> Self {
        LabelConfig {
            label_relations: vec![RDFS_LABEL.to_string()],
        }
    }
}

/// Input serialization of a knowledge graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KgFormat {
    NTriples,
    Tsv,
}

impl KgFormat {
    pub fn parse(s: &str) -> Option<KgFormat> {
        match s {
            "ntriples" | "nt" => Some(KgFormat::NTriples),
            "tsv" => Some(KgFormat::Tsv),
            _ => None,
        }
    }
}

/// Immutable knowledge graph K = (E, R, F) with label sets.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct KnowledgeGraph {
    entity_names: Vec<String>,
    entity_ids: HashMap<String, EntityId>,
    relation_names: Vec<String>,
    relation_ids: HashMap<String, RelationId>,
    literals: Vec<Literal>,
    literal_ids: HashMap<Literal, LiteralId>,
    facts: BTreeSet<(EntityId, RelationId, Object)>,
    /// Subject-indexed adjacency, parallel to `entity_names`.
    links: Vec<BTreeSet<(RelationId, Object)>>,
    /// Per-entity labels, parallel to `entity_names`.
    labels: Vec<BTreeSet<(String, LabelSource)>>,
    /// Entities holding each link, for salience denominators.
    link_holders: BTreeMap<(RelationId, Object), BTreeSet<EntityId>>,
}

impl KnowledgeGraph {
    pub fn entity_count(&self) -> usize {
        self.entity_names.len()
    }

    pub fn relation_count(&self) -> usize {
        self.relation_names.len()
    }

    pub fn fact_count(&self) -> usize {
        self.facts.len()
    }

    pub fn entity_name(&self, e: EntityId) -> &str {
        &self.entity_names[e.0 as usize]
    }

    pub fn relation_name(&self, r: RelationId) -> &str {
        &self.relation_names[r.0 as usize]
    }

    pub fn literal(&self, l: LiteralId) -> &Literal {
        &self.literals[l.0 as usize]
    }

    pub fn entity_id(&self, name: &str) -> Option<EntityId> {
        self.entity_ids.get(name).copied()
    }

    pub fn relation_id(&self, name: &str) -> Option<RelationId> {
        self.relation_ids.get(name).copied()
    }

    pub fn literal_id(&self, lit: &Literal) -> Option<LiteralId> {
        self.literal_ids.get(lit).copied()
    }

    pub fn entities(&self) -> impl Iterator<Item = EntityId> + '_ {
        (0..self.entity_names.len() as u32).map(EntityId)
    }

    pub fn relations(&self) -> impl Iterator<Item = RelationId> + '_ {
        (0..self.relation_names.len() as u32).map(RelationId)
    }

    pub fn facts(&self) -> impl Iterator<Item = &(EntityId, RelationId, Object)> {
        self.facts.iter()
    }

    pub fn contains_fact(&self, s: EntityId, r: RelationId, o: Object) -> bool {
        self.facts.contains(&(s, r, o))
    }

    /// The display string of an object: entity IRI or literal lexical form.
    pub fn object_text(&self, o: Object) -> &str {
        match o {
            Object::Entity(e) => self.entity_name(e),
            Object::Literal(l) => &self.literal(l).lexical,
        }
    }

    /// Labels of `e` restricted to the given sources. Unknown entities yield
    /// the empty set so streaming callers need no existence check.
    pub fn entity_labels(&self, e: EntityId, sources: &[LabelSource]) -> BTreeSet<&str> {
        match self.labels.get(e.0 as usize) {
            Some(set) => set
                .iter()
                .filter(|(_, src)| sources.contains(src))
                .map(|(l, _)| l.as_str())
                .collect(),
            None => BTreeSet::new(),
        }
    }

    /// Labels of `e` by IRI string, restricted to sources.
    pub fn labels_by_name(&self, name: &str, sources: &[LabelSource]) -> BTreeSet<&str> {
        match self.entity_id(name) {
            Some(e) => self.entity_labels(e, sources),
            None => BTreeSet::new(),
        }
    }

    /// All labels of `e` with their source tags.
    pub fn labeled_entries(&self, e: EntityId) -> &BTreeSet<(String, LabelSource)> {
        &self.labels[e.0 as usize]
    }

    /// Attribute links of `e`: exactly {⟨r,v⟩ | ⟨e,r,v⟩ ∈ F}.
    pub fn links(&self, e: EntityId) -> &BTreeSet<(RelationId, Object)> {
        static EMPTY: std::sync::OnceLock<BTreeSet<(RelationId, Object)>> =
            std::sync::OnceLock::new();
        self.links
            .get(e.0 as usize)
            .unwrap_or_else(|| EMPTY.get_or_init(BTreeSet::new))
    }

    /// Objects v with ⟨e, r, v⟩ ∈ F.
    pub fn objects_of(&self, e: EntityId, r: RelationId) -> impl Iterator<Item = Object> + '_ {
        self.links(e)
            .iter()
            .filter(move |(rel, _)| *rel == r)
            .map(|(_, v)| *v)
    }

    /// Labels at the far end of the r-links from `e`. For a literal value
    /// the label set is the singleton of its lexical form; for an entity
    /// value every label (any source) counts.
    pub fn link_labels(&self, e: EntityId, r: RelationId) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        for v in self.objects_of(e, r) {
            match v {
                Object::Entity(t) => {
                    for (l, _) in self.labels[t.0 as usize].iter() {
                        out.insert(l.as_str());
                    }
                }
                Object::Literal(l) => {
                    out.insert(self.literal(l).lexical.as_str());
                }
            }
        }
        out
    }

    /// Entities in E carrying the link ⟨r,v⟩.
    pub fn holders_of(&self, r: RelationId, v: Object) -> usize {
        self.link_holders
            .get(&(r, v))
            .map(|s| s.len())
            .unwrap_or(0)
    }
}

/// Mutable accumulator for building a [`KnowledgeGraph`].
#[derive(Debug, Default)]
pub struct KgBuilder {
    kg: KnowledgeGraph,
}

impl KgBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern_entity(&mut self, name: &str) -> EntityId {
        if let Some(id) = self.kg.entity_ids.get(name) {
            return *id;
        }
        let id = EntityId(self.kg.entity_names.len() as u32);
        self.kg.entity_names.push(name.to_string());
        self.kg.entity_ids.insert(name.to_string(), id);
        self.kg.links.push(BTreeSet::new());
        self.kg.labels.push(BTreeSet::new());
        id
    }

    pub fn intern_relation(&mut self, name: &str) -> RelationId {
        if let Some(id) = self.kg.relation_ids.get(name) {
            return *id;
        }
        let id = RelationId(self.kg.relation_names.len() as u32);
        self.kg.relation_names.push(name.to_string());
        self.kg.relation_ids.insert(name.to_string(), id);
        id
    }

    pub fn intern_literal(&mut self, lit: Literal) -> LiteralId {
        if let Some(id) = self.kg.literal_ids.get(&lit) {
            return *id;
        }
        let id = LiteralId(self.kg.literals.len() as u32);
        self.kg.literals.push(lit.clone());
        self.kg.literal_ids.insert(lit, id);
        id
    }

    /// Record a fact; duplicates are deduplicated (F is a set).
    pub fn add_fact(&mut self, s: EntityId, r: RelationId, o: Object) {
        if self.kg.facts.insert((s, r, o)) {
            self.kg.links[s.0 as usize].insert((r, o));
            self.kg
                .link_holders
                .entry((r, o))
                .or_default()
                .insert(s);
        }
    }

    pub fn add_label(&mut self, e: EntityId, label: &str, source: LabelSource) {
        self.kg.labels[e.0 as usize].insert((label.to_string(), source));
    }

    /// Ingest a triple stream in the given format. Triples whose predicate
    /// is a configured label relation (with a literal object) become labels.
    pub fn read_triples(
        &mut self,
        read: impl BufRead,
        format: KgFormat,
        cfg: &LabelConfig,
    ) -> Result<()> {
        match format {
            KgFormat::NTriples => parse_ntriples(read, cfg, self),
            KgFormat::Tsv => parse_tsv_triples(read, cfg, self),
        }
    }

    /// Ingest an auxiliary label file (TSV: entity IRI, label, source tag).
    pub fn read_aux_labels(&mut self, read: impl BufRead) -> Result<()> {
        parse_aux_labels(read, self)
    }

    pub fn build(self) -> KnowledgeGraph {
        self.kg
    }
}

/// Load a knowledge graph from a single triple stream.
pub fn load_kg(read: impl BufRead, format: KgFormat, cfg: &LabelConfig) -> Result<KnowledgeGraph> {
    let mut b = KgBuilder::new();
    b.read_triples(read, format, cfg)?;
    Ok(b.build())
}

/// Load a knowledge graph from a file path, inferring nothing: the caller
/// names the format. Auxiliary label files are applied in order.
pub fn load_kg_from_path(
    path: &std::path::Path,
    format: KgFormat,
    cfg: &LabelConfig,
    aux_label_files: &[std::path::PathBuf],
) -> Result<KnowledgeGraph> {
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Config(format!("cannot open KG file {}: {e}", path.display())))?;
    let mut b = KgBuilder::new();
    b.read_triples(std::io::BufReader::new(file), format, cfg)?;
    for aux in aux_label_files {
        let f = std::fs::File::open(aux).map_err(|e| {
            Error::Config(format!("cannot open label file {}: {e}", aux.display()))
        })?;
        b.read_aux_labels(std::io::BufReader::new(f))?;
    }
    Ok(b.build())
}
