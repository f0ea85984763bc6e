//! Table-to-knowledge-graph interpretation engine.
//!
//! Given a relational table of entity mentions and a knowledge graph, the
//! pipeline resolves each row of the key column to an entity, assigns a
//! graph relation to each attribute column, extracts the remaining cells
//! as candidate facts (disambiguated with translation embeddings), and
//! scores the result against a gold standard with novel and redundant
//! predictions accounted separately.
//!
//! Module map:
//! - [`kg`]: immutable knowledge graph with labels and attribute links
//! - [`index`]: label index with TF-IDF retrieval and candidate generation
//! - [`table`]: table ingestion and key-column detection
//! - [`interpret`]: priors, link statistics, and belief propagation
//! - [`embed`]: translation embedding training and scoring
//! - [`slots`]: slot filling of attribute cells into triples
//! - [`eval`]: precision/recall/F1 with novelty partitioning
//! - [`pipeline`]: stage orchestration and artifact layout

pub mod embed;
pub mod error;
pub mod eval;
pub mod fixtures;
pub mod index;
pub mod interpret;
pub mod kg;
pub mod pipeline;
pub mod slots;
pub mod table;
pub mod text;

pub use error::{Error, Result};
