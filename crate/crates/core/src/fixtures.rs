//! Programmatic corpora for tests and benches.
//!
//! The movie fixture is small enough to compute every score by hand, which
//! is how the expected values in the test suite were derived. The larger
//! generators produce structured-but-random graphs for property tests.

use crate::kg::{KgBuilder, KnowledgeGraph, LabelSource, Literal, Object};

pub const E1: &str = "http://example.org/e/MASH_film";
pub const E2: &str = "http://example.org/e/MASH_series";
pub const E3: &str = "http://example.org/e/Producers_film";
pub const E4: &str = "http://example.org/e/Mel_Brooks";
pub const E5: &str = "http://example.org/e/Robert_Altman";
pub const E6: &str = "http://example.org/e/Film";
pub const E7: &str = "http://example.org/e/TV_Series";

pub const REL_DIRECTOR: &str = "http://example.org/r/director";
pub const REL_TYPE: &str = "http://example.org/r/type";
pub const REL_YEAR: &str = "http://example.org/r/year";

/// Seven movie-domain entities, seven facts, nine primary labels.
pub fn minimovies() -> KnowledgeGraph {
    let mut b = KgBuilder::new();
    let labels: [(&str, &[&str]); 7] = [
        (E1, &["MASH", "M*A*S*H (film)"]),
        (E2, &["M*A*S*H"]),
        (E3, &["The Producers", "The Producers (1968 film)"]),
        (E4, &["Mel Brooks"]),
        (E5, &["Robert Altman"]),
        (E6, &["Film"]),
        (E7, &["TV Series"]),
    ];
    for (iri, names) in labels {
        let e = b.intern_entity(iri);
        for name in names {
            b.add_label(e, name, LabelSource::Primary);
        }
    }
    let director = b.intern_relation(REL_DIRECTOR);
    let typ = b.intern_relation(REL_TYPE);
    let year = b.intern_relation(REL_YEAR);
    let ent = |b: &mut KgBuilder, iri: &str| b.intern_entity(iri);
    let e1 = ent(&mut b, E1);
    let e2 = ent(&mut b, E2);
    let e3 = ent(&mut b, E3);
    let e4 = ent(&mut b, E4);
    let e5 = ent(&mut b, E5);
    let e6 = ent(&mut b, E6);
    let e7 = ent(&mut b, E7);
    b.add_fact(e1, director, Object::Entity(e5));
    b.add_fact(e3, director, Object::Entity(e4));
    b.add_fact(e1, typ, Object::Entity(e6));
    b.add_fact(e3, typ, Object::Entity(e6));
    b.add_fact(e2, typ, Object::Entity(e7));
    let y1970 = b.intern_literal(Literal::plain("1970"));
    let y1968 = b.intern_literal(Literal::plain("1968"));
    b.add_fact(e1, year, Object::Literal(y1970));
    b.add_fact(e3, year, Object::Literal(y1968));
    b.build()
}

/// Two groups of ten entities with forward and reverse links between
/// aligned pairs: a_i --fwd--> b_i and b_i --rev--> a_i. The regular
/// structure makes translation embeddings easy to learn and link ranks
/// easy to check.
pub fn bipartite_kg() -> KnowledgeGraph {
    let mut b = KgBuilder::new();
    let fwd = b.intern_relation("http://example.org/r/fwd");
    let rev = b.intern_relation("http://example.org/r/rev");
    for i in 0..10 {
        let a = b.intern_entity(&format!("http://example.org/e/a{i}"));
        let bb = b.intern_entity(&format!("http://example.org/e/b{i}"));
        b.add_label(a, &format!("left {i}"), LabelSource::Primary);
        b.add_label(bb, &format!("right {i}"), LabelSource::Primary);
        b.add_fact(a, fwd, Object::Entity(bb));
        b.add_fact(bb, rev, Object::Entity(a));
    }
    b.build()
}

/// Eight films directed by one John Smith while a different John Smith
/// (whose IRI sorts first) stars in them. Retrieval alone cannot split the
/// two; link structure can.
pub fn shared_name_kg() -> KnowledgeGraph {
    let mut b = KgBuilder::new();
    let director = b.intern_relation("http://example.org/r/director");
    let starring = b.intern_relation("http://example.org/r/starring");
    let actor = b.intern_entity("http://example.org/e/John_Smith_actor");
    let dir = b.intern_entity("http://example.org/e/John_Smith_director");
    b.add_label(actor, "John Smith", LabelSource::Primary);
    b.add_label(dir, "John Smith", LabelSource::Primary);
    for i in 0..8 {
        let f = b.intern_entity(&format!("http://example.org/e/film{i}"));
        b.add_label(f, &format!("Film {i}"), LabelSource::Primary);
        b.add_fact(f, director, Object::Entity(dir));
        b.add_fact(f, starring, Object::Entity(actor));
    }
    b.build()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kg::LabelSource;

    #[test]
    fn shared_name_kg_iri_order() {
        let kg = shared_name_kg();
        let actor = kg.entity_id("http://example.org/e/John_Smith_actor").unwrap();
        let dir = kg.entity_id("http://example.org/e/John_Smith_director").unwrap();
        assert!(kg.entity_name(actor) < kg.entity_name(dir));
        assert_eq!(
            kg.entity_labels(actor, &[LabelSource::Primary]),
            kg.entity_labels(dir, &[LabelSource::Primary])
        );
    }

    #[test]
    fn bipartite_kg_counts() {
        let kg = bipartite_kg();
        assert_eq!(kg.entity_count(), 20);
        assert_eq!(kg.fact_count(), 20);
        assert_eq!(kg.relation_count(), 2);
    }
}
