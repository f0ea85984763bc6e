//! Tab-separated KG inputs: a four-column triple file and an auxiliary
//! three-column label file for redirect and disambiguation titles.

use std::io::BufRead;

use crate::error::{Error, Result};

use super::ntriples::{ingest, Term};
use super::{KgBuilder, LabelConfig, LabelSource, Literal};

/// Parse `subject \t relation \t object \t kind` rows, where kind is
/// `entity` or `literal`. Label-relation rows with literal objects become
/// primary labels, mirroring the N-Triples path.
pub fn parse_tsv_triples(
    read: impl BufRead,
    cfg: &LabelConfig,
    builder: &mut KgBuilder,
) -> Result<()> {
    for (idx, line) in read.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let [subject, relation, object, kind] = cols[..] else {
            return Err(Error::parse(
                lineno,
                format!("expected 4 tab-separated columns, found {}", cols.len()),
            ));
        };
        let term = match kind.trim() {
            "entity" => Term::Iri(object.to_string()),
            "literal" => Term::Literal(Literal::plain(object)),
            other => {
                return Err(Error::parse(
                    lineno,
                    format!("object kind must be 'entity' or 'literal', found '{other}'"),
                ));
            }
        };
        ingest(builder, cfg, subject, relation, term);
    }
    Ok(())
}

/// Parse `entity \t label \t source` rows, where source is `primary`,
/// `redirect`, or `disambiguation`. Entities seen only here are still
/// interned: a redirect title may be the only handle on an entity.
pub fn parse_aux_labels(read: impl BufRead, builder: &mut KgBuilder) -> Result<()> {
    for (idx, line) in read.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        let [entity, label, source] = cols[..] else {
            return Err(Error::parse(
                lineno,
                format!("expected 3 tab-separated columns, found {}", cols.len()),
            ));
        };
        let Some(source) = LabelSource::parse(source.trim()) else {
            return Err(Error::parse(
                lineno,
                format!("unknown label source '{}'", source.trim()),
            ));
        };
        let e = builder.intern_entity(entity);
        builder.add_label(e, label, source);
    }
    Ok(())
}
