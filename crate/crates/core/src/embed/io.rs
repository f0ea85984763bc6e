//! Embedding snapshots: a line-oriented text format for inspection and a
//! compact little-endian binary format for round trips. Both key vectors
//! by IRI so snapshots survive re-interning, and both resolve IRIs
//! against the graph on load.

use std::io::{BufRead, BufReader, Read, Write};

use crate::error::{Error, Result};
use crate::kg::KnowledgeGraph;

use super::{EmbeddingModel, Norm};

const TEXT_HEADER: &str = "tabkg-embeddings 1";
const BINARY_MAGIC: &[u8; 4] = b"TKEM";
const BINARY_VERSION: u32 = 1;

pub(super) fn save_text(model: &EmbeddingModel, kg: &KnowledgeGraph, mut w: impl Write) -> Result<()> {
    writeln!(w, "{TEXT_HEADER}")?;
    writeln!(w, "norm {}", model.norm.as_str())?;
    writeln!(w, "dim {}", model.dim)?;
    writeln!(w, "entities {}", model.entity_count())?;
    writeln!(w, "relations {}", model.relation_count())?;
    for e in model.entities() {
        write_text_row(&mut w, "e", kg.entity_name(e), model.entity_vec(e).unwrap())?;
    }
    for r in model.relations() {
        write_text_row(&mut w, "r", kg.relation_name(r), model.relation_vec(r).unwrap())?;
    }
    Ok(())
}

fn write_text_row(w: &mut impl Write, kind: &str, iri: &str, vec: &[f64]) -> Result<()> {
    write!(w, "{kind} {iri}")?;
    for v in vec {
        write!(w, " {v}")?;
    }
    writeln!(w)?;
    Ok(())
}

pub(super) fn load_text(kg: &KnowledgeGraph, r: impl Read) -> Result<EmbeddingModel> {
    let mut lines = BufReader::new(r).lines();
    let mut next = || -> Result<String> {
        lines
            .next()
            .ok_or_else(|| Error::Contract("embedding snapshot truncated".into()))?
            .map_err(Error::from)
    };
    if next()? != TEXT_HEADER {
        return Err(Error::Contract("not an embedding text snapshot".into()));
    }
    let norm_text = header_value(&next()?, "norm")?.to_string();
    let norm = Norm::parse(&norm_text)
        .ok_or_else(|| Error::Contract(format!("unknown norm '{norm_text}' in snapshot")))?;
    let dim: usize = parse_count(header_value(&next()?, "dim")?)?;
    let n_entities: usize = parse_count(header_value(&next()?, "entities")?)?;
    let n_relations: usize = parse_count(header_value(&next()?, "relations")?)?;
    let mut model = EmbeddingModel::new(dim, norm);
    for _ in 0..n_entities {
        let (iri, vec) = parse_text_row(&next()?, "e", dim)?;
        model.insert_entity(resolve_entity(kg, &iri)?, vec);
    }
    for _ in 0..n_relations {
        let (iri, vec) = parse_text_row(&next()?, "r", dim)?;
        model.insert_relation(resolve_relation(kg, &iri)?, vec);
    }
    Ok(model)
}

fn header_value<'a>(line: &'a str, key: &str) -> Result<&'a str> {
    line.strip_prefix(key)
        .and_then(|rest| rest.strip_prefix(' '))
        .ok_or_else(|| Error::Contract(format!("expected '{key} ...' header line, got '{line}'")))
}

fn parse_count(text: &str) -> Result<usize> {
    text.parse()
        .map_err(|_| Error::Contract(format!("bad count '{text}' in embedding snapshot")))
}

fn parse_text_row(line: &str, kind: &str, dim: usize) -> Result<(String, Vec<f64>)> {
    let mut parts = line.split(' ');
    if parts.next() != Some(kind) {
        return Err(Error::Contract(format!("expected '{kind}' row, got '{line}'")));
    }
    let iri = parts
        .next()
        .ok_or_else(|| Error::Contract("embedding row missing IRI".into()))?
        .to_string();
    let vec: Vec<f64> = parts
        .map(|p| {
            p.parse()
                .map_err(|_| Error::Contract(format!("bad component '{p}' in embedding row")))
        })
        .collect::<Result<_>>()?;
    if vec.len() != dim {
        return Err(Error::Contract(format!(
            "embedding row has {} components, expected {dim}",
            vec.len()
        )));
    }
    Ok((iri, vec))
}

fn resolve_entity(kg: &KnowledgeGraph, iri: &str) -> Result<crate::kg::EntityId> {
    kg.entity_id(iri)
        .ok_or_else(|| Error::Contract(format!("snapshot entity '{iri}' is not in the graph")))
}

fn resolve_relation(kg: &KnowledgeGraph, iri: &str) -> Result<crate::kg::RelationId> {
    kg.relation_id(iri)
        .ok_or_else(|| Error::Contract(format!("snapshot relation '{iri}' is not in the graph")))
}

pub(super) fn save_binary(model: &EmbeddingModel, kg: &KnowledgeGraph, mut w: impl Write) -> Result<()> {
    w.write_all(BINARY_MAGIC)?;
    w.write_all(&BINARY_VERSION.to_le_bytes())?;
    w.write_all(&[match model.norm {
        Norm::L1 => 1u8,
        Norm::L2 => 2u8,
    }])?;
    w.write_all(&(model.dim as u64).to_le_bytes())?;
    w.write_all(&(model.entity_count() as u64).to_le_bytes())?;
    w.write_all(&(model.relation_count() as u64).to_le_bytes())?;
    for e in model.entities() {
        write_binary_row(&mut w, kg.entity_name(e), model.entity_vec(e).unwrap())?;
    }
    for r in model.relations() {
        write_binary_row(&mut w, kg.relation_name(r), model.relation_vec(r).unwrap())?;
    }
    Ok(())
}

fn write_binary_row(w: &mut impl Write, iri: &str, vec: &[f64]) -> Result<()> {
    w.write_all(&(iri.len() as u64).to_le_bytes())?;
    w.write_all(iri.as_bytes())?;
    for v in vec {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub(super) fn load_binary(kg: &KnowledgeGraph, r: impl Read) -> Result<EmbeddingModel> {
    let mut r = BufReader::new(r);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != BINARY_MAGIC {
        return Err(Error::Contract("not an embedding binary snapshot".into()));
    }
    let version = read_u32(&mut r)?;
    if version != BINARY_VERSION {
        return Err(Error::Contract(format!(
            "unsupported embedding snapshot version {version}"
        )));
    }
    let mut norm_byte = [0u8; 1];
    r.read_exact(&mut norm_byte)?;
    let norm = match norm_byte[0] {
        1 => Norm::L1,
        2 => Norm::L2,
        b => return Err(Error::Contract(format!("unknown norm tag {b}"))),
    };
    let dim = read_u64(&mut r)? as usize;
    let n_entities = read_u64(&mut r)? as usize;
    let n_relations = read_u64(&mut r)? as usize;
    let mut model = EmbeddingModel::new(dim, norm);
    for _ in 0..n_entities {
        let (iri, vec) = read_binary_row(&mut r, dim)?;
        model.insert_entity(resolve_entity(kg, &iri)?, vec);
    }
    for _ in 0..n_relations {
        let (iri, vec) = read_binary_row(&mut r, dim)?;
        model.insert_relation(resolve_relation(kg, &iri)?, vec);
    }
    Ok(model)
}

fn read_u32(r: &mut impl Read) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_u64(r: &mut impl Read) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn read_binary_row(r: &mut impl Read, dim: usize) -> Result<(String, Vec<f64>)> {
    let len = read_u64(r)? as usize;
    if len > 1 << 20 {
        return Err(Error::Contract("IRI length in snapshot is implausible".into()));
    }
    let mut iri = vec![0u8; len];
    r.read_exact(&mut iri)?;
    let iri = String::from_utf8(iri).map_err(|_| Error::Contract("snapshot IRI is not UTF-8".into()))?;
    let mut vec = Vec::with_capacity(dim);
    for _ in 0..dim {
        let mut buf = [0u8; 8];
        r.read_exact(&mut buf)?;
        vec.push(f64::from_le_bytes(buf));
    }
    Ok((iri, vec))
}
