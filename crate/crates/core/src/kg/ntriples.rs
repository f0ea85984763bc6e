//! Line-oriented N-Triples reader and writer.
//!
//! Covers the subset needed for KG snapshots: IRI subjects/predicates,
//! IRI or literal objects, `@lang` tags, `^^<datatype>` annotations, and
//! string escapes. Blank nodes are not supported; malformed lines fail
//! with their line number.

use std::io::BufRead;

use crate::error::{Error, Result};

use super::{KgBuilder, LabelConfig, Literal, Object};

/// Parse an N-Triples stream into `builder`, diverting label triples
/// (predicate in `cfg.label_relations`, literal object) to label sets.
pub fn parse_ntriples(read: impl BufRead, cfg: &LabelConfig, builder: &mut KgBuilder) -> Result<()> {
    for (idx, line) in read.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (subject, predicate, object) = parse_line(trimmed, lineno)?;
        ingest(builder, cfg, &subject, &predicate, object);
    }
    Ok(())
}

/// One parsed object term.
pub(super) enum Term {
    Iri(String),
    Literal(Literal),
}

pub(super) fn ingest(
    builder: &mut KgBuilder,
    cfg: &LabelConfig,
    subject: &str,
    predicate: &str,
    object: Term,
) {
    let s = builder.intern_entity(subject);
    match object {
        Term::Literal(lit) if cfg.label_relations.iter().any(|r| r == predicate) => {
            builder.add_label(s, &lit.lexical, super::LabelSource::Primary);
        }
        Term::Literal(lit) => {
            let r = builder.intern_relation(predicate);
            let l = builder.intern_literal(lit);
            builder.add_fact(s, r, Object::Literal(l));
        }
        Term::Iri(iri) => {
            let r = builder.intern_relation(predicate);
            let o = builder.intern_entity(&iri);
            builder.add_fact(s, r, Object::Entity(o));
        }
    }
}

fn parse_line(line: &str, lineno: usize) -> Result<(String, String, Term)> {
    let mut rest = line;
    let subject = take_iri(&mut rest, lineno)?;
    skip_ws(&mut rest);
    let predicate = take_iri(&mut rest, lineno)?;
    skip_ws(&mut rest);
    let object = take_term(&mut rest, lineno)?;
    skip_ws(&mut rest);
    match rest.strip_prefix('.') {
        Some(tail) if tail.trim().is_empty() => Ok((subject, predicate, object)),
        _ => Err(Error::parse(lineno, "expected terminating '.'")),
    }
}

fn skip_ws(rest: &mut &str) {
    *rest = rest.trim_start();
}

fn take_iri(rest: &mut &str, lineno: usize) -> Result<String> {
    let Some(tail) = rest.strip_prefix('<') else {
        return Err(Error::parse(lineno, "expected '<' starting an IRI"));
    };
    let Some(end) = tail.find('>') else {
        return Err(Error::parse(lineno, "unterminated IRI"));
    };
    let raw = &tail[..end];
    *rest = &tail[end + 1..];
    unescape(raw, lineno)
}

fn take_term(rest: &mut &str, lineno: usize) -> Result<Term> {
    if rest.starts_with('<') {
        return Ok(Term::Iri(take_iri(rest, lineno)?));
    }
    let Some(tail) = rest.strip_prefix('"') else {
        return Err(Error::parse(lineno, "expected IRI or literal object"));
    };
    // find the closing quote, skipping escaped characters
    let mut end = None;
    let mut escaped = false;
    for (i, c) in tail.char_indices() {
        if escaped {
            escaped = false;
        } else if c == '\\' {
            escaped = true;
        } else if c == '"' {
            end = Some(i);
            break;
        }
    }
    let Some(end) = end else {
        return Err(Error::parse(lineno, "unterminated string literal"));
    };
    let lexical = unescape(&tail[..end], lineno)?;
    *rest = &tail[end + 1..];
    let mut lit = Literal::plain(lexical);
    if let Some(tail) = rest.strip_prefix("^^") {
        *rest = tail;
        lit.datatype = Some(take_iri(rest, lineno)?);
    } else if let Some(tail) = rest.strip_prefix('@') {
        let end = tail
            .find(|c: char| !(c.is_ascii_alphanumeric() || c == '-'))
            .unwrap_or(tail.len());
        if end == 0 {
            return Err(Error::parse(lineno, "empty language tag"));
        }
        lit.lang = Some(tail[..end].to_string());
        *rest = &tail[end..];
    }
    Ok(Term::Literal(lit))
}

fn unescape(raw: &str, lineno: usize) -> Result<String> {
    if !raw.contains('\\') {
        return Ok(raw.to_string());
    }
    let mut out = String::with_capacity(raw.len());
    let mut chars = raw.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('t') => out.push('\t'),
            Some('n') => out.push('\n'),
            Some('r') => out.push('\r'),
            Some('"') => out.push('"'),
            Some('\\') => out.push('\\'),
            Some('u') => out.push(take_hex_escape(&mut chars, 4, lineno)?),
            Some('U') => out.push(take_hex_escape(&mut chars, 8, lineno)?),
            other => {
                return Err(Error::parse(
                    lineno,
                    format!("unsupported escape \\{}", other.map(String::from).unwrap_or_default()),
                ));
            }
        }
    }
    Ok(out)
}

fn take_hex_escape(chars: &mut std::str::Chars<'_>, len: usize, lineno: usize) -> Result<char> {
    let mut code = 0u32;
    for _ in 0..len {
        let Some(d) = chars.next().and_then(|c| c.to_digit(16)) else {
            return Err(Error::parse(lineno, "truncated unicode escape"));
        };
        code = code * 16 + d;
    }
    char::from_u32(code).ok_or_else(|| Error::parse(lineno, "invalid unicode code point"))
}

fn escape_into(out: &mut String, s: &str) {
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            _ => out.push(c),
        }
    }
}

/// Serialize one triple as an N-Triples line (without trailing newline).
/// `object` is an IRI when `object_is_iri`, otherwise a literal with
/// optional datatype and language annotations.
pub fn write_ntriples_line(
    subject: &str,
    predicate: &str,
    object: &str,
    object_is_iri: bool,
    datatype: Option<&str>,
    lang: Option<&str>,
) -> String {
    let mut out = String::new();
    out.push('<');
    out.push_str(subject);
    out.push_str("> <");
    out.push_str(predicate);
    out.push_str("> ");
    if object_is_iri {
        out.push('<');
        out.push_str(object);
        out.push('>');
    } else {
        out.push('"');
        escape_into(&mut out, object);
        out.push('"');
        if let Some(dt) = datatype {
            out.push_str("^^<");
            out.push_str(dt);
            out.push('>');
        } else if let Some(tag) = lang {
            out.push('@');
            out.push_str(tag);
        }
    }
    out.push_str(" .");
    out
}

#[cfg(test)]
mod tests {
    use super::super::{load_kg, KgFormat, LabelConfig, LabelSource};
    use super::*;
    use std::io::Cursor;

    fn parse(nt: &str) -> super::super::KnowledgeGraph {
        load_kg(Cursor::new(nt), KgFormat::NTriples, &LabelConfig::default()).unwrap()
    }

    #[test]
    fn parses_iri_and_literal_objects() {
        let kg = parse(concat!(
            "<http://x/a> <http://x/r> <http://x/b> .\n",
            "\n",
            "# a comment\n",
            "<http://x/a> <http://x/year> \"1970\" .\n",
            "<http://x/a> <http://x/note> \"caf\\u00e9\"@en .\n",
            "<http://x/a> <http://x/count> \"3\"^^<http://www.w3.org/2001/XMLSchema#integer> .\n",
        ));
        assert_eq!(kg.fact_count(), 4);
        assert_eq!(kg.entity_count(), 2);
        let a = kg.entity_id("http://x/a").unwrap();
        let texts: Vec<&str> = kg
            .links(a)
            .iter()
            .map(|(_, v)| kg.object_text(*v))
            .collect();
        assert!(texts.contains(&"café"));
        assert!(texts.contains(&"1970"));
    }

    #[test]
    fn label_triples_become_labels_not_facts() {
        let kg = parse(concat!(
            "<http://x/a> <http://www.w3.org/2000/01/rdf-schema#label> \"Alpha\" .\n",
            "<http://x/a> <http://x/r> <http://x/b> .\n",
        ));
        assert_eq!(kg.fact_count(), 1);
        assert_eq!(kg.relation_count(), 1);
        let a = kg.entity_id("http://x/a").unwrap();
        assert_eq!(
            kg.entity_labels(a, &[LabelSource::Primary]).into_iter().collect::<Vec<_>>(),
            vec!["Alpha"]
        );
    }

    #[test]
    fn escaped_quotes_inside_literals() {
        let kg = parse("<http://x/a> <http://x/quip> \"he said \\\"hi\\\"\\n\" .\n");
        let a = kg.entity_id("http://x/a").unwrap();
        let (_, v) = kg.links(a).iter().next().unwrap();
        assert_eq!(kg.object_text(*v), "he said \"hi\"\n");
    }

    #[test]
    fn malformed_lines_report_line_numbers() {
        let cases = [
            "<http://x/a> <http://x/r> <http://x/b>",        // missing dot
            "http://x/a <http://x/r> <http://x/b> .",        // bare subject
            "<http://x/a> <http://x/r> \"unterminated .",    // open literal
            "<http://x/a> <http://x/r> <http://x/b> . junk", // trailing junk
        ];
        for case in cases {
            let input = format!("<http://x/a> <http://x/r> <http://x/b> .\n{case}\n");
            let err = load_kg(
                Cursor::new(input),
                KgFormat::NTriples,
                &LabelConfig::default(),
            )
            .unwrap_err();
            assert!(err.to_string().contains("line 2"), "{err}");
        }
    }

    #[test]
    fn writer_round_trips_through_parser() {
        let lines = [
            write_ntriples_line("http://x/a", "http://x/r", "http://x/b", true, None, None),
            write_ntriples_line("http://x/a", "http://x/q", "tab\there \"q\"", false, None, None),
            write_ntriples_line(
                "http://x/a",
                "http://x/y",
                "1970",
                false,
                Some("http://www.w3.org/2001/XMLSchema#gYear"),
                None,
            ),
        ];
        let text = lines.join("\n");
        let kg = parse(&text);
        assert_eq!(kg.fact_count(), 3);
        let a = kg.entity_id("http://x/a").unwrap();
        let texts: Vec<&str> = kg
            .links(a)
            .iter()
            .map(|(_, v)| kg.object_text(*v))
            .collect();
        assert!(texts.contains(&"tab\there \"q\""));
    }
}
