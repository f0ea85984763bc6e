//! Table ingestion, key-column detection, and cell access.

use std::collections::BTreeSet;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::text::is_numeric;

/// A parsed table: header plus an n × m grid of trimmed cell strings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Table {
    pub id: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub key_column: Option<usize>,
}

impl Table {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.header.len()
    }

    /// Attribute columns: everything except the key column.
    pub fn attribute_columns(&self) -> Vec<usize> {
        (0..self.n_cols()).filter(|c| Some(*c) != self.key_column).collect()
    }
}

/// Input serialization of a table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableFormat {
    Csv,
    Json,
}

#[derive(Deserialize)]
struct JsonTable {
    #[serde(default)]
    id: Option<String>,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

/// Parse a table from bytes. CSV uses the first record as header; JSON
/// expects `{"id", "header", "rows"}` with `id` optional. `fallback_id`
/// (normally the file name) is used when the source carries no id.
pub fn parse_table(read: impl Read, format: TableFormat, fallback_id: &str) -> Result<Table> {
    let (id, header, rows) = match format {
        TableFormat::Csv => {
            let mut rdr = csv::ReaderBuilder::new()
                .has_headers(false)
                .flexible(true)
                .from_reader(read);
            let mut records = rdr.records();
            let Some(first) = records.next() else {
                return Err(Error::parse(1, "empty table: no header row"));
            };
            let header: Vec<String> =
                first.map_err(to_parse_error)?.iter().map(str::to_string).collect();
            let mut rows = Vec::new();
            for record in records {
                let record = record.map_err(to_parse_error)?;
                rows.push(record.iter().map(str::to_string).collect());
            }
            (fallback_id.to_string(), header, rows)
        }
        TableFormat::Json => {
            let parsed: JsonTable = serde_json::from_reader(read)?;
            (
                parsed.id.unwrap_or_else(|| fallback_id.to_string()),
                parsed.header,
                parsed.rows,
            )
        }
    };
    normalize(id, header, rows)
}

fn to_parse_error(e: csv::Error) -> Error {
    let line = match e.position() {
        Some(pos) => pos.line() as usize,
        None => 0,
    };
    Error::parse(line, e.to_string())
}

/// Parse from a path, inferring the format from the extension and the id
/// from the file stem.
pub fn parse_table_path(path: &Path) -> Result<Table> {
    let format = match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => TableFormat::Csv,
        Some("json") => TableFormat::Json,
        other => {
            return Err(Error::Config(format!(
                "unsupported table extension {other:?} for {}",
                path.display()
            )));
        }
    };
    let id = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("table")
        .to_string();
    let file = std::fs::File::open(path)
        .map_err(|e| Error::Config(format!("cannot open table {}: {e}", path.display())))?;
    parse_table(std::io::BufReader::new(file), format, &id)
}

/// Trim cells, pad short rows with empty cells, truncate long ones.
fn normalize(id: String, header: Vec<String>, rows: Vec<Vec<String>>) -> Result<Table> {
    if header.is_empty() {
        return Err(Error::parse(1, "table has zero columns"));
    }
    let m = header.len();
    let header = header.into_iter().map(|h| h.trim().to_string()).collect();
    let rows = rows
        .into_iter()
        .map(|mut row| {
            row.truncate(m);
            row.resize(m, String::new());
            row.into_iter().map(|c| c.trim().to_string()).collect()
        })
        .collect();
    Ok(Table {
        id,
        header,
        rows,
        key_column: None,
    })
}

/// The key column: among columns where at least half of the non-empty
/// cells are non-numeric, the one with the most distinct non-numeric
/// values, ties to the leftmost. None when no column qualifies.
pub fn detect_key_column(table: &Table) -> Option<usize> {
    let mut best: Option<(usize, usize)> = None; // (distinct count, column)
    for c in 0..table.n_cols() {
        let cells: Vec<&str> = table
            .rows
            .iter()
            .map(|row| row[c].as_str())
            .filter(|s| !s.is_empty())
            .collect();
        if cells.is_empty() {
            continue;
        }
        let non_numeric: Vec<&str> = cells.iter().copied().filter(|s| !is_numeric(s)).collect();
        if non_numeric.len() * 2 < cells.len() {
            continue;
        }
        let distinct = non_numeric.iter().collect::<BTreeSet<_>>().len();
        if distinct == 0 {
            continue;
        }
        let better = match best {
            Some((best_count, _)) => distinct > best_count,
            None => true,
        };
        if better {
            best = Some((distinct, c));
        }
    }
    best.map(|(_, c)| c)
}

/// Cell(c,ρ): the trimmed cell string plus its sub-values when split on
/// `|`, `;`, or newline. The whole string always comes first; duplicates
/// and empty pieces are dropped. An empty cell yields the empty set.
pub fn cell_values(table: &Table, c: usize, row: usize) -> Result<Vec<String>> {
    let cell = table
        .rows
        .get(row)
        .and_then(|r| r.get(c))
        .ok_or_else(|| {
            Error::Contract(format!(
                "cell ({row},{c}) out of range for table {} ({}x{})",
                table.id,
                table.n_rows(),
                table.n_cols()
            ))
        })?;
    if cell.is_empty() {
        return Ok(Vec::new());
    }
    let mut values = vec![cell.clone()];
    for piece in cell.split(['|', ';', '\n']) {
        let piece = piece.trim();
        if !piece.is_empty() && !values.iter().any(|v| v == piece) {
            values.push(piece.to_string());
        }
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn t1() -> Table {
        let csv = "title,year,director\nMASH,1970,Robert Altman\nThe Producers,1968,Mel Brooks\n";
        parse_table(csv.as_bytes(), TableFormat::Csv, "t1").unwrap()
    }

    #[test]
    fn csv_parse_shapes() {
        let table = t1();
        assert_eq!(table.id, "t1");
        assert_eq!(table.n_rows(), 2);
        assert_eq!(table.n_cols(), 3);
        assert_eq!(table.rows[0][2], "Robert Altman");
    }

    #[test]
    fn json_parse_and_empty_rows() {
        let json = r#"{"id":"j1","header":["a","b"],"rows":[]}"#;
        let table = parse_table(json.as_bytes(), TableFormat::Json, "fallback").unwrap();
        assert_eq!(table.id, "j1");
        assert_eq!(table.n_rows(), 0);

        let json = r#"{"header":["a"],"rows":[["x"]]}"#;
        let table = parse_table(json.as_bytes(), TableFormat::Json, "fallback").unwrap();
        assert_eq!(table.id, "fallback");
    }

    #[test]
    fn ragged_rows_padded_and_truncated() {
        let csv = "a,b,c\n1,2\n1,2,3,4\n";
        let table = parse_table(csv.as_bytes(), TableFormat::Csv, "t").unwrap();
        assert_eq!(table.rows[0], vec!["1", "2", ""]);
        assert_eq!(table.rows[1], vec!["1", "2", "3"]);
    }

    #[test]
    fn quoted_csv_cells_keep_delimiters() {
        let csv = "name,note\n\"Brooks, Mel\",\"line1\nline2\"\n";
        let table = parse_table(csv.as_bytes(), TableFormat::Csv, "t").unwrap();
        assert_eq!(table.rows[0][0], "Brooks, Mel");
        assert_eq!(table.rows[0][1], "line1\nline2");
    }

    #[test]
    fn zero_columns_rejected() {
        let err = parse_table("".as_bytes(), TableFormat::Csv, "t").unwrap_err();
        assert!(err.to_string().contains("header"), "{err}");
        let json = r#"{"header":[],"rows":[]}"#;
        assert!(parse_table(json.as_bytes(), TableFormat::Json, "t").is_err());
    }

    #[test]
    fn key_column_of_t1_is_title() {
        // title and director tie at 2 distinct non-numeric values; year is
        // numeric; leftmost wins
        assert_eq!(detect_key_column(&t1()), Some(0));
    }

    #[test]
    fn all_numeric_table_has_no_key() {
        let csv = "a,b\n1,2\n3.5,4e2\n";
        let table = parse_table(csv.as_bytes(), TableFormat::Csv, "t").unwrap();
        assert_eq!(detect_key_column(&table), None);
    }

    #[test]
    fn single_text_column_is_key() {
        let csv = "a,b\nx,1\ny,2\n";
        let table = parse_table(csv.as_bytes(), TableFormat::Csv, "t").unwrap();
        assert_eq!(detect_key_column(&table), Some(0));
    }

    #[test]
    fn mostly_numeric_column_disqualified() {
        // column 0: 3 non-empty cells, 1 non-numeric (33% < 50%)
        let csv = "a,b\n1,x\n2,y\nz,y\n";
        let table = parse_table(csv.as_bytes(), TableFormat::Csv, "t").unwrap();
        assert_eq!(detect_key_column(&table), Some(1));
    }

    #[test]
    fn cell_values_splitting() {
        let mut table = t1();
        table.rows[0][2] = "a|b; a".to_string();
        assert_eq!(cell_values(&table, 2, 0).unwrap(), vec!["a|b; a", "a", "b"]);
        assert_eq!(cell_values(&table, 2, 1).unwrap(), vec!["Mel Brooks"]);
        table.rows[0][1] = String::new();
        assert!(cell_values(&table, 1, 0).unwrap().is_empty());
        assert!(cell_values(&table, 9, 0).is_err());
    }

    proptest! {
        #[test]
        fn key_detection_is_permutation_covariant(
            (m, rows) in (3usize..6).prop_flat_map(|m| (
                Just(m),
                proptest::collection::vec(
                    proptest::collection::vec("[a-c0-9]{0,3}", m),
                    1..8,
                ),
            )),
            rot in 0usize..5,
        ) {
            let table = Table {
                id: "p".into(),
                header: (0..m).map(|i| format!("c{i}")).collect(),
                rows,
                key_column: None,
            };
            let rot = rot % m;
            let rotate = |row: &Vec<String>| -> Vec<String> {
                (0..m).map(|j| row[(j + rot) % m].clone()).collect()
            };
            let rotated = Table {
                id: "p".into(),
                header: rotate(&table.header),
                rows: table.rows.iter().map(rotate).collect(),
                key_column: None,
            };
            // rotation by `rot` maps original column c to position
            // (c - rot) mod m; ties may resolve to a different member of
            // the tied set, so compare the qualifying score, not the index
            let score = |t: &Table, c: usize| {
                let cells: Vec<&str> = t.rows.iter().map(|r| r[c].as_str())
                    .filter(|s| !s.is_empty()).collect();
                let nn: Vec<&str> = cells.iter().copied()
                    .filter(|s| !is_numeric(s)).collect();
                if cells.is_empty() || nn.len() * 2 < cells.len() {
                    return None;
                }
                let distinct = nn.iter().collect::<std::collections::BTreeSet<_>>().len();
                (distinct > 0).then_some(distinct)
            };
            match (detect_key_column(&table), detect_key_column(&rotated)) {
                (None, None) => {}
                (Some(a), Some(b)) => prop_assert_eq!(score(&table, a), score(&rotated, b)),
                (a, b) => prop_assert!(false, "covariance broken: {:?} vs {:?}", a, b),
            }
        }
    }
}
