//! Tokenization and cell-value classification shared by the label index,
//! the interpreter, and the slot filler.
//!
//! Tokenization is Unicode-aware lowercasing followed by splitting on any
//! non-alphanumeric character, dropping empty tokens. No stemming, no
//! stop-words.

use std::collections::BTreeSet;

/// Split `text` into lowercase alphanumeric tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(|t| t.to_string())
        .collect()
}

/// Jaccard index of the token sets of two strings: |A ∩ B| / |A ∪ B|,
/// defined as 0 when the union is empty.
pub fn token_jaccard(a: &str, b: &str) -> f64 {
    let ta: BTreeSet<String> = tokenize(a).into_iter().collect();
    let tb: BTreeSet<String> = tokenize(b).into_iter().collect();
    let union = ta.union(&tb).count();
    if union == 0 {
        return 0.0;
    }
    let inter = ta.intersection(&tb).count();
    inter as f64 / union as f64
}

/// True if the two strings tokenize to the same token sequence.
///
/// This is the "exact match modulo normalization" used when checking whether
/// an extracted value matches an existing label.
pub fn tokens_equal(a: &str, b: &str) -> bool {
    tokenize(a) == tokenize(b)
}

const CURRENCY: &[char] = &['$', '€', '£', '¥', '₹', '₩', '¢', '₽'];

/// True if the cell content is a decimal number after stripping commas,
/// currency symbols, and surrounding whitespace.
///
/// Accepts an optional sign, digits with an optional fractional part (or a
/// bare fractional part), and an optional exponent. Rejects `NaN`/`inf`
/// spellings and anything with leftover non-numeric characters.
pub fn is_numeric(cell: &str) -> bool {
    let stripped: String = cell
        .trim()
        .chars()
        .filter(|c| *c != ',' && !CURRENCY.contains(c))
        .collect();
    let s = stripped.trim();
    if s.is_empty() {
        return false;
    }
    let bytes = s.as_bytes();
    let mut i = 0;
    if bytes[i] == b'+' || bytes[i] == b'-' {
        i += 1;
    }
    let int_digits = count_digits(bytes, &mut i);
    let mut frac_digits = 0;
    if i < bytes.len() && bytes[i] == b'.' {
        i += 1;
        frac_digits = count_digits(bytes, &mut i);
    }
    if int_digits == 0 && frac_digits == 0 {
        return false;
    }
    if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
        i += 1;
        if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
            i += 1;
        }
        if count_digits(bytes, &mut i) == 0 {
            return false;
        }
    }
    i == bytes.len()
}

fn count_digits(bytes: &[u8], i: &mut usize) -> usize {
    let start = *i;
    while *i < bytes.len() && bytes[*i].is_ascii_digit() {
        *i += 1;
    }
    *i - start
}

/// True if the cell looks like a calendar date: ISO-8601 (`YYYY-MM-DD`) or
/// `DD-MM-YYYY`, with `-`, `/`, or `.` as the separator.
pub fn is_date(cell: &str) -> bool {
    let s = cell.trim();
    for sep in ['-', '/', '.'] {
        let parts: Vec<&str> = s.split(sep).collect();
        if parts.len() != 3 || !parts.iter().all(|p| p.bytes().all(|b| b.is_ascii_digit())) {
            continue;
        }
        let lens: Vec<usize> = parts.iter().map(|p| p.len()).collect();
        let (y, m, d) = if lens[0] == 4 && lens[1] <= 2 && lens[2] <= 2 {
            (&parts[0], &parts[1], &parts[2])
        } else if lens[2] == 4 && lens[0] <= 2 && lens[1] <= 2 {
            (&parts[2], &parts[1], &parts[0])
        } else {
            continue;
        };
        let month: u32 = m.parse().unwrap_or(0);
        let day: u32 = d.parse().unwrap_or(0);
        if !y.is_empty() && (1..=12).contains(&month) && (1..=31).contains(&day) {
            return true;
        }
    }
    false
}

/// True if the cell holds a datatype value (number or date) that slot-filling
/// passes through as a literal instead of disambiguating to an entity.
pub fn is_datatype(cell: &str) -> bool {
    is_numeric(cell) || is_date(cell)
}
