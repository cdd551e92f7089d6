//! Square file formats.
//!
//! Text: the first line is `<order> <symbol_base>`, followed by `order` lines
//! of `order` space-separated symbols. Blank lines and lines starting with `#`
//! are ignored. The canonical form (what [`serialize_square`] writes) ends
//! every line with `\n`.
//!
//! JSON: `{"order": n, "symbol_base": b, "rows": [[...], ...], "metadata": {...}}`
//! with optional metadata.
//!
//! Symbols on disk are `symbol_index + symbol_base`; parsed squares are
//! always 0-based.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::latin::{validate_latin, LatinSquare};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Txt,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ParseMode {
    /// A Latin violation is an error.
    #[default]
    Strict,
    /// A Latin violation only clears [`ParsedSquare::latin`].
    Lenient,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SquareMetadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<String>,
    /// Special positions as `(row, column)` pairs.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub special: Vec<(usize, usize)>,
}

impl SquareMetadata {
    fn is_empty(&self) -> bool {
        self == &Self::default()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SquareFile {
    pub order: usize,
    pub symbol_base: u32,
    pub rows: Vec<Vec<i64>>,
    #[serde(default, skip_serializing_if = "SquareMetadata::is_empty")]
    pub metadata: SquareMetadata,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedSquare {
    pub square: LatinSquare,
    pub symbol_base: u32,
    pub metadata: SquareMetadata,
    pub latin: bool,
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

/// Parses either encoding (JSON when the first non-blank byte is `{`) and
/// requires a Latin square.
pub fn parse_square(text: &str) -> Result<LatinSquare> {
    Ok(parse_square_with(text, ParseMode::Strict)?.square)
}

pub fn parse_square_with(text: &str, mode: ParseMode) -> Result<ParsedSquare> {
    let file = if text.trim_start().starts_with('{') { parse_json(text)? } else { parse_text(text)? };
    let (file_rows, base) = (&file.rows, file.symbol_base);
    let n = file.order;
    let mut cells = Vec::with_capacity(n * n);
    for (r, row) in file_rows.iter().enumerate() {
        for (c, &v) in row.iter().enumerate() {
            let shifted = v - base as i64;
            if shifted < 0 || shifted > u32::MAX as i64 {
                return Err(parse_err(r + 2, format!("symbol {v} at column {} is below the symbol base {base}", c + 1)));
            }
            cells.push(shifted as u32);
        }
    }
    let square = LatinSquare::new(n, cells, 0)?;
    let report = validate_latin(&square);
    if !report.valid && mode == ParseMode::Strict {
        let v = report.violations[0];
        return Err(parse_err(
            v.row + 2,
            format!("not a Latin square: {:?} at row {}, column {} (symbol {})", v.kind, v.row + 1, v.column + 1, v.symbol as i64 + base as i64),
        ));
    }
    Ok(ParsedSquare { square, symbol_base: base, metadata: file.metadata, latin: report.valid })
}

fn parse_text(text: &str) -> Result<SquareFile> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (hline, header) = lines.next().ok_or_else(|| parse_err(1, "missing header"))?;
    let head: Vec<&str> = header.split_whitespace().collect();
    let [order, base] = head.as_slice() else {
        return Err(parse_err(hline, "header must be `<order> <symbol_base>`"));
    };
    let order: usize = order.parse().map_err(|_| parse_err(hline, format!("bad order `{order}`")))?;
    let symbol_base: u32 = base.parse().map_err(|_| parse_err(hline, format!("bad symbol base `{base}`")))?;
    if order == 0 {
        return Err(parse_err(hline, "order must be positive"));
    }
    if symbol_base > 1 {
        return Err(parse_err(hline, "symbol base must be 0 or 1"));
    }
    let mut rows = Vec::with_capacity(order);
    for (lineno, line) in lines {
        if rows.len() == order {
            return Err(parse_err(lineno, format!("more than {order} rows")));
        }
        let row = line
            .split_whitespace()
            .map(|tok| tok.parse::<i64>().map_err(|_| parse_err(lineno, format!("non-integer cell `{tok}`"))))
            .collect::<Result<Vec<_>>>()?;
        if row.len() != order {
            return Err(parse_err(lineno, format!("row has {} cells, expected {order}", row.len())));
        }
        rows.push(row);
    }
    if rows.len() != order {
        return Err(parse_err(text.lines().count().max(1), format!("expected {order} rows, found {}", rows.len())));
    }
    Ok(SquareFile { order, symbol_base, rows, metadata: SquareMetadata::default() })
}

fn parse_json(text: &str) -> Result<SquareFile> {
    let file: SquareFile = serde_json::from_str(text).map_err(|e| parse_err(e.line(), e.to_string()))?;
    if file.order == 0 {
        return Err(parse_err(1, "order must be positive"));
    }
    if file.symbol_base > 1 {
        return Err(parse_err(1, "symbol base must be 0 or 1"));
    }
    if file.rows.len() != file.order {
        return Err(parse_err(1, format!("expected {} rows, found {}", file.order, file.rows.len())));
    }
    if let Some((r, row)) = file.rows.iter().enumerate().find(|(_, row)| row.len() != file.order) {
        return Err(parse_err(1, format!("row {} has {} cells, expected {}", r + 1, row.len(), file.order)));
    }
    Ok(file)
}

pub fn to_square_file(square: &LatinSquare, symbol_base: u32, metadata: SquareMetadata) -> SquareFile {
    let n = square.order();
    SquareFile {
        order: n,
        symbol_base,
        rows: (0..n).map(|r| (0..n).map(|c| square.symbol_index(r, c) as i64 + symbol_base as i64).collect()).collect(),
        metadata,
    }
}

/// Canonical text encoding with 0-based symbols.
pub fn serialize_square(square: &LatinSquare) -> String {
    serialize_square_as(square, Format::Txt, 0, &SquareMetadata::default())
}

pub fn serialize_square_as(square: &LatinSquare, format: Format, symbol_base: u32, metadata: &SquareMetadata) -> String {
    let file = to_square_file(square, symbol_base, metadata.clone());
    match format {
        Format::Txt => {
            let mut out = format!("{} {}\n", file.order, file.symbol_base);
            for row in &file.rows {
                let line: Vec<String> = row.iter().map(i64::to_string).collect();
                out.push_str(&line.join(" "));
                out.push('\n');
            }
            out
        }
        Format::Json => {
            let mut out = serde_json::to_string(&file).expect("square files serialize");
            out.push('\n');
            out
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::latin::cyclic_square;

    #[test]
    fn parses_cyclic_three() {
        let sq = parse_square("3 0\n0 1 2\n1 2 0\n2 0 1").unwrap();
        assert_eq!(sq, cyclic_square(3).unwrap());
    }

    #[test]
    fn canonical_text_round_trip() {
        let t = "3 0\n0 1 2\n1 2 0\n2 0 1\n";
        assert_eq!(serialize_square(&parse_square(t).unwrap()), t);
        let one_based = "3 1\n1 2 3\n2 3 1\n3 1 2\n";
        let sq = parse_square(one_based).unwrap();
        assert_eq!(sq, cyclic_square(3).unwrap());
        assert_eq!(serialize_square_as(&sq, Format::Txt, 1, &SquareMetadata::default()), one_based);
    }

    #[test]
    fn json_round_trip_with_metadata() {
        let meta = SquareMetadata { seed: Some(4), generator: Some("cyclic".into()), special: vec![(0, 1), (2, 2)] };
        let text = serialize_square_as(&cyclic_square(4).unwrap(), Format::Json, 1, &meta);
        let parsed = parse_square_with(&text, ParseMode::Strict).unwrap();
        assert_eq!(parsed.square, cyclic_square(4).unwrap());
        assert_eq!(parsed.metadata, meta);
        assert_eq!(parsed.symbol_base, 1);
        assert_eq!(serialize_square_as(&parsed.square, Format::Json, 1, &parsed.metadata), text);
    }

    #[test]
    fn error_lines() {
        let e = parse_square("3 0\n0 1 2\n1 2\n2 0 1").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }), "{e:?}");
        let e = parse_square("3 0\n0 1 2\n1 x 0\n2 0 1").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 3, .. }));
        let e = parse_square("three 0\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 1, .. }));
        let e = parse_square("2 0\n0 1\n").unwrap_err();
        assert!(matches!(e, Error::Parse { .. }));
        let e = parse_square("2 0\n0 1\n1 0\n1 0\n").unwrap_err();
        assert!(matches!(e, Error::Parse { line: 4, .. }));
    }

    #[test]
    fn latin_violation_strict_vs_lenient() {
        let text = "3 0\n0 1 2\n0 2 1\n2 0 1\n";
        assert!(matches!(parse_square(text), Err(Error::Parse { .. })));
        let parsed = parse_square_with(text, ParseMode::Lenient).unwrap();
        assert!(!parsed.latin);
    }
}
