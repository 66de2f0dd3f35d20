//! Delimited and JSON-lines readers for rule exports.

use std::io::Read;
use std::str::FromStr;

use serde_json::Value;

use super::record::{QuarantinedRule, RawRuleRecord, COLUMNS};
use super::IngestError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    Tsv,
    Csv,
    Jsonl,
}

impl FromStr for InputFormat {
    type Err = IngestError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "tsv" => Ok(InputFormat::Tsv),
            "csv" => Ok(InputFormat::Csv),
            "jsonl" | "ndjson" => Ok(InputFormat::Jsonl),
            other => Err(IngestError::UnknownFormat(other.to_string())),
        }
    }
}

/// Records in input order plus every row that could not become one.
#[derive(Debug, Default, Clone, PartialEq)]
pub struct LoadOutcome {
    pub records: Vec<RawRuleRecord>,
    pub quarantined: Vec<QuarantinedRule>,
}

pub fn load_records<R: Read>(mut source: R, format: InputFormat) -> Result<LoadOutcome, IngestError> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    let text = String::from_utf8(bytes)
        .map_err(|e| std::io::Error::new(std::io::ErrorKind::InvalidData, e))?;
    match format {
        InputFormat::Tsv => load_delimited(&text, b'\t'),
        InputFormat::Csv => load_delimited(&text, b','),
        InputFormat::Jsonl => Ok(load_jsonl(&text)),
    }
}

fn column_name(raw: &str) -> &str {
    match raw.trim() {
        "project_name" => "project",
        other => other,
    }
}

fn load_delimited(text: &str, delimiter: u8) -> Result<LoadOutcome, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .quoting(delimiter != b'\t')
        .flexible(true)
        .has_headers(true)
        .from_reader(text.as_bytes());

    let header = reader.headers().map_err(csv_io)?.clone();
    let names: Vec<&str> = header.iter().map(column_name).collect();
    if names.len() == 1 && names[0].is_empty() {
        return Err(IngestError::Schema("missing header row".to_string()));
    }
    let mut order = Vec::with_capacity(COLUMNS.len());
    for col in COLUMNS {
        match names.iter().position(|n| *n == col) {
            Some(i) => order.push(i),
            None => return Err(IngestError::Schema(format!("missing column {col:?}"))),
        }
    }
    if let Some(extra) = names.iter().find(|n| !COLUMNS.contains(n)) {
        return Err(IngestError::Schema(format!("unexpected column {extra:?}")));
    }

    let mut out = LoadOutcome::default();
    for row in reader.records() {
        let row = match row {
            Ok(row) => row,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line() as usize);
                out.quarantined
                    .push(QuarantinedRule::from_row(line, String::new(), e.to_string()));
                continue;
            }
        };
        let line = row.position().map_or(0, |p| p.line() as usize);
        let raw = row.iter().collect::<Vec<_>>().join(&(delimiter as char).to_string());
        if row.len() != names.len() {
            out.quarantined.push(QuarantinedRule::from_row(
                line,
                raw,
                format!("expected {} columns, found {}", names.len(), row.len()),
            ));
            continue;
        }
        let cells: Vec<&str> = order.iter().map(|&i| &row[i]).collect();
        match RawRuleRecord::from_cells(&cells) {
            Ok(rec) => out.records.push(rec),
            Err(reason) => out.quarantined.push(QuarantinedRule::from_row(line, raw, reason)),
        }
    }
    Ok(out)
}

fn csv_io(e: csv::Error) -> IngestError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => IngestError::Io(io),
        other => IngestError::Schema(format!("{other:?}")),
    }
}

fn load_jsonl(text: &str) -> LoadOutcome {
    let mut out = LoadOutcome::default();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        match jsonl_record(line) {
            Ok(rec) => out.records.push(rec),
            Err(reason) => out
                .quarantined
                .push(QuarantinedRule::from_row(line_no, line, reason)),
        }
    }
    out
}

fn jsonl_record(line: &str) -> Result<RawRuleRecord, String> {
    let value: Value = serde_json::from_str(line).map_err(|e| format!("invalid JSON: {e}"))?;
    let obj = value.as_object().ok_or("line is not a JSON object")?;
    let mut cells = Vec::with_capacity(COLUMNS.len());
    for col in COLUMNS {
        let v = obj
            .get(col)
            .or_else(|| if col == "project" { obj.get("project_name") } else { None })
            .ok_or_else(|| format!("missing key {col:?}"))?;
        let cell = match v {
            Value::String(s) => s.clone(),
            Value::Number(n) => n.to_string(),
            Value::Null => String::new(),
            other => return Err(format!("key {col:?} has non-scalar value {other}")),
        };
        cells.push(cell);
    }
    let refs: Vec<&str> = cells.iter().map(String::as_str).collect();
    RawRuleRecord::from_cells(&refs)
}
