//! Dataset ingestion: TSV (`source TAB reference [TAB hypothesis]`) and
//! JSON-lines (`{"src": ..., "ref": ..., "hyp": ...}`) records, NFC
//! normalization, and the standard filtering rules.

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::text::nfc;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetRecord {
    pub source: String,
    pub reference: Option<String>,
    pub hypothesis: Option<String>,
}

#[derive(Debug, Deserialize)]
struct JsonRecord {
    src: String,
    #[serde(rename = "ref")]
    reference: Option<String>,
    hyp: Option<String>,
}

/// Parse a dataset document. A first non-blank line starting with `{`
/// selects the JSON-lines form; otherwise tab-separated columns. Blank
/// lines are skipped.
pub fn parse_dataset(text: &str) -> Result<Vec<DatasetRecord>> {
    let jsonl = text
        .lines()
        .find(|l| !l.trim().is_empty())
        .is_some_and(|l| l.trim_start().starts_with('{'));
    let mut records = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        if jsonl {
            let r: JsonRecord =
                serde_json::from_str(line).map_err(|e| Error::MalformedDataset {
                    line: lineno,
                    message: e.to_string(),
                })?;
            records.push(DatasetRecord {
                source: r.src,
                reference: r.reference,
                hypothesis: r.hyp,
            });
        } else {
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() > 3 {
                return Err(Error::MalformedDataset {
                    line: lineno,
                    message: format!("expected 1..=3 tab-separated columns, got {}", fields.len()),
                });
            }
            records.push(DatasetRecord {
                source: fields[0].to_string(),
                reference: fields.get(1).map(|s| s.to_string()),
                hypothesis: fields.get(2).map(|s| s.to_string()),
            });
        }
    }
    Ok(records)
}

/// Records after normalization and filtering, with skip counts.
#[derive(Debug, Default)]
pub struct Ingested {
    pub records: Vec<DatasetRecord>,
    pub skipped_length_mismatch: usize,
    pub skipped_too_long: usize,
}

impl Ingested {
    pub fn skipped(&self) -> usize {
        self.skipped_length_mismatch + self.skipped_too_long
    }
}

pub const MAX_SOURCE_CHARS: usize = 1000;

/// NFC-normalize every field and drop records whose reference length
/// differs from the source or whose source exceeds
/// [`MAX_SOURCE_CHARS`] characters.
pub fn ingest(records: Vec<DatasetRecord>) -> Ingested {
    let mut out = Ingested::default();
    for r in records {
        let source = nfc(&r.source);
        let reference = r.reference.map(|s| nfc(&s));
        let hypothesis = r.hypothesis.map(|s| nfc(&s));
        let n = source.chars().count();
        if n > MAX_SOURCE_CHARS {
            out.skipped_too_long += 1;
            continue;
        }
        if let Some(reference) = &reference {
            if reference.chars().count() != n {
                out.skipped_length_mismatch += 1;
                continue;
            }
        }
        out.records.push(DatasetRecord { source, reference, hypothesis });
    }
    out
}
