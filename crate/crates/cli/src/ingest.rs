//! File ingestion shared by the scoring subcommands: line files, combined
//! datasets, and triple assembly with the standard filtering.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use csc_core::alignment::CscTriple;
use csc_core::dataset::{ingest, parse_dataset, DatasetRecord, Ingested};
use csc_core::text::nfc;

/// Read a plain text file as NFC-normalized lines. Empty lines are kept:
/// each line is a sentence slot.
pub fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    Ok(text.lines().map(nfc).collect())
}

pub struct LoadedRecords {
    pub ingested: Ingested,
}

/// Assemble records from either a combined dataset file or separate
/// line-aligned files, attach an optional hypothesis file, normalize,
/// and filter.
pub fn load_records(
    data: Option<&PathBuf>,
    source: Option<&PathBuf>,
    reference: Option<&PathBuf>,
    hypothesis: Option<&PathBuf>,
) -> Result<LoadedRecords> {
    let mut records: Vec<DatasetRecord> = match (data, source) {
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            parse_dataset(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        (None, Some(src_path)) => {
            let sources = read_lines(src_path)?;
            let references = reference.map(|p| read_lines(p)).transpose()?;
            if let Some(refs) = &references {
                if refs.len() != sources.len() {
                    bail!(
                        "{} has {} lines but the source file has {}",
                        reference.unwrap().display(),
                        refs.len(),
                        sources.len()
                    );
                }
            }
            sources
                .into_iter()
                .enumerate()
                .map(|(i, source)| DatasetRecord {
                    source,
                    reference: references.as_ref().map(|r| r[i].clone()),
                    hypothesis: None,
                })
                .collect()
        }
        (Some(_), Some(_)) => bail!("--data and --source are mutually exclusive"),
        (None, None) => bail!("either --data or --source is required"),
    };

    if let Some(hyp_path) = hypothesis {
        let hyps = read_lines(hyp_path)?;
        if hyps.len() != records.len() {
            bail!(
                "{} has {} lines but the dataset has {} records",
                hyp_path.display(),
                hyps.len(),
                records.len()
            );
        }
        for (record, hyp) in records.iter_mut().zip(hyps) {
            record.hypothesis = Some(hyp);
        }
    }

    Ok(LoadedRecords { ingested: ingest(records) })
}

/// Build scoring triples; every record must carry a reference, and a
/// hypothesis unless `reference_as_hypothesis` substitutes the reference.
pub fn triples(
    ingested: &Ingested,
    reference_as_hypothesis: bool,
) -> Result<Vec<CscTriple>> {
    ingested
        .records
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let reference = r
                .reference
                .as_deref()
                .with_context(|| format!("record {} has no reference column", i + 1))?;
            let hypothesis = if reference_as_hypothesis {
                reference
            } else {
                r.hypothesis
                    .as_deref()
                    .with_context(|| format!("record {} has no hypothesis", i + 1))?
            };
            CscTriple::new(&r.source, reference, hypothesis)
                .with_context(|| format!("record {}", i + 1))
        })
        .collect()
}

pub fn log_skips(ingested: &Ingested) {
    if ingested.skipped() > 0 {
        eprintln!(
            "skipped {} records ({} length mismatches, {} over the length cap)",
            ingested.skipped(),
            ingested.skipped_length_mismatch,
            ingested.skipped_too_long
        );
    }
}
