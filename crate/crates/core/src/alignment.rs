//! Character-level edit alignment, equal-length repair of hypotheses, and
//! diagnosis of token/character misalignment between sentence pairs.

use std::collections::HashSet;
use std::ops::Range;

use serde::Serialize;

use crate::bpe::BpeModel;
use crate::error::{Error, Result};
use crate::text::nfc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum EditKind {
    Equal,
    Substitute,
    Insert,
    Delete,
}

/// One run of the edit script. Ranges index characters; `source` ranges
/// tile the source, `target` ranges tile the target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EditOp {
    pub kind: EditKind,
    pub source: Range<usize>,
    pub target: Range<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EditScript {
    pub ops: Vec<EditOp>,
}

impl EditScript {
    /// Unit-cost edit distance of the script.
    pub fn cost(&self) -> usize {
        self.ops
            .iter()
            .map(|op| match op.kind {
                EditKind::Equal => 0,
                EditKind::Substitute => op.source.len(),
                EditKind::Insert => op.target.len(),
                EditKind::Delete => op.source.len(),
            })
            .sum()
    }
}

/// Minimal Levenshtein script over characters with unit costs. Backtrace
/// ties are broken by preferring equal, then substitute, then delete,
/// then insert, so the script is deterministic.
pub fn char_edit_script(a: &str, b: &str) -> EditScript {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    let (n, m) = (a.len(), b.len());
    let width = m + 1;
    let mut d = vec![0u32; (n + 1) * width];
    for j in 0..=m {
        d[j] = j as u32;
    }
    for i in 1..=n {
        d[i * width] = i as u32;
        for j in 1..=m {
            let sub = d[(i - 1) * width + j - 1] + u32::from(a[i - 1] != b[j - 1]);
            let del = d[(i - 1) * width + j] + 1;
            let ins = d[i * width + j - 1] + 1;
            d[i * width + j] = sub.min(del).min(ins);
        }
    }

    // single-character steps, collected backwards
    let mut steps: Vec<EditKind> = Vec::new();
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        let here = d[i * width + j];
        if i > 0 && j > 0 && a[i - 1] == b[j - 1] && d[(i - 1) * width + j - 1] == here {
            steps.push(EditKind::Equal);
            i -= 1;
            j -= 1;
        } else if i > 0 && j > 0 && d[(i - 1) * width + j - 1] + 1 == here {
            steps.push(EditKind::Substitute);
            i -= 1;
            j -= 1;
        } else if i > 0 && d[(i - 1) * width + j] + 1 == here {
            steps.push(EditKind::Delete);
            i -= 1;
        } else {
            steps.push(EditKind::Insert);
            j -= 1;
        }
    }
    steps.reverse();

    // coalesce adjacent steps of the same kind into ranged runs
    let mut ops: Vec<EditOp> = Vec::new();
    let (mut si, mut ti) = (0usize, 0usize);
    for kind in steps {
        let (ds, dt) = match kind {
            EditKind::Equal | EditKind::Substitute => (1, 1),
            EditKind::Delete => (1, 0),
            EditKind::Insert => (0, 1),
        };
        match ops.last_mut() {
            Some(last) if last.kind == kind => {
                last.source.end += ds;
                last.target.end += dt;
            }
            _ => ops.push(EditOp {
                kind,
                source: si..si + ds,
                target: ti..ti + dt,
            }),
        }
        si += ds;
        ti += dt;
    }
    EditScript { ops }
}

/// Cancel the non-equal-length operations of a hypothesis: inserted
/// characters are dropped and deleted source characters are restored, so
/// the result always has the source's length. Substitutions and equal
/// runs are kept.
pub fn repair_equal_length(source: &str, hypothesis: &str) -> String {
    let src: Vec<char> = source.chars().collect();
    let hyp: Vec<char> = hypothesis.chars().collect();
    let script = char_edit_script(source, hypothesis);
    let mut out = String::with_capacity(source.len());
    for op in &script.ops {
        match op.kind {
            EditKind::Equal | EditKind::Substitute => {
                out.extend(&hyp[op.target.clone()]);
            }
            EditKind::Delete => out.extend(&src[op.source.clone()]),
            EditKind::Insert => {}
        }
    }
    out
}

/// A source/reference/hypothesis sentence triple. All three are
/// NFC-normalized on construction; a reference whose character count
/// differs from the source is rejected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CscTriple {
    source: Vec<char>,
    reference: Vec<char>,
    hypothesis: Vec<char>,
}

impl CscTriple {
    pub fn new(source: &str, reference: &str, hypothesis: &str) -> Result<Self> {
        let source: Vec<char> = nfc(source).chars().collect();
        let reference: Vec<char> = nfc(reference).chars().collect();
        let hypothesis: Vec<char> = nfc(hypothesis).chars().collect();
        if reference.len() != source.len() {
            return Err(Error::LengthMismatch {
                expected: source.len(),
                actual: reference.len(),
            });
        }
        Ok(CscTriple { source, reference, hypothesis })
    }

    pub fn n(&self) -> usize {
        self.source.len()
    }

    pub fn source(&self) -> &[char] {
        &self.source
    }

    pub fn reference(&self) -> &[char] {
        &self.reference
    }

    pub fn hypothesis(&self) -> &[char] {
        &self.hypothesis
    }

    pub fn source_string(&self) -> String {
        self.source.iter().collect()
    }

    pub fn hypothesis_string(&self) -> String {
        self.hypothesis.iter().collect()
    }

    pub fn hypothesis_is_equal_length(&self) -> bool {
        self.hypothesis.len() == self.source.len()
    }

    /// The same triple with the hypothesis repaired to source length.
    pub fn repaired(&self) -> CscTriple {
        let src: String = self.source.iter().collect();
        let hyp: String = self.hypothesis.iter().collect();
        CscTriple {
            source: self.source.clone(),
            reference: self.reference.clone(),
            hypothesis: repair_equal_length(&src, &hyp).chars().collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Token counts match and every reference token covers the same
    /// character range as some source token.
    Aligned,
    /// Token counts differ between source and reference.
    MultiToOne,
    /// Token counts match but at least one boundary shifted.
    ShiftedBoundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AlignmentDiagnosis {
    pub token_count_equal: bool,
    pub char_aligned: bool,
    pub scenario: Scenario,
}

/// Tokenize both sides of an equal-length pair and classify how their
/// token boundaries relate.
pub fn diagnose_tokenization(
    model: &BpeModel,
    source: &str,
    reference: &str,
) -> Result<AlignmentDiagnosis> {
    let n = source.chars().count();
    let m = reference.chars().count();
    if n != m {
        return Err(Error::LengthMismatch { expected: n, actual: m });
    }
    let src_spans = model.encode(source);
    let ref_spans = model.encode(reference);
    let token_count_equal = src_spans.len() == ref_spans.len();
    let src_ranges: HashSet<(usize, usize)> = src_spans
        .iter()
        .map(|s| (s.char_range.start, s.char_range.end))
        .collect();
    let char_aligned = token_count_equal
        && ref_spans
            .iter()
            .all(|s| src_ranges.contains(&(s.char_range.start, s.char_range.end)));
    let scenario = if !token_count_equal {
        Scenario::MultiToOne
    } else if !char_aligned {
        Scenario::ShiftedBoundary
    } else {
        Scenario::Aligned
    };
    Ok(AlignmentDiagnosis { token_count_equal, char_aligned, scenario })
}
