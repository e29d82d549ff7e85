//! Derive a character-level tokenizer from a mixed character-word BPE
//! model: drop multi-character Chinese tokens and the merge rules that
//! produce or consume them, then renumber ids so embedding rows can be
//! selected densely.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use serde::Serialize;

use crate::bpe::{BpeModel, Pretokenizer, TokenId, TokenSpan};
use crate::error::{Error, Result};

/// Inclusive codepoint interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CodepointRange {
    pub start: u32,
    pub end: u32,
}

impl CodepointRange {
    pub fn contains(&self, c: char) -> bool {
        let v = c as u32;
        self.start <= v && v <= self.end
    }
}

/// Which tokens count as removable Chinese words.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SurgeryMode {
    /// Remove tokens that decode to two or more characters consisting
    /// entirely of Chinese characters.
    Literal,
    /// Also remove tokens mixing Chinese with anything else, plus every
    /// merge whose product could straddle a character boundary next to
    /// Chinese text. Makes the one-token-per-character property hold on
    /// every corpus.
    #[default]
    Strict,
}

#[derive(Debug, Clone)]
pub struct SurgeryConfig {
    pub mode: SurgeryMode,
    /// Disjoint, ascending codepoint intervals classified as Chinese.
    pub chinese_ranges: Vec<CodepointRange>,
    /// Renumber retained ids to 0..n preserving old order (default). When
    /// off, retained tokens keep their old ids.
    pub compact_ids: bool,
}

impl Default for SurgeryConfig {
    fn default() -> Self {
        SurgeryConfig {
            mode: SurgeryMode::Strict,
            chinese_ranges: default_chinese_ranges(),
            compact_ids: true,
        }
    }
}

/// CJK Unified Ideographs plus Extension A.
pub fn default_chinese_ranges() -> Vec<CodepointRange> {
    vec![
        CodepointRange { start: 0x4e00, end: 0x9fff },
        CodepointRange { start: 0x3400, end: 0x4dbf },
    ]
}

impl SurgeryConfig {
    pub fn validate(&self) -> Result<()> {
        let mut prev_end: Option<u32> = None;
        let mut sorted: Vec<&CodepointRange> = self.chinese_ranges.iter().collect();
        sorted.sort_by_key(|r| r.start);
        for r in sorted {
            if r.start > r.end {
                return Err(Error::InvalidRanges(format!(
                    "range {:#x}-{:#x} is empty",
                    r.start, r.end
                )));
            }
            if char::from_u32(r.start).is_none() || char::from_u32(r.end).is_none() {
                return Err(Error::InvalidRanges(format!(
                    "range {:#x}-{:#x} covers non-scalar codepoints",
                    r.start, r.end
                )));
            }
            if let Some(end) = prev_end {
                if r.start <= end {
                    return Err(Error::InvalidRanges(format!(
                        "range starting at {:#x} overlaps the previous one",
                        r.start
                    )));
                }
            }
            prev_end = Some(r.end);
        }
        Ok(())
    }
}

/// True iff the codepoint falls inside the configured Chinese ranges.
pub fn is_chinese_char(c: char, config: &SurgeryConfig) -> bool {
    config.chinese_ranges.iter().any(|r| r.contains(c))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurgeryStats {
    pub old_size: usize,
    pub new_size: usize,
    pub ratio: f64,
    pub old_merges: usize,
    pub new_merges: usize,
}

/// Output of [`apply_surgery`]: the filtered vocabulary and merges, the
/// id renumbering, and what was removed.
#[derive(Debug, Clone)]
pub struct SurgeryResult {
    /// Retained tokens with their new ids.
    pub new_vocab: HashMap<Vec<u8>, TokenId>,
    /// Retained merges in original rank order.
    pub new_merges: Vec<(Vec<u8>, Vec<u8>)>,
    /// old id -> new id for every retained token.
    pub id_map: BTreeMap<TokenId, TokenId>,
    /// Removed tokens, ordered by old id.
    pub removed_words: Vec<Vec<u8>>,
    /// Removed merges in original rank order.
    pub removed_merges: Vec<(Vec<u8>, Vec<u8>)>,
    pub stats: SurgeryStats,
    pub mode: SurgeryMode,
}

impl SurgeryResult {
    /// Build a model over the filtered vocabulary and merges.
    pub fn into_model(&self, pretokenizer: Pretokenizer) -> Result<BpeModel> {
        BpeModel::new(self.new_vocab.clone(), self.new_merges.clone(), pretokenizer)
    }
}

fn decoded_char_count(s: &str) -> usize {
    s.chars().count()
}

fn word_is_removable(decoded: &str, config: &SurgeryConfig) -> bool {
    if decoded_char_count(decoded) <= 1 {
        return false;
    }
    match config.mode {
        SurgeryMode::Literal => decoded.chars().all(|c| is_chinese_char(c, config)),
        SurgeryMode::Strict => decoded.chars().any(|c| is_chinese_char(c, config)),
    }
}

fn product_mixes_chinese(decoded: &str, config: &SurgeryConfig) -> bool {
    decoded_char_count(decoded) > 1
        && decoded.chars().any(|c| is_chinese_char(c, config))
        && decoded.chars().any(|c| !is_chinese_char(c, config))
}

/// Remove multi-character Chinese words from the vocabulary and every
/// merge rule that consumes or produces one; in strict mode also remove
/// merges that could fuse bytes across a character boundary adjacent to
/// Chinese text.
pub fn apply_surgery(model: &BpeModel, config: &SurgeryConfig) -> Result<SurgeryResult> {
    config.validate()?;

    let mut entries: Vec<(&[u8], TokenId)> = model.vocab().collect();
    entries.sort_by_key(|&(_, id)| id);

    let mut removed_words: Vec<Vec<u8>> = Vec::new();
    let mut removed_strings: HashSet<String> = HashSet::new();
    let mut retained: Vec<(&[u8], TokenId)> = Vec::new();
    for (bytes, id) in entries {
        let decoded = String::from_utf8_lossy(bytes);
        if word_is_removable(&decoded, config) {
            removed_words.push(bytes.to_vec());
            removed_strings.insert(decoded.into_owned());
        } else {
            retained.push((bytes, id));
        }
    }

    let mut new_merges = Vec::new();
    let mut removed_merges = Vec::new();
    for (left, right) in model.merges() {
        let mut product = left.clone();
        product.extend_from_slice(right);
        let left_s = String::from_utf8_lossy(left);
        let right_s = String::from_utf8_lossy(right);
        let product_s = String::from_utf8_lossy(&product);
        let mut remove = removed_strings.contains(left_s.as_ref())
            || removed_strings.contains(right_s.as_ref())
            || removed_strings.contains(product_s.as_ref());
        if !remove && config.mode == SurgeryMode::Strict {
            remove = product_mixes_chinese(&product_s, config)
                || product_can_cross_chinese_boundary(&product, config);
        }
        if remove {
            removed_merges.push((left.clone(), right.clone()));
        } else {
            new_merges.push((left.clone(), right.clone()));
        }
    }

    let mut id_map = BTreeMap::new();
    let mut new_vocab = HashMap::with_capacity(retained.len());
    for (index, (bytes, old_id)) in retained.iter().enumerate() {
        let new_id = if config.compact_ids { index as TokenId } else { *old_id };
        id_map.insert(*old_id, new_id);
        new_vocab.insert(bytes.to_vec(), new_id);
    }

    let stats = SurgeryStats {
        old_size: model.vocab_size(),
        new_size: new_vocab.len(),
        ratio: new_vocab.len() as f64 / model.vocab_size() as f64,
        old_merges: model.merge_count(),
        new_merges: new_merges.len(),
    };

    Ok(SurgeryResult {
        new_vocab,
        new_merges,
        id_map,
        removed_words,
        removed_merges,
        stats,
        mode: config.mode,
    })
}

fn is_continuation(b: u8) -> bool {
    b & 0xc0 == 0x80
}

fn utf8_len(lead: u8) -> Option<usize> {
    match lead {
        0x00..=0x7f => Some(1),
        0xc2..=0xdf => Some(2),
        0xe0..=0xef => Some(3),
        0xf0..=0xf4 => Some(4),
        _ => None,
    }
}

/// Valid scalar intervals per encoded length, with the surrogate gap cut
/// out of the 3-byte class.
fn length_class_intervals(len: usize) -> &'static [(u32, u32)] {
    match len {
        2 => &[(0x80, 0x7ff)],
        3 => &[(0x800, 0xd7ff), (0xe000, 0xffff)],
        4 => &[(0x10000, 0x10ffff)],
        _ => &[],
    }
}

fn interval_hits_ranges(lo: u32, hi: u32, config: &SurgeryConfig) -> bool {
    config
        .chinese_ranges
        .iter()
        .any(|r| lo.max(r.start) <= hi.min(r.end))
}

/// Is there a character inside the configured ranges whose UTF-8 encoding
/// ends with exactly these continuation bytes?
fn chinese_char_with_suffix_exists(run: &[u8], config: &SurgeryConfig) -> bool {
    let k = run.len();
    let v: u32 = run.iter().fold(0, |acc, &b| (acc << 6) | u32::from(b & 0x3f));
    let modulus: u32 = 1 << (6 * k as u32);
    for len in 2..=4usize {
        if len - 1 < k {
            continue;
        }
        for &(clo, chi) in length_class_intervals(len) {
            for r in &config.chinese_ranges {
                let lo = clo.max(r.start);
                let hi = chi.min(r.end);
                if lo > hi {
                    continue;
                }
                // smallest c >= lo with c ≡ v (mod modulus)
                let rem = lo % modulus;
                let first = if v >= rem { lo - rem + v } else { lo - rem + v + modulus };
                if first <= hi {
                    return true;
                }
            }
        }
    }
    false
}

/// Could an occurrence of `bytes` inside valid UTF-8 text span more than
/// one character while touching a Chinese one?
///
/// UTF-8 is self-synchronizing, so the alignment of a byte-string inside
/// valid text is forced by the bytes themselves: the only shapes that can
/// occur at all are `[continuation run][complete characters][incomplete
/// prefix]`. Each end fragment belongs to exactly one neighboring
/// character, whose identity is bounded from the fragment bits. Any other
/// shape (orphan continuation after a complete character, dangling lead
/// mid-string, four or more leading continuations, malformed sequences)
/// can never match valid input, and such a merge can never fire.
fn product_can_cross_chinese_boundary(bytes: &[u8], config: &SurgeryConfig) -> bool {
    let mut i = 0;
    let mut units = 0usize;
    let mut chinese_possible = false;

    let mut lead_run = 0usize;
    while i < bytes.len() && is_continuation(bytes[i]) {
        lead_run += 1;
        i += 1;
    }
    if lead_run > 0 {
        if lead_run > 3 {
            // valid text never holds 4+ consecutive continuation bytes
            return false;
        }
        units += 1;
        chinese_possible |= chinese_char_with_suffix_exists(&bytes[..lead_run], config);
    }

    while i < bytes.len() {
        let Some(len) = utf8_len(bytes[i]) else {
            // continuation or invalid lead where a character must start
            return false;
        };
        if i + len <= bytes.len() {
            let Ok(s) = std::str::from_utf8(&bytes[i..i + len]) else {
                // malformed mid-token sequence cannot occur in valid text
                return false;
            };
            let c = s.chars().next().expect("one decoded char");
            units += 1;
            chinese_possible |= is_chinese_char(c, config);
            i += len;
        } else {
            // incomplete prefix at the very end; remaining bytes must be
            // continuations and the completion interval must be reachable
            let have = bytes.len() - i - 1;
            let mut value = match len {
                2 => u32::from(bytes[i] & 0x1f),
                3 => u32::from(bytes[i] & 0x0f),
                _ => u32::from(bytes[i] & 0x07),
            };
            for &b in &bytes[i + 1..] {
                if !is_continuation(b) {
                    return false;
                }
                value = (value << 6) | u32::from(b & 0x3f);
            }
            let missing = (len - 1 - have) as u32;
            let lo = value << (6 * missing);
            let hi = lo | ((1u32 << (6 * missing)) - 1);
            let completable = length_class_intervals(len)
                .iter()
                .any(|&(clo, chi)| lo.max(clo) <= hi.min(chi));
            if !completable {
                // overlong or surrogate prefix: impossible in valid text
                return false;
            }
            units += 1;
            chinese_possible |= length_class_intervals(len).iter().any(|&(clo, chi)| {
                let l = lo.max(clo);
                let h = hi.min(chi);
                l <= h && interval_hits_ranges(l, h, config)
            });
            i = bytes.len();
        }
    }

    units >= 2 && chinese_possible
}

/// One token span that covers more than one character while touching a
/// Chinese one.
#[derive(Debug, Clone, Serialize)]
pub struct Violation {
    pub sentence_index: usize,
    pub sentence: String,
    pub token_index: usize,
    pub token: String,
    pub byte_start: usize,
    pub byte_end: usize,
    pub char_start: usize,
    pub char_end: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub sentences_checked: usize,
    pub violations: Vec<Violation>,
}

impl VerifyReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

fn span_is_violation(span: &TokenSpan, chars: &[char], config: &SurgeryConfig) -> bool {
    span.char_range.len() > 1
        && chars[span.char_range.clone()]
            .iter()
            .any(|&c| is_chinese_char(c, config))
}

/// Check the one-token-per-Chinese-character property of a model over a
/// corpus. Sentences are expected to be NFC-normalized already.
pub fn verify_char_level<'a, I>(model: &BpeModel, corpus: I, config: &SurgeryConfig) -> VerifyReport
where
    I: IntoIterator<Item = &'a str>,
{
    let mut report = VerifyReport { sentences_checked: 0, violations: Vec::new() };
    for (sentence_index, sentence) in corpus.into_iter().enumerate() {
        report.sentences_checked += 1;
        let chars: Vec<char> = sentence.chars().collect();
        for (token_index, span) in model.encode(sentence).iter().enumerate() {
            if span_is_violation(span, &chars, config) {
                report.violations.push(Violation {
                    sentence_index,
                    sentence: sentence.to_string(),
                    token_index,
                    token: model.token_lossy(span.id).unwrap_or_default(),
                    byte_start: span.byte_range.start,
                    byte_end: span.byte_range.end,
                    char_start: span.char_range.start,
                    char_end: span.char_range.end,
                });
            }
        }
    }
    report
}

/// Report written next to the filtered model documents.
#[derive(Debug, Serialize)]
pub struct SurgeryReport<'a> {
    pub mode: SurgeryMode,
    pub old_size: usize,
    pub new_size: usize,
    pub ratio: f64,
    pub old_merges: usize,
    pub new_merges: usize,
    pub removed_words: usize,
    pub removed_merges: usize,
    pub compact_ids: bool,
    pub chinese_ranges: &'a [CodepointRange],
}

/// Write `vocab.json`, `merges.txt`, `id_map.tsv`, and
/// `surgery_report.json` under `dir`.
pub fn write_surgery_output(dir: &Path, result: &SurgeryResult, config: &SurgeryConfig) -> Result<()> {
    crate::bpe::format::save_model_dir(dir, &result.new_vocab, &result.new_merges)?;
    let mut id_map = String::new();
    for (old, new) in &result.id_map {
        id_map.push_str(&format!("{old}\t{new}\n"));
    }
    std::fs::write(dir.join("id_map.tsv"), id_map)?;
    let report = SurgeryReport {
        mode: result.mode,
        old_size: result.stats.old_size,
        new_size: result.stats.new_size,
        ratio: result.stats.ratio,
        old_merges: result.stats.old_merges,
        new_merges: result.stats.new_merges,
        removed_words: result.removed_words.len(),
        removed_merges: result.removed_merges.len(),
        compact_ids: config.compact_ids,
        chinese_ranges: &config.chinese_ranges,
    };
    std::fs::write(
        dir.join("surgery_report.json"),
        serde_json::to_string_pretty(&report)?,
    )?;
    Ok(())
}

/// Parse an `id_map.tsv` document (old-id TAB new-id per line).
pub fn parse_id_map(text: &str) -> Result<BTreeMap<TokenId, TokenId>> {
    let mut map = BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split('\t');
        let parse = |s: Option<&str>| -> Result<TokenId> {
            s.and_then(|v| v.parse().ok()).ok_or(Error::MalformedIdMap {
                line: lineno,
                message: "expected old-id TAB new-id".into(),
            })
        };
        let old = parse(parts.next())?;
        let new = parse(parts.next())?;
        if parts.next().is_some() {
            return Err(Error::MalformedIdMap {
                line: lineno,
                message: "expected exactly two columns".into(),
            });
        }
        if map.insert(old, new).is_some() {
            return Err(Error::MalformedIdMap {
                line: lineno,
                message: format!("old id {old} listed twice"),
            });
        }
    }
    Ok(map)
}
