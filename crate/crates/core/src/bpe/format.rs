//! GPT-2-style on-disk formats: `vocab.json` (token string -> id) and
//! `merges.txt` (one space-separated pair per line, rank = line order).
//!
//! Token byte-strings are stored through the GPT-2 printable-byte mapping,
//! which gives every byte value a distinct visible character so arbitrary
//! bytes survive a JSON round trip. The mapping is purely a file-format
//! detail: in-memory models always hold raw bytes.

use std::collections::HashMap;
use std::path::Path;
use std::sync::OnceLock;

use crate::bpe::{BpeModel, Pretokenizer, TokenId};
use crate::error::{Error, Result};

fn byte_to_char_table() -> &'static [char; 256] {
    static TABLE: OnceLock<[char; 256]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut printable = [false; 256];
        for b in 0x21..=0x7e {
            printable[b] = true;
        }
        for b in 0xa1..=0xac {
            printable[b] = true;
        }
        for b in 0xae..=0xff {
            printable[b] = true;
        }
        let mut table = ['\0'; 256];
        let mut next = 256u32;
        for (b, slot) in table.iter_mut().enumerate() {
            if printable[b] {
                *slot = char::from_u32(b as u32).unwrap();
            } else {
                *slot = char::from_u32(next).unwrap();
                next += 1;
            }
        }
        table
    })
}

fn char_to_byte_table() -> &'static HashMap<char, u8> {
    static TABLE: OnceLock<HashMap<char, u8>> = OnceLock::new();
    TABLE.get_or_init(|| {
        byte_to_char_table()
            .iter()
            .enumerate()
            .map(|(b, &c)| (c, b as u8))
            .collect()
    })
}

/// Printable representation of a token byte-string.
pub fn token_to_printable(bytes: &[u8]) -> String {
    let table = byte_to_char_table();
    bytes.iter().map(|&b| table[b as usize]).collect()
}

/// Inverse of [`token_to_printable`]. Fails on characters outside the
/// 256-entry mapping.
pub fn printable_to_token(s: &str) -> Result<Vec<u8>> {
    let table = char_to_byte_table();
    s.chars()
        .map(|c| {
            table.get(&c).copied().ok_or_else(|| {
                Error::MalformedVocab(format!("character {c:?} is not in the byte mapping"))
            })
        })
        .collect()
}

/// Parse a `vocab.json` document into raw token bytes -> id.
pub fn parse_vocab(json: &str) -> Result<HashMap<Vec<u8>, TokenId>> {
    let map: serde_json::Map<String, serde_json::Value> = serde_json::from_str(json)?;
    let mut vocab = HashMap::with_capacity(map.len());
    for (token, value) in map {
        let id = value.as_u64().ok_or_else(|| {
            Error::MalformedVocab(format!("id for token {token:?} is not a non-negative integer"))
        })?;
        let id = TokenId::try_from(id)
            .map_err(|_| Error::MalformedVocab(format!("id {id} for token {token:?} overflows")))?;
        vocab.insert(printable_to_token(&token)?, id);
    }
    Ok(vocab)
}

/// Parse a `merges.txt` document. An optional leading `#version` header is
/// ignored; every other non-empty line must hold exactly two
/// space-separated token strings.
pub fn parse_merges(text: &str) -> Result<Vec<(Vec<u8>, Vec<u8>)>> {
    let mut merges = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if line.is_empty() || (idx == 0 && line.starts_with("#version")) {
            continue;
        }
        let mut parts = line.split(' ');
        let (left, right) = match (parts.next(), parts.next(), parts.next()) {
            (Some(l), Some(r), None) if !l.is_empty() && !r.is_empty() => (l, r),
            _ => {
                return Err(Error::MalformedMerges {
                    line: lineno,
                    message: "expected exactly two space-separated token strings".into(),
                })
            }
        };
        merges.push((printable_to_token(left)?, printable_to_token(right)?));
    }
    Ok(merges)
}

pub fn vocab_to_json(vocab: &HashMap<Vec<u8>, TokenId>) -> String {
    let mut entries: Vec<(&Vec<u8>, TokenId)> = vocab.iter().map(|(b, &id)| (b, id)).collect();
    entries.sort_by_key(|&(_, id)| id);
    let map: serde_json::Map<String, serde_json::Value> = entries
        .into_iter()
        .map(|(bytes, id)| (token_to_printable(bytes), serde_json::Value::from(id)))
        .collect();
    serde_json::to_string_pretty(&serde_json::Value::Object(map)).expect("vocab serializes")
}

pub fn merges_to_text(merges: &[(Vec<u8>, Vec<u8>)]) -> String {
    let mut out = String::from("#version: 0.2\n");
    for (left, right) in merges {
        out.push_str(&token_to_printable(left));
        out.push(' ');
        out.push_str(&token_to_printable(right));
        out.push('\n');
    }
    out
}

/// Load a model from vocabulary and merges documents already in memory.
pub fn model_from_documents(
    vocab_json: &str,
    merges_text: &str,
    pretokenizer: Pretokenizer,
) -> Result<BpeModel> {
    let vocab = parse_vocab(vocab_json)?;
    let merges = parse_merges(merges_text)?;
    BpeModel::new(vocab, merges, pretokenizer)
}

/// Load a model from `<dir>/vocab.json` and `<dir>/merges.txt`.
pub fn load_model_dir(dir: &Path, pretokenizer: Pretokenizer) -> Result<BpeModel> {
    let vocab_json = std::fs::read_to_string(dir.join("vocab.json"))?;
    let merges_text = std::fs::read_to_string(dir.join("merges.txt"))?;
    model_from_documents(&vocab_json, &merges_text, pretokenizer)
}

/// Write `vocab.json` and `merges.txt` under `dir`, creating it if needed.
pub fn save_model_dir(
    dir: &Path,
    vocab: &HashMap<Vec<u8>, TokenId>,
    merges: &[(Vec<u8>, Vec<u8>)],
) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("vocab.json"), vocab_to_json(vocab))?;
    std::fs::write(dir.join("merges.txt"), merges_to_text(merges))?;
    Ok(())
}
