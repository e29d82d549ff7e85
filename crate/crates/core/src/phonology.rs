//! Pinyin table ingestion, syllable decomposition into (initial, final,
//! tone), and the phonetic-similarity relation between characters.

use std::collections::HashMap;
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::surgeon::{is_chinese_char, SurgeryConfig};

/// The 21 standard initials, two-letter ones first so longest-match wins.
pub const INITIALS: [&str; 21] = [
    "zh", "ch", "sh", "b", "p", "m", "f", "d", "t", "n", "l", "g", "k", "h", "j", "q", "x", "r",
    "z", "c", "s",
];

/// One pronunciation: initial (possibly empty), final, and tone 0..=4
/// where 0 is the neutral tone. `ü` is carried as `v`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct Syllable {
    pub initial: String,
    pub finals: String,
    pub tone: u8,
}

impl fmt::Display for Syllable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}{}", self.initial, self.finals, self.tone)
    }
}

/// Split a numbered syllable like `zhong1` by longest-match against the
/// standard initial list; the remainder is the final and a missing tone
/// digit means neutral. `5` is accepted as an alias for neutral.
pub fn parse_syllable(text: &str) -> Result<Syllable> {
    let err = |message: &str| Error::InvalidSyllable {
        input: text.to_string(),
        message: message.to_string(),
    };
    if text.is_empty() {
        return Err(err("empty syllable"));
    }
    let normalized: String = text.chars().map(|c| if c == 'ü' { 'v' } else { c }).collect();
    let (body, tone) = match normalized.as_bytes().last() {
        Some(d @ b'0'..=b'9') => {
            let digit = d - b'0';
            if digit > 5 {
                return Err(err("tone digit out of range (expected 0..=5)"));
            }
            (&normalized[..normalized.len() - 1], if digit == 5 { 0 } else { digit })
        }
        _ => (normalized.as_str(), 0),
    };
    if body.is_empty() {
        return Err(err("no letters before tone digit"));
    }
    if !body.bytes().all(|b| b.is_ascii_lowercase()) {
        return Err(err("expected lowercase ascii letters (\u{fc} written as v)"));
    }
    let initial = INITIALS
        .iter()
        .find(|i| body.starts_with(**i))
        .copied()
        .unwrap_or("");
    let finals = &body[initial.len()..];
    if finals.is_empty() {
        return Err(err("empty final"));
    }
    Ok(Syllable {
        initial: initial.to_string(),
        finals: finals.to_string(),
        tone,
    })
}

/// Tone-marked vowels of pinyin, tones 1..=4.
const TONE_MARKS: [(char, char, u8); 24] = [
    ('ā', 'a', 1), ('á', 'a', 2), ('ǎ', 'a', 3), ('à', 'a', 4),
    ('ō', 'o', 1), ('ó', 'o', 2), ('ǒ', 'o', 3), ('ò', 'o', 4),
    ('ē', 'e', 1), ('é', 'e', 2), ('ě', 'e', 3), ('è', 'e', 4),
    ('ī', 'i', 1), ('í', 'i', 2), ('ǐ', 'i', 3), ('ì', 'i', 4),
    ('ū', 'u', 1), ('ú', 'u', 2), ('ǔ', 'u', 3), ('ù', 'u', 4),
    ('ǖ', 'v', 1), ('ǘ', 'v', 2), ('ǚ', 'v', 3), ('ǜ', 'v', 4),
];

/// Convert a tone-marked syllable (`zhōng`) to numbered form (`zhong1`).
fn tone_marks_to_digits(marked: &str) -> String {
    let mut tone = 0u8;
    let mut out = String::with_capacity(marked.len() + 1);
    for c in marked.chars() {
        if let Some(&(_, base, t)) = TONE_MARKS.iter().find(|&&(m, _, _)| m == c) {
            out.push(base);
            tone = t;
        } else if c == 'ü' {
            out.push('v');
        } else {
            out.push(c);
        }
    }
    out.push(char::from(b'0' + tone));
    out
}

/// Per-character pronunciations. Immutable after load; lists are
/// deduplicated and keys are restricted to Chinese characters.
#[derive(Debug, Clone, Default)]
pub struct PinyinTable {
    readings: HashMap<char, Vec<Syllable>>,
    skipped_keys: usize,
}

impl PinyinTable {
    /// Parse a table document. Two line forms are accepted and may be
    /// mixed: `character TAB reading[,reading...]` with tone digits, and
    /// Unihan kMandarin lines (`U+4E2D TAB kMandarin TAB zhōng`). Lines
    /// starting with `#` are comments. Keys outside the Chinese ranges
    /// are skipped and counted, as are Unihan readings that do not form a
    /// standard syllable (syllabic nasals such as `ń`); TSV readings are
    /// validated strictly.
    pub fn parse(text: &str, config: &SurgeryConfig) -> Result<Self> {
        let mut table = PinyinTable::default();
        for (idx, line) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = line.trim_end();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let unihan = fields.len() == 3 && fields[0].starts_with("U+") && fields[1] == "kMandarin";
            let (key, readings): (char, Vec<String>) = if unihan {
                let cp = u32::from_str_radix(&fields[0][2..], 16).map_err(|_| {
                    Error::MalformedPinyinTable {
                        line: lineno,
                        message: format!("bad codepoint {:?}", fields[0]),
                    }
                })?;
                let c = char::from_u32(cp).ok_or(Error::MalformedPinyinTable {
                    line: lineno,
                    message: format!("U+{cp:04X} is not a scalar value"),
                })?;
                let readings = fields[2]
                    .split_whitespace()
                    .map(tone_marks_to_digits)
                    .collect();
                (c, readings)
            } else if fields.len() == 2 {
                let mut chars = fields[0].chars();
                let (Some(c), None) = (chars.next(), chars.next()) else {
                    return Err(Error::MalformedPinyinTable {
                        line: lineno,
                        message: format!("key {:?} is not a single character", fields[0]),
                    });
                };
                (c, fields[1].split(',').map(|s| s.trim().to_string()).collect())
            } else {
                return Err(Error::MalformedPinyinTable {
                    line: lineno,
                    message: "expected `char TAB readings` or a Unihan kMandarin line".into(),
                });
            };

            if !is_chinese_char(key, config) {
                table.skipped_keys += 1;
                continue;
            }
            let entry = table.readings.entry(key).or_default();
            for r in readings {
                if r.is_empty() {
                    continue;
                }
                match parse_syllable(&r) {
                    Ok(syllable) => {
                        if !entry.contains(&syllable) {
                            entry.push(syllable);
                        }
                    }
                    Err(_) if unihan => continue,
                    Err(e) => {
                        return Err(Error::MalformedPinyinTable {
                            line: lineno,
                            message: e.to_string(),
                        })
                    }
                }
            }
            if entry.is_empty() {
                table.readings.remove(&key);
                if unihan {
                    table.skipped_keys += 1;
                } else {
                    return Err(Error::MalformedPinyinTable {
                        line: lineno,
                        message: format!("no readings for {key:?}"),
                    });
                }
            }
        }
        Ok(table)
    }

    /// Parse with the default Chinese ranges.
    pub fn parse_default(text: &str) -> Result<Self> {
        Self::parse(text, &SurgeryConfig::default())
    }

    pub fn get(&self, c: char) -> Option<&[Syllable]> {
        self.readings.get(&c).map(Vec::as_slice)
    }

    pub fn contains(&self, c: char) -> bool {
        self.readings.contains_key(&c)
    }

    pub fn len(&self) -> usize {
        self.readings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.readings.is_empty()
    }

    /// Keys that fell outside the configured Chinese ranges during load.
    pub fn skipped_keys(&self) -> usize {
        self.skipped_keys
    }

    pub fn chars(&self) -> impl Iterator<Item = char> + '_ {
        self.readings.keys().copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CharRelation {
    /// Some reading pair matches on initial, final, and tone.
    Identical,
    /// Some reading pair matches on (initial, final) ignoring tone,
    /// optionally after folding fuzzy initial/final classes.
    Similar,
    Dissimilar,
    /// At least one character is absent from the table.
    Unknown,
}

fn fuzzy_initial(i: &str) -> &str {
    match i {
        "zh" => "z",
        "ch" => "c",
        "sh" => "s",
        "l" => "n",
        "h" => "f",
        other => other,
    }
}

fn fuzzy_finals(f: &str) -> &str {
    match f {
        "ang" => "an",
        "eng" => "en",
        "ing" => "in",
        other => other,
    }
}

/// Phonetic relation between two characters under a table. With `fuzzy`
/// the classes z/zh, c/ch, s/sh, n/l, f/h and an/ang, en/eng, in/ing are
/// folded together before comparing.
pub fn char_relation(a: char, b: char, table: &PinyinTable, fuzzy: bool) -> CharRelation {
    let (Some(ra), Some(rb)) = (table.get(a), table.get(b)) else {
        return CharRelation::Unknown;
    };
    let mut similar = false;
    for sa in ra {
        for sb in rb {
            if sa == sb {
                return CharRelation::Identical;
            }
            if sa.initial == sb.initial && sa.finals == sb.finals {
                similar = true;
            } else if fuzzy
                && fuzzy_initial(&sa.initial) == fuzzy_initial(&sb.initial)
                && fuzzy_finals(&sa.finals) == fuzzy_finals(&sb.finals)
            {
                similar = true;
            }
        }
    }
    if similar {
        CharRelation::Similar
    } else {
        CharRelation::Dissimilar
    }
}
