//! Unicode ingestion helpers shared by the corpus and dataset readers.

use unicode_normalization::{is_nfc, UnicodeNormalization};

/// Canonical composition. All text entering the toolkit from files goes
/// through this so character counts are stable for alignment.
pub fn nfc(s: &str) -> String {
    if is_nfc(s) {
        s.to_string()
    } else {
        s.nfc().collect()
    }
}

pub fn char_count(s: &str) -> usize {
    s.chars().count()
}
