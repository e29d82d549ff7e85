mod common;

use common::PINYIN_TABLE_TSV;

use csc_core::phonology::{char_relation, parse_syllable, CharRelation, PinyinTable};

fn table() -> PinyinTable {
    PinyinTable::parse_default(PINYIN_TABLE_TSV).unwrap()
}

#[test]
fn bundled_table_loads() {
    let t = table();
    assert!(t.len() >= 300, "table unexpectedly small: {}", t.len());
    assert_eq!(t.skipped_keys(), 0);
}

#[test]
fn reflexivity_over_the_whole_table() {
    let t = table();
    for c in t.chars() {
        assert_eq!(char_relation(c, c, &t, false), CharRelation::Identical, "{c}");
    }
}

#[test]
fn symmetry_over_table_pairs() {
    let t = table();
    let chars: Vec<char> = t.chars().collect();
    for (i, &a) in chars.iter().enumerate() {
        // stride keeps this quadratic check around a quarter million pairs
        for &b in chars.iter().skip(i % 3).step_by(3) {
            for fuzzy in [false, true] {
                assert_eq!(
                    char_relation(a, b, &t, fuzzy),
                    char_relation(b, a, &t, fuzzy),
                    "asymmetric for {a} {b} fuzzy={fuzzy}"
                );
            }
        }
    }
}

#[test]
fn fuzzy_never_downgrades_a_relation() {
    let t = table();
    let chars: Vec<char> = t.chars().collect();
    for &a in &chars {
        for &b in &chars {
            let plain = char_relation(a, b, &t, false);
            let fuzzy = char_relation(a, b, &t, true);
            match plain {
                CharRelation::Identical => assert_eq!(fuzzy, CharRelation::Identical),
                CharRelation::Similar => assert_eq!(fuzzy, CharRelation::Similar),
                CharRelation::Unknown => assert_eq!(fuzzy, CharRelation::Unknown),
                CharRelation::Dissimilar => assert_ne!(fuzzy, CharRelation::Unknown),
            }
        }
    }
}

#[test]
fn every_table_reading_reconstructs_itself() {
    let t = table();
    for c in t.chars() {
        for syllable in t.get(c).unwrap() {
            let rendered = syllable.to_string();
            assert_eq!(&parse_syllable(&rendered).unwrap(), syllable, "{c}: {rendered}");
        }
    }
}
