//! Model-building helpers shared by unit tests.

use std::collections::HashSet;

use crate::bpe::{byte_vocab, BpeModel, Pretokenizer};

/// Grow a model from the byte vocabulary by listing merges; products are
/// added to the vocab with sequential ids.
pub(crate) fn model_from_merges(pairs: &[(Vec<u8>, Vec<u8>)]) -> BpeModel {
    let mut vocab = byte_vocab();
    let mut next_id = 256;
    let mut merges = Vec::new();
    for (left, right) in pairs {
        let mut product = left.to_vec();
        product.extend_from_slice(right);
        vocab.entry(product).or_insert_with(|| {
            let id = next_id;
            next_id += 1;
            id
        });
        merges.push((left.to_vec(), right.to_vec()));
    }
    BpeModel::new(vocab, merges, Pretokenizer::Identity).unwrap()
}

/// Merge list that builds each character of `word` from bytes, then the
/// word itself left to right.
pub(crate) fn merges_for_word(word: &str) -> Vec<(Vec<u8>, Vec<u8>)> {
    let mut merges = Vec::new();
    for c in word.chars() {
        let mut buf = [0u8; 4];
        let enc = c.encode_utf8(&mut buf).as_bytes();
        for i in 1..enc.len() {
            merges.push((enc[..i].to_vec(), vec![enc[i]]));
        }
    }
    let chars: Vec<&str> = word
        .char_indices()
        .map(|(i, c)| &word[i..i + c.len_utf8()])
        .collect();
    let mut acc = chars[0].as_bytes().to_vec();
    for c in &chars[1..] {
        merges.push((acc.clone(), c.as_bytes().to_vec()));
        acc.extend_from_slice(c.as_bytes());
    }
    merges
}

/// Character builders plus left-to-right word builders for every word,
/// with duplicate merges dropped.
pub(crate) fn model_for_words(words: &[&str]) -> BpeModel {
    let mut merges = Vec::new();
    for w in words {
        merges.extend(merges_for_word(w));
    }
    let mut seen = HashSet::new();
    merges.retain(|m| seen.insert(m.clone()));
    model_from_merges(&merges)
}
