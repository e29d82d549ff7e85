//! Generators and independent oracles shared by the property suites.

#![allow(dead_code)]

use std::collections::{HashMap, HashSet};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use csc_core::bpe::{byte_vocab, BpeModel, Pretokenizer, TokenId};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub const PINYIN_TABLE_TSV: &str =
    include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/../../data/pinyin.tsv"));

pub fn random_chinese_char(rng: &mut impl Rng) -> char {
    let ranges = [(0x4e00u32, 0x9fffu32), (0x3400, 0x4dbf)];
    let (lo, hi) = if rng.gen_bool(0.85) { ranges[0] } else { ranges[1] };
    char::from_u32(rng.gen_range(lo..=hi)).unwrap()
}

/// A random but structurally valid BPE model, grown through well-formed
/// merges: every merge's operands already exist and its product is new.
pub struct RandomModel {
    pub model: BpeModel,
    /// Chinese characters the model encodes as a single token. Builder
    /// paths can dead-end when characters share byte prefixes across
    /// association orders, so the pool is checked, not assumed.
    pub char_pool: Vec<char>,
}

struct Builder {
    vocab: HashMap<Vec<u8>, TokenId>,
    merges: Vec<(Vec<u8>, Vec<u8>)>,
    pairs: HashSet<(Vec<u8>, Vec<u8>)>,
    next_id: TokenId,
}

impl Builder {
    fn new() -> Self {
        Builder {
            vocab: byte_vocab(),
            merges: Vec::new(),
            pairs: HashSet::new(),
            next_id: 256,
        }
    }

    /// Add the merge if both operands exist; returns whether the product
    /// is available afterwards (already present or newly created).
    fn merge(&mut self, left: &[u8], right: &[u8]) -> bool {
        if !self.vocab.contains_key(left) || !self.vocab.contains_key(right) {
            return false;
        }
        let mut product = left.to_vec();
        product.extend_from_slice(right);
        if self.vocab.contains_key(&product) {
            return true; // reachable through an earlier merge
        }
        let pair = (left.to_vec(), right.to_vec());
        if !self.pairs.insert(pair.clone()) {
            return false;
        }
        self.vocab.insert(product, self.next_id);
        self.next_id += 1;
        self.merges.push(pair);
        true
    }

    fn build(self) -> BpeModel {
        BpeModel::new(self.vocab, self.merges, Pretokenizer::Identity).unwrap()
    }
}

fn char_bytes(c: char) -> Vec<u8> {
    let mut buf = [0u8; 4];
    c.encode_utf8(&mut buf).as_bytes().to_vec()
}

pub fn random_model(rng: &mut impl Rng) -> RandomModel {
    let mut b = Builder::new();

    // character builders with mixed association order
    let pool_size = rng.gen_range(15..=40);
    let mut char_pool: Vec<char> = Vec::new();
    let mut seen = HashSet::new();
    while char_pool.len() < pool_size {
        let c = random_chinese_char(rng);
        if seen.insert(c) {
            char_pool.push(c);
        }
    }
    for &c in &char_pool {
        let enc = char_bytes(c);
        if rng.gen_bool(0.5) {
            b.merge(&enc[..1], &enc[1..2]);
            b.merge(&enc[..2], &enc[2..3]);
        } else {
            b.merge(&enc[1..2], &enc[2..3]);
            b.merge(&enc[..1], &enc[1..]);
        }
    }

    // multi-character Chinese words
    let words = rng.gen_range(8..=30);
    for _ in 0..words {
        let len = rng.gen_range(2..=4);
        let word: Vec<char> = (0..len)
            .map(|_| *char_pool.choose(rng).unwrap())
            .collect();
        let mut acc = char_bytes(word[0]);
        for &c in &word[1..] {
            let cb = char_bytes(c);
            b.merge(&acc.clone(), &cb);
            acc.extend_from_slice(&cb);
        }
    }

    // ASCII runs
    for _ in 0..rng.gen_range(2..=8) {
        let l = rng.gen_range(b'a'..=b'z');
        let r = rng.gen_range(b'a'..=b'z');
        b.merge(&[l], &[r]);
    }

    // mixed and adversarial glue: random existing-token pairs, including
    // ASCII-to-fragment shapes that could cross character boundaries
    let glue = rng.gen_range(5..=25);
    for _ in 0..glue {
        let existing: Vec<Vec<u8>> = b.vocab.keys().cloned().collect();
        let left = existing.choose(rng).unwrap().clone();
        let right = existing.choose(rng).unwrap().clone();
        if left.len() + right.len() <= 12 {
            b.merge(&left, &right);
        }
    }

    let model = b.build();
    char_pool.retain(|c| model.encode(&c.to_string()).len() == 1);
    assert!(!char_pool.is_empty());
    RandomModel { model, char_pool }
}

/// Random sentence drawn mostly from the model's character pool, with
/// occasional ASCII and out-of-pool Chinese characters.
pub fn random_sentence(rng: &mut impl Rng, char_pool: &[char]) -> String {
    let len = rng.gen_range(2..=24);
    (0..len)
        .map(|_| {
            let roll: f64 = rng.gen();
            if roll < 0.80 {
                *char_pool.choose(rng).unwrap()
            } else if roll < 0.92 {
                rng.gen_range(b'a'..=b'z') as char
            } else {
                random_chinese_char(rng)
            }
        })
        .collect()
}

/// Replay every merge rule in rank order, merging occurrences left to
/// right: the O(n * |M|) reference encoder.
pub fn naive_replay(model: &BpeModel, text: &str) -> Vec<Vec<u8>> {
    let mut symbols: Vec<Vec<u8>> = text.bytes().map(|b| vec![b]).collect();
    for (left, right) in model.merges() {
        let mut i = 0;
        while i + 1 < symbols.len() {
            if &symbols[i] == left && &symbols[i + 1] == right {
                let right_sym = symbols.remove(i + 1);
                symbols[i].extend_from_slice(&right_sym);
            }
            i += 1;
        }
    }
    symbols
}

/// Top-down memoized Levenshtein distance, independent of the DP/backtrace
/// implementation under test.
pub fn levenshtein_recursive(a: &[char], b: &[char]) -> usize {
    fn go(
        a: &[char],
        b: &[char],
        i: usize,
        j: usize,
        memo: &mut HashMap<(usize, usize), usize>,
    ) -> usize {
        if i == a.len() {
            return b.len() - j;
        }
        if j == b.len() {
            return a.len() - i;
        }
        if let Some(&d) = memo.get(&(i, j)) {
            return d;
        }
        let sub = go(a, b, i + 1, j + 1, memo) + usize::from(a[i] != b[j]);
        let del = go(a, b, i + 1, j, memo) + 1;
        let ins = go(a, b, i, j + 1, memo) + 1;
        let d = sub.min(del).min(ins);
        memo.insert((i, j), d);
        d
    }
    go(a, b, 0, 0, &mut HashMap::new())
}

/// Random string over a small alphabet, for alignment and metric fuzzing.
pub fn random_ascii(rng: &mut impl Rng, max_len: usize, alphabet: &[u8]) -> String {
    let len = rng.gen_range(0..=max_len);
    (0..len)
        .map(|_| *alphabet.choose(rng).unwrap() as char)
        .collect()
}
