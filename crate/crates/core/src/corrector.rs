//! Character-by-character correction: pinyin confusion sets plus a
//! copy-biased channel, searched with a beam over the n-gram model. The
//! output always has the source's length and every substituted character
//! comes from the source character's confusion set.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::lm::NgramLm;
use crate::phonology::{PinyinTable, Syllable};

/// Per-character candidate pools: every character phonetically identical
/// or similar to the key (tone-insensitive, optionally fuzzy), plus the
/// key itself. Members are sorted for deterministic iteration.
#[derive(Debug, Clone, Default)]
pub struct ConfusionSet {
    sets: HashMap<char, Vec<char>>,
}

impl ConfusionSet {
    /// Group the table's characters by toneless (initial, final) so each
    /// key's pool is exactly the characters whose relation to it is
    /// identical or similar.
    pub fn build(table: &PinyinTable, fuzzy: bool) -> Self {
        let key_of = |s: &Syllable| -> (String, String) {
            if fuzzy {
                (fold_initial(&s.initial).to_string(), fold_finals(&s.finals).to_string())
            } else {
                (s.initial.clone(), s.finals.clone())
            }
        };
        let mut groups: HashMap<(String, String), Vec<char>> = HashMap::new();
        for c in table.chars() {
            for s in table.get(c).unwrap() {
                groups.entry(key_of(s)).or_default().push(c);
            }
        }
        let mut sets: HashMap<char, Vec<char>> = HashMap::new();
        for c in table.chars() {
            let mut pool = vec![c];
            for s in table.get(c).unwrap() {
                if let Some(group) = groups.get(&key_of(s)) {
                    pool.extend_from_slice(group);
                }
            }
            pool.sort_unstable();
            pool.dedup();
            sets.insert(c, pool);
        }
        ConfusionSet { sets }
    }

    /// Use explicit candidate pools. Self-membership is enforced and
    /// pools are sorted and deduplicated.
    pub fn from_pools(pools: HashMap<char, Vec<char>>) -> Self {
        let sets = pools
            .into_iter()
            .map(|(c, mut pool)| {
                pool.push(c);
                pool.sort_unstable();
                pool.dedup();
                (c, pool)
            })
            .collect();
        ConfusionSet { sets }
    }

    pub fn candidates(&self, c: char) -> Option<&[char]> {
        self.sets.get(&c).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }
}

fn fold_initial(i: &str) -> &str {
    match i {
        "zh" => "z",
        "ch" => "c",
        "sh" => "s",
        "l" => "n",
        "h" => "f",
        other => other,
    }
}

fn fold_finals(f: &str) -> &str {
    match f {
        "ang" => "an",
        "eng" => "en",
        "ing" => "in",
        other => other,
    }
}

/// Copy-biased channel: a source character is kept with probability
/// 1 - epsilon; the error mass epsilon is spread uniformly over the rest
/// of its confusion set. A character whose set holds only itself is
/// always kept.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelModel {
    epsilon: f64,
}

impl ChannelModel {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !epsilon.is_finite() || !(0.0..1.0).contains(&epsilon) {
            return Err(Error::InvalidEpsilon(epsilon));
        }
        Ok(ChannelModel { epsilon })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// log P(candidate | source) within a confusion set of `set_size`
    /// members (including the source itself).
    pub fn log_prob(&self, source: char, candidate: char, set_size: usize) -> f64 {
        if candidate == source {
            if set_size <= 1 {
                0.0
            } else {
                (1.0 - self.epsilon).ln()
            }
        } else {
            (self.epsilon / (set_size - 1) as f64).ln()
        }
    }
}

#[derive(Clone)]
struct Hypothesis {
    chars: Vec<char>,
    score: f64,
}

fn candidate_pool<'a>(confusion: &'a ConfusionSet, source: &'a char) -> &'a [char] {
    confusion
        .candidates(*source)
        .unwrap_or(std::slice::from_ref(source))
}

/// Left-to-right beam search for the best equal-length rewrite of
/// `source`. At each position the candidates are the source character's
/// confusion set (characters outside the table are always copied); a
/// hypothesis scores the sum of language-model and channel log
/// probabilities. Ties break toward the lexicographically smaller
/// hypothesis, so the result is deterministic.
pub fn correct(
    lm: &NgramLm,
    channel: &ChannelModel,
    confusion: &ConfusionSet,
    source: &str,
    beam_width: usize,
) -> Result<String> {
    if beam_width == 0 {
        return Err(Error::InvalidBeamWidth);
    }
    let chars: Vec<char> = source.chars().collect();
    let mut beam = vec![Hypothesis { chars: Vec::new(), score: 0.0 }];
    for src in &chars {
        let pool = candidate_pool(confusion, src);
        let mut next = Vec::with_capacity(beam.len() * pool.len());
        for hyp in &beam {
            for &cand in pool {
                let score = hyp.score
                    + lm.log_prob(cand, &hyp.chars)
                    + channel.log_prob(*src, cand, pool.len());
                let mut chars = hyp.chars.clone();
                chars.push(cand);
                next.push(Hypothesis { chars, score });
            }
        }
        next.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.chars.cmp(&b.chars)));
        next.truncate(beam_width);
        beam = next;
    }
    Ok(beam.remove(0).chars.into_iter().collect())
}

/// Score a complete hypothesis exactly the way the beam accumulates it:
/// left to right, language model plus channel at each position.
pub fn hypothesis_score(
    lm: &NgramLm,
    channel: &ChannelModel,
    confusion: &ConfusionSet,
    source: &str,
    hypothesis: &str,
) -> f64 {
    let src: Vec<char> = source.chars().collect();
    let hyp: Vec<char> = hypothesis.chars().collect();
    assert_eq!(src.len(), hyp.len(), "hypothesis must be equal-length");
    let mut score = 0.0;
    for i in 0..src.len() {
        let pool = candidate_pool(confusion, &src[i]);
        score += lm.log_prob(hyp[i], &hyp[..i]) + channel.log_prob(src[i], hyp[i], pool.len());
    }
    score
}
