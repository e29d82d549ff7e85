//! Interpolated add-alpha character n-gram language model with a binary
//! `NGLM` serialization.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read, Write};

use crate::error::{Error, Result};

/// Sentence-boundary padding symbol used in contexts. Never part of the
/// predicted vocabulary.
pub const BOS: char = '\u{2}';

const MAGIC: &[u8; 4] = b"NGLM";
const VERSION: u16 = 1;

/// Character n-gram model. `prob` interpolates add-alpha estimates of all
/// orders 1..=k with fixed weights; probabilities over the vocabulary sum
/// to one for every context.
#[derive(Debug, Clone, PartialEq)]
pub struct NgramLm {
    order: usize,
    alpha: f64,
    lambdas: Vec<f64>,
    vocab: BTreeSet<char>,
    /// counts[j-1]: (j-1)-character context -> next char -> count
    counts: Vec<BTreeMap<String, BTreeMap<char, u64>>>,
    /// totals[j-1]: context -> sum of its continuation counts
    totals: Vec<BTreeMap<String, u64>>,
}

fn validate_params(order: usize, alpha: f64, lambdas: &[f64]) -> Result<()> {
    if !(2..=5).contains(&order) {
        return Err(Error::InvalidOrder(order));
    }
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(Error::InvalidAlpha(format!("{alpha} is not a finite non-negative value")));
    }
    if lambdas.len() != order {
        return Err(Error::InvalidLambdas(format!(
            "expected {order} weights, got {}",
            lambdas.len()
        )));
    }
    if lambdas.iter().any(|&l| !l.is_finite() || l < 0.0) {
        return Err(Error::InvalidLambdas("weights must be finite and non-negative".into()));
    }
    let sum: f64 = lambdas.iter().sum();
    if (sum - 1.0).abs() > 1e-6 {
        return Err(Error::InvalidLambdas(format!("weights sum to {sum}, expected 1")));
    }
    Ok(())
}

/// Count n-grams of all orders over the corpus, one sentence per item,
/// with BOS padding at each sentence start.
pub fn train_lm<S: AsRef<str>>(
    corpus: &[S],
    order: usize,
    alpha: f64,
    lambdas: &[f64],
) -> Result<NgramLm> {
    validate_params(order, alpha, lambdas)?;
    // normalize away rounding in user-supplied weights
    let sum: f64 = lambdas.iter().sum();
    let lambdas: Vec<f64> = lambdas.iter().map(|l| l / sum).collect();

    let mut lm = NgramLm {
        order,
        alpha,
        lambdas,
        vocab: BTreeSet::new(),
        counts: vec![BTreeMap::new(); order],
        totals: vec![BTreeMap::new(); order],
    };
    let mut any = false;
    for sentence in corpus {
        let chars: Vec<char> = sentence.as_ref().chars().collect();
        if chars.is_empty() {
            continue;
        }
        any = true;
        let mut padded = vec![BOS; order - 1];
        padded.extend_from_slice(&chars);
        for (i, &c) in chars.iter().enumerate() {
            lm.vocab.insert(c);
            let end = order - 1 + i;
            for j in 1..=order {
                let context: String = padded[end - (j - 1)..end].iter().collect();
                *lm.counts[j - 1]
                    .entry(context.clone())
                    .or_default()
                    .entry(c)
                    .or_default() += 1;
                *lm.totals[j - 1].entry(context).or_default() += 1;
            }
        }
    }
    if !any {
        return Err(Error::EmptyCorpus);
    }
    Ok(lm)
}

impl NgramLm {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn vocab(&self) -> impl Iterator<Item = char> + '_ {
        self.vocab.iter().copied()
    }

    /// Add-alpha estimate of one order: (count + alpha) / (total +
    /// alpha * |V|). An entirely unsmoothable context (alpha = 0 and no
    /// observations) falls back to the uniform distribution.
    fn order_prob(&self, j: usize, context: &str, c: char) -> f64 {
        let v = self.vocab.len() as f64;
        let count = self.counts[j - 1]
            .get(context)
            .and_then(|m| m.get(&c))
            .copied()
            .unwrap_or(0) as f64;
        let total = self.totals[j - 1].get(context).copied().unwrap_or(0) as f64;
        let denominator = total + self.alpha * v;
        if denominator == 0.0 {
            1.0 / v
        } else {
            (count + self.alpha) / denominator
        }
    }

    /// Interpolated probability of `c` after `context` (any length; only
    /// the last `order - 1` characters matter, BOS-padded on the left).
    pub fn prob(&self, c: char, context: &[char]) -> f64 {
        let k = self.order - 1;
        let mut padded: Vec<char> = Vec::with_capacity(k);
        if context.len() >= k {
            padded.extend_from_slice(&context[context.len() - k..]);
        } else {
            padded.extend(std::iter::repeat(BOS).take(k - context.len()));
            padded.extend_from_slice(context);
        }
        let mut p = 0.0;
        for j in 1..=self.order {
            let ctx: String = padded[k - (j - 1)..].iter().collect();
            p += self.lambdas[j - 1] * self.order_prob(j, &ctx, c);
        }
        p
    }

    pub fn log_prob(&self, c: char, context: &[char]) -> f64 {
        self.prob(c, context).ln()
    }

    /// exp of the average negative log-likelihood per character.
    pub fn perplexity(&self, text: &str) -> Result<f64> {
        let chars: Vec<char> = text.chars().collect();
        if chars.is_empty() {
            return Err(Error::EmptyText);
        }
        let mut sum = 0.0;
        for i in 0..chars.len() {
            sum += self.log_prob(chars[i], &chars[..i]);
        }
        Ok((-sum / chars.len() as f64).exp())
    }

    /// Serialize to the little-endian `NGLM` format. Deterministic: equal
    /// models produce identical bytes.
    pub fn save(&self, mut w: impl Write) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&(self.order as u16).to_le_bytes())?;
        w.write_all(&self.alpha.to_le_bytes())?;
        for l in &self.lambdas {
            w.write_all(&l.to_le_bytes())?;
        }
        w.write_all(&(self.vocab.len() as u32).to_le_bytes())?;
        let mut buf = [0u8; 4];
        for &c in &self.vocab {
            let s = c.encode_utf8(&mut buf);
            w.write_all(&[s.len() as u8])?;
            w.write_all(s.as_bytes())?;
        }
        for j in 0..self.order {
            let entries: u64 = self.counts[j].values().map(|m| m.len() as u64).sum();
            w.write_all(&entries.to_le_bytes())?;
            for (context, nexts) in &self.counts[j] {
                for (&c, &count) in nexts {
                    let cb = context.as_bytes();
                    w.write_all(&[cb.len() as u8])?;
                    w.write_all(cb)?;
                    let s = c.encode_utf8(&mut buf);
                    w.write_all(&[s.len() as u8])?;
                    w.write_all(s.as_bytes())?;
                    w.write_all(&count.to_le_bytes())?;
                }
            }
        }
        Ok(())
    }

    pub fn load(mut r: impl Read) -> Result<Self> {
        let bad = |msg: &str| Error::MalformedLm(msg.to_string());
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(|_| bad("truncated header"))?;
        if &magic != MAGIC {
            return Err(bad("bad magic, expected NGLM"));
        }
        let mut u16buf = [0u8; 2];
        r.read_exact(&mut u16buf).map_err(|_| bad("truncated version"))?;
        if u16::from_le_bytes(u16buf) != VERSION {
            return Err(bad("unsupported version"));
        }
        r.read_exact(&mut u16buf).map_err(|_| bad("truncated order"))?;
        let order = u16::from_le_bytes(u16buf) as usize;
        if !(2..=5).contains(&order) {
            return Err(bad("order out of range"));
        }
        let mut f64buf = [0u8; 8];
        r.read_exact(&mut f64buf).map_err(|_| bad("truncated alpha"))?;
        let alpha = f64::from_le_bytes(f64buf);
        let mut lambdas = Vec::with_capacity(order);
        for _ in 0..order {
            r.read_exact(&mut f64buf).map_err(|_| bad("truncated weights"))?;
            lambdas.push(f64::from_le_bytes(f64buf));
        }
        validate_params(order, alpha, &lambdas)?;

        let read_char = |r: &mut dyn Read| -> Result<char> {
            let mut len = [0u8; 1];
            r.read_exact(&mut len).map_err(|_| bad("truncated char"))?;
            if len[0] == 0 || len[0] > 4 {
                return Err(bad("bad char length"));
            }
            let mut bytes = vec![0u8; len[0] as usize];
            r.read_exact(&mut bytes).map_err(|_| bad("truncated char"))?;
            let s = std::str::from_utf8(&bytes).map_err(|_| bad("char is not utf-8"))?;
            let mut chars = s.chars();
            match (chars.next(), chars.next()) {
                (Some(c), None) => Ok(c),
                _ => Err(bad("char field holds more than one character")),
            }
        };

        let mut u32buf = [0u8; 4];
        r.read_exact(&mut u32buf).map_err(|_| bad("truncated vocab count"))?;
        let vocab_len = u32::from_le_bytes(u32buf) as usize;
        let mut vocab = BTreeSet::new();
        for _ in 0..vocab_len {
            vocab.insert(read_char(&mut r)?);
        }
        if vocab.len() != vocab_len {
            return Err(bad("duplicate vocabulary entries"));
        }

        let mut counts = vec![BTreeMap::<String, BTreeMap<char, u64>>::new(); order];
        let mut totals = vec![BTreeMap::<String, u64>::new(); order];
        let mut u64buf = [0u8; 8];
        for j in 0..order {
            r.read_exact(&mut u64buf).map_err(|_| bad("truncated table size"))?;
            let entries = u64::from_le_bytes(u64buf);
            for _ in 0..entries {
                let mut len = [0u8; 1];
                r.read_exact(&mut len).map_err(|_| bad("truncated context"))?;
                let mut ctx_bytes = vec![0u8; len[0] as usize];
                r.read_exact(&mut ctx_bytes).map_err(|_| bad("truncated context"))?;
                let context = String::from_utf8(ctx_bytes).map_err(|_| bad("context is not utf-8"))?;
                if context.chars().count() != j {
                    return Err(bad("context length does not match its table order"));
                }
                let c = read_char(&mut r)?;
                r.read_exact(&mut u64buf).map_err(|_| bad("truncated count"))?;
                let count = u64::from_le_bytes(u64buf);
                if counts[j].entry(context.clone()).or_default().insert(c, count).is_some() {
                    return Err(bad("duplicate count entry"));
                }
                *totals[j].entry(context).or_default() += count;
            }
        }
        let mut trailing = [0u8; 1];
        if r.read(&mut trailing).map_err(Error::Io)? != 0 {
            return Err(bad("trailing bytes after count tables"));
        }
        Ok(NgramLm { order, alpha, lambdas, vocab, counts, totals })
    }
}
