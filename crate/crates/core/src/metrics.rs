//! Sentence- and character-level detection/correction scoring, plus the
//! length and phonetic statistics computed from raw (un-repaired)
//! hypotheses.

use std::collections::BTreeSet;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::alignment::CscTriple;
use crate::error::{Error, Result};
use crate::phonology::{char_relation, CharRelation, PinyinTable};

/// Version stamp carried by every emitted report.
pub const REPORT_SPEC_VERSION: &str = "1.0";

/// Frozen statement of the scoring rules. Reports carry its hash so any
/// change to the definitions is visible in downstream numbers.
pub const METRIC_DEFINITIONS: &str = "\
gold = {i: src[i] != ref[i]}; hyp = {i: src[i] != pred[i]} over repaired predictions.
sentence detection: hit iff hyp == gold and gold nonempty; P = hits / #(pred != src); R = hits / #(gold nonempty).
sentence correction: hit iff pred == ref and gold nonempty; same denominators.
character detection: tp = |hyp ∩ gold|; P = tp / sum|hyp|; R = tp / sum|gold|.
character correction: tp = |{i in hyp: pred[i] == ref[i]}|; same denominators.
F1 = 2PR/(P+R), 0 when P+R = 0. Zero denominators score 0 and increment a warning counter.";

pub fn metric_definitions_hash() -> String {
    let digest = Sha256::digest(METRIC_DEFINITIONS.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Per-sentence judgment of a repaired (equal-length) hypothesis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentenceJudgment {
    /// Positions where the reference corrects the source.
    pub gold_positions: BTreeSet<usize>,
    /// Positions where the hypothesis modified the source.
    pub hyp_positions: BTreeSet<usize>,
    pub has_gold_errors: bool,
    pub hyp_modified: bool,
    pub det_sentence_hit: bool,
    pub cor_sentence_hit: bool,
    pub det_tp: usize,
    pub cor_tp: usize,
}

/// Judge one triple. The hypothesis must already be equal-length
/// (repaired or equal by construction).
pub fn judge(triple: &CscTriple) -> Result<SentenceJudgment> {
    let n = triple.n();
    if triple.hypothesis().len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: triple.hypothesis().len(),
        });
    }
    let src = triple.source();
    let reference = triple.reference();
    let hyp = triple.hypothesis();
    let gold_positions: BTreeSet<usize> = (0..n).filter(|&i| src[i] != reference[i]).collect();
    let hyp_positions: BTreeSet<usize> = (0..n).filter(|&i| src[i] != hyp[i]).collect();
    let has_gold_errors = !gold_positions.is_empty();
    let hyp_modified = !hyp_positions.is_empty();
    let det_tp = gold_positions.intersection(&hyp_positions).count();
    let cor_tp = hyp_positions.iter().filter(|&&i| hyp[i] == reference[i]).count();
    Ok(SentenceJudgment {
        det_sentence_hit: has_gold_errors && hyp_positions == gold_positions,
        cor_sentence_hit: has_gold_errors && hyp == reference,
        gold_positions,
        hyp_positions,
        has_gold_errors,
        hyp_modified,
        det_tp,
        cor_tp,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct MetricCounters {
    pub sentences: usize,
    pub with_gold_errors: usize,
    pub hyp_modified: usize,
    pub det_sentence_hits: usize,
    pub cor_sentence_hits: usize,
    pub gold_positions: usize,
    pub hyp_positions: usize,
    pub det_tp: usize,
    pub cor_tp: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub sentence_detection: Prf,
    pub sentence_correction: Prf,
    pub char_detection: Prf,
    pub char_correction: Prf,
    pub counters: MetricCounters,
    /// Number of metric denominators that were zero (scored as 0).
    pub zero_denominator_warnings: u32,
}

fn ratio(numerator: usize, denominator: usize, warnings: &mut u32) -> f64 {
    if denominator == 0 {
        *warnings += 1;
        0.0
    } else {
        numerator as f64 / denominator as f64
    }
}

/// Fold sentence judgments into the four precision/recall/F1 triples.
/// Order of the input never changes the result.
pub fn aggregate(judgments: &[SentenceJudgment]) -> Result<MetricsReport> {
    if judgments.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut c = MetricCounters::default();
    for j in judgments {
        c.sentences += 1;
        c.with_gold_errors += usize::from(j.has_gold_errors);
        c.hyp_modified += usize::from(j.hyp_modified);
        c.det_sentence_hits += usize::from(j.det_sentence_hit);
        c.cor_sentence_hits += usize::from(j.cor_sentence_hit);
        c.gold_positions += j.gold_positions.len();
        c.hyp_positions += j.hyp_positions.len();
        c.det_tp += j.det_tp;
        c.cor_tp += j.cor_tp;
    }
    let mut warnings = 0u32;
    let mut prf = |num: usize, p_den: usize, r_den: usize| -> Prf {
        let precision = ratio(num, p_den, &mut warnings);
        let recall = ratio(num, r_den, &mut warnings);
        Prf { precision, recall, f1: f1(precision, recall) }
    };
    let sentence_detection = prf(c.det_sentence_hits, c.hyp_modified, c.with_gold_errors);
    let sentence_correction = prf(c.cor_sentence_hits, c.hyp_modified, c.with_gold_errors);
    let char_detection = prf(c.det_tp, c.hyp_positions, c.gold_positions);
    let char_correction = prf(c.cor_tp, c.hyp_positions, c.gold_positions);
    Ok(MetricsReport {
        sentence_detection,
        sentence_correction,
        char_detection,
        char_correction,
        counters: c,
        zero_denominator_warnings: warnings,
    })
}

/// Length and phonetic statistics over raw triples (hypotheses as
/// produced, before any repair). Positional ratios are computed over
/// equal-length hypotheses only; positions whose relation to the source
/// is unknown are excluded from both numerator and denominator and
/// counted separately.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LengthPhoneticStats {
    pub sentences: usize,
    pub equal_length: usize,
    pub equal_length_rate: f64,
    /// Positions where the hypothesis changed the source (relation known).
    pub substituted_positions: usize,
    /// ... of which phonetically dissimilar to the source character.
    pub dissimilar_substitutions: usize,
    pub non_homophone_rate: f64,
    /// Positions where the hypothesis differs from the reference
    /// (relation to source known).
    pub error_positions: usize,
    /// ... of which phonetically dissimilar to the source character.
    pub dissimilar_errors: usize,
    pub non_homophone_error_ratio: f64,
    /// Positions excluded because a character was absent from the table.
    pub unknown_excluded: usize,
    pub zero_denominator_warnings: u32,
}

pub fn length_phonetic_stats(
    triples: &[CscTriple],
    table: &PinyinTable,
    fuzzy: bool,
) -> Result<LengthPhoneticStats> {
    if triples.is_empty() {
        return Err(Error::EmptySelection);
    }
    let mut equal_length = 0usize;
    let mut substituted = 0usize;
    let mut dissimilar_subs = 0usize;
    let mut errors = 0usize;
    let mut dissimilar_errors = 0usize;
    let mut unknown_excluded = 0usize;
    for t in triples {
        if !t.hypothesis_is_equal_length() {
            continue;
        }
        equal_length += 1;
        let src = t.source();
        let reference = t.reference();
        let hyp = t.hypothesis();
        for i in 0..t.n() {
            let changed = hyp[i] != src[i];
            let wrong = hyp[i] != reference[i];
            if !changed && !wrong {
                continue;
            }
            let relation = char_relation(src[i], hyp[i], table, fuzzy);
            if relation == CharRelation::Unknown {
                unknown_excluded += 1;
                continue;
            }
            if changed {
                substituted += 1;
                if relation == CharRelation::Dissimilar {
                    dissimilar_subs += 1;
                }
            }
            if wrong {
                errors += 1;
                if relation == CharRelation::Dissimilar {
                    dissimilar_errors += 1;
                }
            }
        }
    }
    let mut warnings = 0u32;
    Ok(LengthPhoneticStats {
        sentences: triples.len(),
        equal_length,
        equal_length_rate: equal_length as f64 / triples.len() as f64,
        substituted_positions: substituted,
        dissimilar_substitutions: dissimilar_subs,
        non_homophone_rate: ratio(dissimilar_subs, substituted, &mut warnings),
        error_positions: errors,
        dissimilar_errors,
        non_homophone_error_ratio: ratio(dissimilar_errors, errors, &mut warnings),
        unknown_excluded,
        zero_denominator_warnings: warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn triple(src: &str, reference: &str, hyp: &str) -> CscTriple {
        CscTriple::new(src, reference, hyp).unwrap()
    }

    #[test]
    fn single_correction_by_hand() {
        let j = judge(&triple("ABD", "ABC", "ABC")).unwrap();
        assert_eq!(j.gold_positions, BTreeSet::from([2]));
        assert_eq!(j.hyp_positions, BTreeSet::from([2]));
        assert!(j.det_sentence_hit && j.cor_sentence_hit);
        assert_eq!((j.det_tp, j.cor_tp), (1, 1));
    }

    #[test]
    fn clean_sentence_has_no_flags() {
        let j = judge(&triple("ABC", "ABC", "ABC")).unwrap();
        assert!(j.gold_positions.is_empty() && j.hyp_positions.is_empty());
        assert!(!j.has_gold_errors && !j.hyp_modified);
        assert!(!j.det_sentence_hit && !j.cor_sentence_hit);
        assert_eq!((j.det_tp, j.cor_tp), (0, 0));
    }

    #[test]
    fn overcorrection_by_hand() {
        let j = judge(&triple("XYD", "XYC", "XZC")).unwrap();
        assert_eq!(j.gold_positions, BTreeSet::from([2]));
        assert_eq!(j.hyp_positions, BTreeSet::from([1, 2]));
        assert!(!j.det_sentence_hit && !j.cor_sentence_hit);
        assert_eq!((j.det_tp, j.cor_tp), (1, 1));
    }

    #[test]
    fn unequal_hypothesis_is_rejected() {
        let t = triple("ABC", "ABC", "ABCD");
        assert!(matches!(judge(&t), Err(Error::LengthMismatch { .. })));
    }

    fn fixture() -> Vec<SentenceJudgment> {
        [
            triple("ABD", "ABC", "ABC"),
            triple("ABC", "ABC", "ABC"),
            triple("XYD", "XYC", "XZC"),
        ]
        .iter()
        .map(|t| judge(t).unwrap())
        .collect()
    }

    #[test]
    fn three_sentence_fixture() {
        let report = aggregate(&fixture()).unwrap();
        for prf in [report.sentence_detection, report.sentence_correction] {
            assert_eq!(prf.precision, 0.5);
            assert_eq!(prf.recall, 0.5);
            assert_eq!(prf.f1, 0.5);
        }
        for prf in [report.char_detection, report.char_correction] {
            assert!((prf.precision - 2.0 / 3.0).abs() < 1e-15);
            assert_eq!(prf.recall, 1.0);
            assert!((prf.f1 - 0.8).abs() < 1e-12);
        }
        assert_eq!(report.zero_denominator_warnings, 0);
    }

    #[test]
    fn all_clean_corpus_warns_on_zero_denominators() {
        let judgments = vec![judge(&triple("AB", "AB", "AB")).unwrap()];
        let report = aggregate(&judgments).unwrap();
        for prf in [
            report.sentence_detection,
            report.sentence_correction,
            report.char_detection,
            report.char_correction,
        ] {
            assert_eq!((prf.precision, prf.recall, prf.f1), (0.0, 0.0, 0.0));
        }
        assert_eq!(report.zero_denominator_warnings, 8);
    }

    #[test]
    fn single_perfect_correction_scores_one_everywhere() {
        let judgments = vec![judge(&triple("AX", "AB", "AB")).unwrap()];
        let report = aggregate(&judgments).unwrap();
        for prf in [
            report.sentence_detection,
            report.sentence_correction,
            report.char_detection,
            report.char_correction,
        ] {
            assert_eq!((prf.precision, prf.recall, prf.f1), (1.0, 1.0, 1.0));
        }
    }

    #[test]
    fn empty_corpus_is_an_error() {
        assert!(matches!(aggregate(&[]), Err(Error::EmptyCorpus)));
    }

    #[test]
    fn permutation_leaves_report_unchanged() {
        let mut j = fixture();
        let a = aggregate(&j).unwrap();
        j.reverse();
        let b = aggregate(&j).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn char_correction_never_beats_detection() {
        let j = fixture();
        let r = aggregate(&j).unwrap();
        assert!(r.char_correction.f1 <= r.char_detection.f1);
    }

    fn stats_table() -> PinyinTable {
        PinyinTable::parse_default("中\tzhong1\n重\tzhong4\n马\tma3\n八\tba1\n们\tmen0\n").unwrap()
    }

    #[test]
    fn equal_length_rate_counts_raw_lengths() {
        let table = stats_table();
        let triples = vec![
            triple("中马", "中马", "中马"),
            triple("中马", "中马", "中马八"),
        ];
        let stats = length_phonetic_stats(&triples, &table, false).unwrap();
        assert_eq!(stats.equal_length_rate, 0.5);
    }

    #[test]
    fn copy_hypotheses_have_undefined_positional_ratios() {
        let table = stats_table();
        let triples = vec![triple("中马", "重马", "中马")];
        let stats = length_phonetic_stats(&triples, &table, false).unwrap();
        assert_eq!(stats.equal_length_rate, 1.0);
        assert_eq!(stats.non_homophone_rate, 0.0);
        // the missed correction at position 0 is an error position with a
        // known (identical) relation
        assert_eq!(stats.error_positions, 1);
        assert_eq!(stats.zero_denominator_warnings, 1);
    }

    #[test]
    fn dissimilar_substitution_is_counted() {
        let table = stats_table();
        // hyp changes 中 -> 八 (dissimilar) and 马 -> 马 stays
        let triples = vec![triple("中马", "重马", "八马")];
        let stats = length_phonetic_stats(&triples, &table, false).unwrap();
        assert_eq!(stats.substituted_positions, 1);
        assert_eq!(stats.dissimilar_substitutions, 1);
        assert_eq!(stats.non_homophone_rate, 1.0);
        assert_eq!(stats.error_positions, 1);
        assert_eq!(stats.non_homophone_error_ratio, 1.0);
    }

    #[test]
    fn target_row_uses_reference_as_hypothesis() {
        let table = stats_table();
        // ref vs src: 中 -> 重 is similar, so the target row rate is 0
        let triples = vec![triple("中马", "重马", "重马")];
        let stats = length_phonetic_stats(&triples, &table, false).unwrap();
        assert_eq!(stats.substituted_positions, 1);
        assert_eq!(stats.non_homophone_rate, 0.0);
        assert_eq!(stats.error_positions, 0);
        assert_eq!(stats.zero_denominator_warnings, 1);
    }

    #[test]
    fn unknown_characters_are_excluded_and_counted() {
        let table = stats_table();
        let triples = vec![triple("龟马", "中马", "中马")];
        let stats = length_phonetic_stats(&triples, &table, false).unwrap();
        // src 龟 is not in the table: excluded from the ratios
        assert_eq!(stats.unknown_excluded, 1);
        assert_eq!(stats.substituted_positions, 0);
    }

    #[test]
    fn empty_selection_is_an_error() {
        let table = stats_table();
        assert!(matches!(
            length_phonetic_stats(&[], &table, false),
            Err(Error::EmptySelection)
        ));
    }

    #[test]
    fn definitions_hash_is_stable_hex() {
        let h = metric_definitions_hash();
        assert_eq!(h.len(), 64);
        assert_eq!(h, metric_definitions_hash());
    }
}
