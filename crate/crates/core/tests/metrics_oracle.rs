mod common;

use common::{random_ascii, rng};
use rand::prelude::*;

use csc_core::alignment::CscTriple;
use csc_core::metrics::{aggregate, judge, MetricsReport};

/// Brute-force scorer written straight from the set definitions, sharing
/// no code with the implementation under test.
fn brute_force(sentences: &[(Vec<char>, Vec<char>, Vec<char>)]) -> MetricsGrid {
    let mut modified = 0usize;
    let mut gold_sents = 0usize;
    let mut det_hits = 0usize;
    let mut cor_hits = 0usize;
    let mut hyp_total = 0usize;
    let mut gold_total = 0usize;
    let mut det_tp = 0usize;
    let mut cor_tp = 0usize;
    for (src, reference, hyp) in sentences {
        let n = src.len();
        let mut gold = Vec::new();
        let mut hypp = Vec::new();
        for i in 0..n {
            if src[i] != reference[i] {
                gold.push(i);
            }
            if src[i] != hyp[i] {
                hypp.push(i);
            }
        }
        if !hypp.is_empty() {
            modified += 1;
        }
        if !gold.is_empty() {
            gold_sents += 1;
            if gold == hypp {
                det_hits += 1;
            }
            if hyp == reference {
                cor_hits += 1;
            }
        }
        hyp_total += hypp.len();
        gold_total += gold.len();
        for &i in &hypp {
            if gold.contains(&i) {
                det_tp += 1;
            }
            if hyp[i] == reference[i] {
                cor_tp += 1;
            }
        }
    }
    let div = |n: usize, d: usize| if d == 0 { 0.0 } else { n as f64 / d as f64 };
    let f = |p: f64, r: f64| if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    let triple = |n: usize, pd: usize, rd: usize| {
        let p = div(n, pd);
        let r = div(n, rd);
        [p, r, f(p, r)]
    };
    MetricsGrid {
        sent_det: triple(det_hits, modified, gold_sents),
        sent_cor: triple(cor_hits, modified, gold_sents),
        char_det: triple(det_tp, hyp_total, gold_total),
        char_cor: triple(cor_tp, hyp_total, gold_total),
    }
}

struct MetricsGrid {
    sent_det: [f64; 3],
    sent_cor: [f64; 3],
    char_det: [f64; 3],
    char_cor: [f64; 3],
}

fn flatten(report: &MetricsReport) -> [[f64; 3]; 4] {
    [
        [report.sentence_detection.precision, report.sentence_detection.recall, report.sentence_detection.f1],
        [report.sentence_correction.precision, report.sentence_correction.recall, report.sentence_correction.f1],
        [report.char_detection.precision, report.char_detection.recall, report.char_detection.f1],
        [report.char_correction.precision, report.char_correction.recall, report.char_correction.f1],
    ]
}

fn random_micro_corpus(rng: &mut impl Rng) -> Vec<(Vec<char>, Vec<char>, Vec<char>)> {
    let sentences = rng.gen_range(1..=6);
    (0..sentences)
        .map(|_| {
            let n = rng.gen_range(1..=6);
            let src: Vec<char> = (0..n).map(|_| rng.gen_range(b'a'..=b'd') as char).collect();
            let mutate = |rng: &mut dyn RngCore, base: &[char], p: f64| -> Vec<char> {
                base.iter()
                    .map(|&c| {
                        if rng.gen_bool(p) {
                            rng.gen_range(b'a'..=b'd') as char
                        } else {
                            c
                        }
                    })
                    .collect()
            };
            let reference = mutate(rng, &src, 0.35);
            let hyp = if rng.gen_bool(0.5) {
                mutate(rng, &reference, 0.3)
            } else {
                mutate(rng, &src, 0.3)
            };
            (src, reference, hyp)
        })
        .collect()
}

#[test]
fn aggregate_matches_brute_force_on_random_micro_corpora() {
    let mut rng = rng(0x0e7a);
    for _ in 0..10_000 {
        let corpus = random_micro_corpus(&mut rng);
        let judgments: Vec<_> = corpus
            .iter()
            .map(|(s, r, h)| {
                let s: String = s.iter().collect();
                let r: String = r.iter().collect();
                let h: String = h.iter().collect();
                judge(&CscTriple::new(&s, &r, &h).unwrap()).unwrap()
            })
            .collect();
        let report = aggregate(&judgments).unwrap();
        let oracle = brute_force(&corpus);
        let got = flatten(&report);
        let want = [oracle.sent_det, oracle.sent_cor, oracle.char_det, oracle.char_cor];
        assert_eq!(got, want, "mismatch on corpus {corpus:?}");
    }
}

#[test]
fn repair_first_makes_every_input_scorable() {
    let mut rng = rng(0x0e7b);
    for _ in 0..2000 {
        let n = rng.gen_range(1..=10);
        let src = random_ascii(&mut rng, n, b"abcd");
        let reference: String = src
            .chars()
            .map(|c| if rng.gen_bool(0.3) { 'b' } else { c })
            .collect();
        // wildly non-equal-length generations
        let hyp = random_ascii(&mut rng, 20, b"abcdxyz");
        let triple = CscTriple::new(&src, &reference, &hyp).unwrap();
        let judgment = judge(&triple.repaired()).unwrap();
        assert!(judgment.gold_positions.iter().all(|&i| i < triple.n()));
    }
}

#[test]
fn char_correction_f1_never_exceeds_detection_f1() {
    let mut rng = rng(0x0e7c);
    for _ in 0..2000 {
        let corpus = random_micro_corpus(&mut rng);
        let judgments: Vec<_> = corpus
            .iter()
            .map(|(s, r, h)| {
                let s: String = s.iter().collect();
                let r: String = r.iter().collect();
                let h: String = h.iter().collect();
                judge(&CscTriple::new(&s, &r, &h).unwrap()).unwrap()
            })
            .collect();
        let report = aggregate(&judgments).unwrap();
        assert!(report.char_correction.f1 <= report.char_detection.f1 + 1e-15);
    }
}

#[test]
fn corpus_order_never_changes_the_report() {
    let mut rng = rng(0x0e7d);
    for _ in 0..500 {
        let corpus = random_micro_corpus(&mut rng);
        let mut judgments: Vec<_> = corpus
            .iter()
            .map(|(s, r, h)| {
                let s: String = s.iter().collect();
                let r: String = r.iter().collect();
                let h: String = h.iter().collect();
                judge(&CscTriple::new(&s, &r, &h).unwrap()).unwrap()
            })
            .collect();
        let before = aggregate(&judgments).unwrap();
        judgments.shuffle(&mut rng);
        let after = aggregate(&judgments).unwrap();
        assert_eq!(before, after);
    }
}
