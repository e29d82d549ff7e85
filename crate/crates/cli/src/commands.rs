use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use serde_json::json;

use csc_core::alignment::{diagnose_tokenization, repair_equal_length, CscTriple, Scenario};
use csc_core::bpe::format::{load_model_dir, model_from_documents};
use csc_core::bpe::{BpeModel, Pretokenizer};
use csc_core::corrector::{correct, ChannelModel, ConfusionSet};
use csc_core::dataset::Ingested;
use csc_core::embedding::{embed_prune, read_embedding, write_embedding};
use csc_core::lm::{train_lm, NgramLm};
use csc_core::metrics::{
    aggregate, judge, length_phonetic_stats, metric_definitions_hash, LengthPhoneticStats,
    MetricsReport, Prf, REPORT_SPEC_VERSION,
};
use csc_core::phonology::PinyinTable;
use csc_core::surgeon::{
    apply_surgery, parse_id_map, verify_char_level, write_surgery_output, SurgeryConfig,
    SurgeryMode,
};

use crate::ingest::{load_records, log_skips, read_lines, triples};
use crate::ranges::parse_ranges;

fn write_or_stdout(path: Option<&PathBuf>, content: &str) -> Result<()> {
    match path {
        Some(path) => std::fs::write(path, content)
            .with_context(|| format!("writing {}", path.display()))?,
        None => print!("{content}"),
    }
    Ok(())
}

fn load_model(dir: &Path, pretokenizer: Pretokenizer) -> Result<BpeModel> {
    load_model_dir(dir, pretokenizer).with_context(|| format!("loading model from {}", dir.display()))
}

fn surgery_config(mode: SurgeryMode, ranges: Option<&str>, compact: bool) -> Result<SurgeryConfig> {
    let mut config = SurgeryConfig { mode, compact_ids: compact, ..SurgeryConfig::default() };
    if let Some(spec) = ranges {
        config.chinese_ranges = parse_ranges(spec)?;
    }
    config.validate()?;
    Ok(config)
}

fn load_table(path: &Path) -> Result<PinyinTable> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))?;
    let table = PinyinTable::parse_default(&text)
        .with_context(|| format!("parsing {}", path.display()))?;
    if table.skipped_keys() > 0 {
        eprintln!("pinyin table: skipped {} non-Chinese keys", table.skipped_keys());
    }
    Ok(table)
}

fn mode_parser(s: &str) -> std::result::Result<SurgeryMode, String> {
    match s {
        "literal" => Ok(SurgeryMode::Literal),
        "strict" => Ok(SurgeryMode::Strict),
        other => Err(format!("unknown mode {other:?} (expected literal or strict)")),
    }
}

// ---------------------------------------------------------------------
// surgery

#[derive(Args)]
pub struct SurgeryArgs {
    /// Vocabulary document (vocab.json)
    #[arg(long)]
    vocab: PathBuf,
    /// Merges document (merges.txt)
    #[arg(long)]
    merges: PathBuf,
    /// Output directory for the filtered model
    #[arg(long)]
    out: PathBuf,
    /// Token filter: `strict` also removes mixed and boundary-crossing
    /// material so one-token-per-character is guaranteed
    #[arg(long, default_value = "strict", value_parser = mode_parser)]
    mode: SurgeryMode,
    /// Codepoint intervals treated as Chinese, e.g. `4E00-9FFF,3400-4DBF`
    #[arg(long)]
    chinese_ranges: Option<String>,
    /// Keep original token ids instead of renumbering to 0..n
    #[arg(long)]
    no_compact_ids: bool,
}

pub fn run_surgery(args: SurgeryArgs) -> Result<u8> {
    let vocab_json = std::fs::read_to_string(&args.vocab)
        .with_context(|| format!("reading {}", args.vocab.display()))?;
    let merges_text = std::fs::read_to_string(&args.merges)
        .with_context(|| format!("reading {}", args.merges.display()))?;
    let model = model_from_documents(&vocab_json, &merges_text, Pretokenizer::Identity)?;
    let config = surgery_config(args.mode, args.chinese_ranges.as_deref(), !args.no_compact_ids)?;
    let result = apply_surgery(&model, &config)?;
    write_surgery_output(&args.out, &result, &config)?;
    let report = std::fs::read_to_string(args.out.join("surgery_report.json"))?;
    println!("{report}");
    Ok(0)
}

// ---------------------------------------------------------------------
// tokenize

#[derive(Args)]
pub struct TokenizeArgs {
    /// Directory holding vocab.json and merges.txt
    #[arg(long)]
    model_dir: PathBuf,
    #[arg(long, default_value = "identity")]
    pretokenizer: Pretokenizer,
    /// Text file, one sentence per line
    #[arg(long)]
    input: PathBuf,
    /// Token dump destination (TSV); stdout when omitted
    #[arg(long)]
    output: Option<PathBuf>,
}

pub fn run_tokenize(args: TokenizeArgs) -> Result<u8> {
    let model = load_model(&args.model_dir, args.pretokenizer)?;
    let lines = read_lines(&args.input)?;
    let mut out = String::from("#line\ttoken\tid\ttext\tbyte_start\tbyte_end\tchar_start\tchar_end\n");
    for (lineno, line) in lines.iter().enumerate() {
        for (index, span) in model.encode(line).iter().enumerate() {
            let text = serde_json::to_string(&model.token_lossy(span.id).unwrap_or_default())?;
            out.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                lineno + 1,
                index,
                span.id,
                text,
                span.byte_range.start,
                span.byte_range.end,
                span.char_range.start,
                span.char_range.end,
            ));
        }
    }
    write_or_stdout(args.output.as_ref(), &out)?;
    Ok(0)
}

// ---------------------------------------------------------------------
// verify

#[derive(Args)]
pub struct VerifyArgs {
    #[arg(long)]
    model_dir: PathBuf,
    #[arg(long, default_value = "identity")]
    pretokenizer: Pretokenizer,
    /// Corpus file, one sentence per line
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    chinese_ranges: Option<String>,
    /// Violation report destination (JSON)
    #[arg(long)]
    json: Option<PathBuf>,
}

pub fn run_verify(args: VerifyArgs) -> Result<u8> {
    let model = load_model(&args.model_dir, args.pretokenizer)?;
    let config = surgery_config(SurgeryMode::Strict, args.chinese_ranges.as_deref(), true)?;
    let corpus = read_lines(&args.corpus)?;
    let report = verify_char_level(&model, corpus.iter().map(String::as_str), &config);
    println!(
        "checked {} sentences: {} violations",
        report.sentences_checked,
        report.violations.len()
    );
    if let Some(path) = &args.json {
        std::fs::write(path, serde_json::to_string_pretty(&report)?)?;
    }
    Ok(u8::from(!report.is_clean()))
}

// ---------------------------------------------------------------------
// repair

#[derive(Args)]
pub struct RepairArgs {
    /// Source sentences, one per line
    #[arg(long)]
    source: PathBuf,
    /// Hypothesis sentences, line-aligned with the sources
    #[arg(long)]
    hypothesis: PathBuf,
    /// Repaired hypotheses destination; stdout when omitted
    #[arg(long)]
    output: Option<PathBuf>,
}

pub fn run_repair(args: RepairArgs) -> Result<u8> {
    let sources = read_lines(&args.source)?;
    let hypotheses = read_lines(&args.hypothesis)?;
    if sources.len() != hypotheses.len() {
        bail!(
            "{} has {} lines but {} has {}",
            args.source.display(),
            sources.len(),
            args.hypothesis.display(),
            hypotheses.len()
        );
    }
    let mut out = String::new();
    for (src, hyp) in sources.iter().zip(&hypotheses) {
        out.push_str(&repair_equal_length(src, hyp));
        out.push('\n');
    }
    write_or_stdout(args.output.as_ref(), &out)?;
    Ok(0)
}

// ---------------------------------------------------------------------
// eval

#[derive(Args)]
pub struct EvalArgs {
    /// Combined dataset (TSV: source TAB reference [TAB hypothesis], or
    /// JSON lines with src/ref/hyp keys)
    #[arg(long)]
    data: Option<PathBuf>,
    /// Source sentences, one per line (alternative to --data)
    #[arg(long)]
    source: Option<PathBuf>,
    /// Reference sentences, line-aligned
    #[arg(long)]
    reference: Option<PathBuf>,
    /// Hypothesis sentences, line-aligned (overrides a dataset column)
    #[arg(long)]
    hypothesis: Option<PathBuf>,
    /// Score hypotheses as-is; equal length is then required
    #[arg(long)]
    no_repair: bool,
    /// Pinyin table for the phonetic statistics section
    #[arg(long, env = "CSC_PINYIN_TABLE")]
    pinyin_table: Option<PathBuf>,
    /// Fold fuzzy initial/final classes when classifying relations
    #[arg(long)]
    fuzzy: bool,
    /// Report destination (JSON); stdout when omitted
    #[arg(long)]
    json: Option<PathBuf>,
    /// Also write a fixed-order TSV row
    #[arg(long)]
    tsv: Option<PathBuf>,
}

fn prf_json(prf: &Prf) -> serde_json::Value {
    json!({
        "precision": prf.precision,
        "recall": prf.recall,
        "f1": prf.f1,
        "precision_pct": 100.0 * prf.precision,
        "recall_pct": 100.0 * prf.recall,
        "f1_pct": 100.0 * prf.f1,
    })
}

fn report_json(
    report: &MetricsReport,
    ingested: &Ingested,
    repaired: Option<usize>,
    length_phonetic: Option<&LengthPhoneticStats>,
) -> serde_json::Value {
    json!({
        "spec_version": REPORT_SPEC_VERSION,
        "metric_definitions_sha256": metric_definitions_hash(),
        "sentence_detection": prf_json(&report.sentence_detection),
        "sentence_correction": prf_json(&report.sentence_correction),
        "char_detection": prf_json(&report.char_detection),
        "char_correction": prf_json(&report.char_correction),
        "counters": report.counters,
        "zero_denominator_warnings": report.zero_denominator_warnings,
        "skipped_records": {
            "length_mismatch": ingested.skipped_length_mismatch,
            "too_long": ingested.skipped_too_long,
        },
        "repair": repaired.map(|n| json!({"repaired_hypotheses": n})),
        "length_phonetic_stats": length_phonetic,
    })
}

fn report_tsv(report: &MetricsReport) -> String {
    let mut out = String::from(
        "#spec_version\tsd_p\tsd_r\tsd_f1\tsc_p\tsc_r\tsc_f1\tcd_p\tcd_r\tcd_f1\tcc_p\tcc_r\tcc_f1\tsentences\twith_gold_errors\thyp_modified\twarnings\n",
    );
    let c = &report.counters;
    out.push_str(&format!(
        "{}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{:.6}\t{}\t{}\t{}\t{}\n",
        REPORT_SPEC_VERSION,
        report.sentence_detection.precision,
        report.sentence_detection.recall,
        report.sentence_detection.f1,
        report.sentence_correction.precision,
        report.sentence_correction.recall,
        report.sentence_correction.f1,
        report.char_detection.precision,
        report.char_detection.recall,
        report.char_detection.f1,
        report.char_correction.precision,
        report.char_correction.recall,
        report.char_correction.f1,
        c.sentences,
        c.with_gold_errors,
        c.hyp_modified,
        report.zero_denominator_warnings,
    ));
    out
}

pub fn run_eval(args: EvalArgs) -> Result<u8> {
    let loaded = load_records(
        args.data.as_ref(),
        args.source.as_ref(),
        args.reference.as_ref(),
        args.hypothesis.as_ref(),
    )?;
    log_skips(&loaded.ingested);
    let raw = triples(&loaded.ingested, false)?;
    if raw.is_empty() {
        bail!("no records to score");
    }

    let mut repaired_count = 0usize;
    let scored: Vec<CscTriple> = raw
        .iter()
        .map(|t| {
            if t.hypothesis_is_equal_length() {
                t.clone()
            } else if args.no_repair {
                t.clone()
            } else {
                repaired_count += 1;
                t.repaired()
            }
        })
        .collect();

    let judgments = scored
        .iter()
        .enumerate()
        .map(|(i, t)| judge(t).with_context(|| format!("record {}: hypothesis length differs from source (run without --no-repair)", i + 1)))
        .collect::<Result<Vec<_>>>()?;
    let report = aggregate(&judgments)?;

    let length_phonetic = match &args.pinyin_table {
        Some(path) => {
            let table = load_table(path)?;
            Some(length_phonetic_stats(&raw, &table, args.fuzzy)?)
        }
        None => None,
    };

    let repaired = if args.no_repair { None } else { Some(repaired_count) };
    let value = report_json(&report, &loaded.ingested, repaired, length_phonetic.as_ref());
    let mut rendered = serde_json::to_string_pretty(&value)?;
    rendered.push('\n');
    write_or_stdout(args.json.as_ref(), &rendered)?;
    if args.json.is_some() {
        println!(
            "char correction F1 {:.4} over {} sentences",
            report.char_correction.f1, report.counters.sentences
        );
    }
    if let Some(path) = &args.tsv {
        std::fs::write(path, report_tsv(&report))?;
    }
    Ok(0)
}

// ---------------------------------------------------------------------
// stats

#[derive(Args)]
pub struct StatsArgs {
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long)]
    source: Option<PathBuf>,
    #[arg(long)]
    reference: Option<PathBuf>,
    #[arg(long)]
    hypothesis: Option<PathBuf>,
    /// Compute the reference-vs-source row instead of hypothesis-vs-source
    #[arg(long)]
    target_row: bool,
    #[arg(long, env = "CSC_PINYIN_TABLE")]
    pinyin_table: PathBuf,
    #[arg(long)]
    fuzzy: bool,
    /// Keep only sentence pairs whose tokenization under this model shows
    /// a discrepancy (token counts differ or boundaries shift)
    #[arg(long)]
    discrepancy_model: Option<PathBuf>,
    #[arg(long, default_value = "identity")]
    pretokenizer: Pretokenizer,
    #[arg(long)]
    json: Option<PathBuf>,
}

pub fn run_stats(args: StatsArgs) -> Result<u8> {
    let loaded = load_records(
        args.data.as_ref(),
        args.source.as_ref(),
        args.reference.as_ref(),
        args.hypothesis.as_ref(),
    )?;
    log_skips(&loaded.ingested);
    let all = triples(&loaded.ingested, args.target_row)?;

    let (selected, discrepancy_note) = match &args.discrepancy_model {
        Some(dir) => {
            let model = load_model(dir, args.pretokenizer)?;
            let mut kept = Vec::new();
            for t in &all {
                let src: String = t.source().iter().collect();
                let reference: String = t.reference().iter().collect();
                let d = diagnose_tokenization(&model, &src, &reference)?;
                if d.scenario != Scenario::Aligned {
                    kept.push(t.clone());
                }
            }
            let note = json!({"total": all.len(), "with_discrepancy": kept.len()});
            (kept, Some(note))
        }
        None => (all, None),
    };
    if selected.is_empty() {
        bail!("no records selected");
    }

    let table = load_table(&args.pinyin_table)?;
    let stats = length_phonetic_stats(&selected, &table, args.fuzzy)?;
    let value = json!({
        "spec_version": REPORT_SPEC_VERSION,
        "metric_definitions_sha256": metric_definitions_hash(),
        "row": if args.target_row { "target" } else { "hypothesis" },
        "fuzzy": args.fuzzy,
        "selection": discrepancy_note,
        "stats": stats,
        "equal_length_pct": 100.0 * stats.equal_length_rate,
        "non_homophone_pct": 100.0 * stats.non_homophone_rate,
        "non_homophone_error_pct": 100.0 * stats.non_homophone_error_ratio,
    });
    let mut rendered = serde_json::to_string_pretty(&value)?;
    rendered.push('\n');
    write_or_stdout(args.json.as_ref(), &rendered)?;
    Ok(0)
}

// ---------------------------------------------------------------------
// diagnose

#[derive(Args)]
pub struct DiagnoseArgs {
    #[arg(long)]
    model_dir: PathBuf,
    #[arg(long, default_value = "identity")]
    pretokenizer: Pretokenizer,
    /// Dataset with source and reference columns
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    json: Option<PathBuf>,
}

pub fn run_diagnose(args: DiagnoseArgs) -> Result<u8> {
    let model = load_model(&args.model_dir, args.pretokenizer)?;
    let loaded = load_records(Some(&args.data), None, None, None)?;
    log_skips(&loaded.ingested);
    let mut counts: BTreeMap<&str, usize> =
        [("aligned", 0), ("multi_to_one", 0), ("shifted_boundary", 0)].into();
    let mut total = 0usize;
    for (i, record) in loaded.ingested.records.iter().enumerate() {
        let reference = record
            .reference
            .as_deref()
            .with_context(|| format!("record {} has no reference column", i + 1))?;
        let d = diagnose_tokenization(&model, &record.source, reference)?;
        let key = match d.scenario {
            Scenario::Aligned => "aligned",
            Scenario::MultiToOne => "multi_to_one",
            Scenario::ShiftedBoundary => "shifted_boundary",
        };
        *counts.get_mut(key).unwrap() += 1;
        total += 1;
    }
    let value = json!({
        "spec_version": REPORT_SPEC_VERSION,
        "total": total,
        "scenarios": counts,
        "skipped_records": loaded.ingested.skipped(),
    });
    let mut rendered = serde_json::to_string_pretty(&value)?;
    rendered.push('\n');
    write_or_stdout(args.json.as_ref(), &rendered)?;
    Ok(0)
}

// ---------------------------------------------------------------------
// lm-train

#[derive(Args)]
pub struct LmTrainArgs {
    /// Training corpus, one sentence per line
    #[arg(long)]
    corpus: PathBuf,
    /// Model destination (binary)
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 3)]
    order: usize,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
    /// Interpolation weights, comma separated; uniform when omitted
    #[arg(long)]
    lambdas: Option<String>,
}

pub fn run_lm_train(args: LmTrainArgs) -> Result<u8> {
    let corpus = read_lines(&args.corpus)?;
    let lambdas: Vec<f64> = match &args.lambdas {
        Some(spec) => spec
            .split(',')
            .map(|s| s.trim().parse().with_context(|| format!("bad weight {s:?}")))
            .collect::<Result<_>>()?,
        None => vec![1.0 / args.order as f64; args.order],
    };
    let lm = train_lm(&corpus, args.order, args.alpha, &lambdas)?;
    let file = File::create(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    let mut writer = BufWriter::new(file);
    lm.save(&mut writer)?;
    writer.flush()?;
    println!(
        "trained order-{} model over {} characters ({} sentences)",
        lm.order(),
        lm.vocab_size(),
        corpus.iter().filter(|s| !s.is_empty()).count()
    );
    Ok(0)
}

// ---------------------------------------------------------------------
// correct

#[derive(Args)]
pub struct CorrectArgs {
    /// Trained language model file
    #[arg(long)]
    lm: PathBuf,
    #[arg(long, env = "CSC_PINYIN_TABLE")]
    pinyin_table: PathBuf,
    #[arg(long)]
    fuzzy: bool,
    /// Sentences to correct, one per line
    #[arg(long)]
    source: Option<PathBuf>,
    /// Dataset whose source column is corrected
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, default_value_t = 0.05)]
    epsilon: f64,
    #[arg(long, default_value_t = 8)]
    beam: usize,
    #[arg(long)]
    output: Option<PathBuf>,
}

pub fn run_correct(args: CorrectArgs) -> Result<u8> {
    let file = File::open(&args.lm).with_context(|| format!("opening {}", args.lm.display()))?;
    let lm = NgramLm::load(std::io::BufReader::new(file))?;
    let table = load_table(&args.pinyin_table)?;
    let confusion = ConfusionSet::build(&table, args.fuzzy);
    let channel = ChannelModel::new(args.epsilon)?;
    let sources: Vec<String> = match (&args.source, &args.data) {
        (Some(path), None) => read_lines(path)?,
        (None, Some(path)) => {
            let loaded = load_records(Some(path), None, None, None)?;
            log_skips(&loaded.ingested);
            loaded.ingested.records.into_iter().map(|r| r.source).collect()
        }
        _ => bail!("exactly one of --source or --data is required"),
    };
    let mut out = String::new();
    for source in &sources {
        out.push_str(&correct(&lm, &channel, &confusion, source, args.beam)?);
        out.push('\n');
    }
    write_or_stdout(args.output.as_ref(), &out)?;
    Ok(0)
}

// ---------------------------------------------------------------------
// embed-prune

#[derive(Args)]
pub struct EmbedPruneArgs {
    /// Embedding matrix file (EMB1 format)
    #[arg(long)]
    embedding: PathBuf,
    /// id_map.tsv produced by surgery
    #[arg(long)]
    id_map: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

pub fn run_embed_prune(args: EmbedPruneArgs) -> Result<u8> {
    let file = File::open(&args.embedding)
        .with_context(|| format!("opening {}", args.embedding.display()))?;
    let matrix = read_embedding(std::io::BufReader::new(file))?;
    let id_map_text = std::fs::read_to_string(&args.id_map)
        .with_context(|| format!("reading {}", args.id_map.display()))?;
    let id_map = parse_id_map(&id_map_text)?;
    let pruned = embed_prune(&matrix, &id_map)?;
    let out = File::create(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let mut writer = BufWriter::new(out);
    write_embedding(&mut writer, &pruned)?;
    writer.flush()?;
    println!("{} x {} -> {} x {}", matrix.rows, matrix.dim, pruned.rows, pruned.dim);
    Ok(0)
}
