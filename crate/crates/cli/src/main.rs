//! Batch command-line surface for the toolkit: tokenizer surgery and
//! verification, dataset repair and scoring, tokenization diagnosis,
//! language-model training, and noisy-channel correction.

mod commands;
mod ingest;
mod ranges;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::*;

#[derive(Parser)]
#[command(name = "csc", version, about = "Character-level tokenization and spell-checking toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Filter multi-character Chinese tokens out of a BPE model
    Surgery(SurgeryArgs),
    /// Tokenize a text file and dump token spans
    Tokenize(TokenizeArgs),
    /// Check the one-token-per-Chinese-character property over a corpus
    Verify(VerifyArgs),
    /// Force hypotheses to source length by cancelling insertions and deletions
    Repair(RepairArgs),
    /// Score hypotheses against references (detection/correction P, R, F1)
    Eval(EvalArgs),
    /// Length and phonetic statistics over raw hypotheses
    Stats(StatsArgs),
    /// Classify token alignment scenarios between sources and references
    Diagnose(DiagnoseArgs),
    /// Train a character n-gram language model
    LmTrain(LmTrainArgs),
    /// Correct sentences character by character
    Correct(CorrectArgs),
    /// Select embedding rows through an id map
    EmbedPrune(EmbedPruneArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Surgery(args) => run_surgery(args),
        Command::Tokenize(args) => run_tokenize(args),
        Command::Verify(args) => run_verify(args),
        Command::Repair(args) => run_repair(args),
        Command::Eval(args) => run_eval(args),
        Command::Stats(args) => run_stats(args),
        Command::Diagnose(args) => run_diagnose(args),
        Command::LmTrain(args) => run_lm_train(args),
        Command::Correct(args) => run_correct(args),
        Command::EmbedPrune(args) => run_embed_prune(args),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
