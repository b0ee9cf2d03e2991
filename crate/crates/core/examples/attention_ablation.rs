//! Attention on versus mean aggregation on the distractor-heavy corpus.
//!
//!     cargo run --release --example attention_ablation -- 17

use seq_hygan::synth::{planted_motif, PlantedMotifConfig};
use seq_hygan::tokenize::TokenizerSpec;
use seq_hygan::trainer::{run_experiment, ExperimentOptions, TrainConfig};

fn main() -> seq_hygan::Result<()> {
    let mut corpus_cfg = PlantedMotifConfig::distractor_heavy();
    if let Some(seed) = std::env::args().nth(1).and_then(|a| a.parse().ok()) {
        corpus_cfg.seed = seed;
    }
    let corpus = planted_motif(&corpus_cfg)?.corpus;
    for attention in [true, false] {
        let cfg = TrainConfig { attention, ..TrainConfig::default() };
        let exp = run_experiment(&corpus, &TokenizerSpec::Kmer { k: 5 }, &cfg, &ExperimentOptions::default())?;
        let per: Vec<String> = exp.report.repeats.iter().map(|r| format!("{:.3}", r.test.macro_avg.f1)).collect();
        println!(
            "{:<14} mean f1={:.4} [{}]",
            if attention { "attention" } else { "mean" },
            exp.report.mean.macro_avg.f1,
            per.join(" ")
        );
    }
    Ok(())
}
