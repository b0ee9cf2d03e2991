//! Trains on the planted-motif corpus with the default configuration and
//! prints per-repeat test scores.
//!
//!     cargo run --release --example train_planted_motif

use seq_hygan::synth::{planted_motif, PlantedMotifConfig};
use seq_hygan::tokenize::TokenizerSpec;
use seq_hygan::trainer::{run_experiment, ExperimentOptions, TrainConfig};

fn main() -> seq_hygan::Result<()> {
    let corpus = planted_motif(&PlantedMotifConfig::default())?.corpus;
    let cfg = TrainConfig::default();
    let exp = run_experiment(&corpus, &TokenizerSpec::Kmer { k: 5 }, &cfg, &ExperimentOptions::default())?;
    let g = &exp.report.graph;
    println!("hypergraph n={} m={} nnz={}", g.n, g.m, g.nnz);
    for r in &exp.report.repeats {
        println!(
            "repeat {} best_epoch={} epochs={} test macro f1={:.4} accuracy={:.4}",
            r.repeat, r.best_epoch, r.epochs_run, r.test.macro_avg.f1, r.test.accuracy
        );
    }
    let m = exp.report.mean.macro_avg;
    println!("mean precision={:.4} recall={:.4} f1={:.4}", m.precision, m.recall, m.f1);
    Ok(())
}
