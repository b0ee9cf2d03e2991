//! Trains on the planted-motif corpus, then ranks the members of a few test
//! sequences by node-level attention and marks which are planted motifs.
//!
//!     cargo run --release --example inspect_attention

use seq_hygan::model::{forward, top_members, Mode};
use seq_hygan::synth::{planted_motif, PlantedMotifConfig};
use seq_hygan::tokenize::TokenizerSpec;
use seq_hygan::trainer::{run_experiment, ExperimentOptions, TrainConfig};

fn main() -> seq_hygan::Result<()> {
    let planted = planted_motif(&PlantedMotifConfig::default())?;
    let cfg = TrainConfig { repeats: 1, ..TrainConfig::default() };
    let exp = run_experiment(&planted.corpus, &TokenizerSpec::Kmer { k: 5 }, &cfg, &ExperimentOptions::default())?;
    let model_cfg = cfg.model_config(&exp.hypergraph);
    let trace = forward(&exp.hypergraph, &exp.inputs, &exp.params, &model_cfg, Mode::Eval)?.trace;

    let motif_of = |token: &str| {
        planted
            .class_motifs
            .iter()
            .enumerate()
            .find_map(|(c, ms)| ms.iter().any(|m| m.contains(token)).then(|| format!("class{c} motif")))
            .or_else(|| planted.distractors.iter().any(|d| d.contains(token)).then(|| "distractor".to_string()))
            .unwrap_or_default()
    };
    for &id in exp.split.train_ids.iter().take(2).chain(exp.split.test_ids.iter().take(2)) {
        let hg = &exp.hypergraph;
        println!("sequence {id} ({})", hg.label_names()[hg.labels()[id]]);
        for (node, delta) in top_members(hg, &trace, id, 5)? {
            let name = &hg.node_names()[node];
            println!("  {name}\t{delta:.4}\t{}", motif_of(name));
        }
    }
    Ok(())
}
