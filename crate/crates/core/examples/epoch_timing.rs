//! Times one training epoch (forward, backward, Adam step) as the number of
//! sequences grows, with the token vocabulary held fixed.
//!
//!     cargo run --release --example epoch_timing

use std::sync::Arc;
use std::time::Instant;

use seq_hygan::model::{forward, GraphInputs, ModelConfig, ModelParameters, Mode, NodeInit};
use seq_hygan::numerics::{AdamConfig, LossTargets};
use seq_hygan::synth::{planted_motif, PlantedMotifConfig};
use seq_hygan::tokenize::{tokenize_corpus, TokenizerSpec};

fn main() -> seq_hygan::Result<()> {
    for sequences in [200, 400, 800] {
        let corpus = planted_motif(&PlantedMotifConfig {
            sequences,
            ..Default::default()
        })?
        .corpus;
        let seqs: Vec<&str> = corpus.sequences().collect();
        let tok = tokenize_corpus(&seqs, &TokenizerSpec::Kmer { k: 5 })?;
        let hg = seq_hygan::hypergraph::build_hypergraph(&corpus, &tok.token_lists())?;
        let inputs = GraphInputs::one_hot(&hg, NodeInit::EdgeMean)?;
        let cfg = ModelConfig::new(hg.num_edges(), 64, hg.num_classes());
        let mut params = ModelParameters::init(&cfg, inputs.node_features.cols(), 0)?;
        let targets = Arc::new(LossTargets {
            labels: hg.labels().to_vec(),
            mask: vec![true; hg.num_edges()],
            class_weights: vec![1.0; hg.num_classes()],
        });
        let adam = AdamConfig::new(1e-3, 0.0);
        let mut t_fwd = 0.0;
        let mut t_bwd = 0.0;
        let reps = 10;
        for epoch in 0..reps {
            let t0 = Instant::now();
            let pass = forward(&hg, &inputs, &params, &cfg, Mode::Train { dropout_seed: epoch })?;
            let t1 = Instant::now();
            let (_, grads) = pass.loss_and_grads(targets.clone())?;
            params.store_mut().adam_step(&grads, &adam)?;
            t_fwd += (t1 - t0).as_secs_f64();
            t_bwd += t1.elapsed().as_secs_f64();
        }
        let s = hg.stats();
        println!(
            "m={:4} n={:5} nnz={:6}  forward {:7.2} ms  backward+step {:7.2} ms",
            s.m,
            s.n,
            s.nnz,
            1e3 * t_fwd / reps as f64,
            1e3 * t_bwd / reps as f64
        );
    }
    Ok(())
}
