//! Small hyperparameter grid on one split of the planted-motif corpus.
//!
//!     cargo run --release --example grid_search

use seq_hygan::corpus::make_split;
use seq_hygan::hypergraph::build_hypergraph;
use seq_hygan::model::GraphInputs;
use seq_hygan::synth::{planted_motif, PlantedMotifConfig};
use seq_hygan::tokenize::{tokenize_corpus, TokenizerSpec};
use seq_hygan::trainer::{grid_search, HyperGrid, TrainConfig};

fn main() -> seq_hygan::Result<()> {
    let corpus = planted_motif(&PlantedMotifConfig::default())?.corpus;
    let seqs: Vec<&str> = corpus.sequences().collect();
    let tokens = tokenize_corpus(&seqs, &TokenizerSpec::Kmer { k: 5 })?;
    let hg = build_hypergraph(&corpus, &tokens.token_lists())?;
    let base = TrainConfig { max_epochs: 150, patience: 30, ..TrainConfig::default() };
    let inputs = GraphInputs::one_hot(&hg, base.node_init)?;
    let split = make_split(&corpus, base.split_ratio, 0)?;
    let grid = HyperGrid {
        lr: vec![1e-2, 5e-3],
        hidden: vec![32, 64],
        dropout: vec![0.1, 0.5],
        weight_decay: vec![1e-3],
    };
    let res = grid_search(&hg, &inputs, &split, &base, &grid, 0)?;
    println!("lr\thidden\tdropout\twd\tval_f1\tval_loss\tbest_epoch");
    for t in &res.trials {
        match (t.val_f1, t.val_loss, t.best_epoch) {
            (Some(f1), Some(loss), Some(epoch)) => println!(
                "{}\t{}\t{}\t{}\t{f1:.4}\t{loss:.4}\t{epoch}",
                t.lr, t.hidden, t.dropout, t.weight_decay
            ),
            _ => println!("{}\t{}\t{}\t{}\tfailed: {}", t.lr, t.hidden, t.dropout, t.weight_decay, t.error.as_deref().unwrap_or("")),
        }
    }
    let b = res.best;
    println!("chosen lr={} hidden={} dropout={} weight_decay={}", b.lr, b.hidden, b.dropout, b.weight_decay);
    Ok(())
}
