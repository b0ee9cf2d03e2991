//! Learns an ESPF vocabulary from a handful of peptides and segments a new one.
//!
//!     cargo run --example espf_vocabulary -- 2

use seq_hygan::tokenize::{encode_espf, train_espf_segmented, DEFAULT_MAX_MERGES};

fn main() -> seq_hygan::Result<()> {
    let beta: u64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(2);
    let corpus = [
        "GLFDIVKKVVGALGSL",
        "GLFDIIKKIAESF",
        "FLPLIGRVLSGIL",
        "GLLDIVKKVVGAFGSL",
        "FLPIIAKLLSGLL",
    ];
    let trained = train_espf_segmented(&corpus, beta, DEFAULT_MAX_MERGES)?;
    println!("{} merges at beta_freq={beta}", trained.vocab.merges().len());
    for m in trained.vocab.merges() {
        println!("  {} + {} (count {})", m.left, m.right, m.frequency);
    }
    for (s, seg) in corpus.iter().zip(&trained.segmentations) {
        println!("{s}: {}", seg.join(" "));
    }
    let probe = "GLFDIVKKIAGSL";
    println!("{probe}: {}", encode_espf(probe, &trained.vocab)?.tokens.join(" "));
    Ok(())
}
