//! Builds the sequence hypergraph of a small corpus and writes it to disk.
//!
//!     cargo run --example build_hypergraph -- /tmp/toy

use seq_hygan::corpus::LabeledCorpus;
use seq_hygan::hypergraph::{build_hypergraph, SequenceHypergraph};
use seq_hygan::tokenize::{tokenize_corpus, TokenizerSpec};

fn main() -> seq_hygan::Result<()> {
    let corpus = LabeledCorpus::from_pairs([
        ("ACGTACGA", "promoter"),
        ("TTGACGTA", "enhancer"),
        ("ACGTTTGA", "promoter"),
    ])?;
    let seqs: Vec<&str> = corpus.sequences().collect();
    let tokens = tokenize_corpus(&seqs, &TokenizerSpec::Kmer { k: 3 })?;
    let hg = build_hypergraph(&corpus, &tokens.token_lists())?;

    let s = hg.stats();
    println!("n={} m={} nnz={} kappa={:.3} chi={:.3}", s.n, s.m, s.nnz, s.kappa, s.chi);
    for (j, members) in hg.named_hyperedges().iter().enumerate() {
        let members: Vec<&str> = members.iter().copied().collect();
        println!("e{j} [{}]: {}", hg.label_names()[hg.labels()[j]], members.join(" "));
    }

    if let Some(prefix) = std::env::args().nth(1) {
        hg.save(&prefix)?;
        let back = SequenceHypergraph::load(&prefix)?;
        assert_eq!(back.named_hyperedges(), hg.named_hyperedges());
        println!("saved to {prefix}.*");
    }
    Ok(())
}
