//! k-mer windows of a short read and the De Bruijn graph they induce.
//!
//!     cargo run --example kmer_and_debruijn -- ATGGCGTGCA 3

use seq_hygan::tokenize::{build_debruijn, decompose_kmer};

fn main() -> seq_hygan::Result<()> {
    let mut args = std::env::args().skip(1);
    let sequence = args.next().unwrap_or_else(|| "ATGGCGTGCA".into());
    let k: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(3);

    let windows = decompose_kmer(&sequence, k)?;
    println!("{} windows of length {k}: {}", windows.len(), windows.join(" "));

    let g = build_debruijn(&sequence, k)?;
    println!("{} distinct k-mers, {} edges", g.nodes.len(), g.edges.len());
    for (a, b) in g.edge_labels() {
        println!("  {a} -> {b}");
    }
    Ok(())
}
