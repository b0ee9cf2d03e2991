//! Writes a planted-motif corpus as `sequence,label` CSV.
//!
//!     cargo run --example planted_motif_corpus > motifs.csv
//!     cargo run --example planted_motif_corpus -- --heavy 42 > heavy.csv
//!
//! The shipped `fixtures/planted_motif.csv` is the default configuration.

use seq_hygan::synth::{planted_motif, to_csv, PlantedMotifConfig};

fn main() -> seq_hygan::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let heavy = args.iter().any(|a| a == "--heavy");
    let seed = args.iter().find_map(|a| a.parse::<u64>().ok());

    let mut cfg = if heavy {
        PlantedMotifConfig::distractor_heavy()
    } else {
        PlantedMotifConfig::default()
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let p = planted_motif(&cfg)?;
    for (c, motifs) in p.class_motifs.iter().enumerate() {
        eprintln!("class{c} motifs: {}", motifs.join(" "));
    }
    eprintln!("distractors: {}", p.distractors.join(" "));
    print!("{}", to_csv(&p.corpus));
    Ok(())
}
