//! Planted-motif corpora: each class embeds its own motifs, and every
//! sequence also carries motifs drawn from a pool shared by all classes.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::LabeledCorpus;
use crate::error::{Error, Result};
use crate::seed;

const ALPHABET: &[u8] = b"ACGT";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantedMotifConfig {
    pub sequences: usize,
    pub classes: usize,
    pub motif_len: usize,
    pub motifs_per_class: usize,
    /// Class motifs inserted into each sequence.
    pub motif_copies: usize,
    /// Size of the shared distractor pool.
    pub distractors: usize,
    /// Distractors inserted into each sequence.
    pub distractor_copies: usize,
    /// Random filler segments between the planted pieces.
    pub filler_segments: usize,
    pub filler_len: usize,
    pub seed: u64,
}

impl Default for PlantedMotifConfig {
    fn default() -> Self {
        PlantedMotifConfig {
            sequences: 200,
            classes: 2,
            motif_len: 8,
            motifs_per_class: 3,
            motif_copies: 2,
            distractors: 6,
            distractor_copies: 2,
            filler_segments: 1,
            filler_len: 8,
            seed: 17,
        }
    }
}

impl PlantedMotifConfig {
    /// A single class motif among six shared distractors per sequence.
    pub fn distractor_heavy() -> Self {
        PlantedMotifConfig {
            motif_copies: 1,
            distractors: 12,
            distractor_copies: 6,
            ..Default::default()
        }
    }
}

/// The generated corpus together with the planted strings.
#[derive(Debug, Clone)]
pub struct PlantedMotifCorpus {
    pub corpus: LabeledCorpus,
    /// `class_motifs[c]` are the motifs of class `c`.
    pub class_motifs: Vec<Vec<String>>,
    pub distractors: Vec<String>,
}

fn random_string<R: Rng>(len: usize, rng: &mut R) -> String {
    (0..len).map(|_| ALPHABET[rng.gen_range(0..ALPHABET.len())] as char).collect()
}

pub fn planted_motif(cfg: &PlantedMotifConfig) -> Result<PlantedMotifCorpus> {
    if cfg.classes < 2 || cfg.sequences < cfg.classes || cfg.motif_len == 0 || cfg.motifs_per_class == 0 {
        return Err(Error::InvalidArgument(format!("degenerate planted-motif configuration {cfg:?}")));
    }
    let mut rng = seed::rng(cfg.seed);
    let mut used = std::collections::HashSet::new();
    let mut fresh = |rng: &mut rand_chacha::ChaCha8Rng| loop {
        let s = random_string(cfg.motif_len, rng);
        if used.insert(s.clone()) {
            return s;
        }
    };
    let class_motifs: Vec<Vec<String>> = (0..cfg.classes)
        .map(|_| (0..cfg.motifs_per_class).map(|_| fresh(&mut rng)).collect())
        .collect();
    let distractors: Vec<String> = (0..cfg.distractors).map(|_| fresh(&mut rng)).collect();

    let mut pairs = Vec::with_capacity(cfg.sequences);
    for i in 0..cfg.sequences {
        let class = i % cfg.classes;
        let mut pieces: Vec<String> = Vec::new();
        for _ in 0..cfg.motif_copies {
            pieces.push(class_motifs[class].choose(&mut rng).expect("non-empty").clone());
        }
        if !distractors.is_empty() {
            for _ in 0..cfg.distractor_copies {
                pieces.push(distractors.choose(&mut rng).expect("non-empty").clone());
            }
        }
        for _ in 0..cfg.filler_segments {
            pieces.push(random_string(cfg.filler_len, &mut rng));
        }
        pieces.shuffle(&mut rng);
        pairs.push((pieces.concat(), format!("class{class}")));
    }
    Ok(PlantedMotifCorpus {
        corpus: LabeledCorpus::from_pairs(pairs)?,
        class_motifs,
        distractors,
    })
}

/// CSV text (`sequence,label`) of a corpus.
pub fn to_csv(corpus: &LabeledCorpus) -> String {
    let mut out = String::from("sequence,label\n");
    for r in corpus.records() {
        out.push_str(&format!("{},{}\n", r.symbols, r.label));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_and_balance() {
        let p = planted_motif(&PlantedMotifConfig::default()).unwrap();
        assert_eq!(p.corpus.len(), 200);
        assert_eq!(p.corpus.label_counts(), vec![100, 100]);
        let expected_len = 8 * (2 + 2 + 1);
        assert!(p.corpus.sequences().all(|s| s.len() == expected_len));
    }

    #[test]
    fn every_sequence_holds_a_motif_of_its_class() {
        let p = planted_motif(&PlantedMotifConfig::default()).unwrap();
        let labels = p.corpus.label_indices();
        for (s, &c) in p.corpus.sequences().zip(&labels) {
            assert!(p.class_motifs[c].iter().any(|m| s.contains(m.as_str())));
        }
    }

    #[test]
    fn planted_strings_are_distinct() {
        let p = planted_motif(&PlantedMotifConfig::distractor_heavy()).unwrap();
        let mut all: Vec<&String> = p.class_motifs.iter().flatten().chain(&p.distractors).collect();
        let n = all.len();
        all.sort();
        all.dedup();
        assert_eq!(all.len(), n);
    }

    #[test]
    fn seeded() {
        let a = planted_motif(&PlantedMotifConfig::default()).unwrap();
        let b = planted_motif(&PlantedMotifConfig::default()).unwrap();
        assert_eq!(a.corpus, b.corpus);
        let c = planted_motif(&PlantedMotifConfig { seed: 3, ..Default::default() }).unwrap();
        assert_ne!(a.corpus, c.corpus);
    }

    #[test]
    fn shipped_fixture_matches_generator() {
        let fixture = include_str!("../fixtures/planted_motif.csv");
        let p = planted_motif(&PlantedMotifConfig::default()).unwrap();
        assert_eq!(fixture, to_csv(&p.corpus));
    }
}
