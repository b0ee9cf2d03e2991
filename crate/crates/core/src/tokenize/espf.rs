//! Frequent-substructure vocabulary mining by iterated adjacent-pair merging.
//!
//! Training starts from single characters. Each round finds the most frequent
//! adjacent token pair across the whole corpus (occurrence counts, ties broken
//! by the lexicographically smallest `(left, right)`), stops if that count is
//! below `beta_freq`, and otherwise rewrites every occurrence left to right,
//! so `aaa` with pair `(a, a)` becomes `[aa, a]`.
//!
//! The trainer keeps incremental pair counts plus a per-pair occurrence index,
//! so a round costs time proportional to the occurrences it touches rather
//! than to the corpus size.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap, HashMap};

use crate::error::{Error, Result};

use super::{Merge, SubseqVocabulary, TokenizerSpec, VocabEntry};

const NIL: u32 = u32::MAX;

/// Result of a training run: the vocabulary plus the final segmentation of
/// every training sequence.
#[derive(Debug, Clone)]
pub struct EspfTraining {
    pub vocab: SubseqVocabulary,
    pub segmentations: Vec<Vec<String>>,
}

pub fn train_espf<S: AsRef<str>>(corpus: &[S], beta_freq: u64, max_merges: usize) -> Result<SubseqVocabulary> {
    Ok(train_espf_segmented(corpus, beta_freq, max_merges)?.vocab)
}

pub fn train_espf_segmented<S: AsRef<str>>(
    corpus: &[S],
    beta_freq: u64,
    max_merges: usize,
) -> Result<EspfTraining> {
    if corpus.is_empty() || corpus.iter().all(|s| s.as_ref().is_empty()) {
        return Err(Error::InvalidArgument("ESPF needs a non-empty corpus".into()));
    }
    if beta_freq == 0 {
        return Err(Error::InvalidArgument("beta_freq must be at least 1".into()));
    }
    if max_merges == 0 {
        return Err(Error::InvalidArgument("the merge budget must be at least 1".into()));
    }
    let mut state = TrainState::new(corpus);
    let mut merges = Vec::new();
    while merges.len() < max_merges {
        let Some((pair, freq)) = state.best_pair() else { break };
        if freq < beta_freq {
            break;
        }
        let merged = state.merge(pair);
        merges.push(Merge {
            left: state.symbols[pair.0 as usize].clone(),
            right: state.symbols[pair.1 as usize].clone(),
            frequency: freq,
        });
        debug_assert_eq!(state.symbols[merged as usize], format!("{}{}", merges.last().unwrap().left, merges.last().unwrap().right));
    }

    let mut char_freq: BTreeMap<char, u64> = BTreeMap::new();
    for s in corpus {
        for c in s.as_ref().chars() {
            *char_freq.entry(c).or_default() += 1;
        }
    }
    let alphabet: Vec<VocabEntry> = char_freq
        .into_iter()
        .map(|(c, f)| VocabEntry {
            token: c.to_string(),
            frequency: f,
        })
        .collect();
    let vocab = SubseqVocabulary::from_merges(
        TokenizerSpec::Espf { beta_freq, max_merges },
        alphabet,
        merges,
    );
    let segmentations = state.segmentations();
    Ok(EspfTraining { vocab, segmentations })
}

/// Max-heap key: highest count first, then the lexicographically smallest pair.
#[derive(Debug, PartialEq, Eq)]
struct Candidate {
    count: u64,
    key: Reverse<(String, String)>,
    pair: (u32, u32),
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.count.cmp(&other.count).then_with(|| self.key.cmp(&other.key))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Seq {
    tokens: Vec<u32>,
    next: Vec<u32>,
    prev: Vec<u32>,
    alive: Vec<bool>,
}

struct TrainState {
    symbols: Vec<String>,
    ids: HashMap<String, u32>,
    seqs: Vec<Seq>,
    counts: HashMap<(u32, u32), u64>,
    // Every position where a pair was ever created; validated on use.
    occurrences: HashMap<(u32, u32), Vec<(u32, u32)>>,
    heap: BinaryHeap<Candidate>,
}

impl TrainState {
    fn new<S: AsRef<str>>(corpus: &[S]) -> Self {
        let mut state = TrainState {
            symbols: Vec::new(),
            ids: HashMap::new(),
            seqs: Vec::with_capacity(corpus.len()),
            counts: HashMap::new(),
            occurrences: HashMap::new(),
            heap: BinaryHeap::new(),
        };
        for (s_idx, s) in corpus.iter().enumerate() {
            let tokens: Vec<u32> = s.as_ref().chars().map(|c| state.intern(&c.to_string())).collect();
            let len = tokens.len() as u32;
            for w in 0..tokens.len().saturating_sub(1) {
                let pair = (tokens[w], tokens[w + 1]);
                *state.counts.entry(pair).or_default() += 1;
                state.occurrences.entry(pair).or_default().push((s_idx as u32, w as u32));
            }
            state.seqs.push(Seq {
                next: (1..=len).map(|i| if i < len { i } else { NIL }).collect(),
                prev: (0..len).map(|i| if i == 0 { NIL } else { i - 1 }).collect(),
                alive: vec![true; tokens.len()],
                tokens,
            });
        }
        let pairs: Vec<(u32, u32)> = state.counts.keys().copied().collect();
        for pair in pairs {
            state.push_candidate(pair);
        }
        state
    }

    fn intern(&mut self, token: &str) -> u32 {
        if let Some(&id) = self.ids.get(token) {
            return id;
        }
        let id = self.symbols.len() as u32;
        self.symbols.push(token.to_string());
        self.ids.insert(token.to_string(), id);
        id
    }

    fn push_candidate(&mut self, pair: (u32, u32)) {
        let count = self.counts.get(&pair).copied().unwrap_or(0);
        if count > 0 {
            self.heap.push(Candidate {
                count,
                key: Reverse((self.symbols[pair.0 as usize].clone(), self.symbols[pair.1 as usize].clone())),
                pair,
            });
        }
    }

    fn best_pair(&mut self) -> Option<((u32, u32), u64)> {
        while let Some(top) = self.heap.pop() {
            if self.counts.get(&top.pair).copied().unwrap_or(0) == top.count {
                return Some((top.pair, top.count));
            }
        }
        None
    }

    fn decrement(&mut self, pair: (u32, u32)) {
        let c = self.counts.get_mut(&pair).expect("decremented pair was counted");
        *c -= 1;
        if *c == 0 {
            self.counts.remove(&pair);
        }
    }

    fn increment(&mut self, pair: (u32, u32), seq: u32, pos: u32) {
        *self.counts.entry(pair).or_default() += 1;
        self.occurrences.entry(pair).or_default().push((seq, pos));
    }

    /// Rewrites every occurrence of `pair` left to right; returns the merged token id.
    fn merge(&mut self, pair: (u32, u32)) -> u32 {
        let (a, b) = pair;
        let merged_str = format!("{}{}", self.symbols[a as usize], self.symbols[b as usize]);
        let merged = self.intern(&merged_str);

        let mut sites = self.occurrences.remove(&pair).unwrap_or_default();
        sites.sort_unstable();
        sites.dedup();

        let mut touched: Vec<(u32, u32)> = Vec::new();
        for (s, p) in sites {
            let seq = &self.seqs[s as usize];
            let pi = p as usize;
            if !seq.alive[pi] || seq.tokens[pi] != a {
                continue;
            }
            let q = seq.next[pi];
            if q == NIL || seq.tokens[q as usize] != b {
                continue;
            }
            let x = seq.prev[pi];
            let y = seq.next[q as usize];
            let x_tok = (x != NIL).then(|| seq.tokens[x as usize]);
            let y_tok = (y != NIL).then(|| seq.tokens[y as usize]);

            if let Some(xt) = x_tok {
                self.decrement((xt, a));
                touched.push((xt, a));
            }
            self.decrement((a, b));
            if let Some(yt) = y_tok {
                self.decrement((b, yt));
                touched.push((b, yt));
            }

            let seq = &mut self.seqs[s as usize];
            seq.tokens[pi] = merged;
            seq.alive[q as usize] = false;
            seq.next[pi] = y;
            if y != NIL {
                seq.prev[y as usize] = p;
            }

            if let Some(xt) = x_tok {
                self.increment((xt, merged), s, x);
                touched.push((xt, merged));
            }
            if let Some(yt) = y_tok {
                self.increment((merged, yt), s, p);
                touched.push((merged, yt));
            }
        }
        touched.push(pair);
        touched.sort_unstable();
        touched.dedup();
        for t in touched {
            self.push_candidate(t);
        }
        merged
    }

    fn segmentations(&self) -> Vec<Vec<String>> {
        self.seqs
            .iter()
            .map(|seq| {
                let mut out = Vec::new();
                let mut i = if seq.tokens.is_empty() { NIL } else { 0 };
                while i != NIL {
                    out.push(self.symbols[seq.tokens[i as usize] as usize].clone());
                    i = seq.next[i as usize];
                }
                out
            })
            .collect()
    }
}

/// Segmentation of one sequence under a learned vocabulary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Encoding {
    pub tokens: Vec<String>,
    /// Characters absent from the vocabulary's alphabet; each became its own token.
    pub unknown: Vec<char>,
}

/// Replays the learned merges in their learned order. Repeatedly applying the
/// lowest-ranked merge present, among merges ranked after the last one
/// applied, is the same as walking the whole merge list in order.
pub fn encode_espf(sequence: &str, vocab: &SubseqVocabulary) -> Result<Encoding> {
    if !matches!(vocab.method(), TokenizerSpec::Espf { .. }) {
        return Err(Error::InvalidArgument("encode_espf needs an ESPF vocabulary".into()));
    }
    let ranks = vocab.merge_ranks();
    let mut unknown = Vec::new();
    let mut tokens: Vec<String> = sequence
        .chars()
        .map(|c| {
            let t = c.to_string();
            if !vocab.contains_symbol(&t) && !unknown.contains(&c) {
                unknown.push(c);
            }
            t
        })
        .collect();
    if !unknown.is_empty() {
        log::warn!("out-of-vocabulary symbols {unknown:?} kept as single tokens");
    }

    let mut floor: Option<usize> = None;
    loop {
        let next = tokens
            .windows(2)
            .filter_map(|w| ranks.get(&(w[0].as_str(), w[1].as_str())).copied())
            .filter(|&r| floor.is_none_or(|f| r > f))
            .min();
        let Some(rank) = next else { break };
        let merge = &vocab.merges()[rank];
        let mut out = Vec::with_capacity(tokens.len());
        let mut i = 0;
        while i < tokens.len() {
            if i + 1 < tokens.len() && tokens[i] == merge.left && tokens[i + 1] == merge.right {
                out.push(format!("{}{}", merge.left, merge.right));
                i += 2;
            } else {
                out.push(std::mem::take(&mut tokens[i]));
                i += 1;
            }
        }
        tokens = out;
        floor = Some(rank);
    }
    Ok(Encoding { tokens, unknown })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// From-scratch trainer: recounts every adjacent pair each round.
    pub(crate) fn brute_force(corpus: &[String], beta: u64, max_merges: usize) -> (Vec<(String, String, u64)>, Vec<Vec<String>>) {
        let mut seqs: Vec<Vec<String>> = corpus.iter().map(|s| s.chars().map(|c| c.to_string()).collect()).collect();
        let mut merges = Vec::new();
        for _ in 0..max_merges {
            let mut counts: BTreeMap<(String, String), u64> = BTreeMap::new();
            for s in &seqs {
                for w in s.windows(2) {
                    *counts.entry((w[0].clone(), w[1].clone())).or_default() += 1;
                }
            }
            // BTreeMap iterates pairs in lexicographic order; keep the first max.
            let mut best: Option<(&(String, String), u64)> = None;
            for (p, &c) in &counts {
                if best.is_none_or(|(_, bc)| c > bc) {
                    best = Some((p, c));
                }
            }
            let Some(((a, b), f)) = best.map(|(p, c)| (p.clone(), c)) else { break };
            if f < beta {
                break;
            }
            for s in seqs.iter_mut() {
                let mut out = Vec::new();
                let mut i = 0;
                while i < s.len() {
                    if i + 1 < s.len() && s[i] == a && s[i + 1] == b {
                        out.push(format!("{a}{b}"));
                        i += 2;
                    } else {
                        out.push(s[i].clone());
                        i += 1;
                    }
                }
                *s = out;
            }
            merges.push((a, b, f));
        }
        (merges, seqs)
    }

    fn merge_list(v: &SubseqVocabulary) -> Vec<(String, String, u64)> {
        v.merges().iter().map(|m| (m.left.clone(), m.right.clone(), m.frequency)).collect()
    }

    #[test]
    fn aab_corpus_merges() {
        let corpus = ["aab", "aab", "aab"];
        let t = train_espf_segmented(&corpus, 2, 10).unwrap();
        assert_eq!(
            merge_list(&t.vocab),
            [("a".into(), "a".into(), 3), ("aa".into(), "b".into(), 3)]
        );
        let tokens: Vec<&str> = t.vocab.entries().iter().map(|e| e.token.as_str()).collect();
        assert_eq!(tokens, ["a", "b", "aa", "aab"]);
        assert!(t.segmentations.iter().all(|s| s == &["aab"]));
    }

    #[test]
    fn below_threshold_no_merges() {
        let v = train_espf(&["ab"], 2, 10).unwrap();
        assert!(v.merges().is_empty());
        let tokens: Vec<&str> = v.entries().iter().map(|e| e.token.as_str()).collect();
        assert_eq!(tokens, ["a", "b"]);
    }

    #[test]
    fn overlapping_run_is_greedy() {
        let t = train_espf_segmented(&["aaa"], 1, 1).unwrap();
        assert_eq!(merge_list(&t.vocab), [("a".into(), "a".into(), 2)]);
        assert_eq!(t.segmentations[0], ["aa", "a"]);
    }

    #[test]
    fn merge_budget_is_respected() {
        let v = train_espf(&["abcdabcdabcd"], 1, 2).unwrap();
        assert_eq!(v.merges().len(), 2);
    }

    #[test]
    fn errors() {
        let empty: [&str; 0] = [];
        assert!(train_espf(&empty, 2, 10).is_err());
        assert!(train_espf(&[""], 2, 10).is_err());
        assert!(train_espf(&["ab"], 0, 10).is_err());
    }

    #[test]
    fn encode_examples() {
        let v = train_espf(&["aab", "aab", "aab"], 2, 10).unwrap();
        assert_eq!(encode_espf("aab", &v).unwrap().tokens, ["aab"]);
        assert_eq!(encode_espf("ba", &v).unwrap().tokens, ["b", "a"]);
        assert_eq!(encode_espf("aabaab", &v).unwrap().tokens, ["aab", "aab"]);
    }

    #[test]
    fn encode_flags_unknown_symbols() {
        let v = train_espf(&["aab", "aab", "aab"], 2, 10).unwrap();
        let e = encode_espf("aaxb", &v).unwrap();
        assert_eq!(e.tokens, ["aa", "x", "b"]);
        assert_eq!(e.unknown, ['x']);
    }

    #[test]
    fn encode_does_not_revisit_earlier_merges() {
        // literal walk over the merge list as the reference
        let corpus = ["bcbcbc", "abab", "abc"];
        let v = train_espf(&corpus, 2, 10).unwrap();
        for s in ["abc", "abcbc", "ababc", "cabcab"] {
            let mut toks: Vec<String> = s.chars().map(|c| c.to_string()).collect();
            for m in v.merges() {
                let mut out = Vec::new();
                let mut i = 0;
                while i < toks.len() {
                    if i + 1 < toks.len() && toks[i] == m.left && toks[i + 1] == m.right {
                        out.push(format!("{}{}", m.left, m.right));
                        i += 2;
                    } else {
                        out.push(toks[i].clone());
                        i += 1;
                    }
                }
                toks = out;
            }
            assert_eq!(encode_espf(s, &v).unwrap().tokens, toks, "{s}");
        }
    }

    #[test]
    fn kmer_vocab_cannot_encode() {
        let v = SubseqVocabulary::from_kmers(3, &[vec!["ABC".to_string()]]);
        assert!(encode_espf("ABC", &v).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn corpus_strategy() -> impl Strategy<Value = Vec<String>> {
            proptest::collection::vec("[abcd]{1,20}", 1..10)
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(300))]

            #[test]
            fn matches_brute_force(corpus in corpus_strategy(), beta in 1u64..4, budget in 1usize..40) {
                let t = train_espf_segmented(&corpus, beta, budget).unwrap();
                let (merges, segs) = brute_force(&corpus, beta, budget);
                prop_assert_eq!(merge_list(&t.vocab), merges);
                prop_assert_eq!(&t.segmentations, &segs);
                for (s, seg) in corpus.iter().zip(&segs) {
                    prop_assert_eq!(&encode_espf(s, &t.vocab).unwrap().tokens, seg);
                    prop_assert_eq!(seg.concat(), s.clone());
                }
            }

            #[test]
            fn merged_entries_meet_threshold(corpus in corpus_strategy(), beta in 1u64..4) {
                let v = train_espf(&corpus, beta, 1000).unwrap();
                prop_assert!(v.merges().iter().all(|m| m.frequency >= beta));
            }

            #[test]
            fn vocab_size_monotone_in_threshold(corpus in corpus_strategy()) {
                let sizes: Vec<usize> = (1..6).map(|b| train_espf(&corpus, b, 1000).unwrap().len()).collect();
                prop_assert!(sizes.windows(2).all(|w| w[0] >= w[1]), "{:?}", sizes);
            }

            #[test]
            fn encoding_is_lossless(corpus in corpus_strategy(), probe in "[abcde]{1,30}") {
                let v = train_espf(&corpus, 2, 1000).unwrap();
                prop_assert_eq!(encode_espf(&probe, &v).unwrap().tokens.concat(), probe);
            }
        }
    }
}
