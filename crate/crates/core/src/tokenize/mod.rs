//! Sequence decomposition into subsequences: overlapping k-mers, or ESPF
//! vocabularies learned by frequent-pair merging. De Bruijn graphs are
//! provided as a k-mer utility.

mod debruijn;
mod espf;
mod kmer;

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use debruijn::{build_debruijn, DeBruijnGraph};
pub use espf::{encode_espf, train_espf, train_espf_segmented, Encoding, EspfTraining};
pub use kmer::{decompose_corpus, decompose_kmer};

/// Default merge budget for ESPF when none is configured; effectively unbounded.
pub const DEFAULT_MAX_MERGES: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase")]
pub enum TokenizerSpec {
    Kmer { k: usize },
    Espf { beta_freq: u64, max_merges: usize },
}

impl fmt::Display for TokenizerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TokenizerSpec::Kmer { k } => write!(f, "method=kmer k={k}"),
            TokenizerSpec::Espf { beta_freq, max_merges } => {
                write!(f, "method=espf beta_freq={beta_freq} max_merges={max_merges}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabEntry {
    pub token: String,
    pub frequency: u64,
}

/// One learned merge: `left ++ right`, with the pair's corpus frequency when it was merged.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Merge {
    pub left: String,
    pub right: String,
    pub frequency: u64,
}

impl Merge {
    pub fn merged(&self) -> String {
        format!("{}{}", self.left, self.right)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubseqVocabulary {
    method: TokenizerSpec,
    entries: Vec<VocabEntry>,
    merges: Vec<Merge>,
    alphabet_len: usize,
}

impl SubseqVocabulary {
    pub(crate) fn from_merges(method: TokenizerSpec, alphabet: Vec<VocabEntry>, merges: Vec<Merge>) -> Self {
        let alphabet_len = alphabet.len();
        let mut entries = alphabet;
        for m in &merges {
            let token = m.merged();
            if !entries.iter().any(|e| e.token == token) {
                entries.push(VocabEntry {
                    token,
                    frequency: m.frequency,
                });
            }
        }
        SubseqVocabulary {
            method,
            entries,
            merges,
            alphabet_len,
        }
    }

    /// Distinct k-mers in first-occurrence order with total occurrence counts.
    pub fn from_kmers(k: usize, windows: &[Vec<String>]) -> Self {
        let mut index: HashMap<&str, usize> = HashMap::new();
        let mut entries: Vec<VocabEntry> = Vec::new();
        for w in windows.iter().flatten() {
            let i = *index.entry(w.as_str()).or_insert_with(|| {
                entries.push(VocabEntry {
                    token: w.clone(),
                    frequency: 0,
                });
                entries.len() - 1
            });
            entries[i].frequency += 1;
        }
        SubseqVocabulary {
            method: TokenizerSpec::Kmer { k },
            entries,
            merges: Vec::new(),
            alphabet_len: 0,
        }
    }

    pub fn method(&self) -> TokenizerSpec {
        self.method
    }

    pub fn entries(&self) -> &[VocabEntry] {
        &self.entries
    }

    pub fn merges(&self) -> &[Merge] {
        &self.merges
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Single-character entries an ESPF vocabulary started from.
    pub fn alphabet(&self) -> &[VocabEntry] {
        &self.entries[..self.alphabet_len]
    }

    pub(crate) fn contains_symbol(&self, symbol: &str) -> bool {
        self.alphabet().iter().any(|e| e.token == symbol)
    }

    pub(crate) fn merge_ranks(&self) -> HashMap<(&str, &str), usize> {
        let mut ranks = HashMap::new();
        for (i, m) in self.merges.iter().enumerate() {
            ranks.entry((m.left.as_str(), m.right.as_str())).or_insert(i);
        }
        ranks
    }

    /// Writes a `# <method>` header, then one `subsequence<TAB>frequency`
    /// line per entry in merge order. ESPF merge lines carry a third column
    /// with the length of the merge's left part, so that reloading restores
    /// the exact merge pairs.
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("# {}\n", self.method);
        match self.method {
            TokenizerSpec::Kmer { .. } => {
                for e in &self.entries {
                    out.push_str(&format!("{}\t{}\n", e.token, e.frequency));
                }
            }
            TokenizerSpec::Espf { .. } => {
                for e in self.alphabet() {
                    out.push_str(&format!("{}\t{}\n", e.token, e.frequency));
                }
                for m in &self.merges {
                    out.push_str(&format!("{}\t{}\t{}\n", m.merged(), m.frequency, m.left.chars().count()));
                }
            }
        }
        out
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text).map_err(|(row, message)| Error::Parse {
            path: path.into(),
            row,
            message,
        })
    }

    fn from_text(text: &str) -> std::result::Result<Self, (usize, String)> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        let (_, header) = lines.next().ok_or((1, "empty vocabulary file".to_string()))?;
        let method = parse_method_header(header).map_err(|m| (1, m))?;

        let mut alphabet = Vec::new();
        let mut merges = Vec::new();
        let mut kmers = Vec::new();
        for (i, line) in lines {
            let row = i + 1;
            let cols: Vec<&str> = line.split('\t').collect();
            let freq: u64 = cols
                .get(1)
                .ok_or((row, "expected `subsequence<TAB>frequency`".to_string()))?
                .trim()
                .parse()
                .map_err(|e| (row, format!("bad frequency: {e}")))?;
            let token = cols[0].to_string();
            match (method, cols.get(2)) {
                (TokenizerSpec::Kmer { .. }, _) => kmers.push(VocabEntry { token, frequency: freq }),
                (TokenizerSpec::Espf { .. }, None) => {
                    if !merges.is_empty() {
                        return Err((row, "alphabet entry after merge entries".into()));
                    }
                    alphabet.push(VocabEntry { token, frequency: freq });
                }
                (TokenizerSpec::Espf { .. }, Some(split)) => {
                    let split: usize = split.trim().parse().map_err(|e| (row, format!("bad split: {e}")))?;
                    let chars: Vec<char> = token.chars().collect();
                    if split == 0 || split >= chars.len() {
                        return Err((row, format!("split {split} out of range for `{token}`")));
                    }
                    merges.push(Merge {
                        left: chars[..split].iter().collect(),
                        right: chars[split..].iter().collect(),
                        frequency: freq,
                    });
                }
            }
        }
        Ok(match method {
            TokenizerSpec::Kmer { .. } => SubseqVocabulary {
                method,
                entries: kmers,
                merges: Vec::new(),
                alphabet_len: 0,
            },
            TokenizerSpec::Espf { .. } => Self::from_merges(method, alphabet, merges),
        })
    }
}

fn parse_method_header(line: &str) -> std::result::Result<TokenizerSpec, String> {
    let body = line
        .strip_prefix('#')
        .ok_or_else(|| "missing `# method=...` header".to_string())?;
    let fields: HashMap<&str, &str> = body.split_whitespace().filter_map(|kv| kv.split_once('=')).collect();
    let num = |key: &str| -> std::result::Result<u64, String> {
        fields
            .get(key)
            .ok_or_else(|| format!("header lacks `{key}`"))?
            .parse()
            .map_err(|e| format!("bad `{key}`: {e}"))
    };
    match fields.get("method").copied() {
        Some("kmer") => Ok(TokenizerSpec::Kmer { k: num("k")? as usize }),
        Some("espf") => Ok(TokenizerSpec::Espf {
            beta_freq: num("beta_freq")?,
            max_merges: num("max_merges")? as usize,
        }),
        other => Err(format!("unknown method {other:?}")),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizedSequence {
    pub sequence_id: usize,
    /// For ESPF a lossless segmentation; for k-mers the overlapping windows.
    pub tokens: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Tokenization {
    pub vocab: SubseqVocabulary,
    pub sequences: Vec<TokenizedSequence>,
}

impl Tokenization {
    /// Number of distinct tokens used across all sequences, i.e. the node
    /// count of the hypergraph built from this tokenization.
    pub fn distinct_tokens(&self) -> usize {
        let set: std::collections::HashSet<&str> = self
            .sequences
            .iter()
            .flat_map(|s| s.tokens.iter().map(String::as_str))
            .collect();
        set.len()
    }

    pub fn token_lists(&self) -> Vec<Vec<String>> {
        self.sequences.iter().map(|s| s.tokens.clone()).collect()
    }

    /// One `id<TAB>token<TAB>token...` line per sequence.
    pub fn write_token_lists(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::new();
        for s in &self.sequences {
            out.push_str(&s.sequence_id.to_string());
            for t in &s.tokens {
                out.push('\t');
                out.push_str(t);
            }
            out.push('\n');
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

pub fn read_token_lists(path: impl AsRef<Path>) -> Result<Vec<TokenizedSequence>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, line)| {
            let mut cols = line.split('\t');
            let id = cols
                .next()
                .unwrap_or_default()
                .parse()
                .map_err(|e| Error::Parse {
                    path: path.into(),
                    row: i + 1,
                    message: format!("bad sequence id: {e}"),
                })?;
            Ok(TokenizedSequence {
                sequence_id: id,
                tokens: cols.map(str::to_string).collect(),
            })
        })
        .collect()
}

/// Tokenizes every sequence of a corpus. ESPF learns its vocabulary from the
/// same sequences it segments.
pub fn tokenize_corpus<S: AsRef<str>>(sequences: &[S], spec: &TokenizerSpec) -> Result<Tokenization> {
    match *spec {
        TokenizerSpec::Kmer { k } => {
            let windows = decompose_corpus(sequences.iter().map(AsRef::as_ref), k)?;
            let vocab = SubseqVocabulary::from_kmers(k, &windows);
            Ok(Tokenization {
                vocab,
                sequences: windows
                    .into_iter()
                    .enumerate()
                    .map(|(sequence_id, tokens)| TokenizedSequence { sequence_id, tokens })
                    .collect(),
            })
        }
        TokenizerSpec::Espf { beta_freq, max_merges } => {
            let trained = train_espf_segmented(sequences, beta_freq, max_merges)?;
            Ok(Tokenization {
                vocab: trained.vocab,
                sequences: trained
                    .segmentations
                    .into_iter()
                    .enumerate()
                    .map(|(sequence_id, tokens)| TokenizedSequence { sequence_id, tokens })
                    .collect(),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn espf_vocab_round_trip_reproduces_encodings() {
        let corpus = ["aabcaab", "abcabc", "caabca", "aab"];
        let v = train_espf(&corpus, 2, 100).unwrap();
        let back = SubseqVocabulary::from_text(&v.to_text()).unwrap();
        assert_eq!(back, v);
        for s in ["aabcaab", "cab", "bbbaab"] {
            assert_eq!(encode_espf(s, &back).unwrap(), encode_espf(s, &v).unwrap());
        }
    }

    #[test]
    fn espf_file_lists_entries_in_merge_order() {
        let v = train_espf(&["aab", "aab", "aab"], 2, 10).unwrap();
        assert_eq!(
            v.to_text(),
            "# method=espf beta_freq=2 max_merges=10\na\t6\nb\t3\naa\t3\t1\naab\t3\t2\n"
        );
    }

    #[test]
    fn kmer_vocab_round_trip() {
        let t = tokenize_corpus(&["ATGTA", "TGTT"], &TokenizerSpec::Kmer { k: 2 }).unwrap();
        let tokens: Vec<_> = t.vocab.entries().iter().map(|e| (e.token.as_str(), e.frequency)).collect();
        assert_eq!(tokens, [("AT", 1), ("TG", 2), ("GT", 2), ("TA", 1), ("TT", 1)]);
        let back = SubseqVocabulary::from_text(&t.vocab.to_text()).unwrap();
        assert_eq!(back, t.vocab);
        assert!(back.entries().iter().all(|e| e.token.len() == 2));
    }

    #[test]
    fn bad_vocab_files() {
        assert!(SubseqVocabulary::from_text("A\t1\n").is_err());
        assert!(SubseqVocabulary::from_text("# method=bpe\n").is_err());
        assert!(SubseqVocabulary::from_text("# method=espf beta_freq=2 max_merges=5\nab\t3\t2\n").is_err());
    }

    #[test]
    fn token_lists_round_trip() {
        let t = tokenize_corpus(&["ATGTA", "TGTT"], &TokenizerSpec::Kmer { k: 3 }).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("tokens.tsv");
        t.write_token_lists(&p).unwrap();
        assert_eq!(read_token_lists(&p).unwrap(), t.sequences);
        assert_eq!(t.distinct_tokens(), 4);
    }

    #[test]
    fn espf_tokenization_is_lossless() {
        let seqs = ["GCTGAAAGCAACAG", "TGCAGACGATGAGA", "CCGACGATCCCAGGAGGTAA", "GCAGACGA"];
        let t = tokenize_corpus(&seqs, &TokenizerSpec::Espf { beta_freq: 2, max_merges: 50 }).unwrap();
        for (s, tok) in seqs.iter().zip(&t.sequences) {
            assert_eq!(tok.tokens.concat(), *s);
        }
    }
}
