//! Labeled sequence datasets and reproducible train/validation/test splits.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{self, streams};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SequenceRecord {
    pub id: usize,
    pub symbols: String,
    pub label: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    Csv,
    Fasta,
}

impl CorpusFormat {
    /// Guesses the format from the file extension; anything that is not a
    /// FASTA extension is read as CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("fa" | "fasta" | "fna" | "faa") => CorpusFormat::Fasta,
            _ => CorpusFormat::Csv,
        }
    }
}

/// A set of labeled sequences. Record ids always equal their position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledCorpus {
    records: Vec<SequenceRecord>,
    label_set: Vec<String>,
}

impl LabeledCorpus {
    /// Builds a corpus from `(symbols, label)` pairs. Symbols are uppercased,
    /// ids are assigned in input order and labels are ordered by first occurrence.
    pub fn from_pairs<I, S, L>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, L)>,
        S: AsRef<str>,
        L: AsRef<str>,
    {
        let mut records = Vec::new();
        for (id, (symbols, label)) in pairs.into_iter().enumerate() {
            let symbols = symbols.as_ref().trim().to_uppercase();
            let label = label.as_ref().trim().to_string();
            if symbols.is_empty() {
                return Err(Error::InvalidArgument(format!("record {id} has an empty sequence")));
            }
            if label.is_empty() {
                return Err(Error::InvalidArgument(format!("record {id} has an empty label")));
            }
            records.push(SequenceRecord { id, symbols, label });
        }
        Self::from_records(records)
    }

    fn from_records(mut records: Vec<SequenceRecord>) -> Result<Self> {
        let mut label_set: Vec<String> = Vec::new();
        for (i, r) in records.iter_mut().enumerate() {
            r.id = i;
            if !label_set.contains(&r.label) {
                label_set.push(r.label.clone());
            }
        }
        if label_set.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "a corpus needs at least 2 distinct labels, found {}",
                label_set.len()
            )));
        }
        Ok(LabeledCorpus { records, label_set })
    }

    pub fn records(&self) -> &[SequenceRecord] {
        &self.records
    }

    pub fn label_set(&self) -> &[String] {
        &self.label_set
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.label_set.len()
    }

    pub fn label_index(&self, label: &str) -> Option<usize> {
        self.label_set.iter().position(|l| l == label)
    }

    /// Label index of every record, in id order.
    pub fn label_indices(&self) -> Vec<usize> {
        let lookup: HashMap<&str, usize> = self
            .label_set
            .iter()
            .enumerate()
            .map(|(i, l)| (l.as_str(), i))
            .collect();
        self.records.iter().map(|r| lookup[r.label.as_str()]).collect()
    }

    pub fn sequences(&self) -> impl Iterator<Item = &str> {
        self.records.iter().map(|r| r.symbols.as_str())
    }

    pub fn mean_length(&self) -> f64 {
        let total: usize = self.records.iter().map(|r| r.symbols.len()).sum();
        total as f64 / self.records.len().max(1) as f64
    }

    /// Per-label record counts in `label_set` order.
    pub fn label_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.label_set.len()];
        for idx in self.label_indices() {
            counts[idx] += 1;
        }
        counts
    }
}

pub fn load_corpus(path: impl AsRef<Path>, format: CorpusFormat) -> Result<LabeledCorpus> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if text.trim().is_empty() {
        return Err(Error::EmptyFile { path: path.into() });
    }
    let records = match format {
        CorpusFormat::Csv => parse_csv(path, &text)?,
        CorpusFormat::Fasta => parse_fasta(path, &text)?,
    };
    if records.is_empty() {
        return Err(Error::EmptyFile { path: path.into() });
    }
    LabeledCorpus::from_records(records)
}

fn parse_csv(path: &Path, text: &str) -> Result<Vec<SequenceRecord>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().expect("non-empty text has a line");
    let columns: Vec<String> = header.split(',').map(|c| c.trim().to_lowercase()).collect();
    let find = |name: &str| {
        columns.iter().position(|c| c == name).ok_or_else(|| Error::Parse {
            path: path.into(),
            row: 1,
            message: format!("header lacks a `{name}` column (expected `sequence,label`)"),
        })
    };
    let seq_col = find("sequence")?;
    let label_col = find("label")?;

    let mut records = Vec::new();
    for (line_no, line) in lines {
        let row = line_no + 1;
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let get = |col: usize, what: &str| -> Result<&str> {
            match fields.get(col) {
                Some(v) if !v.is_empty() => Ok(v),
                _ => Err(Error::Parse {
                    path: path.into(),
                    row,
                    message: format!("empty {what}"),
                }),
            }
        };
        let symbols = get(seq_col, "sequence")?.to_uppercase();
        let label = get(label_col, "label")?.to_string();
        records.push(SequenceRecord {
            id: records.len(),
            symbols,
            label,
        });
    }
    Ok(records)
}

fn parse_fasta(path: &Path, text: &str) -> Result<Vec<SequenceRecord>> {
    let mut records = Vec::new();
    // (header row, label, accumulated sequence)
    let mut current: Option<(usize, String, String)> = None;

    let finish = |entry: Option<(usize, String, String)>, records: &mut Vec<SequenceRecord>| {
        if let Some((row, label, symbols)) = entry {
            if symbols.is_empty() {
                return Err(Error::Parse {
                    path: path.into(),
                    row,
                    message: "empty sequence".into(),
                });
            }
            records.push(SequenceRecord {
                id: records.len(),
                symbols,
                label,
            });
        }
        Ok(())
    };

    for (line_no, line) in text.lines().enumerate() {
        let row = line_no + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(label) = line.strip_prefix('>') {
            let label = label.trim();
            if label.is_empty() {
                return Err(Error::Parse {
                    path: path.into(),
                    row,
                    message: "empty label".into(),
                });
            }
            finish(current.take(), &mut records)?;
            current = Some((row, label.to_string(), String::new()));
        } else {
            match current.as_mut() {
                Some((_, _, symbols)) => symbols.push_str(&line.to_uppercase()),
                None => {
                    return Err(Error::Parse {
                        path: path.into(),
                        row,
                        message: "sequence line before any `>label` header".into(),
                    })
                }
            }
        }
    }
    finish(current, &mut records)?;
    Ok(records)
}

/// Keeps the `keep_top` most frequent labels. Records with other labels are
/// renamed to `other_name` when given, and dropped otherwise. Equally frequent
/// labels are ranked lexicographically.
pub fn group_labels(
    corpus: &LabeledCorpus,
    keep_top: usize,
    other_name: Option<&str>,
) -> Result<LabeledCorpus> {
    if keep_top == 0 {
        return Err(Error::InvalidArgument("keep_top must be at least 1".into()));
    }
    if keep_top >= corpus.num_classes() {
        log::warn!(
            "keep_top = {keep_top} >= number of labels ({}); corpus left unchanged",
            corpus.num_classes()
        );
        return Ok(corpus.clone());
    }
    let counts = corpus.label_counts();
    let mut ranked: Vec<(usize, &str)> = counts
        .iter()
        .zip(corpus.label_set())
        .map(|(&c, l)| (c, l.as_str()))
        .collect();
    ranked.sort_by(|a, b| b.0.cmp(&a.0).then_with(|| a.1.cmp(b.1)));
    let kept: Vec<&str> = ranked.iter().take(keep_top).map(|&(_, l)| l).collect();

    let records: Vec<SequenceRecord> = corpus
        .records()
        .iter()
        .filter_map(|r| {
            if kept.contains(&r.label.as_str()) {
                Some(r.clone())
            } else {
                other_name.map(|other| SequenceRecord {
                    label: other.to_string(),
                    ..r.clone()
                })
            }
        })
        .collect();
    LabeledCorpus::from_records(records)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bucket {
    Train,
    Val,
    Test,
    /// In the graph but carrying no label during training (train-fraction sweeps).
    Unlabeled,
}

impl fmt::Display for Bucket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Bucket::Train => "train",
            Bucket::Val => "val",
            Bucket::Test => "test",
            Bucket::Unlabeled => "unlabeled",
        })
    }
}

impl std::str::FromStr for Bucket {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Bucket::Train),
            "val" => Ok(Bucket::Val),
            "test" => Ok(Bucket::Test),
            "unlabeled" => Ok(Bucket::Unlabeled),
            other => Err(Error::InvalidArgument(format!("unknown split bucket `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitOptions {
    pub ratio: (f64, f64, f64),
    pub seed: u64,
    pub stratified: bool,
}

impl Default for SplitOptions {
    fn default() -> Self {
        SplitOptions {
            ratio: (0.8, 0.1, 0.1),
            seed: 0,
            stratified: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub train_ids: Vec<usize>,
    pub val_ids: Vec<usize>,
    pub test_ids: Vec<usize>,
    #[serde(default)]
    pub unlabeled_ids: Vec<usize>,
    pub seed: u64,
}

pub fn make_split(corpus: &LabeledCorpus, ratio: (f64, f64, f64), seed: u64) -> Result<SplitAssignment> {
    make_split_with(
        corpus,
        &SplitOptions {
            ratio,
            seed,
            stratified: false,
        },
    )
}

/// Bucket sizes for `n` items: train and validation are rounded, test takes the rest.
pub fn split_sizes(n: usize, ratio: (f64, f64, f64)) -> Result<(usize, usize, usize)> {
    let (a, b, c) = ratio;
    if [a, b, c].iter().any(|r| !(0.0..=1.0).contains(r)) || ((a + b + c) - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidArgument(format!(
            "split ratios must be in [0, 1] and sum to 1, got ({a}, {b}, {c})"
        )));
    }
    let train = ((n as f64) * a).round() as usize;
    let val = (((n as f64) * b).round() as usize).min(n - train);
    Ok((train, val, n - train - val))
}

pub fn make_split_with(corpus: &LabeledCorpus, opts: &SplitOptions) -> Result<SplitAssignment> {
    let n = corpus.len();
    if n < 10 {
        return Err(Error::InvalidArgument(format!(
            "splitting needs at least 10 records, corpus has {n}"
        )));
    }
    let (n_train, n_val, n_test) = split_sizes(n, opts.ratio)?;
    let mut rng = seed::rng(seed::derive_seed(opts.seed, streams::SPLIT, 0));
    let mut ids: Vec<usize> = (0..n).collect();
    ids.shuffle(&mut rng);

    let mut split = SplitAssignment {
        train_ids: Vec::with_capacity(n_train),
        val_ids: Vec::with_capacity(n_val),
        test_ids: Vec::with_capacity(n_test),
        unlabeled_ids: Vec::new(),
        seed: opts.seed,
    };

    if !opts.stratified {
        split.train_ids.extend_from_slice(&ids[..n_train]);
        split.val_ids.extend_from_slice(&ids[n_train..n_train + n_val]);
        split.test_ids.extend_from_slice(&ids[n_train + n_val..]);
        return Ok(split);
    }

    // Stratified: group the shuffled ids by class, then deal buckets so that
    // every prefix of the grouped order is as close to the ratio as possible.
    // Totals stay exact, and each class gets its proportional share within rounding.
    let labels = corpus.label_indices();
    ids.sort_by_key(|&id| labels[id]);
    let targets = [n_train, n_val, n_test];
    let mut assigned = [0usize; 3];
    for (pos, &id) in ids.iter().enumerate() {
        let seen = (pos + 1) as f64;
        let bucket = (0..3)
            .filter(|&b| assigned[b] < targets[b])
            .max_by(|&x, &y| {
                let dx = seen * targets[x] as f64 / n as f64 - assigned[x] as f64;
                let dy = seen * targets[y] as f64 / n as f64 - assigned[y] as f64;
                dx.partial_cmp(&dy).unwrap().then(y.cmp(&x))
            })
            .expect("targets sum to n");
        assigned[bucket] += 1;
        match bucket {
            0 => split.train_ids.push(id),
            1 => split.val_ids.push(id),
            _ => split.test_ids.push(id),
        }
    }
    Ok(split)
}

impl SplitAssignment {
    pub fn len(&self) -> usize {
        self.train_ids.len() + self.val_ids.len() + self.test_ids.len() + self.unlabeled_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Bucket of every id in `0..len()`. Fails if the lists are not a partition.
    pub fn buckets(&self) -> Result<Vec<Bucket>> {
        let n = self.len();
        let mut out: Vec<Option<Bucket>> = vec![None; n];
        let lists = [
            (Bucket::Train, &self.train_ids),
            (Bucket::Val, &self.val_ids),
            (Bucket::Test, &self.test_ids),
            (Bucket::Unlabeled, &self.unlabeled_ids),
        ];
        for (bucket, ids) in lists {
            for &id in ids.iter() {
                match out.get_mut(id) {
                    Some(slot @ None) => *slot = Some(bucket),
                    Some(Some(_)) => {
                        return Err(Error::InvalidArgument(format!("id {id} appears in two buckets")))
                    }
                    None => return Err(Error::InvalidArgument(format!("id {id} is out of range"))),
                }
            }
        }
        Ok(out.into_iter().map(|b| b.expect("counted ids fill every slot")).collect())
    }

    /// Boolean mask over `0..n` selecting the given bucket.
    pub fn mask(&self, bucket: Bucket, n: usize) -> Vec<bool> {
        let ids = match bucket {
            Bucket::Train => &self.train_ids,
            Bucket::Val => &self.val_ids,
            Bucket::Test => &self.test_ids,
            Bucket::Unlabeled => &self.unlabeled_ids,
        };
        let mut mask = vec![false; n];
        for &id in ids {
            mask[id] = true;
        }
        mask
    }

    /// Keeps only the first `round(fraction * N)` training ids labeled; the
    /// remainder move to the unlabeled bucket. `fraction` is relative to the
    /// whole corpus, so 0.8 with an 80:10:10 split is a no-op.
    pub fn with_train_fraction(mut self, fraction: f64) -> Result<Self> {
        let n = self.len();
        let keep = ((n as f64) * fraction).round() as usize;
        if !(fraction > 0.0) || keep == 0 || keep > self.train_ids.len() {
            return Err(Error::InvalidArgument(format!(
                "train fraction {fraction} selects {keep} of {} available training ids",
                self.train_ids.len()
            )));
        }
        let moved = self.train_ids.split_off(keep);
        self.unlabeled_ids.extend(moved);
        Ok(self)
    }

    /// Writes `id<TAB>bucket` lines in id order.
    pub fn write_manifest(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::new();
        for (id, bucket) in self.buckets()?.iter().enumerate() {
            out.push_str(&format!("{id}\t{bucket}\n"));
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    pub fn read_manifest(path: impl AsRef<Path>, seed: u64) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut split = SplitAssignment {
            train_ids: vec![],
            val_ids: vec![],
            test_ids: vec![],
            unlabeled_ids: vec![],
            seed,
        };
        for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let parse_err = |message: String| Error::Parse {
                path: path.into(),
                row: i + 1,
                message,
            };
            let (id, bucket) = line
                .split_once('\t')
                .ok_or_else(|| parse_err("expected `id<TAB>bucket`".into()))?;
            let id: usize = id.trim().parse().map_err(|e| parse_err(format!("bad id: {e}")))?;
            match bucket.trim().parse::<Bucket>().map_err(|e| parse_err(e.to_string()))? {
                Bucket::Train => split.train_ids.push(id),
                Bucket::Val => split.val_ids.push(id),
                Bucket::Test => split.test_ids.push(id),
                Bucket::Unlabeled => split.unlabeled_ids.push(id),
            }
        }
        split.buckets()?;
        Ok(split)
    }
}
