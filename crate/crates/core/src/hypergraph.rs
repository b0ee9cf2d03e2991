//! Sequence hypergraph: nodes are distinct subsequences, hyperedges are
//! sequences, and the binary incidence matrix `H` (nodes x hyperedges) has
//! `H[i][j] = 1` exactly when subsequence `i` occurs in sequence `j`.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::corpus::LabeledCorpus;
use crate::error::{Error, Result};
use crate::numerics::SparsePattern;

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceHypergraph {
    node_names: Vec<String>,
    /// Sorted node indices of each hyperedge.
    hyperedges: Vec<Vec<usize>>,
    incidence: Arc<SparsePattern>,
    incidence_t: Arc<SparsePattern>,
    labels: Vec<usize>,
    label_names: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HypergraphStats {
    pub n: usize,
    pub m: usize,
    pub nnz: usize,
    /// Mean number of hyperedges per node.
    pub kappa: f64,
    /// Mean number of nodes per hyperedge.
    pub chi: f64,
}

/// Builds the hypergraph over every sequence of `corpus` (labeled or not).
/// Nodes are numbered by first occurrence; repeated tokens within a sequence
/// collapse to one membership.
pub fn build_hypergraph<T: AsRef<[String]>>(corpus: &LabeledCorpus, tokens: &[T]) -> Result<SequenceHypergraph> {
    if tokens.len() != corpus.len() {
        return Err(Error::InvalidArgument(format!(
            "{} token lists for {} sequences",
            tokens.len(),
            corpus.len()
        )));
    }
    let mut index: HashMap<&str, usize> = HashMap::new();
    let mut node_names: Vec<String> = Vec::new();
    let mut hyperedges = Vec::with_capacity(tokens.len());
    for (id, list) in tokens.iter().enumerate() {
        let list = list.as_ref();
        if list.is_empty() {
            return Err(Error::EmptyTokenList { id });
        }
        let mut edge: Vec<usize> = list
            .iter()
            .map(|t| {
                *index.entry(t.as_str()).or_insert_with(|| {
                    node_names.push(t.clone());
                    node_names.len() - 1
                })
            })
            .collect();
        edge.sort_unstable();
        edge.dedup();
        hyperedges.push(edge);
    }
    SequenceHypergraph::from_parts(
        node_names,
        hyperedges,
        corpus.label_indices(),
        corpus.label_set().to_vec(),
    )
}

impl SequenceHypergraph {
    /// Assembles a hypergraph from explicit parts, checking every structural invariant.
    pub fn from_parts(
        node_names: Vec<String>,
        mut hyperedges: Vec<Vec<usize>>,
        labels: Vec<usize>,
        label_names: Vec<String>,
    ) -> Result<Self> {
        let n = node_names.len();
        let m = hyperedges.len();
        if labels.len() != m {
            return Err(Error::InvalidArgument(format!("{} labels for {m} hyperedges", labels.len())));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= label_names.len()) {
            return Err(Error::InvalidArgument(format!("label index {bad} out of range")));
        }
        let mut degree = vec![0usize; n];
        for (j, edge) in hyperedges.iter_mut().enumerate() {
            edge.sort_unstable();
            edge.dedup();
            if edge.is_empty() {
                return Err(Error::EmptyTokenList { id: j });
            }
            for &i in edge.iter() {
                if i >= n {
                    return Err(Error::InvalidArgument(format!("hyperedge {j} references node {i} of {n}")));
                }
                degree[i] += 1;
            }
        }
        if let Some(i) = degree.iter().position(|&d| d == 0) {
            return Err(Error::InvalidArgument(format!("node {i} (`{}`) is in no hyperedge", node_names[i])));
        }
        let incidence_t = SparsePattern::from_rows(m, n, hyperedges.clone());
        let incidence = incidence_t.transpose();
        Ok(SequenceHypergraph {
            node_names,
            hyperedges,
            incidence: Arc::new(incidence),
            incidence_t: Arc::new(incidence_t),
            labels,
            label_names,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.node_names.len()
    }

    pub fn num_edges(&self) -> usize {
        self.hyperedges.len()
    }

    pub fn num_classes(&self) -> usize {
        self.label_names.len()
    }

    pub fn node_names(&self) -> &[String] {
        &self.node_names
    }

    pub fn hyperedges(&self) -> &[Vec<usize>] {
        &self.hyperedges
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn label_names(&self) -> &[String] {
        &self.label_names
    }

    /// `H`: rows are nodes, columns are hyperedges.
    pub fn incidence(&self) -> &Arc<SparsePattern> {
        &self.incidence
    }

    /// `H^T`: rows are hyperedges, columns are nodes.
    pub fn incidence_t(&self) -> &Arc<SparsePattern> {
        &self.incidence_t
    }

    pub fn nnz(&self) -> usize {
        self.incidence.nnz()
    }

    pub fn node_degree(&self, node: usize) -> usize {
        self.incidence.row(node).len()
    }

    /// Hyperedges containing `node`, ascending.
    pub fn incident_edges(&self, node: usize) -> &[usize] {
        self.incidence.row(node)
    }

    /// Hyperedge node sets by name, for comparisons that ignore node numbering.
    pub fn named_hyperedges(&self) -> Vec<std::collections::BTreeSet<&str>> {
        self.hyperedges
            .iter()
            .map(|e| e.iter().map(|&i| self.node_names[i].as_str()).collect())
            .collect()
    }

    pub fn stats(&self) -> HypergraphStats {
        let (n, m, nnz) = (self.num_nodes(), self.num_edges(), self.nnz());
        HypergraphStats {
            n,
            m,
            nnz,
            kappa: if n == 0 { 0.0 } else { nnz as f64 / n as f64 },
            chi: if m == 0 { 0.0 } else { nnz as f64 / m as f64 },
        }
    }

    /// Writes `n m nnz`, then one `node_index<TAB>edge_index` line per
    /// nonzero in ascending (node, edge) order.
    pub fn export_incidence(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        if path.as_os_str().is_empty() {
            return Err(Error::InvalidArgument("empty output path".into()));
        }
        let mut out = format!("{} {} {}\n", self.num_nodes(), self.num_edges(), self.nnz());
        for (i, j) in self.incidence.coo() {
            out.push_str(&format!("{i}\t{j}\n"));
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    /// Writes `edge_index<TAB>label` per hyperedge.
    pub fn export_labels(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let out: String = self
            .labels
            .iter()
            .enumerate()
            .map(|(j, &l)| format!("{j}\t{}\n", self.label_names[l]))
            .collect();
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    /// Writes `node_index<TAB>subsequence` per node.
    pub fn export_nodes(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let out: String = self
            .node_names
            .iter()
            .enumerate()
            .map(|(i, name)| format!("{i}\t{name}\n"))
            .collect();
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }

    /// Writes `<prefix>.incidence.tsv`, `<prefix>.labels.tsv` and `<prefix>.nodes.tsv`.
    pub fn save(&self, prefix: impl AsRef<Path>) -> Result<()> {
        let files = GraphFiles::new(prefix);
        self.export_incidence(&files.incidence)?;
        self.export_labels(&files.labels)?;
        self.export_nodes(&files.nodes)
    }

    pub fn load(prefix: impl AsRef<Path>) -> Result<Self> {
        let files = GraphFiles::new(prefix);
        let (n, m, entries) = import_incidence(&files.incidence)?;
        let node_names = read_indexed_column(&files.nodes, n)?;
        let label_strings = read_indexed_column(&files.labels, m)?;
        let mut label_names: Vec<String> = Vec::new();
        let labels = label_strings
            .into_iter()
            .map(|l| match label_names.iter().position(|x| *x == l) {
                Some(i) => i,
                None => {
                    label_names.push(l);
                    label_names.len() - 1
                }
            })
            .collect();
        let mut hyperedges = vec![Vec::new(); m];
        for (i, j) in entries {
            hyperedges[j].push(i);
        }
        Self::from_parts(node_names, hyperedges, labels, label_names)
    }
}

/// Paths of the three files a saved hypergraph consists of.
#[derive(Debug, Clone)]
pub struct GraphFiles {
    pub incidence: PathBuf,
    pub labels: PathBuf,
    pub nodes: PathBuf,
}

impl GraphFiles {
    pub fn new(prefix: impl AsRef<Path>) -> Self {
        let p = prefix.as_ref().to_string_lossy().into_owned();
        GraphFiles {
            incidence: format!("{p}.incidence.tsv").into(),
            labels: format!("{p}.labels.tsv").into(),
            nodes: format!("{p}.nodes.tsv").into(),
        }
    }
}

/// Reads a coordinate-list incidence file: `(n, m, entries)`.
pub fn import_incidence(path: impl AsRef<Path>) -> Result<(usize, usize, Vec<(usize, usize)>)> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();
    let perr = |row: usize, message: String| Error::Parse {
        path: path.into(),
        row,
        message,
    };
    let (_, header) = lines.next().ok_or_else(|| Error::EmptyFile { path: path.into() })?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(str::parse)
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| perr(1, format!("bad header: {e}")))?;
    let [n, m, nnz] = dims[..] else {
        return Err(perr(1, "header must be `n m nnz`".into()));
    };
    let mut entries = Vec::with_capacity(nnz);
    for (i, line) in lines.filter(|(_, l)| !l.trim().is_empty()) {
        let (a, b) = line
            .split_once('\t')
            .ok_or_else(|| perr(i + 1, "expected `node<TAB>edge`".into()))?;
        let a: usize = a.trim().parse().map_err(|e| perr(i + 1, format!("{e}")))?;
        let b: usize = b.trim().parse().map_err(|e| perr(i + 1, format!("{e}")))?;
        if a >= n || b >= m {
            return Err(perr(i + 1, format!("entry ({a}, {b}) outside {n}x{m}")));
        }
        entries.push((a, b));
    }
    if entries.len() != nnz {
        return Err(perr(1, format!("header promises {nnz} entries, found {}", entries.len())));
    }
    Ok((n, m, entries))
}

fn read_indexed_column(path: &Path, expected: usize) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = vec![None; expected];
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.is_empty()) {
        let perr = |message: String| Error::Parse {
            path: path.into(),
            row: i + 1,
            message,
        };
        let (idx, value) = line.split_once('\t').ok_or_else(|| perr("expected `index<TAB>value`".into()))?;
        let idx: usize = idx.parse().map_err(|e| perr(format!("{e}")))?;
        *out.get_mut(idx).ok_or_else(|| perr(format!("index {idx} out of range")))? = Some(value.to_string());
    }
    out.into_iter()
        .enumerate()
        .map(|(i, v)| {
            v.ok_or_else(|| Error::Parse {
                path: path.into(),
                row: 0,
                message: format!("missing index {i}"),
            })
        })
        .collect()
}
