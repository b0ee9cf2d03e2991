use std::collections::HashMap;

use crate::error::Result;

use super::kmer::decompose_kmer;

/// Directed graph over distinct k-mers; consecutive windows overlapping in
/// `k - 1` characters are joined by one (deduplicated) edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeBruijnGraph {
    pub k: usize,
    /// Distinct k-mers in first-occurrence order.
    pub nodes: Vec<String>,
    /// `(from, to)` node indices in first-occurrence order.
    pub edges: Vec<(usize, usize)>,
}

pub fn build_debruijn(sequence: &str, k: usize) -> Result<DeBruijnGraph> {
    let windows = decompose_kmer(sequence, k)?;
    let mut index: HashMap<&str, usize> = HashMap::new();
    let mut nodes = Vec::new();
    let ids: Vec<usize> = windows
        .iter()
        .map(|w| {
            *index.entry(w.as_str()).or_insert_with(|| {
                nodes.push(w.clone());
                nodes.len() - 1
            })
        })
        .collect();

    let mut seen = std::collections::HashSet::new();
    let edges = ids
        .windows(2)
        .map(|p| (p[0], p[1]))
        .filter(|e| seen.insert(*e))
        .collect();
    Ok(DeBruijnGraph { k, nodes, edges })
}

impl DeBruijnGraph {
    pub fn edge_labels(&self) -> Vec<(&str, &str)> {
        self.edges
            .iter()
            .map(|&(a, b)| (self.nodes[a].as_str(), self.nodes[b].as_str()))
            .collect()
    }
}
