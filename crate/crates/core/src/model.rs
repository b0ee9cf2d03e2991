//! Two-level attention network over a sequence hypergraph.
//!
//! One layer does two things:
//!
//! * hyperedge-level attention (edges to nodes): node `i` attends over its
//!   incident hyperedges `E_i`,
//!   `score(i, j) = leaky_relu(sum_d (W2 n_j)_d * (W3 m_i)_d)`,
//!   `Γ_i = softmax_{j in E_i}(score)`, `m_i = act(sum_j Γ_ij W1 n_j)`;
//! * node-level attention (nodes to edges): hyperedge `j` attends over its
//!   member nodes,
//!   `score(j, i) = leaky_relu(sum_d (W5 m_i)_d * (W6 n_j_prev)_d)`,
//!   `Δ_j = softmax_{i in e_j}(score)`, `n_j = act(sum_i Δ_ji W4 m_i)`.
//!
//! Logits are `Z = n Wc^T`. With attention disabled both levels use the
//! plain mean over the neighborhood.

use std::path::Path;
use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypergraph::SequenceHypergraph;
use crate::numerics::{LossTargets, Matrix, ParamStore, SparsePattern, Tape, Var};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    LeakyRelu,
    Identity,
}

/// Features of nodes before the first layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeInit {
    /// Mean of the incident hyperedges' input features.
    EdgeMean,
    /// One-hot node identity.
    OneHot,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Input hyperedge feature dimension.
    pub in_dim: usize,
    pub hidden: usize,
    pub classes: usize,
    pub leaky_slope: f64,
    pub dropout: f64,
    pub attention: bool,
    pub activation: Activation,
    pub layers: usize,
    pub node_init: NodeInit,
}

impl ModelConfig {
    pub fn new(in_dim: usize, hidden: usize, classes: usize) -> Self {
        ModelConfig {
            in_dim,
            hidden,
            classes,
            leaky_slope: 0.01,
            dropout: 0.0,
            attention: true,
            activation: Activation::Relu,
            layers: 1,
            node_init: NodeInit::EdgeMean,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.in_dim == 0 || self.hidden == 0 || self.classes == 0 || self.layers == 0 {
            return Err(Error::Config(format!(
                "dimensions must be positive (f={}, f'={}, C={}, layers={})",
                self.in_dim, self.hidden, self.classes, self.layers
            )));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        Ok(())
    }
}

/// One-hot hyperedge features: the `m x m` identity.
pub fn initial_features(hg: &SequenceHypergraph) -> Matrix {
    Matrix::identity(hg.num_edges())
}

/// Node features for the first layer's attention scores.
pub fn initial_node_features(hg: &SequenceHypergraph, edge_features: &Matrix, init: NodeInit) -> Result<Matrix> {
    if edge_features.rows() != hg.num_edges() {
        return Err(Error::ShapeMismatch {
            op: "initial_node_features",
            left: "edge features",
            left_shape: edge_features.shape(),
            right: "hyperedges",
            right_shape: (hg.num_edges(), 0),
        });
    }
    Ok(match init {
        NodeInit::OneHot => Matrix::identity(hg.num_nodes()),
        NodeInit::EdgeMean => {
            let mut out = Matrix::zeros(hg.num_nodes(), edge_features.cols());
            for i in 0..hg.num_nodes() {
                let edges = hg.incident_edges(i);
                let w = 1.0 / edges.len() as f64;
                let row = out.row_mut(i);
                for &j in edges {
                    for (o, &x) in row.iter_mut().zip(edge_features.row(j)) {
                        *o += w * x;
                    }
                }
            }
            out
        }
    })
}

/// Constant inputs of a forward pass.
#[derive(Debug, Clone)]
pub struct GraphInputs {
    pub edge_features: Matrix,
    pub node_features: Matrix,
}

impl GraphInputs {
    pub fn new(hg: &SequenceHypergraph, edge_features: Matrix, init: NodeInit) -> Result<Self> {
        let node_features = initial_node_features(hg, &edge_features, init)?;
        Ok(GraphInputs {
            edge_features,
            node_features,
        })
    }

    pub fn one_hot(hg: &SequenceHypergraph, init: NodeInit) -> Result<Self> {
        Self::new(hg, initial_features(hg), init)
    }
}

const LAYER_WEIGHTS: [&str; 6] = ["W1", "W2", "W3", "W4", "W5", "W6"];

fn weight_name(base: &str, layer: usize) -> String {
    if layer == 0 {
        base.to_string()
    } else {
        format!("{base}_{}", layer + 1)
    }
}

/// `W1..W6` per layer (suffixed `_2`, `_3`, ... beyond the first) and `Wc`.
/// Each weight is stored `out x in`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParameters {
    store: ParamStore,
}

impl ModelParameters {
    pub fn init(cfg: &ModelConfig, node_in_dim: usize, seed_value: u64) -> Result<Self> {
        cfg.validate()?;
        let mut rng = seed::rng(seed::derive_seed(seed_value, seed::streams::INIT, 0));
        let h = cfg.hidden;
        let mut store = ParamStore::new();
        for layer in 0..cfg.layers {
            let (edge_in, node_in) = if layer == 0 { (cfg.in_dim, node_in_dim) } else { (h, h) };
            let shapes = [(h, edge_in), (h, edge_in), (h, node_in), (h, h), (h, h), (h, edge_in)];
            for (base, (r, c)) in LAYER_WEIGHTS.iter().zip(shapes) {
                store.insert(weight_name(base, layer), Matrix::glorot(r, c, &mut rng))?;
            }
        }
        store.insert("Wc", Matrix::glorot(cfg.classes, h, &mut rng))?;
        Ok(ModelParameters { store })
    }

    /// Wraps a loaded store after checking it matches `cfg`.
    pub fn from_store(store: ParamStore, cfg: &ModelConfig, node_in_dim: usize) -> Result<Self> {
        let expected = Self::init(cfg, node_in_dim, 0)?;
        let same = store.len() == expected.store.len()
            && (0..store.len()).all(|i| {
                store.name(i) == expected.store.name(i) && store.value(i).shape() == expected.store.value(i).shape()
            });
        if !same {
            return Err(Error::Config("checkpoint layout does not match the model configuration".into()));
        }
        Ok(ModelParameters { store })
    }

    pub fn store(&self) -> &ParamStore {
        &self.store
    }

    pub fn store_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }

    pub fn into_store(self) -> ParamStore {
        self.store
    }

    pub fn get(&self, name: &str) -> Option<&Matrix> {
        self.store.get(name)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.store.save(path)
    }
}

/// Values recorded by one forward pass. Attention coefficients are listed
/// per nonzero of `H`, in its (node, hyperedge) entry order.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    pub node_reps: Matrix,
    pub hyperedge_reps: Matrix,
    pub edge_attention: Vec<f64>,
    pub node_attention: Vec<f64>,
    pub logits: Matrix,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Eval,
    /// Dropout on, with masks drawn from this seed.
    Train { dropout_seed: u64 },
}

struct LayerVars {
    w: [Var; 6],
}

/// A recorded forward pass, ready for loss evaluation and backpropagation.
pub struct ForwardPass {
    tape: Tape,
    params: Vec<Var>,
    shapes: Vec<(usize, usize)>,
    logits: Var,
    pub trace: ForwardTrace,
}

fn activate(tape: &mut Tape, x: Var, cfg: &ModelConfig) -> Result<Var> {
    match cfg.activation {
        Activation::Relu => tape.relu(x),
        Activation::LeakyRelu => tape.leaky_relu(x, cfg.leaky_slope),
        Activation::Identity => Ok(x),
    }
}

fn mean_weights(pattern: &SparsePattern) -> Matrix {
    let mut w = vec![0.0; pattern.nnz()];
    for r in 0..pattern.rows() {
        let range = pattern.row_range(r);
        let v = 1.0 / range.len() as f64;
        for e in range {
            w[e] = v;
        }
    }
    Matrix::column(&w)
}

/// Attention (or mean) weights over the entries of `pattern`, where `rows`
/// holds one feature row per pattern row and `cols` one per pattern column.
fn neighborhood_weights(
    tape: &mut Tape,
    pattern: &Arc<SparsePattern>,
    rows: Var,
    cols: Var,
    cfg: &ModelConfig,
) -> Result<Var> {
    if !cfg.attention {
        return tape.constant(mean_weights(pattern));
    }
    let scores = tape.pair_scores(rows, cols, pattern)?;
    let scores = tape.leaky_relu(scores, cfg.leaky_slope)?;
    tape.masked_softmax(scores, pattern)
}

fn linear(tape: &mut Tape, x: Var, w: Var) -> Result<Var> {
    let wt = tape.transpose(w)?;
    tape.matmul(x, wt)
}

/// Hyperedge-level attention: new node representations and `Γ` (per entry of `H`).
pub fn edge_to_node(
    tape: &mut Tape,
    hg: &SequenceHypergraph,
    edges_prev: Var,
    nodes_prev: Var,
    weights: &[Var; 6],
    cfg: &ModelConfig,
) -> Result<(Var, Var)> {
    let [w1, w2, w3, ..] = *weights;
    let h = hg.incidence();
    let gamma = if cfg.attention {
        let node_side = linear(tape, nodes_prev, w3)?;
        let edge_side = linear(tape, edges_prev, w2)?;
        neighborhood_weights(tape, h, node_side, edge_side, cfg)?
    } else {
        neighborhood_weights(tape, h, nodes_prev, edges_prev, cfg)?
    };
    let messages = linear(tape, edges_prev, w1)?;
    let agg = tape.spmm(gamma, h, messages)?;
    Ok((activate(tape, agg, cfg)?, gamma))
}

/// Node-level attention: new hyperedge representations and `Δ` (per entry of `H^T`).
pub fn node_to_edge(
    tape: &mut Tape,
    hg: &SequenceHypergraph,
    nodes: Var,
    edges_prev: Var,
    weights: &[Var; 6],
    cfg: &ModelConfig,
) -> Result<(Var, Var)> {
    let [_, _, _, w4, w5, w6] = *weights;
    let ht = hg.incidence_t();
    let delta = if cfg.attention {
        let edge_side = linear(tape, edges_prev, w6)?;
        let node_side = linear(tape, nodes, w5)?;
        neighborhood_weights(tape, ht, edge_side, node_side, cfg)?
    } else {
        neighborhood_weights(tape, ht, edges_prev, nodes, cfg)?
    };
    let messages = linear(tape, nodes, w4)?;
    let agg = tape.spmm(delta, ht, messages)?;
    Ok((activate(tape, agg, cfg)?, delta))
}

pub fn forward(
    hg: &SequenceHypergraph,
    inputs: &GraphInputs,
    params: &ModelParameters,
    cfg: &ModelConfig,
    mode: Mode,
) -> Result<ForwardPass> {
    cfg.validate()?;
    if inputs.edge_features.shape() != (hg.num_edges(), cfg.in_dim) {
        return Err(Error::ShapeMismatch {
            op: "forward",
            left: "edge features",
            left_shape: inputs.edge_features.shape(),
            right: "(hyperedges, in_dim)",
            right_shape: (hg.num_edges(), cfg.in_dim),
        });
    }
    let mut tape = Tape::new();
    let store = params.store();
    let mut param_vars = Vec::with_capacity(store.len());
    let mut shapes = Vec::with_capacity(store.len());
    for v in store.values() {
        param_vars.push(tape.param(v.clone())?);
        shapes.push(v.shape());
    }
    let layers: Vec<LayerVars> = (0..cfg.layers)
        .map(|l| {
            let mut w = [param_vars[0]; 6];
            for (k, base) in LAYER_WEIGHTS.iter().enumerate() {
                let idx = store
                    .index_of(&weight_name(base, l))
                    .ok_or_else(|| Error::Config(format!("missing parameter {}", weight_name(base, l))))?;
                w[k] = param_vars[idx];
            }
            Ok(LayerVars { w })
        })
        .collect::<Result<_>>()?;
    let wc = param_vars[store.index_of("Wc").ok_or_else(|| Error::Config("missing parameter Wc".into()))?];

    let mut rng: Option<ChaCha8Rng> = match mode {
        Mode::Eval => None,
        Mode::Train { dropout_seed } => Some(seed::rng(dropout_seed)),
    };
    let mut drop = |tape: &mut Tape, x: Var| -> Result<Var> {
        match rng.as_mut() {
            Some(r) if cfg.dropout > 0.0 => tape.dropout(x, cfg.dropout, r),
            _ => Ok(x),
        }
    };

    let mut edges = tape.constant(inputs.edge_features.clone())?;
    let mut nodes = tape.constant(inputs.node_features.clone())?;
    let mut gamma = None;
    let mut delta = None;
    for layer in &layers {
        let (m, g) = edge_to_node(&mut tape, hg, edges, nodes, &layer.w, cfg)?;
        let m = drop(&mut tape, m)?;
        let (n, d) = node_to_edge(&mut tape, hg, m, edges, &layer.w, cfg)?;
        let n = drop(&mut tape, n)?;
        nodes = m;
        edges = n;
        gamma = Some(g);
        delta = Some(d);
    }
    let logits = linear(&mut tape, edges, wc)?;

    let gamma = tape.value(gamma.expect("at least one layer")).as_slice().to_vec();
    let delta_t = tape.value(delta.expect("at least one layer")).as_slice();
    let trace = ForwardTrace {
        node_reps: tape.value(nodes).clone(),
        hyperedge_reps: tape.value(edges).clone(),
        edge_attention: gamma,
        node_attention: hg.incidence().from_transposed_order(delta_t),
        logits: tape.value(logits).clone(),
    };
    Ok(ForwardPass {
        tape,
        params: param_vars,
        shapes,
        logits,
        trace,
    })
}

impl ForwardPass {
    pub fn logits(&self) -> &Matrix {
        &self.trace.logits
    }

    /// Loss value and its gradient for every parameter, in store order.
    pub fn loss_and_grads(mut self, targets: Arc<LossTargets>) -> Result<(f64, Vec<Matrix>)> {
        let loss = self.tape.cross_entropy(self.logits, targets)?;
        let value = self.tape.value(loss).get(0, 0);
        let grads = self.tape.backward(loss)?;
        let out = self
            .params
            .iter()
            .zip(&self.shapes)
            .map(|(&v, &shape)| grads.get_or_zeros(v, shape))
            .collect();
        Ok((value, out))
    }

    /// Loss and the gradient with respect to the logits only.
    pub fn loss_and_logit_grad(mut self, targets: Arc<LossTargets>) -> Result<(f64, Matrix)> {
        let loss = self.tape.cross_entropy(self.logits, targets)?;
        let value = self.tape.value(loss).get(0, 0);
        let grads = self.tape.backward(loss)?;
        let shape = self.trace.logits.shape();
        Ok((value, grads.get_or_zeros(self.logits, shape)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassWeighting {
    Uniform,
    InverseFrequency,
}

/// Per-class loss weights from the labels selected by `mask`. Inverse
/// frequency weights are `count_total / (C * count_c)`; classes absent from
/// the mask get weight 1.
pub fn class_weights(labels: &[usize], mask: &[bool], classes: usize, scheme: ClassWeighting) -> Vec<f64> {
    match scheme {
        ClassWeighting::Uniform => vec![1.0; classes],
        ClassWeighting::InverseFrequency => {
            let mut counts = vec![0usize; classes];
            for (&l, _) in labels.iter().zip(mask).filter(|(_, &m)| m) {
                counts[l] += 1;
            }
            let total: usize = counts.iter().sum();
            counts
                .iter()
                .map(|&c| if c == 0 { 1.0 } else { total as f64 / (classes * c) as f64 })
                .collect()
        }
    }
}

/// Weighted softmax cross-entropy of `logits`, averaged over masked rows.
pub fn loss(logits: &Matrix, labels: &[usize], mask: &[bool], class_weights: &[f64]) -> Result<f64> {
    let mut tape = Tape::new();
    let z = tape.constant(logits.clone())?;
    let l = tape.cross_entropy(
        z,
        Arc::new(LossTargets {
            labels: labels.to_vec(),
            mask: mask.to_vec(),
            class_weights: class_weights.to_vec(),
        }),
    )?;
    Ok(tape.value(l).get(0, 0))
}

/// Row-wise argmax (first maximum wins).
pub fn predict(logits: &Matrix) -> Vec<usize> {
    (0..logits.rows())
        .map(|r| {
            let row = logits.row(r);
            let mut best = 0;
            for (c, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = c;
                }
            }
            best
        })
        .collect()
}

/// Member subsequences of hyperedge `edge` ranked by node-level attention,
/// highest first (ties by node index). Returns `(node, delta)` pairs.
pub fn top_members(hg: &SequenceHypergraph, trace: &ForwardTrace, edge: usize, top: usize) -> Result<Vec<(usize, f64)>> {
    if edge >= hg.num_edges() {
        return Err(Error::UnknownSequence(edge));
    }
    let h = hg.incidence();
    let mut members: Vec<(usize, f64)> = h
        .col(edge)
        .iter()
        .zip(h.col_entries(edge))
        .map(|(&node, &e)| (node, trace.node_attention[e]))
        .collect();
    members.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    members.truncate(top);
    Ok(members)
}

/// Writes `node_index<TAB>edge_index<TAB>gamma<TAB>delta` per nonzero of `H`.
pub fn export_attention(hg: &SequenceHypergraph, trace: &ForwardTrace, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for (e, (i, j)) in hg.incidence().coo().into_iter().enumerate() {
        out.push_str(&format!(
            "{i}\t{j}\t{}\t{}\n",
            trace.edge_attention[e], trace.node_attention[e]
        ));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
