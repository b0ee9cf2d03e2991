//! Transductive full-batch training, grid search and repeated experiments.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{make_split_with, Bucket, LabeledCorpus, SplitAssignment, SplitOptions};
use crate::error::{Error, Result};
use crate::hypergraph::{build_hypergraph, HypergraphStats, SequenceHypergraph};
use crate::metrics::{accuracy, evaluate, Averaging, Scores};
use crate::model::{
    class_weights, forward, predict, Activation, ClassWeighting, GraphInputs, ModelConfig, ModelParameters, Mode,
    NodeInit,
};
use crate::numerics::{AdamConfig, LossTargets};
use crate::seed;
use crate::tokenize::{tokenize_corpus, Tokenization, TokenizerSpec};

/// Minimum decrease of the validation loss that counts as an improvement.
pub const IMPROVEMENT_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionMetric {
    ValF1,
    ValLoss,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub lr: f64,
    pub hidden: usize,
    pub dropout: f64,
    pub weight_decay: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub repeats: usize,
    pub seed: u64,
    pub attention: bool,
    pub activation: Activation,
    pub layers: usize,
    pub node_init: NodeInit,
    pub class_weighting: ClassWeighting,
    pub selection: SelectionMetric,
    pub split_ratio: (f64, f64, f64),
    pub stratified: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 5e-3,
            hidden: 64,
            dropout: 0.1,
            weight_decay: 1e-3,
            max_epochs: 1000,
            patience: 200,
            repeats: 5,
            seed: 0,
            attention: true,
            activation: Activation::Relu,
            layers: 1,
            node_init: NodeInit::EdgeMean,
            class_weighting: ClassWeighting::Uniform,
            selection: SelectionMetric::ValF1,
            split_ratio: (0.8, 0.1, 0.1),
            stratified: false,
        }
    }
}

impl TrainConfig {
    pub fn model_config(&self, hg: &SequenceHypergraph) -> ModelConfig {
        ModelConfig {
            in_dim: hg.num_edges(),
            hidden: self.hidden,
            classes: hg.num_classes(),
            leaky_slope: 0.01,
            dropout: self.dropout,
            attention: self.attention,
            activation: self.activation,
            layers: self.layers,
            node_init: self.node_init,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_epochs == 0 || self.repeats == 0 {
            return Err(Error::Config("max_epochs and repeats must be positive".into()));
        }
        if !self.lr.is_finite() || self.lr < 0.0 || !(self.weight_decay >= 0.0) {
            return Err(Error::Config(format!(
                "invalid optimizer settings lr={} weight_decay={}",
                self.lr, self.weight_decay
            )));
        }
        Ok(())
    }
}

/// Axes of a hyperparameter grid; the product is searched in lr-major order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperGrid {
    pub lr: Vec<f64>,
    pub hidden: Vec<usize>,
    pub dropout: Vec<f64>,
    pub weight_decay: Vec<f64>,
}

impl HyperGrid {
    pub fn table4() -> Self {
        HyperGrid {
            lr: vec![1e-2, 5e-2, 1e-3, 5e-3],
            hidden: vec![32, 64, 128],
            dropout: vec![0.1, 0.5],
            weight_decay: vec![1e-2, 1e-3],
        }
    }

    pub fn single(cfg: &TrainConfig) -> Self {
        HyperGrid {
            lr: vec![cfg.lr],
            hidden: vec![cfg.hidden],
            dropout: vec![cfg.dropout],
            weight_decay: vec![cfg.weight_decay],
        }
    }

    pub fn len(&self) -> usize {
        self.lr.len() * self.hidden.len() * self.dropout.len() * self.weight_decay.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn configs(&self, base: &TrainConfig) -> Vec<TrainConfig> {
        let mut out = Vec::with_capacity(self.len());
        for &lr in &self.lr {
            for &hidden in &self.hidden {
                for &dropout in &self.dropout {
                    for &weight_decay in &self.weight_decay {
                        out.push(TrainConfig {
                            lr,
                            hidden,
                            dropout,
                            weight_decay,
                            ..*base
                        });
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub params: ModelParameters,
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    /// 1-based epoch whose parameters were kept.
    pub best_epoch: usize,
    pub best_val_loss: f64,
}

impl TrainOutcome {
    pub fn epochs_run(&self) -> usize {
        self.train_loss.len()
    }
}

fn targets(hg: &SequenceHypergraph, mask: Vec<bool>, weights: &[f64]) -> Arc<LossTargets> {
    Arc::new(LossTargets {
        labels: hg.labels().to_vec(),
        mask,
        class_weights: weights.to_vec(),
    })
}

fn diverged(epoch: usize, err: Error) -> Error {
    match err {
        Error::NonFinite { .. } => Error::Divergence { epoch, loss: f64::NAN },
        other => other,
    }
}

/// Trains one model on the training mask of `split`, early-stopping on the
/// validation loss, and returns the parameters of the best validation epoch.
pub fn train_once(
    hg: &SequenceHypergraph,
    inputs: &GraphInputs,
    split: &SplitAssignment,
    cfg: &TrainConfig,
    run_seed: u64,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    let model_cfg = cfg.model_config(hg);
    let m = hg.num_edges();
    let train_mask = split.mask(Bucket::Train, m);
    let val_mask = split.mask(Bucket::Val, m);
    if !val_mask.contains(&true) {
        return Err(Error::InvalidArgument("validation split is empty".into()));
    }
    let weights = class_weights(hg.labels(), &train_mask, hg.num_classes(), cfg.class_weighting);
    let train_targets = targets(hg, train_mask, &weights);
    let val_targets = targets(hg, val_mask, &weights);
    let adam = AdamConfig::new(cfg.lr, cfg.weight_decay);

    let mut params = ModelParameters::init(&model_cfg, inputs.node_features.cols(), run_seed)?;
    let mut best = params.clone();
    let mut best_val = f64::INFINITY;
    let mut best_epoch = 0;
    let mut stale = 0;
    let mut train_curve = Vec::new();
    let mut val_curve = Vec::new();

    for epoch in 1..=cfg.max_epochs {
        let dropout_seed = seed::derive_seed(run_seed, seed::streams::DROPOUT, epoch as u64);
        let (train_loss, grads) = forward(hg, inputs, &params, &model_cfg, Mode::Train { dropout_seed })
            .and_then(|pass| pass.loss_and_grads(train_targets.clone()))
            .map_err(|e| diverged(epoch, e))?;
        if !train_loss.is_finite() {
            return Err(Error::Divergence { epoch, loss: train_loss });
        }
        params.store_mut().adam_step(&grads, &adam).map_err(|e| diverged(epoch, e))?;

        let val_loss = forward(hg, inputs, &params, &model_cfg, Mode::Eval)
            .and_then(|pass| pass.loss_and_logit_grad(val_targets.clone()))
            .map_err(|e| diverged(epoch, e))?
            .0;
        if !val_loss.is_finite() {
            return Err(Error::Divergence { epoch, loss: val_loss });
        }
        train_curve.push(train_loss);
        val_curve.push(val_loss);
        log::trace!("epoch {epoch} train {train_loss:.6} val {val_loss:.6}");

        if val_loss < best_val - IMPROVEMENT_EPS {
            best_val = val_loss;
            best_epoch = epoch;
            best.store_mut().copy_values_from(params.store());
            stale = 0;
        } else {
            stale += 1;
            if stale > cfg.patience {
                break;
            }
        }
    }
    Ok(TrainOutcome {
        params: best,
        train_loss: train_curve,
        val_loss: val_curve,
        best_epoch,
        best_val_loss: best_val,
    })
}

/// Predictions of a trained model for every hyperedge.
pub fn predict_all(
    hg: &SequenceHypergraph,
    inputs: &GraphInputs,
    params: &ModelParameters,
    model_cfg: &ModelConfig,
) -> Result<Vec<usize>> {
    Ok(predict(forward(hg, inputs, params, model_cfg, Mode::Eval)?.logits()))
}

fn subset(values: &[usize], ids: &[usize]) -> Vec<usize> {
    ids.iter().map(|&i| values[i]).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitScores {
    pub macro_avg: Scores,
    pub weighted_avg: Scores,
    pub accuracy: f64,
}

pub fn score_ids(preds: &[usize], truths: &[usize], ids: &[usize]) -> Result<SplitScores> {
    let (p, t) = (subset(preds, ids), subset(truths, ids));
    Ok(SplitScores {
        macro_avg: evaluate(&p, &t, Averaging::Macro)?,
        weighted_avg: evaluate(&p, &t, Averaging::Weighted)?,
        accuracy: accuracy(&p, &t)?,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridTrial {
    pub lr: f64,
    pub hidden: usize,
    pub dropout: f64,
    pub weight_decay: f64,
    pub val_f1: Option<f64>,
    pub val_loss: Option<f64>,
    pub best_epoch: Option<usize>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult {
    pub best: TrainConfig,
    pub trials: Vec<GridTrial>,
}

/// Trains every configuration of `grid` on `split` and picks the best by
/// `base.selection` (validation F1 ties go to the lower validation loss,
/// then to grid order). Configurations whose training fails are recorded
/// and skipped; the search fails only if all of them do.
pub fn grid_search(
    hg: &SequenceHypergraph,
    inputs: &GraphInputs,
    split: &SplitAssignment,
    base: &TrainConfig,
    grid: &HyperGrid,
    run_seed: u64,
) -> Result<GridResult> {
    if grid.is_empty() {
        return Err(Error::Config("hyperparameter grid is empty".into()));
    }
    let configs = grid.configs(base);
    let truths = hg.labels();
    let results: Vec<Result<(f64, f64, usize)>> = configs
        .par_iter()
        .map(|cfg| {
            let out = train_once(hg, inputs, split, cfg, run_seed)?;
            let preds = predict_all(hg, inputs, &out.params, &cfg.model_config(hg))?;
            let f1 = score_ids(&preds, truths, &split.val_ids)?.macro_avg.f1;
            Ok((f1, out.best_val_loss, out.best_epoch))
        })
        .collect();

    let mut trials = Vec::with_capacity(configs.len());
    let mut best: Option<(usize, f64, f64)> = None;
    for (idx, (cfg, res)) in configs.iter().zip(results).enumerate() {
        let mut trial = GridTrial {
            lr: cfg.lr,
            hidden: cfg.hidden,
            dropout: cfg.dropout,
            weight_decay: cfg.weight_decay,
            val_f1: None,
            val_loss: None,
            best_epoch: None,
            error: None,
        };
        match res {
            Ok((f1, loss, epoch)) => {
                trial.val_f1 = Some(f1);
                trial.val_loss = Some(loss);
                trial.best_epoch = Some(epoch);
                let better = match best {
                    None => true,
                    Some((_, bf1, bloss)) => match base.selection {
                        SelectionMetric::ValF1 => f1 > bf1 || (f1 == bf1 && loss < bloss),
                        SelectionMetric::ValLoss => loss < bloss,
                    },
                };
                if better {
                    best = Some((idx, f1, loss));
                }
            }
            Err(e) => {
                log::warn!("grid point lr={} hidden={} failed: {e}", cfg.lr, cfg.hidden);
                trial.error = Some(e.to_string());
            }
        }
        trials.push(trial);
    }
    let (idx, _, _) = best.ok_or_else(|| Error::Config("every grid configuration failed to train".into()))?;
    Ok(GridResult {
        best: configs[idx],
        trials,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatReport {
    pub repeat: usize,
    pub seed: u64,
    pub best_epoch: usize,
    pub epochs_run: usize,
    pub best_val_loss: f64,
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    pub test: SplitScores,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub tokenizer: TokenizerSpec,
    pub graph: HypergraphStats,
    pub config: TrainConfig,
    pub model: ModelConfig,
    pub train_fraction: Option<f64>,
    pub grid: Option<Vec<GridTrial>>,
    pub repeats: Vec<RepeatReport>,
    pub mean: SplitScores,
    /// Checkpoint file, relative to the report's directory.
    pub checkpoint: Option<String>,
}

impl TrainReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }
}

#[derive(Debug, Clone, Default)]
pub struct ExperimentOptions {
    pub grid: Option<HyperGrid>,
    /// Fraction of the corpus whose labels are used for training.
    pub train_fraction: Option<f64>,
}

/// Everything produced by [`run_experiment`].
#[derive(Debug, Clone)]
pub struct Experiment {
    pub report: TrainReport,
    pub tokenization: Tokenization,
    pub hypergraph: SequenceHypergraph,
    pub inputs: GraphInputs,
    /// Parameters and split of the first repeat.
    pub params: ModelParameters,
    pub split: SplitAssignment,
}

pub fn repeat_seed(master: u64, repeat: usize) -> u64 {
    seed::derive_seed(master, seed::streams::REPEAT, repeat as u64)
}

pub fn repeat_split(corpus: &LabeledCorpus, cfg: &TrainConfig, repeat: usize, train_fraction: Option<f64>) -> Result<SplitAssignment> {
    let split = make_split_with(
        corpus,
        &SplitOptions {
            ratio: cfg.split_ratio,
            seed: repeat_seed(cfg.seed, repeat),
            stratified: cfg.stratified,
        },
    )?;
    match train_fraction {
        Some(f) => split.with_train_fraction(f),
        None => Ok(split),
    }
}

fn mean_scores(rows: &[SplitScores]) -> SplitScores {
    let k = rows.len() as f64;
    let avg = |f: &dyn Fn(&SplitScores) -> Scores| Scores {
        precision: rows.iter().map(|r| f(r).precision).sum::<f64>() / k,
        recall: rows.iter().map(|r| f(r).recall).sum::<f64>() / k,
        f1: rows.iter().map(|r| f(r).f1).sum::<f64>() / k,
    };
    SplitScores {
        macro_avg: avg(&|r| r.macro_avg),
        weighted_avg: avg(&|r| r.weighted_avg),
        accuracy: rows.iter().map(|r| r.accuracy).sum::<f64>() / k,
    }
}

/// Tokenizes, builds the hypergraph once, optionally grid-searches on the
/// first repeat's split, then trains and tests `cfg.repeats` times on fresh
/// splits.
pub fn run_experiment(
    corpus: &LabeledCorpus,
    spec: &TokenizerSpec,
    cfg: &TrainConfig,
    opts: &ExperimentOptions,
) -> Result<Experiment> {
    cfg.validate()?;
    let sequences: Vec<&str> = corpus.sequences().collect();
    let tokenization = tokenize_corpus(&sequences, spec)?;
    let hg = build_hypergraph(corpus, &tokenization.token_lists())?;
    let inputs = GraphInputs::one_hot(&hg, cfg.node_init)?;
    log::info!("hypergraph: {:?}", hg.stats());

    let first_split = repeat_split(corpus, cfg, 0, opts.train_fraction)?;
    let (chosen, grid_trials) = match &opts.grid {
        Some(grid) => {
            let res = grid_search(&hg, &inputs, &first_split, cfg, grid, repeat_seed(cfg.seed, 0))?;
            (res.best, Some(res.trials))
        }
        None => (*cfg, None),
    };

    let mut repeats = Vec::with_capacity(chosen.repeats);
    let mut first = None;
    for r in 0..chosen.repeats {
        let split = if r == 0 {
            first_split.clone()
        } else {
            repeat_split(corpus, &chosen, r, opts.train_fraction)?
        };
        let run_seed = repeat_seed(chosen.seed, r);
        let out = train_once(&hg, &inputs, &split, &chosen, run_seed)?;
        let preds = predict_all(&hg, &inputs, &out.params, &chosen.model_config(&hg))?;
        let test = score_ids(&preds, hg.labels(), &split.test_ids)?;
        log::info!("repeat {r}: best epoch {} test macro F1 {:.4}", out.best_epoch, test.macro_avg.f1);
        repeats.push(RepeatReport {
            repeat: r,
            seed: run_seed,
            best_epoch: out.best_epoch,
            epochs_run: out.epochs_run(),
            best_val_loss: out.best_val_loss,
            train_loss: out.train_loss.clone(),
            val_loss: out.val_loss.clone(),
            test,
        });
        if r == 0 {
            first = Some((out.params, split));
        }
    }
    let (params, split) = first.expect("at least one repeat");
    let mean = mean_scores(&repeats.iter().map(|r| r.test).collect::<Vec<_>>());
    let report = TrainReport {
        tokenizer: *spec,
        graph: hg.stats(),
        config: chosen,
        model: chosen.model_config(&hg),
        train_fraction: opts.train_fraction,
        grid: grid_trials,
        repeats,
        mean,
        checkpoint: None,
    };
    Ok(Experiment {
        report,
        tokenization,
        hypergraph: hg,
        inputs,
        params,
        split,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::make_split;
    use crate::synth::{planted_motif, PlantedMotifConfig};

    fn small_setup() -> (LabeledCorpus, SequenceHypergraph, GraphInputs) {
        let corpus = planted_motif(&PlantedMotifConfig {
            sequences: 40,
            ..Default::default()
        })
        .unwrap()
        .corpus;
        let seqs: Vec<&str> = corpus.sequences().collect();
        let tok = tokenize_corpus(&seqs, &TokenizerSpec::Kmer { k: 5 }).unwrap();
        let hg = build_hypergraph(&corpus, &tok.token_lists()).unwrap();
        let inputs = GraphInputs::one_hot(&hg, NodeInit::EdgeMean).unwrap();
        (corpus, hg, inputs)
    }

    fn quick() -> TrainConfig {
        TrainConfig {
            hidden: 16,
            max_epochs: 60,
            patience: 20,
            repeats: 2,
            ..Default::default()
        }
    }

    #[test]
    fn table4_grid_has_48_points_in_lr_major_order() {
        let grid = HyperGrid::table4();
        let cfgs = grid.configs(&TrainConfig::default());
        assert_eq!(cfgs.len(), 48);
        assert!(cfgs[..12].iter().all(|c| c.lr == 1e-2));
        assert_eq!((cfgs[1].hidden, cfgs[1].dropout, cfgs[1].weight_decay), (32, 0.1, 1e-3));
    }

    #[test]
    fn same_seed_same_curves() {
        let (corpus, hg, inputs) = small_setup();
        let split = make_split(&corpus, (0.8, 0.1, 0.1), 3).unwrap();
        let a = train_once(&hg, &inputs, &split, &quick(), 9).unwrap();
        let b = train_once(&hg, &inputs, &split, &quick(), 9).unwrap();
        assert_eq!(a, b);
        assert!(a.best_epoch <= a.epochs_run());
    }

    #[test]
    fn patience_zero_stops_at_first_non_improving_epoch() {
        let (corpus, hg, inputs) = small_setup();
        let split = make_split(&corpus, (0.8, 0.1, 0.1), 3).unwrap();
        let cfg = TrainConfig {
            patience: 0,
            ..quick()
        };
        let out = train_once(&hg, &inputs, &split, &cfg, 1).unwrap();
        let v = &out.val_loss;
        let first_stale = (1..v.len())
            .find(|&i| !(v[i] < v[..i].iter().cloned().fold(f64::INFINITY, f64::min) - IMPROVEMENT_EPS));
        match first_stale {
            Some(i) => assert_eq!(out.epochs_run(), i + 1),
            None => assert_eq!(out.epochs_run(), cfg.max_epochs),
        }
    }

    #[test]
    fn best_epoch_has_the_lowest_validation_loss() {
        let (corpus, hg, inputs) = small_setup();
        let split = make_split(&corpus, (0.8, 0.1, 0.1), 5).unwrap();
        let out = train_once(&hg, &inputs, &split, &quick(), 2).unwrap();
        let min = out.val_loss.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(out.best_val_loss <= min + IMPROVEMENT_EPS);
        assert_eq!(out.val_loss[out.best_epoch - 1], out.best_val_loss);
        // restored parameters reproduce the best validation loss
        let model_cfg = quick().model_config(&hg);
        let weights = vec![1.0; hg.num_classes()];
        let val = targets(&hg, split.mask(Bucket::Val, hg.num_edges()), &weights);
        let (loss, _) = forward(&hg, &inputs, &out.params, &model_cfg, Mode::Eval)
            .unwrap()
            .loss_and_logit_grad(val)
            .unwrap();
        assert_eq!(loss, out.best_val_loss);
    }

    #[test]
    fn masked_out_logits_get_no_gradient() {
        let (corpus, hg, inputs) = small_setup();
        let split = make_split(&corpus, (0.8, 0.1, 0.1), 3).unwrap();
        let cfg = quick();
        let params = ModelParameters::init(&cfg.model_config(&hg), inputs.node_features.cols(), 0).unwrap();
        let mask = split.mask(Bucket::Train, hg.num_edges());
        let t = targets(&hg, mask.clone(), &[1.0, 1.0]);
        let (_, g) = forward(&hg, &inputs, &params, &cfg.model_config(&hg), Mode::Train { dropout_seed: 4 })
            .unwrap()
            .loss_and_logit_grad(t)
            .unwrap();
        for (j, &m) in mask.iter().enumerate() {
            let zero = g.row(j).iter().all(|&x| x == 0.0);
            assert_eq!(zero, !m, "row {j}");
        }
    }

    #[test]
    fn one_point_grid_returns_that_point() {
        let (corpus, hg, inputs) = small_setup();
        let split = make_split(&corpus, (0.8, 0.1, 0.1), 3).unwrap();
        let cfg = quick();
        let res = grid_search(&hg, &inputs, &split, &cfg, &HyperGrid::single(&cfg), 0).unwrap();
        assert_eq!(res.best, cfg);
        assert_eq!(res.trials.len(), 1);
    }

    #[test]
    fn sabotaged_grid_points_are_never_selected() {
        let (corpus, hg, inputs) = small_setup();
        let split = make_split(&corpus, (0.8, 0.1, 0.1), 3).unwrap();
        let grid = HyperGrid {
            lr: vec![0.0, 1e-2, 0.0],
            hidden: vec![16],
            dropout: vec![0.1],
            weight_decay: vec![1e-3],
        };
        let res = grid_search(&hg, &inputs, &split, &quick(), &grid, 0).unwrap();
        assert_eq!(res.best.lr, 1e-2);
        assert!(res.trials[0].error.is_some() && res.trials[2].error.is_some());

        let all_bad = HyperGrid { lr: vec![0.0], ..grid };
        assert!(grid_search(&hg, &inputs, &split, &quick(), &all_bad, 0).is_err());
    }

    #[test]
    fn empty_grid_is_rejected() {
        let (corpus, hg, inputs) = small_setup();
        let split = make_split(&corpus, (0.8, 0.1, 0.1), 3).unwrap();
        let grid = HyperGrid {
            lr: vec![],
            ..HyperGrid::single(&quick())
        };
        assert!(grid_search(&hg, &inputs, &split, &quick(), &grid, 0).is_err());
    }

    #[test]
    fn experiment_has_one_row_per_repeat_and_is_reproducible() {
        let (corpus, _, _) = small_setup();
        let spec = TokenizerSpec::Kmer { k: 5 };
        let a = run_experiment(&corpus, &spec, &quick(), &ExperimentOptions::default()).unwrap();
        let b = run_experiment(&corpus, &spec, &quick(), &ExperimentOptions::default()).unwrap();
        assert_eq!(a.report.repeats.len(), 2);
        assert_eq!(a.report.to_json().unwrap(), b.report.to_json().unwrap());
        let f1 = a.report.mean.macro_avg.f1;
        assert!((0.0..=1.0).contains(&f1));
    }
}
