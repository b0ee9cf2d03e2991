//! Central-difference gradient check of the full network on a toy hypergraph.
//!
//!     cargo run --example gradient_check

use std::sync::Arc;

use seq_hygan::hypergraph::SequenceHypergraph;
use seq_hygan::model::{forward, GraphInputs, ModelConfig, ModelParameters, Mode, NodeInit};
use seq_hygan::numerics::{grad_check, GradCheckOptions, LossTargets};

fn main() -> seq_hygan::Result<()> {
    let hg = SequenceHypergraph::from_parts(
        (0..6).map(|i| format!("t{i}")).collect(),
        vec![vec![0, 1, 2], vec![2, 3], vec![3, 4, 5, 0], vec![1, 5]],
        vec![0, 1, 0, 1],
        vec!["a".into(), "b".into()],
    )?;
    let cfg = ModelConfig::new(hg.num_edges(), 5, 2);
    let inputs = GraphInputs::one_hot(&hg, NodeInit::EdgeMean)?;
    let params = ModelParameters::init(&cfg, inputs.node_features.cols(), 1)?;
    let targets = Arc::new(LossTargets {
        labels: hg.labels().to_vec(),
        mask: vec![true; hg.num_edges()],
        class_weights: vec![1.0; 2],
    });
    let report = grad_check(
        |store| {
            let p = ModelParameters::from_store(store.clone(), &cfg, inputs.node_features.cols())?;
            forward(&hg, &inputs, &p, &cfg, Mode::Eval)?.loss_and_grads(targets.clone())
        },
        params.store(),
        &GradCheckOptions::default(),
    )?;
    for p in &report.params {
        println!("{:<3} coords={:<3} max_rel_error={:.2e} {}", p.name, p.coords_checked, p.max_rel_error, if p.passed { "ok" } else { "FAIL" });
    }
    Ok(())
}
