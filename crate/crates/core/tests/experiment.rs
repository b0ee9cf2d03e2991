use seq_hygan::synth::{planted_motif, PlantedMotifConfig};
use seq_hygan::tokenize::TokenizerSpec;
use seq_hygan::trainer::{run_experiment, ExperimentOptions, TrainConfig};

#[test]
fn more_labels_do_not_hurt() {
    let corpus = planted_motif(&PlantedMotifConfig::default()).unwrap().corpus;
    let cfg = TrainConfig { repeats: 3, max_epochs: 200, patience: 50, ..TrainConfig::default() };
    let f1 = |fraction: f64| {
        let opts = ExperimentOptions { train_fraction: Some(fraction), ..Default::default() };
        let exp = run_experiment(&corpus, &TokenizerSpec::Kmer { k: 5 }, &cfg, &opts).unwrap();
        let train = exp.split.train_ids.len();
        assert_eq!(train, (fraction * corpus.len() as f64).round() as usize);
        exp.report.mean.macro_avg.f1
    };
    let (low, high) = (f1(0.1), f1(0.8));
    eprintln!("train fraction 0.1: {low:.4}, 0.8: {high:.4}");
    assert!(high >= low - 0.05, "{high} < {low} - 0.05");
}
