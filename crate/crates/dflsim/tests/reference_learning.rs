//! Reference results on the bundled MNIST data: pinned desk-scale bounds
//! for the traditional FL baseline and a counting oracle for `evaluate`.

use std::path::Path;

use dflsim::federated::{
    evaluate, partition_noniid, run_fl_baseline, Dataset, TrainConfig,
};
use dflsim::model::{ModelKind, ModelShape};
use dflsim::seed::{self, stream};
use dflsim::topology::TopologyConfig;

fn mnist() -> (Dataset, Dataset) {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist");
    let train = dflsim::harness::load_mnist_idx(
        &root.join("train-images-idx3-ubyte.gz"),
        &root.join("train-labels-idx1-ubyte.gz"),
    )
    .unwrap();
    let test = dflsim::harness::load_mnist_idx(
        &root.join("t10k-images-idx3-ubyte.gz"),
        &root.join("t10k-labels-idx1-ubyte.gz"),
    )
    .unwrap();
    (train, test)
}

/// Measured on this exact configuration (seed 0): the trace climbs
/// monotonically past 0.885 at round 38 and ends at 0.8912 after 50
/// rounds. The logistic model does not clear 90% on this split within 50
/// rounds, so 0.885 is the pinned bound with margin under the measurement.
#[test]
fn fl_clears_pinned_accuracy_within_fifty_rounds() {
    let (train, test) = mnist();
    let n_devices = TopologyConfig::default().n_devices;
    let devices =
        partition_noniid(&train.labels, n_devices, 300, seed::mix(0, stream::PARTITION)).unwrap();

    let cfg = TrainConfig {
        global_rounds: 50,
        accuracy_target: Some(0.885),
        ..TrainConfig::default()
    };
    let run = run_fl_baseline(&train, &test, &devices, &cfg).unwrap();
    let series = run.metrics.series("test_accuracy");
    let round = series
        .iter()
        .position(|&a| a >= 0.885)
        .map(|i| i + 1)
        .expect("FL did not reach 88.5% within 50 rounds");
    println!("FL reached 88.5% at round {round}");
    assert!(round <= 50);
}

/// An all-zero logistic model emits identical logits for every class, so
/// argmax tie-breaks to class 0 and accuracy equals the class-0 label rate.
#[test]
fn zero_model_accuracy_matches_label_count_oracle() {
    let (_, test) = mnist();
    let shape = ModelShape::of_kind(ModelKind::Logistic, test.n_features);
    let weights = vec![0.0; shape.n_params()];
    let acc = evaluate(&shape, &weights, &test).unwrap();

    let zeros = test.labels.iter().filter(|&&l| l == 0).count();
    let oracle = zeros as f64 / test.labels.len() as f64;
    assert_eq!(acc, oracle);
    assert!((0.098..=0.114).contains(&acc), "acc={acc}");
}
