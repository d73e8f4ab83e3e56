//! Hierarchical federated training over SBS groups.
//!
//! One global round works in three stages: every SBS group runs S sub-global
//! iterations (each device trains locally from the group's sub-global model,
//! the group aggregates), the groups exchange sub-global models over the
//! backhaul, and every SBS independently computes the same global model from
//! the full set. There is no central server; the code asserts that all SBS
//! replicas of the global model are bit-identical.
//!
//! Reproducibility: device minibatch streams are derived from
//! `(seed, round, sub_iteration, device)` and aggregation sums in fixed
//! device order. The traditional-FL baseline uses sub_iteration = 0, so an
//! S=1 single-group run is bit-identical to it by construction.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::metrics::RoundMetrics;
use crate::model::{sgd_step, ModelKind, ModelShape};
use crate::seed::{self, stream};
use crate::topology::{packet_error_rate, sinr, Assignment, NetworkState};
use crate::Result;

/// A flat supervised dataset; features are row-major `n * n_features`.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub features: Vec<f32>,
    pub labels: Vec<u8>,
    pub n_features: usize,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Gathers the given rows into an f64 batch matrix.
    pub fn batch(&self, indices: &[usize]) -> Array2<f64> {
        let mut out = Array2::zeros((indices.len(), self.n_features));
        for (row, &i) in indices.iter().enumerate() {
            let src = &self.features[i * self.n_features..(i + 1) * self.n_features];
            for (dst, &v) in out.row_mut(row).iter_mut().zip(src) {
                *dst = v as f64;
            }
        }
        out
    }
}

/// Flat model weights plus the sample count they were trained on, which is
/// the aggregation weight.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub weights: Vec<f64>,
    pub n_samples: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    /// Local SGD epochs per sub-global iteration (E).
    pub local_iters: usize,
    /// Sub-global iterations per global round (S); schemes are compared at
    /// a fixed budget T = E * S.
    pub subglobal_iters: usize,
    pub global_rounds: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub model_kind: ModelKind,
    /// Couple training to the channel: device uploads are dropped with
    /// probability equal to their packet error rate.
    pub coupled_channel: bool,
    /// Stop once test accuracy reaches this; `None` runs all rounds.
    pub accuracy_target: Option<f64>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            local_iters: 8,
            subglobal_iters: 1,
            global_rounds: 30,
            learning_rate: 0.05,
            batch_size: 32,
            model_kind: ModelKind::Logistic,
            coupled_channel: false,
            accuracy_target: None,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("local_iters", self.local_iters),
            ("subglobal_iters", self.subglobal_iters),
            ("global_rounds", self.global_rounds),
            ("batch_size", self.batch_size),
        ] {
            if v < 1 {
                return Err(Error::Config(format!("{name} must be at least 1")));
            }
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if let Some(t) = self.accuracy_target {
            if !(t > 0.0 && t <= 1.0) {
                return Err(Error::Config(format!(
                    "accuracy_target must be in (0, 1], got {t}"
                )));
            }
        }
        Ok(())
    }

    /// Per-round local computation budget T = E * S.
    pub fn budget(&self) -> usize {
        self.local_iters * self.subglobal_iters
    }
}

/// One device's slice of the shared dataset.
#[derive(Debug, Clone)]
pub struct DeviceDataset {
    /// Sample indices into the shared dataset.
    pub indices: Vec<usize>,
    /// Count per label value.
    pub label_histogram: Vec<usize>,
}

impl DeviceDataset {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn distinct_labels(&self) -> usize {
        self.label_histogram.iter().filter(|&&c| c > 0).count()
    }
}

/// Label-sorted shard partition: sort sample indices by label, cut into
/// contiguous shards of `shard_size`, shuffle the shard ids with `seed`, and
/// deal two shards to each device. Leftover shards go unused.
///
/// Two contiguous shards of a label-sorted list span at most four labels,
/// which is what makes the partition pathologically non-IID.
pub fn partition_noniid(
    labels: &[u8],
    n_devices: usize,
    shard_size: usize,
    seed: u64,
) -> Result<Vec<DeviceDataset>> {
    if shard_size == 0 || !labels.len().is_multiple_of(shard_size) {
        return Err(Error::Config(format!(
            "shard_size {shard_size} must divide the dataset size {}",
            labels.len()
        )));
    }
    let n_shards = labels.len() / shard_size;
    if 2 * n_devices > n_shards {
        return Err(Error::InsufficientShards {
            needed: 2 * n_devices,
            available: n_shards,
        });
    }

    let mut by_label: Vec<usize> = (0..labels.len()).collect();
    by_label.sort_by_key(|&i| labels[i]); // stable: ties stay in index order

    let mut shard_ids: Vec<usize> = (0..n_shards).collect();
    shard_ids.shuffle(&mut seed::rng(seed));

    let n_labels = labels.iter().copied().max().unwrap_or(0) as usize + 1;
    Ok((0..n_devices)
        .map(|d| {
            let mut indices = Vec::with_capacity(2 * shard_size);
            for &shard in &shard_ids[2 * d..2 * d + 2] {
                indices.extend_from_slice(&by_label[shard * shard_size..(shard + 1) * shard_size]);
            }
            let mut label_histogram = vec![0usize; n_labels];
            for &i in &indices {
                label_histogram[labels[i] as usize] += 1;
            }
            DeviceDataset {
                indices,
                label_histogram,
            }
        })
        .collect())
}

/// Minibatch stream for `(seed, round, sub_iteration, device)`. The FL
/// baseline always passes `sub_iteration = 0`.
fn device_rng(seed: u64, round: usize, sub_iteration: usize, device: usize) -> ChaCha8Rng {
    let s = seed::mix(seed, stream::LOCAL_TRAIN);
    let s = seed::mix(s, round as u64);
    let s = seed::mix(s, sub_iteration as u64);
    seed::rng(seed::mix(s, device as u64))
}

/// Uniform draw deciding whether an upload is dropped.
fn drop_draw(seed: u64, round: usize, sub_iteration: usize, device: usize) -> f64 {
    let s = seed::mix(seed, stream::CHANNEL_DROPS);
    let s = seed::mix(s, round as u64);
    let s = seed::mix(s, sub_iteration as u64);
    seed::rng(seed::mix(s, device as u64)).gen()
}

/// `cfg.local_iters` epochs of minibatch SGD from `weights` on one device's
/// data; returns the updated model weighted by the device's sample count.
pub fn local_train(
    shape: &ModelShape,
    weights: &[f64],
    data: &Dataset,
    device: &DeviceDataset,
    device_id: usize,
    cfg: &TrainConfig,
    rng: &mut ChaCha8Rng,
) -> Result<ModelParams> {
    if device.is_empty() {
        return Err(Error::EmptyDataset(device_id));
    }
    if shape.n_features != data.n_features {
        return Err(Error::DimensionMismatch(format!(
            "model expects {} features, dataset has {}",
            shape.n_features, data.n_features
        )));
    }
    let batch_size = cfg.batch_size.max(1);
    let mut order = device.indices.clone();
    let mut w = weights.to_vec();
    for _ in 0..cfg.local_iters {
        order.shuffle(rng);
        for chunk in order.chunks(batch_size) {
            let x = data.batch(chunk);
            let y: Vec<u8> = chunk.iter().map(|&i| data.labels[i]).collect();
            let g = shape.grad(&w, &x.view(), &y);
            sgd_step(&mut w, &g, cfg.learning_rate);
        }
    }
    Ok(ModelParams {
        weights: w,
        n_samples: device.len() as u64,
    })
}

/// Sample-count-weighted mean of the models, summed in list order.
///
/// A single-model list returns that model unchanged (exact, no arithmetic),
/// so one-group hierarchies collapse bit-identically onto flat averaging.
pub fn aggregate(models: &[&ModelParams]) -> Result<ModelParams> {
    let Some(first) = models.first() else {
        return Err(Error::EmptyAggregate("no participants"));
    };
    if models.iter().any(|m| m.weights.len() != first.weights.len()) {
        return Err(Error::DimensionMismatch(
            "aggregation over different model sizes".into(),
        ));
    }
    let total: u64 = models.iter().map(|m| m.n_samples).sum();
    if total == 0 {
        return Err(Error::EmptyAggregate("total sample weight is zero"));
    }
    if models.len() == 1 {
        return Ok((*first).clone());
    }
    let mut weights = vec![0.0; first.weights.len()];
    for m in models {
        let wt = m.n_samples as f64;
        for (acc, &v) in weights.iter_mut().zip(&m.weights) {
            *acc += wt * v;
        }
    }
    let inv = 1.0 / total as f64;
    for w in &mut weights {
        *w *= inv;
    }
    Ok(ModelParams {
        weights,
        n_samples: total,
    })
}

/// Top-1 accuracy of `weights` on a held-out set.
pub fn evaluate(shape: &ModelShape, weights: &[f64], test: &Dataset) -> Result<f64> {
    if shape.n_features != test.n_features {
        return Err(Error::DimensionMismatch(format!(
            "model expects {} features, test set has {}",
            shape.n_features, test.n_features
        )));
    }
    if weights.len() != shape.n_params() {
        return Err(Error::DimensionMismatch(format!(
            "weight vector has {} entries, shape needs {}",
            weights.len(),
            shape.n_params()
        )));
    }
    if test.is_empty() {
        return Err(Error::EmptyAggregate("empty test set"));
    }
    let mut correct = 0usize;
    let all: Vec<usize> = (0..test.len()).collect();
    for chunk in all.chunks(1024) {
        let x = test.batch(chunk);
        let pred = shape.predict(weights, &x.view());
        correct += pred
            .iter()
            .zip(chunk.iter().map(|&i| test.labels[i]))
            .filter(|&(&p, t)| p == t as usize)
            .count();
    }
    Ok(correct as f64 / test.len() as f64)
}

/// Metrics plus the final global model of one training run.
#[derive(Debug, Clone)]
pub struct TrainRun {
    pub metrics: RoundMetrics,
    pub model: ModelParams,
}

fn init_model(shape: &ModelShape, seed: u64) -> Vec<f64> {
    shape.init_params(&mut seed::rng(seed::mix(seed, stream::TRAIN_INIT)))
}

/// Runs dispersed federated training under a fixed network assignment.
///
/// Devices are grouped by serving SBS; unassociated devices sit out. With
/// `coupled_channel`, each upload is dropped with probability equal to the
/// device's packet error rate (unscheduled devices always drop); a group
/// whose uploads all fail keeps its previous sub-global model for that
/// iteration. Records `test_accuracy` and `param_sum` per round, plus
/// `upload_drops` when the channel is coupled.
pub fn run_ddfl(
    state: &NetworkState,
    assignment: &Assignment,
    train: &Dataset,
    test: &Dataset,
    devices: &[DeviceDataset],
    cfg: &TrainConfig,
) -> Result<TrainRun> {
    cfg.validate()?;
    if devices.len() != state.n_devices() || assignment.n_devices() != state.n_devices() {
        return Err(Error::DimensionMismatch(format!(
            "state has {} devices, got {} datasets over {} assignment slots",
            state.n_devices(),
            devices.len(),
            assignment.n_devices()
        )));
    }
    assignment.validate(state.n_sbs(), state.n_rbs())?;

    let shape = ModelShape::of_kind(cfg.model_kind, train.n_features);
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); state.n_sbs()];
    for d in 0..state.n_devices() {
        if let Some(s) = assignment.assoc[d] {
            groups[s].push(d);
        }
    }
    if groups.iter().all(Vec::is_empty) {
        return Err(Error::EmptyAggregate("no device is associated with any SBS"));
    }
    let per: Vec<f64> = (0..state.n_devices())
        .map(|d| match sinr(d, state, assignment) {
            Ok(v) => packet_error_rate(v, state.waterfall_threshold),
            Err(_) => 1.0,
        })
        .collect();

    let mut global = init_model(&shape, cfg.seed);
    let mut metrics = RoundMetrics::new();
    for round in 0..cfg.global_rounds {
        let mut drops_this_round = 0usize;
        let mut group_models: Vec<ModelParams> = Vec::new();
        for group in groups.iter().filter(|g| !g.is_empty()) {
            let group_samples: u64 = group.iter().map(|&d| devices[d].len() as u64).sum();
            let mut sub = global.clone();
            for it in 0..cfg.subglobal_iters {
                let updated: Vec<ModelParams> = group
                    .par_iter()
                    .map(|&d| {
                        let mut rng = device_rng(cfg.seed, round, it, d);
                        local_train(&shape, &sub, train, &devices[d], d, cfg, &mut rng)
                    })
                    .collect::<Result<_>>()?;
                let survivors: Vec<&ModelParams> = if cfg.coupled_channel {
                    group
                        .iter()
                        .zip(&updated)
                        .filter(|&(&d, _)| {
                            let dropped = drop_draw(cfg.seed, round, it, d) < per[d];
                            drops_this_round += dropped as usize;
                            !dropped
                        })
                        .map(|(_, m)| m)
                        .collect()
                } else {
                    updated.iter().collect()
                };
                if survivors.is_empty() {
                    continue; // whole group dropped: keep the previous sub-global model
                }
                sub = aggregate(&survivors)?.weights;
            }
            group_models.push(ModelParams {
                weights: sub,
                n_samples: group_samples,
            });
        }

        // All-to-all exchange: every SBS aggregates the same set in the same
        // order, so the replicas must agree bit for bit.
        let exchange: Vec<&ModelParams> = group_models.iter().collect();
        let replicas: Vec<ModelParams> = (0..group_models.len())
            .map(|_| aggregate(&exchange))
            .collect::<Result<_>>()?;
        for r in &replicas[1..] {
            assert!(
                r.weights == replicas[0].weights,
                "SBS replicas of the global model diverged"
            );
        }
        global = replicas.into_iter().next().unwrap().weights;

        let acc = evaluate(&shape, &global, test)?;
        metrics.push(round, "test_accuracy", acc);
        metrics.push(round, "param_sum", global.iter().sum());
        if cfg.coupled_channel {
            metrics.push(round, "upload_drops", drops_this_round as f64);
        }
        if cfg.accuracy_target.is_some_and(|t| acc >= t) {
            break;
        }
    }
    Ok(TrainRun {
        metrics,
        model: ModelParams {
            weights: global,
            n_samples: groups.iter().flatten().map(|&d| devices[d].len() as u64).sum(),
        },
    })
}

/// Traditional FL: one aggregator over all devices, ideal channel,
/// `cfg.local_iters` epochs per round. Same init, minibatch streams, and
/// metrics as [`run_ddfl`] so traces are directly comparable.
pub fn run_fl_baseline(
    train: &Dataset,
    test: &Dataset,
    devices: &[DeviceDataset],
    cfg: &TrainConfig,
) -> Result<TrainRun> {
    cfg.validate()?;
    if devices.is_empty() {
        return Err(Error::EmptyAggregate("no devices"));
    }
    let shape = ModelShape::of_kind(cfg.model_kind, train.n_features);
    let mut global = init_model(&shape, cfg.seed);
    let mut metrics = RoundMetrics::new();
    for round in 0..cfg.global_rounds {
        let updated: Vec<ModelParams> = (0..devices.len())
            .into_par_iter()
            .map(|d| {
                let mut rng = device_rng(cfg.seed, round, 0, d);
                local_train(&shape, &global, train, &devices[d], d, cfg, &mut rng)
            })
            .collect::<Result<_>>()?;
        let refs: Vec<&ModelParams> = updated.iter().collect();
        global = aggregate(&refs)?.weights;

        let acc = evaluate(&shape, &global, test)?;
        metrics.push(round, "test_accuracy", acc);
        metrics.push(round, "param_sum", global.iter().sum());
        if cfg.accuracy_target.is_some_and(|t| acc >= t) {
            break;
        }
    }
    let n_samples = devices.iter().map(|d| d.len() as u64).sum();
    Ok(TrainRun {
        metrics,
        model: ModelParams {
            weights: global,
            n_samples,
        },
    })
}
