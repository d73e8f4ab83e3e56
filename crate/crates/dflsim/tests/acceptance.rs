//! Acceptance gate: eight end-to-end checks, one test per criterion. Each
//! prints an `ACCEPTANCE <n> <name>: PASS/FAIL` line (shown with
//! `--nocapture`, or automatically when a check fails).
//!
//! The checks are property- and ordering-based at desk scale: monotone cost
//! surface, optimizer convergence and scheme ordering, matching quality
//! against exhaustive search, aggregation and gradient oracles, the
//! communication-round orderings of the learning schemes, and the bitwise
//! collapse of a one-group hierarchy onto flat federated averaging.

use std::io::Write;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::Rng;

use dflsim::cost::{device_cost, network_cost, CostConfig};
use dflsim::federated::{
    aggregate, partition_noniid, run_ddfl, run_fl_baseline, Dataset, ModelParams, TrainConfig,
};
use dflsim::harness::load_mnist_idx;
use dflsim::matching::{
    allocate_resources, associate_devices, build_rb_preferences, build_sbs_preferences,
    find_blocking_improvement, MatchMode,
};
use dflsim::model::ModelShape;
use dflsim::optimizer::{
    optimize, random_feasible_association, run_baseline, OptimizerConfig, Scheme,
};
use dflsim::seed::{self, stream};
use dflsim::topology::{generate_topology, Assignment, NetworkState, TopologyConfig};

fn verdict(n: u32, name: &str, pass: bool, detail: String) {
    let flag = if pass { "PASS" } else { "FAIL" };
    // Raw handle writes bypass libtest capture, so the line shows up in a
    // plain `cargo test` run too.
    let mut out = std::io::stdout().lock();
    writeln!(out, "ACCEPTANCE {n} {name}: {flag} ({detail})").unwrap();
    assert!(pass, "ACCEPTANCE {n} {name}: FAIL ({detail})");
}

fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| (lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

#[test]
fn criterion_1_cost_surface_shape() {
    let t0 = Instant::now();
    let sinrs = logspace(0.1, 100.0, 50);
    let thetas = linspace(0.0, 1.0, 50);
    let m = TopologyConfig::default().waterfall_threshold;

    let mut violations = 0usize;
    for &theta in &thetas {
        for pair in sinrs.windows(2) {
            if device_cost(theta, pair[1], m) >= device_cost(theta, pair[0], m) {
                violations += 1;
            }
        }
    }
    for &sinr in &sinrs {
        for pair in thetas.windows(2) {
            if device_cost(pair[1], sinr, m) <= device_cost(pair[0], sinr, m) {
                violations += 1;
            }
        }
    }
    let dt = t0.elapsed();
    verdict(
        1,
        "cost surface strictly monotone on 50x50 grid",
        violations == 0 && dt < Duration::from_secs(1),
        format!("{violations} grid-line violations, runtime {dt:?}"),
    );
}

/// Proposed-optimizer traces on the reference instance, one per seed.
fn reference_traces(n_seeds: u64) -> Vec<(Vec<f64>, bool, usize)> {
    (0..n_seeds)
        .map(|s| {
            let topo = TopologyConfig {
                seed: seed::mix(s, stream::TOPOLOGY),
                ..TopologyConfig::default()
            };
            let state = generate_topology(&topo).unwrap();
            let cfg = OptimizerConfig {
                seed: seed::mix(s, stream::OPTIMIZER),
                ..OptimizerConfig::default()
            };
            let (_, trace) = optimize(&state, &cfg).unwrap();
            (trace.costs, trace.converged, trace.iterations_used)
        })
        .collect()
}

#[test]
fn criterion_2_optimizer_convergence() {
    let t0 = Instant::now();
    let traces = reference_traces(50);
    let monotone = traces
        .iter()
        .filter(|(costs, _, _)| costs.windows(2).all(|w| w[1] <= w[0] + 1e-9))
        .count();
    let converged_within_20 = traces
        .iter()
        .filter(|&&(_, converged, used)| converged && used <= 20)
        .count();
    let dt = t0.elapsed();
    verdict(
        2,
        "proposed optimizer monotone and fast on 54/6/54",
        monotone == 50 && converged_within_20 >= 48 && dt < Duration::from_secs(60),
        format!(
            "monotone {monotone}/50, converged within 20 iterations {converged_within_20}/50, runtime {dt:?}"
        ),
    );
}

#[test]
fn criterion_3_scheme_ordering() {
    let t0 = Instant::now();
    let mut finals = [[0.0f64; 50]; 3];
    for s in 0..50u64 {
        let topo = TopologyConfig {
            seed: seed::mix(s, stream::TOPOLOGY),
            ..TopologyConfig::default()
        };
        let state = generate_topology(&topo).unwrap();
        let cfg = OptimizerConfig {
            seed: seed::mix(s, stream::OPTIMIZER),
            ..OptimizerConfig::default()
        };
        let (_, proposed) = optimize(&state, &cfg).unwrap();
        let (_, b1) = run_baseline(&state, &cfg, Scheme::Baseline1).unwrap();
        let (_, b2) = run_baseline(&state, &cfg, Scheme::Baseline2).unwrap();
        for (k, trace) in [proposed, b1, b2].iter().enumerate() {
            finals[k][s as usize] = *trace.costs.last().unwrap();
        }
    }
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let (p, b1, b2) = (mean(&finals[0]), mean(&finals[1]), mean(&finals[2]));
    let dt = t0.elapsed();
    verdict(
        3,
        "mean final cost proposed <= baseline1 <= baseline2 with 5% margin",
        p <= b1 && b1 <= b2 && p <= 0.95 * b2 && dt < Duration::from_secs(120),
        format!("proposed {p:.4}, baseline1 {b1:.4}, baseline2 {b2:.4}, runtime {dt:?}"),
    );
}

/// Minimum network cost over all feasible allocations given a fixed
/// association (devices may stay unscheduled).
fn best_allocation_cost(state: &NetworkState, assoc: &[Option<usize>], quota: usize) -> f64 {
    let cfg = CostConfig::for_state(state);
    let n = assoc.len();
    let mut alloc = vec![None; n];
    let mut used = vec![false; state.n_rbs()];
    let mut best = f64::INFINITY;
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        d: usize,
        n: usize,
        state: &NetworkState,
        assoc: &[Option<usize>],
        quota: usize,
        cfg: &CostConfig,
        alloc: &mut Vec<Option<usize>>,
        used: &mut Vec<bool>,
        best: &mut f64,
    ) {
        if d == n {
            let a = Assignment {
                assoc: assoc.to_vec(),
                alloc: alloc.clone(),
                quota,
            };
            let c = network_cost(state, &a, cfg).unwrap();
            if c < *best {
                *best = c;
            }
            return;
        }
        alloc[d] = None;
        recurse(d + 1, n, state, assoc, quota, cfg, alloc, used, best);
        if assoc[d].is_some() {
            for r in 0..state.n_rbs() {
                if !used[r] {
                    used[r] = true;
                    alloc[d] = Some(r);
                    recurse(d + 1, n, state, assoc, quota, cfg, alloc, used, best);
                    alloc[d] = None;
                    used[r] = false;
                }
            }
        }
    }
    recurse(0, n, state, assoc, quota, &cfg, &mut alloc, &mut used, &mut best);
    best
}

/// Minimum network cost over all quota-feasible associations given a fixed
/// allocation; a device dropped from its SBS loses its block.
fn best_association_cost(state: &NetworkState, alloc: &[Option<usize>], quota: usize) -> f64 {
    let cfg = CostConfig::for_state(state);
    let n = alloc.len();
    let mut assoc = vec![None; n];
    let mut load = vec![0usize; state.n_sbs()];
    let mut best = f64::INFINITY;
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        d: usize,
        n: usize,
        state: &NetworkState,
        alloc: &[Option<usize>],
        quota: usize,
        cfg: &CostConfig,
        assoc: &mut Vec<Option<usize>>,
        load: &mut Vec<usize>,
        best: &mut f64,
    ) {
        if d == n {
            let stripped: Vec<Option<usize>> = alloc
                .iter()
                .zip(assoc.iter())
                .map(|(&r, &s)| if s.is_some() { r } else { None })
                .collect();
            let a = Assignment {
                assoc: assoc.clone(),
                alloc: stripped,
                quota,
            };
            let c = network_cost(state, &a, cfg).unwrap();
            if c < *best {
                *best = c;
            }
            return;
        }
        assoc[d] = None;
        recurse(d + 1, n, state, alloc, quota, cfg, assoc, load, best);
        for s in 0..state.n_sbs() {
            if load[s] < quota {
                load[s] += 1;
                assoc[d] = Some(s);
                recurse(d + 1, n, state, alloc, quota, cfg, assoc, load, best);
                assoc[d] = None;
                load[s] -= 1;
            }
        }
    }
    recurse(0, n, state, alloc, quota, &cfg, &mut assoc, &mut load, &mut best);
    best
}

#[test]
fn criterion_4_matching_quality_oracle() {
    let t0 = Instant::now();
    let cost_cfg_for = CostConfig::for_state;
    let mut ratios = Vec::new();
    let mut unstable = 0usize;

    for i in 0..100u64 {
        let mut dims = seed::rng(seed::mix(i, 0x6d61_7463));
        let n_devices = dims.gen_range(2..=6);
        let n_sbs = dims.gen_range(1..=3);
        let n_rbs = dims.gen_range(1..=6);
        let topo = TopologyConfig {
            n_devices,
            n_sbs,
            n_rbs,
            seed: seed::mix(i, stream::TOPOLOGY),
            ..TopologyConfig::default()
        };
        let state = generate_topology(&topo).unwrap();
        let quota = n_devices; // ample, so association choices stay free
        let mut rng = seed::rng(seed::mix(i, stream::OPTIMIZER));

        // Allocation stage: random association, matched blocks.
        let assoc = random_feasible_association(&state, quota, &mut rng);
        let outcome = allocate_resources(&build_rb_preferences(&state, &assoc)).unwrap();
        let got = Assignment {
            assoc: assoc.clone(),
            alloc: outcome.assignment.clone(),
            quota,
        };
        got.validate(n_sbs, n_rbs).unwrap();
        if find_blocking_improvement(&state, &got, MatchMode::Allocation)
            .unwrap()
            .is_some()
        {
            unstable += 1;
        }
        let got_cost = network_cost(&state, &got, &cost_cfg_for(&state)).unwrap();
        ratios.push(got_cost / best_allocation_cost(&state, &assoc, quota));

        // Association stage: those blocks fixed, matched SBS choices.
        let outcome2 =
            associate_devices(&build_sbs_preferences(&state, &got.alloc), quota, false).unwrap();
        let stripped: Vec<Option<usize>> = got
            .alloc
            .iter()
            .zip(&outcome2.assignment)
            .map(|(&r, &s)| if s.is_some() { r } else { None })
            .collect();
        let got2 = Assignment {
            assoc: outcome2.assignment.clone(),
            alloc: stripped,
            quota,
        };
        got2.validate(n_sbs, n_rbs).unwrap();
        if find_blocking_improvement(&state, &got2, MatchMode::Association)
            .unwrap()
            .is_some()
        {
            unstable += 1;
        }
        let got2_cost = network_cost(&state, &got2, &cost_cfg_for(&state)).unwrap();
        ratios.push(got2_cost / best_association_cost(&state, &got.alloc, quota));
    }

    ratios.sort_by(f64::total_cmp);
    let median = ratios[ratios.len() / 2];
    let dt = t0.elapsed();
    verdict(
        4,
        "matchings exchange-stable and near-optimal on 100 instances",
        unstable == 0 && median <= 1.10 && dt < Duration::from_secs(60),
        format!(
            "unstable {unstable}/200 games, median cost ratio {median:.4}, worst {:.4}, runtime {dt:?}",
            ratios.last().unwrap()
        ),
    );
}

#[test]
fn criterion_5_aggregation_oracle() {
    let t0 = Instant::now();
    let mut rng = seed::rng(0x6167_6772);
    let mut worst_rel = 0.0f64;
    for _ in 0..1000 {
        let n_models = rng.gen_range(1..=8);
        let len = rng.gen_range(1..=64);
        let models: Vec<ModelParams> = (0..n_models)
            .map(|_| ModelParams {
                weights: (0..len)
                    .map(|_| {
                        // Log-uniform positive magnitudes across six decades.
                        let mag = 10f64.powf(rng.gen_range(-3.0..3.0));
                        mag * rng.gen_range(0.5..2.0)
                    })
                    .collect(),
                n_samples: rng.gen_range(1..=1_000_000),
            })
            .collect();
        let refs: Vec<&ModelParams> = models.iter().collect();
        let got = aggregate(&refs).unwrap();

        let total: u64 = models.iter().map(|m| m.n_samples).sum();
        for k in 0..len {
            // Neumaier-compensated oracle.
            let mut sum = 0.0f64;
            let mut comp = 0.0f64;
            for m in &models {
                let term = m.n_samples as f64 * m.weights[k];
                let t = sum + term;
                comp += if sum.abs() >= term.abs() {
                    (sum - t) + term
                } else {
                    (term - t) + sum
                };
                sum = t;
            }
            let oracle = (sum + comp) / total as f64;
            worst_rel = worst_rel.max((got.weights[k] - oracle).abs() / oracle.abs());
        }
    }

    // Replica identity: aggregating the same exchange set repeatedly, as
    // every SBS does after the all-to-all exchange, is bit-stable.
    let groups: Vec<ModelParams> = (0..6)
        .map(|_| ModelParams {
            weights: (0..50).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            n_samples: 5400,
        })
        .collect();
    let refs: Vec<&ModelParams> = groups.iter().collect();
    let first = aggregate(&refs).unwrap();
    let replicas_identical = (0..6).all(|_| aggregate(&refs).unwrap().weights == first.weights);

    let dt = t0.elapsed();
    verdict(
        5,
        "weighted-mean aggregation matches compensated oracle",
        worst_rel < 1e-12 && replicas_identical && dt < Duration::from_secs(5),
        format!(
            "worst relative error {worst_rel:.2e} over 1000 cases, replicas identical: {replicas_identical}, runtime {dt:?}"
        ),
    );
}

#[test]
fn criterion_6_gradient_correctness() {
    let t0 = Instant::now();
    let mut rng = seed::rng(0x6772_6164);
    let mut worst_rel = 0.0f64;
    for case in 0..100 {
        let shape = if case % 2 == 0 {
            ModelShape::logistic(rng.gen_range(2..=7), rng.gen_range(2..=4))
        } else {
            ModelShape::mlp(rng.gen_range(2..=7), rng.gen_range(2..=5), rng.gen_range(2..=4))
        };
        let batch = rng.gen_range(1..=5);
        let params: Vec<f64> = (0..shape.n_params())
            .map(|_| rng.gen_range(-0.8..0.8))
            .collect();
        let x = ndarray::Array2::from_shape_fn((batch, shape.n_features), |_| {
            rng.gen_range(-1.0..1.0)
        });
        let y: Vec<u8> = (0..batch)
            .map(|_| rng.gen_range(0..shape.n_classes as u8))
            .collect();

        let analytic = shape.grad(&params, &x.view(), &y);
        for k in 0..params.len() {
            let h = 1e-5 * params[k].abs().max(1.0);
            let mut plus = params.clone();
            plus[k] += h;
            let mut minus = params.clone();
            minus[k] -= h;
            let numeric =
                (shape.loss(&plus, &x.view(), &y) - shape.loss(&minus, &x.view(), &y)) / (2.0 * h);
            let rel = (analytic[k] - numeric).abs()
                / analytic[k].abs().max(numeric.abs()).max(1e-3);
            worst_rel = worst_rel.max(rel);
        }
    }
    let dt = t0.elapsed();
    verdict(
        6,
        "analytic gradients match central differences for both model kinds",
        worst_rel < 1e-5 && dt < Duration::from_secs(10),
        format!("worst relative error {worst_rel:.2e} over 100 cases, runtime {dt:?}"),
    );
}

fn mnist() -> (Dataset, Dataset) {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/mnist");
    let train = load_mnist_idx(
        &root.join("train-images-idx3-ubyte.gz"),
        &root.join("train-labels-idx1-ubyte.gz"),
    )
    .unwrap();
    let test = load_mnist_idx(
        &root.join("t10k-images-idx3-ubyte.gz"),
        &root.join("t10k-labels-idx1-ubyte.gz"),
    )
    .unwrap();
    (train, test)
}

/// 1-based round count until the trace first reaches `target`.
fn rounds_to(series: &[f64], target: f64) -> Option<usize> {
    series.iter().position(|&a| a >= target).map(|i| i + 1)
}

#[test]
fn criterion_7_learning_orderings() {
    let t0 = Instant::now();
    let (train, test) = mnist();
    let target = 0.85;
    let budget = 8usize;
    let s_values = [1usize, 2, 4, 8];
    let seeds = [0u64, 1, 2];

    // rounds[scheme][seed]; scheme 0 is traditional FL, then the S sweep.
    let mut rounds = vec![vec![0usize; seeds.len()]; 1 + s_values.len()];
    for (si, &run_seed) in seeds.iter().enumerate() {
        let topo = TopologyConfig {
            seed: seed::mix(run_seed, stream::TOPOLOGY),
            ..TopologyConfig::default()
        };
        let state = generate_topology(&topo).unwrap();
        let (assignment, _) = optimize(
            &state,
            &OptimizerConfig {
                seed: seed::mix(run_seed, stream::OPTIMIZER),
                ..OptimizerConfig::default()
            },
        )
        .unwrap();
        let devices = partition_noniid(
            &train.labels,
            topo.n_devices,
            300,
            seed::mix(run_seed, stream::PARTITION),
        )
        .unwrap();
        let base = TrainConfig {
            global_rounds: 30,
            accuracy_target: Some(target),
            seed: run_seed,
            ..TrainConfig::default()
        };

        let fl_cfg = TrainConfig {
            local_iters: budget,
            subglobal_iters: 1,
            ..base.clone()
        };
        let fl = run_fl_baseline(&train, &test, &devices, &fl_cfg).unwrap();
        rounds[0][si] = rounds_to(&fl.metrics.series("test_accuracy"), target)
            .unwrap_or_else(|| panic!("FL did not reach {target} within 30 rounds"));

        for (k, &s) in s_values.iter().enumerate() {
            let cfg = TrainConfig {
                local_iters: budget / s,
                subglobal_iters: s,
                ..base.clone()
            };
            let run = run_ddfl(&state, &assignment, &train, &test, &devices, &cfg).unwrap();
            rounds[1 + k][si] = rounds_to(&run.metrics.series("test_accuracy"), target)
                .unwrap_or_else(|| panic!("DDFL S={s} did not reach {target} within 30 rounds"));
        }
    }

    let mean = |xs: &[usize]| xs.iter().sum::<usize>() as f64 / xs.len() as f64;
    let fl_mean = mean(&rounds[0]);
    let s_means: Vec<f64> = s_values
        .iter()
        .enumerate()
        .map(|(k, _)| mean(&rounds[1 + k]))
        .collect();

    let a_ok = *s_means.last().unwrap() < fl_mean;
    let b_ok = s_means.windows(2).all(|w| w[1] <= w[0] + 2.0);
    let dt = t0.elapsed();
    verdict(
        7,
        "DDFL reaches 85% in fewer rounds, non-increasing in S",
        a_ok && b_ok,
        format!(
            "mean rounds to {target}: FL {fl_mean:.1}, S1 {:.1}, S2 {:.1}, S4 {:.1}, S8 {:.1}; runtime {dt:?} (target < 30 min)",
            s_means[0], s_means[1], s_means[2], s_means[3]
        ),
    );
}

#[test]
fn criterion_8_structural_collapse() {
    let t0 = Instant::now();
    let (train, test) = mnist();

    // One SBS with quota for everyone: a single group, S = 1.
    let topo = TopologyConfig {
        n_sbs: 1,
        seed: seed::mix(7, stream::TOPOLOGY),
        ..TopologyConfig::default()
    };
    let state = generate_topology(&topo).unwrap();
    let (assignment, _) = optimize(
        &state,
        &OptimizerConfig {
            quota: topo.n_devices,
            seed: seed::mix(7, stream::OPTIMIZER),
            ..OptimizerConfig::default()
        },
    )
    .unwrap();
    assert!(assignment.assoc.iter().all(Option::is_some));

    let devices = partition_noniid(&train.labels, topo.n_devices, 300, seed::mix(7, stream::PARTITION))
        .unwrap();
    let cfg = TrainConfig {
        local_iters: 8,
        subglobal_iters: 1,
        global_rounds: 5,
        seed: 7,
        ..TrainConfig::default()
    };
    let ddfl = run_ddfl(&state, &assignment, &train, &test, &devices, &cfg).unwrap();
    let fl = run_fl_baseline(&train, &test, &devices, &cfg).unwrap();

    let bits = |xs: &[f64]| xs.iter().map(|v| v.to_bits()).collect::<Vec<u64>>();
    let acc_identical = bits(&ddfl.metrics.series("test_accuracy"))
        == bits(&fl.metrics.series("test_accuracy"));
    let sums_identical =
        bits(&ddfl.metrics.series("param_sum")) == bits(&fl.metrics.series("param_sum"));
    let weights_identical = bits(&ddfl.model.weights) == bits(&fl.model.weights);
    let dt = t0.elapsed();
    verdict(
        8,
        "one-group DDFL bit-identical to traditional FL",
        acc_identical && sums_identical && weights_identical && dt < Duration::from_secs(300),
        format!(
            "accuracy trace identical: {acc_identical}, param sums identical: {sums_identical}, final weights identical: {weights_identical}, runtime {dt:?}"
        ),
    );
}
