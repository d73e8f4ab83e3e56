//! Monte Carlo orchestration: seeded replicas, CSV serialization, manifest.
//!
//! Each replica derives every random stream from `base_seed + run_id`, so
//! replicas are order-independent and any one of them can be reproduced in
//! isolation from the manifest. Replicas run in a parallel pool; all file
//! writes happen serially afterwards, and output bytes depend only on the
//! resolved config.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::Serialize;

use crate::cost::device_cost;
use crate::error::Error;
use crate::federated::{partition_noniid, run_ddfl, run_fl_baseline, Dataset};
use crate::harness::config::{ExperimentConfig, ExperimentKind};
use crate::harness::idx::load_mnist_idx;
use crate::metrics::monte_carlo_mean;
use crate::optimizer::{run_scheme, Scheme};
use crate::seed::{self, stream};
use crate::topology::generate_topology;
use crate::Result;

/// Grid resolution of the cost-surface sweep.
const GRID_POINTS: usize = 50;
const SINR_RANGE: (f64, f64) = (0.1, 100.0);

/// Everything one experiment invocation wrote.
#[derive(Debug)]
pub struct ExperimentOutput {
    pub output_dir: PathBuf,
    pub files: Vec<PathBuf>,
}

/// Named output files accumulated in memory, flushed in one pass.
struct OutputSet {
    dir: PathBuf,
    files: Vec<(String, String)>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    config: &'a ExperimentConfig,
    run_seeds: &'a [u64],
    files: Vec<&'a str>,
}

impl OutputSet {
    fn new(dir: PathBuf) -> Self {
        OutputSet {
            dir,
            files: Vec::new(),
        }
    }

    fn add(&mut self, name: &str, contents: String) {
        self.files.push((name.to_string(), contents));
    }

    fn flush(mut self, cfg: &ExperimentConfig, run_seeds: &[u64]) -> Result<ExperimentOutput> {
        let manifest = Manifest {
            config: cfg,
            run_seeds,
            files: self.files.iter().map(|(n, _)| n.as_str()).collect(),
        };
        let mut json = serde_json::to_string_pretty(&manifest)
            .map_err(|e| Error::Config(format!("manifest serialization: {e}")))?;
        json.push('\n');
        self.files.push(("manifest.json".to_string(), json));

        fs::create_dir_all(&self.dir)?;
        let mut written = Vec::with_capacity(self.files.len());
        for (name, contents) in &self.files {
            let path = self.dir.join(name);
            fs::write(&path, contents)?;
            written.push(path);
        }
        Ok(ExperimentOutput {
            output_dir: self.dir,
            files: written,
        })
    }
}

fn run_seed(cfg: &ExperimentConfig, run_id: usize) -> u64 {
    cfg.base_seed.wrapping_add(run_id as u64)
}

fn scheme_name(s: Scheme) -> &'static str {
    match s {
        Scheme::Proposed => "proposed",
        Scheme::Baseline1 => "baseline1",
        Scheme::Baseline2 => "baseline2",
        Scheme::Random => "random",
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect()
}

fn logspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    linspace(lo.ln(), hi.ln(), n)
        .into_iter()
        .map(f64::exp)
        .collect()
}

/// Runs the configured experiment and writes its CSV files plus
/// `manifest.json` into `cfg.output_dir`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let mut out = OutputSet::new(cfg.output_dir.clone());
    let run_seeds: Vec<u64> = (0..cfg.n_runs).map(|i| run_seed(cfg, i)).collect();
    match cfg.experiment {
        ExperimentKind::CostSurface => {
            out.add("cost_surface.csv", cost_surface_csv(cfg));
            // A pure function sweep: one deterministic "run".
            return out.flush(cfg, &run_seeds[..1]);
        }
        ExperimentKind::OptimizerConvergence => optimizer_convergence(cfg, &mut out)?,
        ExperimentKind::DdflVsFl => ddfl_vs_fl(cfg, &mut out)?,
    }
    out.flush(cfg, &run_seeds)
}

fn cost_surface_csv(cfg: &ExperimentConfig) -> String {
    let m = cfg.topology.waterfall_threshold;
    let mut csv = String::from("sinr,theta,cost\n");
    for &sinr in &logspace(SINR_RANGE.0, SINR_RANGE.1, GRID_POINTS) {
        for &theta in &linspace(0.0, 1.0, GRID_POINTS) {
            let cost = device_cost(theta, sinr, m);
            writeln!(csv, "{sinr},{theta},{cost}").unwrap();
        }
    }
    csv
}

fn optimizer_convergence(cfg: &ExperimentConfig, out: &mut OutputSet) -> Result<()> {
    const SCHEMES: [Scheme; 3] = [Scheme::Proposed, Scheme::Baseline1, Scheme::Baseline2];
    let per_run: Vec<Vec<Vec<f64>>> = (0..cfg.n_runs)
        .into_par_iter()
        .map(|i| {
            let rs = run_seed(cfg, i);
            let mut topo = cfg.topology.clone();
            topo.seed = seed::mix(rs, stream::TOPOLOGY);
            let state = generate_topology(&topo)?;
            SCHEMES
                .iter()
                .map(|&scheme| {
                    let mut ocfg = cfg.optimizer.clone();
                    ocfg.seed = seed::mix(rs, stream::OPTIMIZER);
                    ocfg.scheme = scheme;
                    Ok(run_scheme(&state, &ocfg)?.1.costs)
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let mut trace = String::from("run_id,scheme,iteration,cost\n");
    for (i, traces) in per_run.iter().enumerate() {
        for (scheme, costs) in SCHEMES.iter().zip(traces) {
            for (it, cost) in costs.iter().enumerate() {
                writeln!(trace, "{i},{},{it},{cost}", scheme_name(*scheme)).unwrap();
            }
        }
    }
    out.add("optimizer_trace.csv", trace);

    let mut summary = String::from("scheme,iteration,mean_cost,count\n");
    for (k, scheme) in SCHEMES.iter().enumerate() {
        let traces: Vec<Vec<f64>> = per_run.iter().map(|r| r[k].clone()).collect();
        for (it, (mean, count)) in monte_carlo_mean(&traces).iter().enumerate() {
            writeln!(summary, "{},{it},{mean},{count}", scheme_name(*scheme)).unwrap();
        }
    }
    out.add("optimizer_summary.csv", summary);
    Ok(())
}

fn ddfl_vs_fl(cfg: &ExperimentConfig, out: &mut OutputSet) -> Result<()> {
    let data = cfg.data.as_ref().expect("validated: data present");
    let train = load_mnist_idx(&data.train_images, &data.train_labels)?;
    let test = load_mnist_idx(&data.test_images, &data.test_labels)?;
    let budget = cfg.train.budget();

    // Scheme list: traditional FL spends the whole budget locally, the DDFL
    // variants split it into T/S local epochs times S sub-global iterations.
    let mut schemes: Vec<(String, Option<usize>)> = vec![("fl".to_string(), None)];
    for &s in &cfg.s_values {
        schemes.push((format!("ddfl_s{s}"), Some(s)));
    }

    let per_run: Vec<Vec<Vec<f64>>> = (0..cfg.n_runs)
        .into_par_iter()
        .map(|i| run_learning_replica(cfg, i, &train, &test, budget, &schemes))
        .collect::<Result<_>>()?;

    let mut acc = String::from("run_id,scheme,round,test_accuracy\n");
    for (i, traces) in per_run.iter().enumerate() {
        for ((name, _), series) in schemes.iter().zip(traces) {
            for (round, value) in series.iter().enumerate() {
                writeln!(acc, "{i},{name},{round},{value}").unwrap();
            }
        }
    }
    out.add("accuracy.csv", acc);

    let mut summary = String::from("scheme,round,mean_accuracy,count\n");
    for (k, (name, _)) in schemes.iter().enumerate() {
        let traces: Vec<Vec<f64>> = per_run.iter().map(|r| r[k].clone()).collect();
        for (round, (mean, count)) in monte_carlo_mean(&traces).iter().enumerate() {
            writeln!(summary, "{name},{round},{mean},{count}").unwrap();
        }
    }
    out.add("accuracy_summary.csv", summary);
    Ok(())
}

/// One seeded replica of the learning experiment: generate a topology,
/// schedule it with the proposed optimizer, partition the data, then train
/// every scheme from the same initialization and minibatch streams.
fn run_learning_replica(
    cfg: &ExperimentConfig,
    run_id: usize,
    train: &Dataset,
    test: &Dataset,
    budget: usize,
    schemes: &[(String, Option<usize>)],
) -> Result<Vec<Vec<f64>>> {
    let rs = run_seed(cfg, run_id);
    let mut topo = cfg.topology.clone();
    topo.seed = seed::mix(rs, stream::TOPOLOGY);
    let state = generate_topology(&topo)?;

    let mut ocfg = cfg.optimizer.clone();
    ocfg.seed = seed::mix(rs, stream::OPTIMIZER);
    ocfg.scheme = Scheme::Proposed;
    let (assignment, _) = run_scheme(&state, &ocfg)?;

    let devices = partition_noniid(
        &train.labels,
        topo.n_devices,
        cfg.shard_size,
        seed::mix(rs, stream::PARTITION),
    )?;

    schemes
        .iter()
        .map(|(_, s)| {
            let mut tcfg = cfg.train.clone();
            tcfg.seed = rs;
            let run = match s {
                None => {
                    tcfg.local_iters = budget;
                    tcfg.subglobal_iters = 1;
                    tcfg.coupled_channel = false; // FL reference assumes ideal uplinks
                    run_fl_baseline(train, test, &devices, &tcfg)?
                }
                Some(s) => {
                    tcfg.local_iters = budget / s;
                    tcfg.subglobal_iters = *s;
                    run_ddfl(&state, &assignment, train, test, &devices, &tcfg)?
                }
            };
            Ok(run.metrics.series("test_accuracy"))
        })
        .collect()
}
