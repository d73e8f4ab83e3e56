//! Metric records produced by experiments and Monte Carlo averaging.

use crate::error::Error;
use crate::Result;

/// One observation: metric `metric` had `value` at step `step` of run `run_id`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub run_id: u64,
    pub step: usize,
    pub metric: String,
    pub value: f64,
}

/// Row-per-step metric records for one run (or several, after merging).
#[derive(Debug, Clone, Default)]
pub struct RoundMetrics {
    pub rows: Vec<MetricRow>,
}

impl RoundMetrics {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, step: usize, metric: &str, value: f64) {
        self.rows.push(MetricRow {
            run_id: 0,
            step,
            metric: metric.to_string(),
            value,
        });
    }

    /// Stamps every row with the replica that produced it.
    pub fn set_run_id(&mut self, run_id: u64) {
        for row in &mut self.rows {
            row.run_id = run_id;
        }
    }

    /// Values of one metric ordered by step.
    pub fn series(&self, metric: &str) -> Vec<f64> {
        let mut rows: Vec<(usize, f64)> = self
            .rows
            .iter()
            .filter(|r| r.metric == metric)
            .map(|r| (r.step, r.value))
            .collect();
        rows.sort_by_key(|&(step, _)| step);
        rows.into_iter().map(|(_, v)| v).collect()
    }

    /// Checks that every metric's steps are contiguous from 0 and all values
    /// are finite.
    pub fn validate(&self) -> Result<()> {
        let mut names: Vec<&str> = self.rows.iter().map(|r| r.metric.as_str()).collect();
        names.sort_unstable();
        names.dedup();
        for name in names {
            let mut steps: Vec<usize> = self
                .rows
                .iter()
                .filter(|r| r.metric == name)
                .map(|r| r.step)
                .collect();
            steps.sort_unstable();
            for (expect, &got) in steps.iter().enumerate() {
                if expect != got {
                    return Err(Error::Config(format!(
                        "metric {name}: steps not contiguous (expected {expect}, found {got})"
                    )));
                }
            }
        }
        if let Some(row) = self.rows.iter().find(|r| !r.value.is_finite()) {
            return Err(Error::Config(format!(
                "metric {} has non-finite value at step {}",
                row.metric, row.step
            )));
        }
        Ok(())
    }
}

/// Element-wise mean over per-run traces.
///
/// Ragged traces are averaged over the runs still active at each step; the
/// second element of each pair is that count.
pub fn monte_carlo_mean(traces: &[Vec<f64>]) -> Vec<(f64, usize)> {
    let max_len = traces.iter().map(Vec::len).max().unwrap_or(0);
    (0..max_len)
        .map(|step| {
            let active: Vec<f64> = traces.iter().filter_map(|t| t.get(step).copied()).collect();
            let mean = active.iter().sum::<f64>() / active.len() as f64;
            (mean, active.len())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_trace_means_to_itself() {
        let out = monte_carlo_mean(&[vec![1.0, 2.0, 3.0]]);
        assert_eq!(out, vec![(1.0, 1), (2.0, 1), (3.0, 1)]);
    }

    #[test]
    fn constant_traces_average() {
        let out = monte_carlo_mean(&[vec![1.0, 1.0], vec![3.0, 3.0]]);
        assert_eq!(out, vec![(2.0, 2), (2.0, 2)]);
    }

    #[test]
    fn ragged_traces_count_active_runs() {
        let out = monte_carlo_mean(&[vec![1.0, 2.0], vec![3.0, 4.0, 5.0, 6.0]]);
        let counts: Vec<usize> = out.iter().map(|&(_, c)| c).collect();
        assert_eq!(counts, vec![2, 2, 1, 1]);
        assert_eq!(out[0].0, 2.0);
        assert_eq!(out[2].0, 5.0);
    }

    #[test]
    fn series_orders_by_step() {
        let mut m = RoundMetrics::new();
        m.push(1, "acc", 0.5);
        m.push(0, "acc", 0.1);
        m.push(2, "acc", 0.9);
        m.push(0, "loss", 2.3);
        assert_eq!(m.series("acc"), vec![0.1, 0.5, 0.9]);
        assert_eq!(m.series("loss"), vec![2.3]);
        assert!(m.series("missing").is_empty());
    }

    #[test]
    fn validation_flags_gaps_and_nonfinite_values() {
        let mut ok = RoundMetrics::new();
        ok.push(0, "acc", 0.1);
        ok.push(1, "acc", 0.2);
        assert!(ok.validate().is_ok());

        let mut gap = RoundMetrics::new();
        gap.push(0, "acc", 0.1);
        gap.push(2, "acc", 0.2);
        assert!(gap.validate().is_err());

        let mut nan = RoundMetrics::new();
        nan.push(0, "acc", f64::NAN);
        assert!(nan.validate().is_err());
    }

    #[test]
    fn run_id_stamping() {
        let mut m = RoundMetrics::new();
        m.push(0, "acc", 0.1);
        m.set_run_id(7);
        assert_eq!(m.rows[0].run_id, 7);
    }
}
