//! Aggregated run metrics: per-filter error statistics across seeds, pooled
//! censoring rates, divergence flags, and the extremes of the per-step
//! health checks — serializable as JSON for downstream tooling and
//! renderable as a plain-text table.
//!
//! Error metrics cover the steps after the scenario burn-in: MSE is the mean
//! of `‖x_true − x̂‖²` over `k ∈ (burn_in, steps]`, and the max error is the
//! largest `‖x_true − x̂‖` over the same window.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::runner::{FilterTrace, SeedRun};
use tobit_kf::scenarios::ScenarioConfig;

/// Linear-interpolation quantile of an unsorted sample (the `sorted copy`
/// convention used by most stats packages). `q` in `[0, 1]`.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    assert!(!values.is_empty(), "quantile of an empty sample");
    let mut s = values.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).expect("metrics are never NaN"));
    let pos = q.clamp(0.0, 1.0) * (s.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let frac = pos - lo as f64;
    if lo + 1 < s.len() {
        s[lo] * (1.0 - frac) + s[lo + 1] * frac
    } else {
        s[lo]
    }
}

/// One filter's divergence event.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DivergenceNote {
    pub replicate: u64,
    pub step: usize,
    pub reason: String,
}

/// Extremes of the per-step health checks pooled over all seeds; see
/// [`crate::runner::InvariantSummary`] for the per-run version. `None`
/// means the quantity was never produced (non-adaptive filters).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
pub struct InvariantReport {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub psi_min_eig: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub qhat_min_eig: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub xi_min_eig: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rhat_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub rhat_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gamma_max_dev: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ep_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub ep_max: Option<f64>,
}

fn pool_min(slot: &mut Option<f64>, v: Option<f64>) {
    if let Some(v) = v {
        *slot = Some(slot.map_or(v, |s| s.min(v)));
    }
}

fn pool_max(slot: &mut Option<f64>, v: Option<f64>) {
    if let Some(v) = v {
        *slot = Some(slot.map_or(v, |s| s.max(v)));
    }
}

/// Cross-seed statistics for one filter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FilterMetrics {
    /// Post-burn-in MSE per replicate, ordered by replicate index.
    pub mse_per_seed: Vec<f64>,
    pub mse_median: f64,
    /// Lower and upper quartile of the per-seed MSEs.
    pub mse_quartiles: [f64; 2],
    /// Largest post-burn-in estimation error norm per replicate.
    pub max_error_per_seed: Vec<f64>,
    pub diverged: Vec<DivergenceNote>,
    pub invariants: InvariantReport,
}

/// The complete machine-readable summary of one harness invocation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub scenario: String,
    pub base_seed: u64,
    pub replicates: usize,
    pub steps: usize,
    pub burn_in: usize,
    pub gamma: f64,
    pub window_n: usize,
    /// Fraction of censored observations per channel, pooled over every
    /// seed and step.
    pub censored_fraction: Vec<f64>,
    /// Trace file names, ordered by replicate.
    pub traces: Vec<String>,
    /// Per-filter statistics keyed by filter label.
    pub filters: BTreeMap<String, FilterMetrics>,
}

fn metrics_for(traces: &[(&SeedRun, &FilterTrace)], burn_in: usize) -> FilterMetrics {
    let mut mse_per_seed = Vec::with_capacity(traces.len());
    let mut max_error_per_seed = Vec::with_capacity(traces.len());
    let mut diverged = Vec::new();
    let mut inv = InvariantReport::default();
    for (run, trace) in traces {
        let post = &trace.sqerr[burn_in..];
        mse_per_seed.push(post.iter().sum::<f64>() / post.len() as f64);
        max_error_per_seed.push(post.iter().fold(0.0f64, |m, &e| m.max(e)).sqrt());
        if let Some(step) = trace.diverged_at {
            diverged.push(DivergenceNote {
                replicate: run.replicate,
                step,
                reason: trace
                    .divergence_reason
                    .clone()
                    .unwrap_or_else(|| "unspecified".into()),
            });
        }
        let s = &trace.invariants;
        let finite = |v: f64| v.is_finite().then_some(v);
        pool_min(&mut inv.psi_min_eig, finite(s.psi_min_eig));
        pool_min(&mut inv.qhat_min_eig, s.qhat_min_eig);
        pool_min(&mut inv.xi_min_eig, s.xi_min_eig);
        pool_min(&mut inv.rhat_min, s.rhat_min);
        pool_max(&mut inv.rhat_max, s.rhat_max);
        pool_max(&mut inv.gamma_max_dev, s.gamma_max_dev);
        pool_min(&mut inv.ep_min, finite(s.ep_min));
        pool_max(&mut inv.ep_max, finite(s.ep_max));
    }
    FilterMetrics {
        mse_median: quantile(&mse_per_seed, 0.5),
        mse_quartiles: [quantile(&mse_per_seed, 0.25), quantile(&mse_per_seed, 0.75)],
        mse_per_seed,
        max_error_per_seed,
        diverged,
        invariants: inv,
    }
}

/// Aggregate completed seed runs into a report. `trace_names` lists the CSV
/// files written for these runs (may be empty when no files were written).
pub fn summarize(
    cfg: &ScenarioConfig,
    base_seed: u64,
    runs: &[SeedRun],
    trace_names: Vec<String>,
) -> MetricsReport {
    assert!(!runs.is_empty(), "summary requires at least one seed");
    let m = cfg.system.meas_dim();
    let mut censored = vec![0usize; m];
    let mut total_steps = 0usize;
    for run in runs {
        total_steps += run.trajectory.len();
        for step in &run.trajectory {
            for (i, &flag) in step.censored.iter().enumerate() {
                censored[i] += usize::from(flag);
            }
        }
    }
    let censored_fraction = censored
        .iter()
        .map(|&c| c as f64 / total_steps as f64)
        .collect();

    let mut filters = BTreeMap::new();
    for (slot, first) in runs[0].filters.iter().enumerate() {
        let traces: Vec<(&SeedRun, &FilterTrace)> =
            runs.iter().map(|r| (r, &r.filters[slot])).collect();
        filters.insert(
            first.kind.label().to_string(),
            metrics_for(&traces, cfg.burn_in),
        );
    }

    MetricsReport {
        scenario: cfg.name.to_string(),
        base_seed,
        replicates: runs.len(),
        steps: cfg.steps,
        burn_in: cfg.burn_in,
        gamma: cfg.gamma,
        window_n: cfg.window_n,
        censored_fraction,
        traces: trace_names,
        filters,
    }
}

impl MetricsReport {
    /// Serialize as pretty-printed JSON with a trailing newline.
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// Plain-text table for terminal output.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "scenario {} | seed {} | {} replicate(s) | {} steps (burn-in {})",
            self.scenario, self.base_seed, self.replicates, self.steps, self.burn_in
        );
        let frac: Vec<String> = self
            .censored_fraction
            .iter()
            .map(|f| format!("{f:.3}"))
            .collect();
        let _ = writeln!(out, "censored fraction per channel: [{}]", frac.join(", "));
        let _ = writeln!(
            out,
            "{:<6} {:>12} {:>12} {:>12} {:>12} {:>9}",
            "filter", "mse_median", "mse_q1", "mse_q3", "max_err_med", "diverged"
        );
        for (label, m) in &self.filters {
            let _ = writeln!(
                out,
                "{:<6} {:>12.5} {:>12.5} {:>12.5} {:>12.5} {:>9}",
                label,
                m.mse_median,
                m.mse_quartiles[0],
                m.mse_quartiles[1],
                quantile(&m.max_error_per_seed, 0.5),
                m.diverged.len()
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runner::{execute_many, execute_seed, FilterKind};
    use tobit_kf::matrix::Vector;
    use tobit_kf::scenarios;

    #[test]
    fn quantiles_interpolate() {
        let v = [4.0, 1.0, 3.0, 2.0];
        assert_eq!(quantile(&v, 0.0), 1.0);
        assert_eq!(quantile(&v, 1.0), 4.0);
        assert_eq!(quantile(&v, 0.5), 2.5);
        assert_eq!(quantile(&v, 0.25), 1.75);
        assert_eq!(quantile(&[7.0], 0.5), 7.0);
    }

    #[test]
    fn exact_estimates_give_zero_mse_and_constant_offset_gives_e_squared() {
        let cfg = scenarios::constant_1d();
        let mut run = execute_seed(&cfg, &[FilterKind::Tkf], 2, 0).unwrap();
        // Zero-error: overwrite the estimates with the truth.
        for (i, step) in run.trajectory.iter().enumerate() {
            run.filters[0].xhat[i] = step.x_true.clone();
            run.filters[0].sqerr[i] = 0.0;
        }
        let report = summarize(&cfg, 2, std::slice::from_ref(&run), vec![]);
        let tkf = &report.filters["tkf"];
        assert_eq!(tkf.mse_median, 0.0);
        assert_eq!(tkf.max_error_per_seed[0], 0.0);

        // Constant offset e = 0.3 → MSE exactly e².
        for (i, step) in run.trajectory.iter().enumerate() {
            let est = Vector::from_slice(&[step.x_true[0] + 0.3]);
            run.filters[0].sqerr[i] = 0.09;
            run.filters[0].xhat[i] = est;
        }
        let report = summarize(&cfg, 2, std::slice::from_ref(&run), vec![]);
        let tkf = &report.filters["tkf"];
        assert!((tkf.mse_median - 0.09).abs() < 1e-15);
        assert!((tkf.max_error_per_seed[0] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn report_pools_censoring_and_divergences() {
        let cfg = scenarios::constant_1d();
        let runs = execute_many(&cfg, &FilterKind::ALL, 7, 6).unwrap();
        let report = summarize(&cfg, 7, &runs, vec!["a.csv".into()]);
        assert_eq!(report.replicates, 6);
        assert_eq!(report.censored_fraction.len(), 1);
        // ≈ Φ(1) censoring from the scenario geometry.
        assert!((report.censored_fraction[0] - 0.8413).abs() < 0.05);
        assert_eq!(
            report.filters.keys().collect::<Vec<_>>(),
            vec!["akf", "atkf", "kf", "tkf"]
        );
        let atkf = &report.filters["atkf"];
        assert_eq!(atkf.mse_per_seed.len(), 6);
        assert!(atkf.invariants.qhat_min_eig.is_some());
        assert!(atkf.invariants.gamma_max_dev.unwrap() < 1e-12);
        assert!(report.filters["kf"].invariants.qhat_min_eig.is_none());
        // Censor-blind estimates stay above the clip; censor-aware find -1.
        assert!(report.filters["kf"].mse_median > 1.0);
        assert!(report.filters["tkf"].mse_median < 0.1);
    }

    #[test]
    fn json_round_trips() {
        let cfg = scenarios::constant_1d();
        let runs = execute_many(&cfg, &[FilterKind::Tkf, FilterKind::Atkf], 3, 2).unwrap();
        let report = summarize(&cfg, 3, &runs, vec!["t0.csv".into(), "t1.csv".into()]);
        let json = report.to_json();
        let back: MetricsReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, report);
        assert!(json.ends_with('\n'));
        // Stable text rendering mentions every filter.
        let text = report.render_text();
        assert!(text.contains("tkf") && text.contains("atkf"));
    }
}
