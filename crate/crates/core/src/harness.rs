//! Monte Carlo experiments: simulate, estimate, and score pairwise crowding
//! comparisons between cars.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{
    distort_prior_with, estimate_at_station, Distortion, DistortionScales, MhSettings, PriorSpec,
};
use crate::seed::{self, stream};
use crate::simulator::{run_scenario, ApcModel};
use crate::stats::{mean, quantile_sorted, sorted};
use crate::transit::LineConfig;

pub const BIN_WIDTH: f64 = 5.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub n_runs: usize,
    /// Counter noise levels; every level sees the same boardings and the same
    /// standard-normal noise draws, scaled.
    pub sigmas: Vec<f64>,
    pub apc_bias: f64,
    pub distortion: Distortion,
    pub distortion_scales: DistortionScales,
    pub line: LineConfig,
    pub mcmc: MhSettings,
    pub master_seed: u64,
    pub thresholds: Vec<f64>,
    pub parallel: bool,
}

impl ExperimentSpec {
    pub fn new(line: LineConfig, master_seed: u64) -> Self {
        Self {
            n_runs: 300,
            sigmas: vec![5.0, 10.0, 15.0],
            apc_bias: 0.0,
            distortion: Distortion::None,
            distortion_scales: DistortionScales::default(),
            line,
            mcmc: MhSettings::default(),
            master_seed,
            thresholds: default_thresholds(),
            parallel: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_runs == 0 {
            return Err(Error::invalid("montecarlo.n_runs", "must be >= 1"));
        }
        if self.sigmas.is_empty() {
            return Err(Error::invalid(
                "montecarlo.sigmas",
                "need at least one noise level",
            ));
        }
        for &s in &self.sigmas {
            crate::error::ensure_positive("montecarlo.sigmas", s)?;
        }
        if self
            .thresholds
            .iter()
            .any(|t| !(t.is_finite() && *t >= 0.0))
        {
            return Err(Error::invalid(
                "montecarlo.thresholds",
                "must be finite and >= 0",
            ));
        }
        if self.line.n_stations < 3 {
            return Err(Error::invalid(
                "line.n_stations",
                "pairwise scoring needs at least 3 stations",
            ));
        }
        self.distortion_scales.validate()?;
        self.line.validate()?;
        self.mcmc.validate()
    }
}

pub fn default_thresholds() -> Vec<f64> {
    (0..=8).map(|i| 5.0 * f64::from(i)).collect()
}

/// Comparison of cars `k` and `kprime` (1-based) at `station`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairwiseRecord {
    pub run: usize,
    pub station: usize,
    pub k: usize,
    pub kprime: usize,
    pub true_diff: i64,
    pub pred_diff: f64,
}

/// One car's prediction at one station.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CarRecord {
    pub run: usize,
    pub station: usize,
    pub car: usize,
    pub omega_true: u32,
    pub omega_hat: f64,
    pub omega_lo: f64,
    pub omega_hi: f64,
    pub omega_map: u32,
    pub acceptance_rate: f64,
}

impl CarRecord {
    pub fn abs_error(&self) -> f64 {
        (self.omega_hat - f64::from(self.omega_true)).abs()
    }

    pub fn covered(&self) -> bool {
        let w = f64::from(self.omega_true);
        self.omega_lo <= w && w <= self.omega_hi
    }
}

/// Box-and-whisker statistics of `pred_diff` for one station and one
/// `true_diff` bin `[bin_lo, bin_hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxSummary {
    pub station: usize,
    pub bin_lo: f64,
    pub bin_hi: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub whisker_lo: f64,
    pub whisker_hi: f64,
    pub n: usize,
}

/// Quartiles by linear interpolation; whiskers at the most extreme data
/// within 1.5 IQR of the quartiles. `None` for empty input.
pub fn box_stats(values: &[f64]) -> Option<(f64, f64, f64, f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let v = sorted(values);
    let q1 = quantile_sorted(&v, 0.25);
    let median = quantile_sorted(&v, 0.5);
    let q3 = quantile_sorted(&v, 0.75);
    let reach = 1.5 * (q3 - q1);
    let lo = v.iter().copied().find(|&x| x >= q1 - reach).unwrap_or(q1);
    let hi = v
        .iter()
        .rev()
        .copied()
        .find(|&x| x <= q3 + reach)
        .unwrap_or(q3);
    Some((q1, median, q3, lo.min(q1), hi.max(q3)))
}

/// Index of the width-5 bin centred on the nearest multiple of 5.
pub fn bin_of(true_diff: i64) -> i64 {
    (true_diff as f64 / BIN_WIDTH).round() as i64
}

pub fn box_summaries(records: &[PairwiseRecord]) -> Vec<BoxSummary> {
    let mut groups: std::collections::BTreeMap<(usize, i64), Vec<f64>> = Default::default();
    for r in records {
        groups
            .entry((r.station, bin_of(r.true_diff)))
            .or_default()
            .push(r.pred_diff);
    }
    groups
        .into_iter()
        .map(|((station, bin), vals)| {
            let (q1, median, q3, whisker_lo, whisker_hi) =
                box_stats(&vals).expect("nonempty group");
            let centre = bin as f64 * BIN_WIDTH;
            BoxSummary {
                station,
                bin_lo: centre - BIN_WIDTH / 2.0,
                bin_hi: centre + BIN_WIDTH / 2.0,
                q1,
                median,
                q3,
                whisker_lo,
                whisker_hi,
                n: vals.len(),
            }
        })
        .collect()
}

/// Fraction of records with `|true_diff| >= threshold` whose predicted sign
/// matches; a zero prediction counts as wrong. `None` if no record qualifies.
pub fn sign_accuracy(records: &[PairwiseRecord], threshold: f64) -> Option<f64> {
    let (hits, n) = records
        .iter()
        .filter(|r| r.true_diff.abs() as f64 >= threshold)
        .fold((0usize, 0usize), |(hits, n), r| {
            let right = r.pred_diff != 0.0 && (r.pred_diff > 0.0) == (r.true_diff > 0);
            (hits + usize::from(right), n + 1)
        });
    (n > 0).then(|| hits as f64 / n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdAccuracy {
    pub threshold: f64,
    pub accuracy: Option<f64>,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StationError {
    pub station: usize,
    pub mean_abs_error: f64,
    pub coverage: f64,
    pub n: usize,
}

/// Headline numbers for one noise level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SigmaMetrics {
    pub sigma: f64,
    pub sign_accuracy: Vec<ThresholdAccuracy>,
    pub interval_coverage: f64,
    pub mean_acceptance_rate: f64,
    pub by_station: Vec<StationError>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SigmaResult {
    pub sigma: f64,
    pub pairwise: Vec<PairwiseRecord>,
    pub cars: Vec<CarRecord>,
    pub boxes: Vec<BoxSummary>,
    pub metrics: SigmaMetrics,
}

impl SigmaResult {
    /// `run,station,k,kprime,true_diff,pred_diff`
    pub fn pairwise_csv(&self) -> String {
        let mut out = String::from("run,station,k,kprime,true_diff,pred_diff\n");
        for r in &self.pairwise {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                r.run, r.station, r.k, r.kprime, r.true_diff, r.pred_diff
            )
            .unwrap();
        }
        out
    }

    /// `station,bin_lo,bin_hi,q1,median,q3,whisker_lo,whisker_hi,n`
    pub fn box_summary_csv(&self) -> String {
        let mut out = String::from("station,bin_lo,bin_hi,q1,median,q3,whisker_lo,whisker_hi,n\n");
        for b in &self.boxes {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                b.station,
                b.bin_lo,
                b.bin_hi,
                b.q1,
                b.median,
                b.q3,
                b.whisker_lo,
                b.whisker_hi,
                b.n
            )
            .unwrap();
        }
        out
    }

    /// `run,car,station,omega_hat,omega_lo,omega_hi,omega_true`
    pub fn predictions_csv(&self) -> String {
        let mut out = String::from("run,car,station,omega_hat,omega_lo,omega_hi,omega_true\n");
        for c in &self.cars {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                c.run, c.car, c.station, c.omega_hat, c.omega_lo, c.omega_hi, c.omega_true
            )
            .unwrap();
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentMetrics {
    pub n_runs: usize,
    pub master_seed: u64,
    pub distortion: Distortion,
    pub results: Vec<SigmaMetrics>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentResult {
    pub per_sigma: Vec<SigmaResult>,
    pub metrics: ExperimentMetrics,
}

impl ExperimentResult {
    pub fn metrics_json(&self) -> String {
        serde_json::to_string_pretty(&self.metrics).expect("metrics serialize")
    }

    pub fn sigma(&self, sigma: f64) -> Option<&SigmaResult> {
        self.per_sigma.iter().find(|r| r.sigma == sigma)
    }
}

struct RunOutput {
    pairwise: Vec<PairwiseRecord>,
    cars: Vec<CarRecord>,
}

/// Per-run seed; every stream in the run hangs off it.
pub fn run_seed(master_seed: u64, run: usize) -> u64 {
    seed::derive(master_seed, &[stream::RUN, run as u64])
}

fn one_run(
    spec: &ExperimentSpec,
    priors: &[PriorSpec],
    run: usize,
    sigma: f64,
) -> Result<RunOutput> {
    let seed = run_seed(spec.master_seed, run);
    let apc = ApcModel {
        noise_sigma: sigma,
        bias: spec.apc_bias,
    };
    let sim = run_scenario(&spec.line, &apc, seed)?;
    let log_sd = spec.distortion.log_sd_with(&spec.distortion_scales);
    let priors: Vec<PriorSpec> = priors
        .iter()
        .enumerate()
        .map(|(k, p)| {
            distort_prior_with(
                p,
                log_sd,
                &mut seed::rng(seed, &[stream::DISTORTION, k as u64]),
            )
        })
        .collect::<Result<_>>()?;

    let m = spec.line.n_stations;
    let mut out = RunOutput {
        pairwise: Vec::new(),
        cars: Vec::new(),
    };
    // leaving station j predicts crowding at j + 1; the terminal is always empty
    for j in 1..=m - 2 {
        let station = j + 1;
        let post = estimate_at_station(&priors, &sim.measurements, j, sigma, &spec.mcmc, seed)?;
        for (k, p) in post.iter().enumerate() {
            out.cars.push(CarRecord {
                run,
                station,
                car: k + 1,
                omega_true: sim.trace.cars[k].crowding[station - 1],
                omega_hat: p.omega_hat,
                omega_lo: p.omega_lo,
                omega_hi: p.omega_hi,
                omega_map: p.omega_map,
                acceptance_rate: p.acceptance_rate,
            });
        }
        for k in 0..post.len() {
            for kp in 0..post.len() {
                if k == kp {
                    continue;
                }
                let truth = |c: usize| i64::from(sim.trace.cars[c].crowding[station - 1]);
                out.pairwise.push(PairwiseRecord {
                    run,
                    station,
                    k: k + 1,
                    kprime: kp + 1,
                    true_diff: truth(k) - truth(kp),
                    pred_diff: post[k].omega_hat - post[kp].omega_hat,
                });
            }
        }
    }
    Ok(out)
}

fn metrics_for(
    sigma: f64,
    thresholds: &[f64],
    pairwise: &[PairwiseRecord],
    cars: &[CarRecord],
) -> SigmaMetrics {
    let mut stations: Vec<usize> = cars.iter().map(|c| c.station).collect();
    stations.sort_unstable();
    stations.dedup();
    let by_station = stations
        .into_iter()
        .map(|s| {
            let at: Vec<&CarRecord> = cars.iter().filter(|c| c.station == s).collect();
            let errs: Vec<f64> = at.iter().map(|c| c.abs_error()).collect();
            StationError {
                station: s,
                mean_abs_error: mean(&errs),
                coverage: at.iter().filter(|c| c.covered()).count() as f64 / at.len() as f64,
                n: at.len(),
            }
        })
        .collect();
    SigmaMetrics {
        sigma,
        sign_accuracy: thresholds
            .iter()
            .map(|&t| ThresholdAccuracy {
                threshold: t,
                accuracy: sign_accuracy(pairwise, t),
                n: pairwise
                    .iter()
                    .filter(|r| r.true_diff.abs() as f64 >= t)
                    .count(),
            })
            .collect(),
        interval_coverage: cars.iter().filter(|c| c.covered()).count() as f64
            / cars.len().max(1) as f64,
        mean_acceptance_rate: mean(&cars.iter().map(|c| c.acceptance_rate).collect::<Vec<_>>()),
        by_station,
    }
}

/// Runs every noise level over `n_runs` seeded traversals. Output is a pure
/// function of `spec`; the `parallel` flag only changes scheduling.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    spec.validate()?;
    let priors = PriorSpec::from_line(&spec.line)?;
    let per_sigma = spec
        .sigmas
        .iter()
        .map(|&sigma| {
            let task = |run| one_run(spec, &priors, run, sigma);
            let runs: Vec<RunOutput> = if spec.parallel {
                (0..spec.n_runs)
                    .into_par_iter()
                    .map(task)
                    .collect::<Result<_>>()?
            } else {
                (0..spec.n_runs).map(task).collect::<Result<_>>()?
            };
            let mut pairwise = Vec::new();
            let mut cars = Vec::new();
            for r in runs {
                pairwise.extend(r.pairwise);
                cars.extend(r.cars);
            }
            Ok(SigmaResult {
                sigma,
                boxes: box_summaries(&pairwise),
                metrics: metrics_for(sigma, &spec.thresholds, &pairwise, &cars),
                pairwise,
                cars,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let metrics = ExperimentMetrics {
        n_runs: spec.n_runs,
        master_seed: spec.master_seed,
        distortion: spec.distortion,
        results: per_sigma.iter().map(|r| r.metrics.clone()).collect(),
    };
    Ok(ExperimentResult { per_sigma, metrics })
}
