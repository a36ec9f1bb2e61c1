//! Bayesian estimation of car-level ODM entries from on-board counter readings,
//! and next-station crowding prediction.

mod mcmc;
mod posterior;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

pub use mcmc::{metropolis_hastings, Chain, LogTarget, MhSettings};
pub use posterior::{log_posterior, CarPosterior};

use crate::error::{Error, Result};
use crate::seed::{self, stream};
use crate::stats::{quantile_sorted, sorted};
use crate::transit::{build_a_matrix, crowding_at, CarOdm, LineConfig, OdmIndex};

/// Poisson prior rates for one car, indexed like [`CarOdm::entries`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorSpec {
    pub rates: Vec<f64>,
    /// Multiplicative factors already folded into `rates`, if the prior was distorted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factors: Option<Vec<f64>>,
}

impl PriorSpec {
    pub fn new(rates: Vec<f64>) -> Result<Self> {
        if let Some(i) = rates.iter().position(|r| !(r.is_finite() && *r >= 0.0)) {
            return Err(Error::invalid(
                "prior.rates",
                format!("entry {i} is {}, expected a finite value >= 0", rates[i]),
            ));
        }
        Ok(Self {
            rates,
            factors: None,
        })
    }

    /// One prior per car from the line's car-level rates.
    pub fn from_line(cfg: &LineConfig) -> Result<Vec<Self>> {
        cfg.rate_table()?.into_iter().map(Self::new).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Distortion {
    #[default]
    None,
    Moderate,
    Severe,
}

impl Distortion {
    pub const ALL: [Distortion; 3] = [Distortion::None, Distortion::Moderate, Distortion::Severe];

    /// Log-scale standard deviation of the multiplicative factor.
    pub fn log_sd(self) -> f64 {
        match self {
            Distortion::None => 0.0,
            Distortion::Moderate => 0.3,
            Distortion::Severe => 0.7,
        }
    }

    pub fn log_sd_with(self, scales: &DistortionScales) -> f64 {
        match self {
            Distortion::None => 0.0,
            Distortion::Moderate => scales.moderate,
            Distortion::Severe => scales.severe,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Distortion::None => "none",
            Distortion::Moderate => "moderate",
            Distortion::Severe => "severe",
        }
    }
}

/// Log-scale standard deviations used for each distortion level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistortionScales {
    pub moderate: f64,
    pub severe: f64,
}

impl Default for DistortionScales {
    fn default() -> Self {
        Self {
            moderate: Distortion::Moderate.log_sd(),
            severe: Distortion::Severe.log_sd(),
        }
    }
}

impl DistortionScales {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("moderate", self.moderate), ("severe", self.severe)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(
                    format!("montecarlo.distortion_log_sd.{name}"),
                    format!("must be finite and >= 0, got {v}"),
                ));
            }
        }
        Ok(())
    }
}

impl fmt::Display for Distortion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Distortion {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Distortion::None),
            "moderate" => Ok(Distortion::Moderate),
            "severe" => Ok(Distortion::Severe),
            other => Err(Error::invalid(
                "distortion",
                format!("unknown level {other:?}; expected none, moderate or severe"),
            )),
        }
    }
}

/// Multiplies every rate by `exp(e)`, `e ~ N(0, log_sd^2)`.
pub fn distort_prior_with<R: Rng + ?Sized>(
    prior: &PriorSpec,
    log_sd: f64,
    rng: &mut R,
) -> Result<PriorSpec> {
    if log_sd == 0.0 {
        return Ok(prior.clone());
    }
    let normal =
        Normal::new(0.0, log_sd).map_err(|e| Error::invalid("distortion.log_sd", e.to_string()))?;
    let factors: Vec<f64> = prior
        .rates
        .iter()
        .map(|_| normal.sample(rng).exp())
        .collect();
    Ok(PriorSpec {
        rates: prior
            .rates
            .iter()
            .zip(&factors)
            .map(|(r, f)| r * f)
            .collect(),
        factors: Some(factors),
    })
}

pub fn distort_prior<R: Rng + ?Sized>(
    prior: &PriorSpec,
    level: Distortion,
    rng: &mut R,
) -> Result<PriorSpec> {
    distort_prior_with(prior, level.log_sd(), rng)
}

/// Posterior for one car after some number of counter readings, with the
/// crowding prediction for `target_station`.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSummary {
    pub target_station: usize,
    pub samples: Vec<CarOdm>,
    pub log_posteriors: Vec<f64>,
    pub best_state: CarOdm,
    pub best_log_posterior: f64,
    pub acceptance_rate: f64,
    /// Median of crowding over retained samples.
    pub omega_hat: f64,
    /// 5% quantile.
    pub omega_lo: f64,
    /// 95% quantile.
    pub omega_hi: f64,
    /// Crowding of `best_state`.
    pub omega_map: u32,
}

impl PosteriorSummary {
    pub fn covers(&self, omega: u32) -> bool {
        let w = f64::from(omega);
        self.omega_lo <= w && w <= self.omega_hi
    }
}

/// Runs one chain for one car. The number of readings fixes the on-board
/// matrix: `n` readings cover `o_2..o_{n+1}`.
pub fn estimate_car<R: Rng + ?Sized>(
    prior: &PriorSpec,
    measurements: &[f64],
    sigma: f64,
    target_station: usize,
    settings: &MhSettings,
    rng: &mut R,
) -> Result<PosteriorSummary> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::invalid(
            "sigma",
            format!("{sigma} must be finite and > 0"),
        ));
    }
    let index = OdmIndex::from_len(prior.rates.len())
        .ok_or_else(|| Error::invalid("prior.rates", "length is not M(M-1)/2 for any M >= 2"))?;
    let m = index.n_stations();
    if target_station == 0 || target_station > m {
        return Err(Error::invalid(
            "target_station",
            format!("{target_station} not in 1..={m}"),
        ));
    }
    let a = build_a_matrix(measurements.len() + 1, m)?;
    let target = CarPosterior::new(&a, measurements, sigma, prior);
    let init: Vec<u32> = prior.rates.iter().map(|r| r.floor() as u32).collect();
    let chain = metropolis_hastings(&init, &target, settings, rng)?;

    let wrap = |entries: Vec<u32>| CarOdm { index, entries };
    let samples: Vec<CarOdm> = chain.samples.into_iter().map(wrap).collect();
    let omegas: Vec<f64> = samples
        .iter()
        .map(|s| f64::from(crowding_at(s, target_station)))
        .collect();
    let omegas = sorted(&omegas);
    let best_state = wrap(chain.best_state);
    Ok(PosteriorSummary {
        target_station,
        omega_hat: quantile_sorted(&omegas, 0.5),
        omega_lo: quantile_sorted(&omegas, 0.05),
        omega_hi: quantile_sorted(&omegas, 0.95),
        omega_map: crowding_at(&best_state, target_station),
        samples,
        log_posteriors: chain.log_densities,
        best_state,
        best_log_posterior: chain.best_log_density,
        acceptance_rate: chain.acceptance_rate,
    })
}

/// Estimates every car after the train leaves `station` and predicts crowding
/// at `station + 1`. `measurements[k]` is car `k`'s reading history (at least
/// `station` readings); `station = 0` means no readings yet. Car `k` uses the
/// stream `(seed, MCMC, k, station)`.
pub fn estimate_at_station(
    priors: &[PriorSpec],
    measurements: &[Vec<f64>],
    station: usize,
    sigma: f64,
    settings: &MhSettings,
    seed: u64,
) -> Result<Vec<PosteriorSummary>> {
    if priors.len() != measurements.len() {
        return Err(Error::invalid(
            "measurements",
            format!(
                "{} cars of readings for {} priors",
                measurements.len(),
                priors.len()
            ),
        ));
    }
    priors
        .iter()
        .zip(measurements)
        .enumerate()
        .map(|(k, (prior, history))| {
            if history.len() < station {
                return Err(Error::invalid(
                    "measurements",
                    format!(
                        "car {} has {} readings, need {station}",
                        k + 1,
                        history.len()
                    ),
                ));
            }
            let mut rng = seed::rng(seed, &[stream::MCMC, k as u64, station as u64]);
            estimate_car(
                prior,
                &history[..station],
                sigma,
                station + 1,
                settings,
                &mut rng,
            )
        })
        .collect()
}
