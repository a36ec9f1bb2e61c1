//! Synthetic ground truth: Poisson boardings per car, the resulting flows, and
//! noisy automatic passenger counter (APC) readings.

use std::fmt::Write as _;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{self, stream};
use crate::stats::ln_factorial;
use crate::transit::{flow_accounting, CarOdm, FlowTrace, LineConfig};

/// Rates below this use sequential inversion, at or above it PTRS.
const INVERSION_LIMIT: f64 = 30.0;

/// Draws a Poisson variate with mean `rate`.
///
/// Inversion by sequential search for small rates; the transformed rejection
/// with squeeze (PTRS) method of Hörmann for large rates. Both consume
/// uniforms from `rng` only, so results are fixed by the generator state.
pub fn sample_poisson<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> u32 {
    debug_assert!(rate >= 0.0 && rate.is_finite());
    if rate <= 0.0 {
        0
    } else if rate < INVERSION_LIMIT {
        poisson_inversion(rate, rng)
    } else {
        poisson_ptrs(rate, rng)
    }
}

fn poisson_inversion<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> u32 {
    let u: f64 = rng.random();
    let mut k = 0u32;
    let mut p = (-rate).exp();
    let mut cdf = p;
    while u > cdf {
        k += 1;
        p *= rate / f64::from(k);
        cdf += p;
        // cdf has converged to 1 within rounding; the remaining tail is < 1e-16
        if p < 1e-300 || k > 1000 {
            break;
        }
    }
    k
}

fn poisson_ptrs<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> u32 {
    let slam = rate.sqrt();
    let loglam = rate.ln();
    let b = 0.931 + 2.53 * slam;
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let vr = 0.9277 - 3.6224 / (b - 2.0);
    loop {
        let u: f64 = rng.random::<f64>() - 0.5;
        let v: f64 = rng.random();
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + rate + 0.43).floor();
        if us >= 0.07 && v <= vr {
            return k as u32;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        let lhs = v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln();
        let rhs = -rate + k * loglam - ln_factorial(k as u32);
        if lhs <= rhs {
            return k as u32;
        }
    }
}

/// Additive Gaussian counter error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApcModel {
    /// Standard deviation, passengers.
    pub noise_sigma: f64,
    #[serde(default)]
    pub bias: f64,
}

impl Default for ApcModel {
    fn default() -> Self {
        Self {
            noise_sigma: 5.0,
            bias: 0.0,
        }
    }
}

impl ApcModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(Error::invalid("apc.noise_sigma", "must be >= 0"));
        }
        if !self.bias.is_finite() {
            return Err(Error::invalid("apc.bias", "must be finite"));
        }
        Ok(())
    }
}

/// One ODM per car with every entry drawn from its car-level Poisson rate.
pub fn sample_boarding<R: Rng + ?Sized>(cfg: &LineConfig, rng: &mut R) -> Result<Vec<CarOdm>> {
    let rates = cfg.rate_table()?;
    Ok(rates
        .iter()
        .map(|car| CarOdm {
            index: cfg.odm_index(),
            entries: car.iter().map(|&r| sample_poisson(r, rng)).collect(),
        })
        .collect())
}

/// Noisy on-board counts after each departure: `[car][r]` estimates
/// `o_{r+2}` (stations 2..M). Real-valued, neither rounded nor clamped.
pub fn apc_measure<R: Rng + ?Sized>(
    trace: &FlowTrace,
    apc: &ApcModel,
    rng: &mut R,
) -> Vec<Vec<f64>> {
    trace
        .cars
        .iter()
        .map(|flow| {
            flow.onboard[1..]
                .iter()
                .map(|&o| {
                    let z: f64 = StandardNormal.sample(rng);
                    f64::from(o) + apc.bias + apc.noise_sigma * z
                })
                .collect()
        })
        .collect()
}

/// One traversal of the line.
#[derive(Debug, Clone, PartialEq)]
pub struct SimRun {
    pub seed: u64,
    pub odms: Vec<CarOdm>,
    pub trace: FlowTrace,
    /// `[car][r]` is the reading of `o_{r+2}`, taken after leaving station `r+1`.
    pub measurements: Vec<Vec<f64>>,
}

impl SimRun {
    pub fn n_stations(&self) -> usize {
        self.odms.first().map_or(0, |o| o.index.n_stations())
    }

    /// `car,station,boarded,alighted,onboard,crowding,apc_measurement`; the
    /// measurement column is the reading of `onboard` and is empty at station 1.
    pub fn to_csv(&self) -> String {
        let mut out =
            String::from("car,station,boarded,alighted,onboard,crowding,apc_measurement\n");
        for (k, flow) in self.trace.cars.iter().enumerate() {
            for s in 0..flow.onboard.len() {
                let meas = if s == 0 {
                    String::new()
                } else {
                    format!("{}", self.measurements[k][s - 1])
                };
                writeln!(
                    out,
                    "{},{},{},{},{},{},{}",
                    k + 1,
                    s + 1,
                    flow.boarded[s],
                    flow.alighted[s],
                    flow.onboard[s],
                    flow.crowding[s],
                    meas
                )
                .unwrap();
            }
        }
        out
    }
}

/// Simulates one run. Boardings use one stream per car and the counter noise
/// one stream per car, both derived from `seed`.
pub fn run_scenario(cfg: &LineConfig, apc: &ApcModel, seed: u64) -> Result<SimRun> {
    cfg.validate()?;
    apc.validate()?;
    let rates = cfg.rate_table()?;
    let odms: Vec<CarOdm> = rates
        .iter()
        .enumerate()
        .map(|(k, car)| {
            let mut rng = seed::rng(seed, &[stream::BOARDING, k as u64]);
            CarOdm {
                index: cfg.odm_index(),
                entries: car.iter().map(|&r| sample_poisson(r, &mut rng)).collect(),
            }
        })
        .collect();
    let trace = flow_accounting(&odms);
    let measurements = trace
        .cars
        .iter()
        .enumerate()
        .map(|(k, flow)| {
            let mut rng = seed::rng(seed, &[stream::APC, k as u64]);
            let single = FlowTrace {
                cars: vec![flow.clone()],
            };
            apc_measure(&single, apc, &mut rng).pop().unwrap()
        })
        .collect();
    Ok(SimRun {
        seed,
        odms,
        trace,
        measurements,
    })
}
