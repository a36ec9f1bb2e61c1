//! Random-walk Metropolis-Hastings on the nonnegative integer lattice.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Unnormalized log density over count vectors.
pub trait LogTarget {
    fn log_density(&self, state: &[u32]) -> f64;

    /// `log_density(state with state[idx] = value) - log_density(state)`.
    fn log_density_change(&self, state: &[u32], idx: usize, value: u32) -> f64 {
        let mut proposal = state.to_vec();
        proposal[idx] = value;
        self.log_density(&proposal) - self.log_density(state)
    }

    /// Coordinates the sampler must never move.
    fn is_fixed(&self, _idx: usize) -> bool {
        false
    }
}

impl<F> LogTarget for F
where
    F: Fn(&[u32]) -> f64,
{
    fn log_density(&self, state: &[u32]) -> f64 {
        self(state)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MhSettings {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
}

impl Default for MhSettings {
    fn default() -> Self {
        Self {
            iterations: 20_000,
            burn_in: 5_000,
            thin: 5,
        }
    }
}

impl MhSettings {
    pub fn validate(&self) -> Result<()> {
        if self.thin == 0 {
            return Err(Error::invalid("mcmc.thin", "must be >= 1"));
        }
        if self.burn_in >= self.iterations {
            return Err(Error::invalid(
                "mcmc.burn_in",
                "must be less than iterations",
            ));
        }
        Ok(())
    }

    pub fn retained(&self) -> usize {
        (self.iterations - self.burn_in).div_ceil(self.thin)
    }
}

/// Output of one chain.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    /// Every `thin`-th state after burn-in.
    pub samples: Vec<Vec<u32>>,
    /// Log density of each retained sample.
    pub log_densities: Vec<f64>,
    /// Highest-density state visited at any point, burn-in included.
    pub best_state: Vec<u32>,
    pub best_log_density: f64,
    /// Accepted moves over all iterations.
    pub acceptance_rate: f64,
}

/// Runs the sampler from `init`.
///
/// Each step picks one free coordinate uniformly and proposes a jump of
/// `±u`, `u` uniform on `{1, 2, 3}`. The proposal is symmetric, so the move
/// is accepted with probability `min(1, exp(change))`; jumps below zero have
/// zero target density and are rejected.
pub fn metropolis_hastings<T, R>(
    init: &[u32],
    target: &T,
    settings: &MhSettings,
    rng: &mut R,
) -> Result<Chain>
where
    T: LogTarget + ?Sized,
    R: Rng + ?Sized,
{
    settings.validate()?;
    let mut state = init.to_vec();
    let mut current = target.log_density(&state);
    if current.is_nan() {
        return Err(Error::NanTarget { iteration: 0 });
    }
    if current == f64::NEG_INFINITY {
        return Err(Error::invalid(
            "init",
            "initial state has zero target density",
        ));
    }
    let free: Vec<usize> = (0..state.len()).filter(|&i| !target.is_fixed(i)).collect();

    let mut best_state = state.clone();
    let mut best_log_density = current;
    let mut samples = Vec::with_capacity(settings.retained());
    let mut log_densities = Vec::with_capacity(settings.retained());
    let mut accepted = 0usize;

    for it in 0..settings.iterations {
        if !free.is_empty() {
            let idx = free[rng.random_range(0..free.len())];
            let jump = rng.random_range(0..6u32);
            let step = i64::from(jump % 3 + 1);
            let step = if jump < 3 { step } else { -step };
            let value = i64::from(state[idx]) + step;
            let u: f64 = rng.random();
            if value >= 0 {
                let value = value as u32;
                let change = target.log_density_change(&state, idx, value);
                if change.is_nan() {
                    return Err(Error::NanTarget { iteration: it + 1 });
                }
                if change >= 0.0 || u.ln() < change {
                    state[idx] = value;
                    current += change;
                    accepted += 1;
                    if current > best_log_density {
                        best_log_density = current;
                        best_state.clone_from(&state);
                    }
                }
            }
        }
        if it >= settings.burn_in && (it - settings.burn_in).is_multiple_of(settings.thin) {
            samples.push(state.clone());
            log_densities.push(current);
        }
    }

    Ok(Chain {
        samples,
        log_densities,
        best_state,
        best_log_density,
        acceptance_rate: accepted as f64 / settings.iterations as f64,
    })
}
