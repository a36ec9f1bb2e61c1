//! Poisson-prior / Gaussian-likelihood posterior over one car's ODM entries.

use crate::stats::ln_factorial;
use crate::transit::OnboardMatrix;

use super::mcmc::LogTarget;
use super::PriorSpec;

#[inline]
fn log_poisson(count: u32, rate: f64, ln_rate: f64) -> f64 {
    if rate == 0.0 {
        if count == 0 {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    } else {
        f64::from(count) * ln_rate - rate - ln_factorial(count)
    }
}

/// Unnormalized log posterior of `b` given on-board readings:
///
/// `-sum_r (meas_r - (A b)_r)^2 / (2 sigma^2)
///  + sum_idx [b_idx ln(rate_idx) - rate_idx - ln(b_idx!)]`
///
/// A positive count where the prior rate is zero yields `-inf`.
pub fn log_posterior(
    b: &[u32],
    measurements: &[f64],
    a: &OnboardMatrix,
    sigma: f64,
    prior: &PriorSpec,
) -> f64 {
    debug_assert_eq!(a.nrows(), measurements.len());
    let two_var = 2.0 * sigma * sigma;
    let gaussian: f64 = a
        .apply(b)
        .iter()
        .zip(measurements)
        .map(|(&pred, &m)| {
            let r = m - pred as f64;
            -r * r / two_var
        })
        .sum();
    let prior_term: f64 = b
        .iter()
        .zip(&prior.rates)
        .map(|(&count, &rate)| log_poisson(count, rate, rate.ln()))
        .sum();
    gaussian + prior_term
}

/// [`log_posterior`] packaged as a sampler target with cheap single-entry
/// updates. Zero-rate entries are pinned.
#[derive(Debug, Clone)]
pub struct CarPosterior<'a> {
    a: &'a OnboardMatrix,
    measurements: &'a [f64],
    prior: &'a PriorSpec,
    sigma: f64,
    ln_rates: Vec<f64>,
    column_rows: Vec<Vec<usize>>,
}

impl<'a> CarPosterior<'a> {
    pub fn new(
        a: &'a OnboardMatrix,
        measurements: &'a [f64],
        sigma: f64,
        prior: &'a PriorSpec,
    ) -> Self {
        assert_eq!(a.nrows(), measurements.len(), "one measurement per A row");
        assert_eq!(a.ncols(), prior.rates.len(), "one prior rate per ODM entry");
        Self {
            a,
            measurements,
            prior,
            sigma,
            ln_rates: prior.rates.iter().map(|r| r.ln()).collect(),
            column_rows: a.column_rows(),
        }
    }
}

impl LogTarget for CarPosterior<'_> {
    fn log_density(&self, state: &[u32]) -> f64 {
        log_posterior(state, self.measurements, self.a, self.sigma, self.prior)
    }

    fn log_density_change(&self, state: &[u32], idx: usize, value: u32) -> f64 {
        let old = state[idx];
        let rate = self.prior.rates[idx];
        let ln_rate = self.ln_rates[idx];
        let prior_change = log_poisson(value, rate, ln_rate) - log_poisson(old, rate, ln_rate);
        if prior_change == f64::NEG_INFINITY {
            return prior_change;
        }
        let delta = f64::from(value) - f64::from(old);
        let two_var = 2.0 * self.sigma * self.sigma;
        let gaussian_change: f64 = self.column_rows[idx]
            .iter()
            .map(|&r| {
                let pred: u64 = self.a.row(r).iter().map(|&c| u64::from(state[c])).sum();
                let before = self.measurements[r] - pred as f64;
                let after = before - delta;
                (before * before - after * after) / two_var
            })
            .sum();
        prior_change + gaussian_change
    }

    fn is_fixed(&self, idx: usize) -> bool {
        self.prior.rates[idx] == 0.0
    }
}
