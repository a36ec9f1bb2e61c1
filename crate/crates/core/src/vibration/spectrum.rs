//! Acceleration PSDs on a frequency grid, CSV I/O, and load estimation.

use std::fmt::Write as _;

use num_complex::Complex64;

use super::multi_dof::{assemble_system, frequency_response, WheelInput};
use super::params::MultiDofParams;
use super::track::{track_psd, TrackModel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    frequencies: Vec<f64>,
}

impl FrequencyGrid {
    pub fn new(frequencies: Vec<f64>) -> Result<Self> {
        if frequencies.is_empty() {
            return Err(Error::invalid("frequencies", "grid is empty"));
        }
        if frequencies.iter().any(|f| !f.is_finite() || *f < 0.0) {
            return Err(Error::invalid(
                "frequencies",
                "values must be finite and >= 0",
            ));
        }
        if !frequencies.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::invalid(
                "frequencies",
                "grid must be strictly increasing",
            ));
        }
        Ok(Self { frequencies })
    }

    /// `n` log-spaced points from `lo` to `hi` inclusive.
    pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo > 0.0 && hi > lo && n >= 2) {
            return Err(Error::invalid("frequencies", "need 0 < lo < hi and n >= 2"));
        }
        let (a, b) = (lo.ln(), hi.ln());
        let step = (b - a) / (n - 1) as f64;
        let mut f: Vec<f64> = (0..n).map(|i| (a + step * i as f64).exp()).collect();
        f[0] = lo;
        f[n - 1] = hi;
        Self::new(f)
    }

    /// `n` evenly spaced points from `lo` to `hi` inclusive.
    pub fn linear(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo >= 0.0 && hi > lo && n >= 2) {
            return Err(Error::invalid(
                "frequencies",
                "need 0 <= lo < hi and n >= 2",
            ));
        }
        let step = (hi - lo) / (n - 1) as f64;
        Self::new((0..n).map(|i| lo + step * i as f64).collect())
    }

    /// 1024 log-spaced points over [0.1, 50] Hz.
    pub fn default_psd() -> Self {
        Self::log_spaced(0.1, 50.0, 1024).expect("static grid")
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }
}

/// Real-valued spectrum (PSD in (m/s^2)^2/Hz unless stated otherwise).
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub frequencies: Vec<f64>,
    pub values: Vec<f64>,
}

impl Spectrum {
    /// Frequency of the largest value with `lo <= f <= hi`.
    pub fn peak_in(&self, lo: f64, hi: f64) -> Option<f64> {
        self.frequencies
            .iter()
            .zip(&self.values)
            .filter(|(f, _)| **f >= lo && **f <= hi)
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(f, _)| *f)
    }

    /// Frequencies of strict interior local maxima.
    pub fn local_maxima(&self) -> Vec<f64> {
        self.values
            .windows(3)
            .enumerate()
            .filter(|(_, w)| w[1] > w[0] && w[1] > w[2])
            .map(|(i, _)| self.frequencies[i + 1])
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("frequency_hz,value\n");
        for (f, v) in self.frequencies.iter().zip(&self.values) {
            writeln!(out, "{f},{v:e}").unwrap();
        }
        out
    }

    /// Parses `frequency_hz,value` CSV (header required).
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        match lines.next().map(str::trim) {
            Some("frequency_hz,value") => {}
            other => {
                return Err(Error::InvalidSpectrum(format!(
                    "expected header `frequency_hz,value`, got {other:?}"
                )))
            }
        }
        let mut frequencies = Vec::new();
        let mut values = Vec::new();
        for (n, line) in lines.enumerate() {
            let bad = || Error::InvalidSpectrum(format!("malformed row {}: {line:?}", n + 2));
            let (f, v) = line.split_once(',').ok_or_else(bad)?;
            frequencies.push(f.trim().parse::<f64>().map_err(|_| bad())?);
            values.push(v.trim().parse::<f64>().map_err(|_| bad())?);
        }
        Ok(Self {
            frequencies,
            values,
        })
    }
}

/// Writes a complex response as `frequency_hz,re,im` CSV.
pub fn complex_to_csv(frequencies: &[f64], values: &[Complex64]) -> String {
    let mut out = String::from("frequency_hz,re,im\n");
    for (f, v) in frequencies.iter().zip(values) {
        writeln!(out, "{f},{:e},{:e}", v.re, v.im).unwrap();
    }
    out
}

/// Carbody vertical acceleration PSD at `x`:
/// `|frequency_response(x, f)|^2 * track_psd(f)`.
pub fn carbody_accel_psd(
    params: &MultiDofParams,
    track: &TrackModel,
    passengers: u32,
    x: f64,
    grid: &FrequencyGrid,
    wheel_delays: bool,
) -> Result<Spectrum> {
    track.validate()?;
    let sys = assemble_system(params, passengers)?;
    let input = if wheel_delays {
        WheelInput::Delayed { speed: track.speed }
    } else {
        WheelInput::Coherent
    };
    let values = grid
        .frequencies()
        .iter()
        .map(|&f| Ok(frequency_response(&sys, input, x, f)?.norm_sqr() * track_psd(track, f)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Spectrum {
        frequencies: grid.frequencies().to_vec(),
        values,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadEstimate {
    pub count: u32,
    /// `(candidate count, sum of squared log-PSD differences)` in grid order.
    pub residuals: Vec<(u32, f64)>,
}

/// Passenger count whose modelled PSD best matches `observed` in the
/// log-spectral least-squares sense. Ties go to the smaller count.
pub fn estimate_passenger_count(
    observed: &Spectrum,
    params: &MultiDofParams,
    track: &TrackModel,
    x: f64,
    count_grid: &[u32],
    wheel_delays: bool,
) -> Result<LoadEstimate> {
    if count_grid.is_empty() {
        return Err(Error::invalid("counts", "candidate grid is empty"));
    }
    if observed.frequencies.len() != observed.values.len() {
        return Err(Error::InvalidSpectrum(
            "frequency/value length mismatch".into(),
        ));
    }
    if let Some(v) = observed
        .values
        .iter()
        .find(|v| !(**v > 0.0 && v.is_finite()))
    {
        return Err(Error::InvalidSpectrum(format!(
            "observed PSD must be strictly positive, found {v}"
        )));
    }
    let grid = FrequencyGrid::new(observed.frequencies.clone())?;
    let log_obs: Vec<f64> = observed.values.iter().map(|v| v.ln()).collect();

    let mut residuals = Vec::with_capacity(count_grid.len());
    for &count in count_grid {
        let model = carbody_accel_psd(params, track, count, x, &grid, wheel_delays)?;
        let r: f64 = model
            .values
            .iter()
            .zip(&log_obs)
            .map(|(m, o)| (m.ln() - o).powi(2))
            .sum();
        residuals.push((count, r));
    }
    let &(count, _) = residuals
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .expect("non-empty");
    Ok(LoadEstimate { count, residuals })
}
