use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};

/// Vertical track irregularity model with a two-cutoff PSD and the speed at
/// which the vehicle traverses it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackModel {
    /// `A_v`, m^2 rad/m
    pub excitation_intensity: f64,
    /// `Omega_c`, rad/m
    pub cutoff_c: f64,
    /// `Omega_r`, rad/m
    pub cutoff_r: f64,
    /// `V`, m/s
    pub speed: f64,
}

impl Default for TrackModel {
    fn default() -> Self {
        Self {
            excitation_intensity: 1.080e-6,
            cutoff_c: 0.8246 * 2.0 * PI,
            cutoff_r: 0.0206 * 2.0 * PI,
            speed: 50.0 / 3.6,
        }
    }
}

impl TrackModel {
    pub fn validate(&self) -> Result<()> {
        ensure_positive("track.excitation_intensity", self.excitation_intensity)?;
        ensure_positive("track.cutoff_c", self.cutoff_c)?;
        ensure_positive("track.cutoff_r", self.cutoff_r)?;
        ensure_positive("track.speed", self.speed)?;
        if self.cutoff_r >= self.cutoff_c {
            return Err(Error::invalid("track.cutoff_r", "must be below cutoff_c"));
        }
        Ok(())
    }
}

/// Track irregularity PSD at `f` Hz:
/// `A_v Oc^2 V^3 / (w^4 + (Or^2 + Oc^2) V^2 w^2 + Or^2 Oc^2 V^4)`, `w = 2 pi f`.
pub fn track_psd(track: &TrackModel, f: f64) -> f64 {
    let w2 = (2.0 * PI * f).powi(2);
    let v2 = track.speed * track.speed;
    let oc2 = track.cutoff_c * track.cutoff_c;
    let or2 = track.cutoff_r * track.cutoff_r;
    track.excitation_intensity * oc2 * v2 * track.speed
        / (w2 * w2 + (or2 + oc2) * v2 * w2 + or2 * oc2 * v2 * v2)
}
