//! JSON configuration file: model parameters, line description, counter noise,
//! sampler settings and Monte Carlo settings. Every section is optional and
//! falls back to the built-in five-station scenario.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{Distortion, DistortionScales, MhSettings};
use crate::harness::{default_thresholds, ExperimentSpec};
use crate::simulator::ApcModel;
use crate::transit::{LineConfig, StationLayout};
use crate::vibration::{MultiDofParams, TrackModel, TwoDofParams};

/// Track section in the units the parameters are usually quoted in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackSection {
    /// m^2 rad/m
    pub excitation_intensity: f64,
    pub cutoff_c_cycles_per_m: f64,
    pub cutoff_r_cycles_per_m: f64,
    pub speed_kmh: f64,
}

impl Default for TrackSection {
    fn default() -> Self {
        TrackSection::from(&TrackModel::default())
    }
}

impl From<&TrackModel> for TrackSection {
    fn from(t: &TrackModel) -> Self {
        Self {
            excitation_intensity: t.excitation_intensity,
            cutoff_c_cycles_per_m: t.cutoff_c / (2.0 * PI),
            cutoff_r_cycles_per_m: t.cutoff_r / (2.0 * PI),
            speed_kmh: t.speed * 3.6,
        }
    }
}

impl TrackSection {
    pub fn to_model(&self) -> TrackModel {
        TrackModel {
            excitation_intensity: self.excitation_intensity,
            cutoff_c: self.cutoff_c_cycles_per_m * 2.0 * PI,
            cutoff_r: self.cutoff_r_cycles_per_m * 2.0 * PI,
            speed: self.speed_kmh / 3.6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationSection {
    pub access: Vec<usize>,
    #[serde(default)]
    pub exits: Vec<usize>,
    pub xi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub n_cars: usize,
    pub stations: Vec<StationSection>,
    pub arrival_rates: Vec<f64>,
    pub headways: Vec<f64>,
    pub odm_probs: Vec<Vec<f64>>,
    pub committed_prob: f64,
}

impl LineSection {
    pub fn to_line(&self) -> LineConfig {
        LineConfig {
            n_stations: self.stations.len(),
            n_cars: self.n_cars,
            layouts: self
                .stations
                .iter()
                .map(|s| StationLayout {
                    n_positions: self.n_cars,
                    access_points: s.access.clone(),
                    exit_points: s.exits.clone(),
                    decay: s.xi,
                })
                .collect(),
            arrival_rates: self.arrival_rates.clone(),
            headways: self.headways.clone(),
            odm_probs: self.odm_probs.clone(),
            committed_prob: self.committed_prob,
        }
    }

    pub fn from_line(line: &LineConfig, note: Option<String>) -> Self {
        Self {
            note,
            n_cars: line.n_cars,
            stations: line
                .layouts
                .iter()
                .map(|l| StationSection {
                    access: l.access_points.clone(),
                    exits: l.exit_points.clone(),
                    xi: l.decay,
                })
                .collect(),
            arrival_rates: line.arrival_rates.clone(),
            headways: line.headways.clone(),
            odm_probs: line.odm_probs.clone(),
            committed_prob: line.committed_prob,
        }
    }
}

pub const DEFAULT_LINE_NOTE: &str =
    "Platform layouts are made up, except that station 4 exits sit at positions 2 and 4.";

impl Default for LineSection {
    fn default() -> Self {
        Self::from_line(
            &LineConfig::five_station_default(),
            Some(DEFAULT_LINE_NOTE.to_owned()),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McmcSection {
    pub iterations: usize,
    pub burn_in: usize,
    pub thin: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl Default for McmcSection {
    fn default() -> Self {
        let d = MhSettings::default();
        Self {
            iterations: d.iterations,
            burn_in: d.burn_in,
            thin: d.thin,
            seed: None,
        }
    }
}

impl McmcSection {
    pub fn settings(&self) -> MhSettings {
        MhSettings {
            iterations: self.iterations,
            burn_in: self.burn_in,
            thin: self.thin,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloSection {
    pub n_runs: usize,
    pub sigmas: Vec<f64>,
    #[serde(default)]
    pub distortion: Distortion,
    #[serde(default)]
    pub distortion_log_sd: DistortionScales,
    #[serde(default = "default_thresholds")]
    pub thresholds: Vec<f64>,
    #[serde(default = "yes")]
    pub parallel: bool,
}

fn yes() -> bool {
    true
}

impl Default for MonteCarloSection {
    fn default() -> Self {
        Self {
            n_runs: 300,
            sigmas: vec![5.0, 10.0, 15.0],
            distortion: Distortion::None,
            distortion_log_sd: DistortionScales::default(),
            thresholds: default_thresholds(),
            parallel: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Config {
    pub two_dof: TwoDofParams,
    pub multi_dof: MultiDofParams,
    pub track: TrackSection,
    pub line: LineSection,
    pub apc: ApcModel,
    pub mcmc: McmcSection,
    pub montecarlo: MonteCarloSection,
}

impl Config {
    /// Parses and validates. Errors carry the JSON path of the offending field.
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: Config = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            Error::invalid(
                if path == "." {
                    "config".to_owned()
                } else {
                    path
                },
                e.into_inner().to_string(),
            )
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.two_dof.validate()?;
        self.multi_dof.validate()?;
        self.track.to_model().validate()?;
        self.line.to_line().validate()?;
        self.apc.validate()?;
        self.mcmc.settings().validate()?;
        self.montecarlo.distortion_log_sd.validate()
    }

    pub fn track_model(&self) -> TrackModel {
        self.track.to_model()
    }

    pub fn line_config(&self) -> LineConfig {
        self.line.to_line()
    }

    /// Monte Carlo spec seeded with `seed`.
    pub fn experiment(&self, seed: u64) -> ExperimentSpec {
        let mc = &self.montecarlo;
        ExperimentSpec {
            n_runs: mc.n_runs,
            sigmas: mc.sigmas.clone(),
            apc_bias: self.apc.bias,
            distortion: mc.distortion,
            distortion_scales: mc.distortion_log_sd,
            line: self.line_config(),
            mcmc: self.mcmc.settings(),
            master_seed: seed,
            thresholds: mc.thresholds.clone(),
            parallel: mc.parallel,
        }
    }
}
