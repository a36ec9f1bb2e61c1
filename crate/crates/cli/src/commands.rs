use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, ensure, Context, Result};
use serde::Serialize;

use carcrowd::config::Config;
use carcrowd::estimator::{distort_prior_with, estimate_at_station, Distortion, PriorSpec};
use carcrowd::harness::run_experiment;
use carcrowd::seed::{self, stream};
use carcrowd::simulator::{run_scenario, ApcModel};
use carcrowd::vibration::spectrum::complex_to_csv;
use carcrowd::vibration::{
    carbody_accel_psd, estimate_passenger_count, track_psd, two_dof_transfer, FrequencyGrid,
    ModalBasis, Spectrum,
};

use crate::manifest::{sha256_hex, RunManifest};
use crate::Common;

/// Loaded config plus everything the manifest needs to know about it.
struct Session {
    cfg: Config,
    source: String,
    hash: String,
    seed: Option<u64>,
    out: PathBuf,
    outputs: Vec<String>,
}

impl Session {
    fn open(common: &Common) -> Result<Self> {
        let (cfg, source, hash) = match &common.config {
            Some(path) => {
                let bytes = fs::read(path)
                    .with_context(|| format!("reading config file {}", path.display()))?;
                let text = std::str::from_utf8(&bytes)
                    .with_context(|| format!("config file {} is not UTF-8", path.display()))?;
                let cfg = Config::from_json(text)
                    .with_context(|| format!("in config file {}", path.display()))?;
                (cfg, path.display().to_string(), sha256_hex(&bytes))
            }
            None => {
                let cfg = Config::default();
                let hash = sha256_hex(cfg.to_json().as_bytes());
                (cfg, "builtin".to_owned(), hash)
            }
        };
        let seed = common.seed.or(cfg.mcmc.seed);
        fs::create_dir_all(&common.out)
            .with_context(|| format!("creating {}", common.out.display()))?;
        Ok(Self {
            cfg,
            source,
            hash,
            seed,
            out: common.out.clone(),
            outputs: Vec::new(),
        })
    }

    fn require_seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| anyhow!("no seed: pass --seed or set mcmc.seed in the config"))
    }

    fn write(&mut self, rel: &str, contents: &str) -> Result<()> {
        let path = self.out.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        }
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.outputs.push(rel.to_owned());
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, rel: &str, value: &T) -> Result<()> {
        let text = serde_json::to_string_pretty(value)? + "\n";
        self.write(rel, &text)
    }

    fn finish(self, subcommand: &str, seed_used: Option<u64>) -> Result<()> {
        RunManifest {
            subcommand: subcommand.to_owned(),
            version: env!("CARGO_PKG_VERSION"),
            config_source: self.source,
            config_sha256: self.hash,
            seed: seed_used,
            outputs: self.outputs,
        }
        .write(&self.out)
    }
}

fn ensure_counts(counts: &[u32]) -> Result<()> {
    ensure!(
        !counts.is_empty(),
        "--counts must list at least one passenger count"
    );
    Ok(())
}

pub fn modes(common: &Common, counts: &[u32]) -> Result<()> {
    ensure_counts(counts)?;
    let mut s = Session::open(common)?;
    let mut csv = String::from("passengers,mode,lambda,beta_per_m,frequency_hz,damping_ratio\n");
    for &count in counts {
        let basis = ModalBasis::new(&s.cfg.multi_dof, count)?;
        for i in 0..basis.n_flexible() {
            writeln!(
                csv,
                "{},{},{},{},{},{}",
                count,
                i + 3,
                basis.roots[i],
                basis.wavenumbers[i],
                basis.natural_frequencies[i] / (2.0 * std::f64::consts::PI),
                basis.damping_ratios[i]
            )?;
        }
    }
    s.write("modes.csv", &csv)?;
    s.finish("modes", None)
}

pub fn tf2(common: &Common, counts: &[u32]) -> Result<()> {
    ensure_counts(counts)?;
    let mut s = Session::open(common)?;
    let freqs: Vec<f64> = (0..=1000).map(|i| f64::from(i) * 0.01).collect();
    let responses: Vec<Vec<_>> = counts
        .iter()
        .map(|&c| {
            freqs
                .iter()
                .map(|&f| two_dof_transfer(&s.cfg.two_dof, c, f))
                .collect()
        })
        .collect();
    let mut csv = String::from("frequency_hz");
    for c in counts {
        write!(csv, ",count_{c}")?;
    }
    csv.push('\n');
    for (i, f) in freqs.iter().enumerate() {
        write!(csv, "{f}")?;
        for r in &responses {
            write!(csv, ",{}", r[i].norm())?;
        }
        csv.push('\n');
    }
    s.write("tf2.csv", &csv)?;
    for (c, r) in counts.iter().zip(&responses) {
        s.write(&format!("tf2_complex_{c}.csv"), &complex_to_csv(&freqs, r))?;
    }
    s.finish("tf2", None)
}

fn location_or_mid(cfg: &Config, location: Option<f64>) -> f64 {
    location.unwrap_or(cfg.multi_dof.carbody_length / 2.0)
}

pub fn psd(common: &Common, counts: &[u32], location: Option<f64>) -> Result<()> {
    ensure_counts(counts)?;
    let mut s = Session::open(common)?;
    let x = location_or_mid(&s.cfg, location);
    let track = s.cfg.track_model();
    let grid = FrequencyGrid::default_psd();
    let mut peaks = String::from("passengers,rigid_peak_hz,flexible_peak_hz\n");
    for &c in counts {
        let spec = carbody_accel_psd(&s.cfg.multi_dof, &track, c, x, &grid, true)?;
        let fmt = |p: Option<f64>| p.map_or(String::new(), |v| v.to_string());
        writeln!(
            peaks,
            "{},{},{}",
            c,
            fmt(spec.peak_in(0.5, 2.0)),
            fmt(spec.peak_in(7.0, 14.0))
        )?;
        s.write(&format!("psd_{c}.csv"), &spec.to_csv())?;
    }
    s.write("psd_peaks.csv", &peaks)?;
    s.finish("psd", None)
}

pub fn track(common: &Common) -> Result<()> {
    let mut s = Session::open(common)?;
    let model = s.cfg.track_model();
    let grid = FrequencyGrid::default_psd();
    let spec = Spectrum {
        frequencies: grid.frequencies().to_vec(),
        values: grid
            .frequencies()
            .iter()
            .map(|&f| track_psd(&model, f))
            .collect(),
    };
    s.write("track_psd.csv", &spec.to_csv())?;
    s.finish("track", None)
}

fn apc_with(cfg: &Config, sigma: Option<f64>) -> ApcModel {
    ApcModel {
        noise_sigma: sigma.unwrap_or(cfg.apc.noise_sigma),
        ..cfg.apc
    }
}

pub fn simulate(common: &Common, sigma: Option<f64>) -> Result<()> {
    let mut s = Session::open(common)?;
    let seed = s.require_seed()?;
    let run = run_scenario(&s.cfg.line_config(), &apc_with(&s.cfg, sigma), seed)?;
    s.write("simulation.csv", &run.to_csv())?;
    s.finish("simulate", Some(seed))
}

/// Readings and true crowding recovered from a `simulate` CSV.
struct Observed {
    measurements: Vec<Vec<f64>>,
    crowding: Vec<Vec<u32>>,
}

fn read_simulation(path: &Path, n_cars: usize, n_stations: usize) -> Result<Observed> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading simulation file {}", path.display()))?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    ensure!(
        header.trim() == "car,station,boarded,alighted,onboard,crowding,apc_measurement",
        "{}: unexpected header {header:?}",
        path.display()
    );
    let mut measurements = vec![vec![f64::NAN; n_stations - 1]; n_cars];
    let mut crowding = vec![vec![u32::MAX; n_stations]; n_cars];
    for (ln, line) in lines.enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let at = || format!("{} line {}", path.display(), ln + 2);
        let f: Vec<&str> = line.split(',').collect();
        ensure!(f.len() == 7, "{}: expected 7 columns", at());
        let car: usize = f[0].parse().with_context(at)?;
        let station: usize = f[1].parse().with_context(at)?;
        ensure!(
            (1..=n_cars).contains(&car) && (1..=n_stations).contains(&station),
            "{}: car {car} / station {station} outside the configured line",
            at()
        );
        crowding[car - 1][station - 1] = f[5].parse().with_context(at)?;
        if station >= 2 {
            measurements[car - 1][station - 2] = f[6].parse().with_context(at)?;
        }
    }
    ensure!(
        measurements.iter().flatten().all(|m| !m.is_nan())
            && crowding.iter().flatten().all(|&c| c != u32::MAX),
        "{}: missing rows for the configured {n_cars} cars x {n_stations} stations",
        path.display()
    );
    Ok(Observed {
        measurements,
        crowding,
    })
}

#[derive(Serialize)]
struct CarPosteriorJson {
    car: usize,
    station: usize,
    acceptance_rate: f64,
    best_log_posterior: f64,
    omega_map: u32,
    map_entries: Vec<u32>,
}

pub fn estimate(
    common: &Common,
    sigma: Option<f64>,
    distortion: Option<Distortion>,
    input: Option<&Path>,
) -> Result<()> {
    let mut s = Session::open(common)?;
    let seed = s.require_seed()?;
    let line = s.cfg.line_config();
    let apc = apc_with(&s.cfg, sigma);
    apc.validate()?;
    let observed = match input {
        Some(path) => read_simulation(path, line.n_cars, line.n_stations)?,
        None => {
            let run = run_scenario(&line, &apc, seed)?;
            Observed {
                measurements: run.measurements,
                crowding: run.trace.cars.into_iter().map(|c| c.crowding).collect(),
            }
        }
    };
    let distortion = distortion.unwrap_or(s.cfg.montecarlo.distortion);
    let log_sd = distortion.log_sd_with(&s.cfg.montecarlo.distortion_log_sd);
    let priors: Vec<PriorSpec> = PriorSpec::from_line(&line)?
        .iter()
        .enumerate()
        .map(|(k, p)| {
            distort_prior_with(
                p,
                log_sd,
                &mut seed::rng(seed, &[stream::DISTORTION, k as u64]),
            )
        })
        .collect::<carcrowd::Result<_>>()?;

    let mut csv = String::from("car,station,omega_hat,omega_lo,omega_hi,omega_true\n");
    let mut summary = Vec::new();
    let mut rows = Vec::new();
    for j in 1..line.n_stations {
        let post = estimate_at_station(
            &priors,
            &observed.measurements,
            j,
            apc.noise_sigma,
            &s.cfg.mcmc.settings(),
            seed,
        )?;
        for (k, p) in post.into_iter().enumerate() {
            rows.push((
                k + 1,
                j + 1,
                p.omega_hat,
                p.omega_lo,
                p.omega_hi,
                observed.crowding[k][j],
            ));
            summary.push(CarPosteriorJson {
                car: k + 1,
                station: j + 1,
                acceptance_rate: p.acceptance_rate,
                best_log_posterior: p.best_log_posterior,
                omega_map: p.omega_map,
                map_entries: p.best_state.entries,
            });
        }
    }
    rows.sort_by_key(|r| (r.0, r.1));
    summary.sort_by_key(|r| (r.car, r.station));
    for (car, st, hat, lo, hi, truth) in rows {
        writeln!(csv, "{car},{st},{hat},{lo},{hi},{truth}")?;
    }
    s.write("posterior.csv", &csv)?;
    s.write_json("posterior.json", &summary)?;
    s.finish("estimate", Some(seed))
}

pub fn mc(
    common: &Common,
    sigma: Option<Vec<f64>>,
    runs: Option<usize>,
    distortion: Option<Distortion>,
) -> Result<()> {
    let mut s = Session::open(common)?;
    let seed = s.require_seed()?;
    let mut spec = s.cfg.experiment(seed);
    if let Some(sig) = sigma {
        spec.sigmas = sig;
    }
    if let Some(n) = runs {
        spec.n_runs = n;
    }
    if let Some(d) = distortion {
        spec.distortion = d;
    }
    let result = run_experiment(&spec)?;
    let single = result.per_sigma.len() == 1;
    for r in &result.per_sigma {
        let dir = if single {
            String::new()
        } else {
            format!("sigma_{}/", r.sigma)
        };
        s.write(&format!("{dir}pairwise.csv"), &r.pairwise_csv())?;
        s.write(&format!("{dir}box_summary.csv"), &r.box_summary_csv())?;
        s.write(&format!("{dir}predictions.csv"), &r.predictions_csv())?;
    }
    s.write("metrics.json", &(result.metrics_json() + "\n"))?;
    s.finish("mc", Some(seed))
}

pub fn estimate_load(
    common: &Common,
    observed: &Path,
    counts: Option<Vec<u32>>,
    location: Option<f64>,
) -> Result<()> {
    let mut s = Session::open(common)?;
    let text = fs::read_to_string(observed)
        .with_context(|| format!("reading observed PSD {}", observed.display()))?;
    let spectrum =
        Spectrum::from_csv(&text).with_context(|| format!("parsing {}", observed.display()))?;
    let counts = counts.unwrap_or_else(|| (0..=150).step_by(5).collect());
    ensure_counts(&counts)?;
    let x = location_or_mid(&s.cfg, location);
    let est = estimate_passenger_count(
        &spectrum,
        &s.cfg.multi_dof,
        &s.cfg.track_model(),
        x,
        &counts,
        true,
    )?;
    if est.residuals.is_empty() {
        bail!("no candidate counts evaluated");
    }
    #[derive(Serialize)]
    struct Residual {
        count: u32,
        residual: f64,
    }
    #[derive(Serialize)]
    struct LoadJson {
        count: u32,
        location_m: f64,
        residuals: Vec<Residual>,
    }
    s.write_json(
        "load_estimate.json",
        &LoadJson {
            count: est.count,
            location_m: x,
            residuals: est
                .residuals
                .iter()
                .map(|&(count, residual)| Residual { count, residual })
                .collect(),
        },
    )?;
    s.finish("estimate-load", None)
}
