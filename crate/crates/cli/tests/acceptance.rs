//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::Rng;
use rand_distr::StandardNormal;
use statrs::function::gamma::ln_gamma;
use tempfile::TempDir;

use carcrowd::config::Config;
use carcrowd::estimator::{estimate_car, Distortion, PriorSpec};
use carcrowd::harness::{
    run_experiment, sign_accuracy, ExperimentResult, ExperimentSpec, SigmaResult,
};
use carcrowd::seed;
use carcrowd::simulator::{run_scenario, sample_poisson};
use carcrowd::stats::{mean, variance};
use carcrowd::transit::build_a_matrix;
use carcrowd::vibration::{
    beam_mode_roots, carbody_accel_psd, two_dof_transfer, FrequencyGrid, ModalBasis,
    MultiDofParams, TrackModel, TwoDofParams,
};

const BIN: &str = env!("CARGO_BIN_EXE_carcrowd");
const DEFAULT_CONFIG: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/default.json");

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn timed(limit: Duration, f: impl FnOnce() -> Outcome) -> Outcome {
    let t = Instant::now();
    let mut o = f();
    let took = t.elapsed();
    o.detail = format!("{} [{:.2?}, limit {:?}]", o.detail, took, limit);
    o.pass &= took < limit;
    o
}

fn shipped() -> Config {
    Config::from_json(&std::fs::read_to_string(DEFAULT_CONFIG).unwrap()).unwrap()
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(lo).signum() == f(mid).signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn c1_beam_roots() -> Outcome {
    let roots = beam_mode_roots(3);
    let expected = [4.730041, 7.853205, 10.995608];
    let oracle: Vec<f64> = (1..=3)
        .map(|k| {
            let k = f64::from(k);
            bisect(
                |l: f64| l.cos() * l.cosh() - 1.0,
                k * std::f64::consts::PI,
                (k + 1.0) * std::f64::consts::PI,
            )
        })
        .collect();
    let err_ref = roots
        .iter()
        .zip(&expected)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let err_oracle = roots
        .iter()
        .zip(&oracle)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    outcome(
        err_ref < 1e-6 && err_oracle < 1e-6,
        format!(
            "roots {roots:.7?}, max err vs reference {err_ref:.1e}, vs bisection {err_oracle:.1e}"
        ),
    )
}

fn c2_dc_gain() -> Outcome {
    let mut sets = vec![TwoDofParams::default()];
    let mut rng = seed::rng(2, &[]);
    let mut pos = |lo: f64, hi: f64| 10f64.powf(rng.random_range(lo..hi));
    for _ in 0..20 {
        sets.push(TwoDofParams {
            carbody_mass: pos(3.0, 5.0),
            bogie_mass: pos(2.0, 4.0),
            secondary_stiffness: pos(4.0, 7.0),
            primary_stiffness: pos(4.0, 7.0),
            secondary_damping: pos(2.0, 7.0),
            primary_damping: pos(2.0, 7.0),
            mass_per_passenger: pos(1.0, 2.0),
        });
    }
    let worst = sets
        .iter()
        .map(|p| (two_dof_transfer(p, 0, 0.0).norm() - 1.0).abs())
        .fold(0.0, f64::max);
    outcome(
        worst <= 1e-12,
        format!(
            "{} parameter sets, max ||H(0)| - 1| = {worst:.1e}",
            sets.len()
        ),
    )
}

fn c3_load_sensitivity() -> Outcome {
    let p = shipped().two_dof;
    let mags: Vec<f64> = (0..=150)
        .step_by(10)
        .map(|c| two_dof_transfer(&p, c, 1.0).norm())
        .collect();
    let ok = mags.windows(2).all(|w| w[1] < w[0]);
    outcome(
        ok,
        format!(
            "|H(1 Hz)| from {:.6} (0 pax) to {:.6} (150 pax), strictly decreasing: {ok}",
            mags[0], mags[15]
        ),
    )
}

fn c4_spectral_structure() -> Outcome {
    let cfg = shipped();
    let p: MultiDofParams = cfg.multi_dof;
    let track: TrackModel = cfg.track_model();
    let x = p.carbody_length / 2.0;
    let grid = FrequencyGrid::default_psd();
    let mut notes = Vec::new();
    let mut ok = true;

    let empty = carbody_accel_psd(&p, &track, 0, x, &grid, true).unwrap();
    let maxima = empty.local_maxima();
    let rigid = maxima.iter().any(|f| (0.5..=2.0).contains(f));
    let flex = maxima.iter().any(|f| (7.0..=14.0).contains(f));
    ok &= rigid && flex;
    let in_bands: Vec<f64> = maxima
        .iter()
        .copied()
        .filter(|f| (0.5..=2.0).contains(f) || (7.0..=14.0).contains(f))
        .collect();
    notes.push(format!(
        "empty-car local maxima in the two bands {in_bands:.2?}"
    ));

    // closed form w3^2 = EI beta3^4 / rho for the empty car
    let beta3 = 4.730040744862704 / p.carbody_length;
    let rho = p.carbody_mass / p.carbody_length;
    let f3_closed =
        (p.bending_stiffness * beta3.powi(4) / rho).sqrt() / (2.0 * std::f64::consts::PI);
    let f3 = ModalBasis::new(&p, 0).unwrap().natural_frequencies[0] / (2.0 * std::f64::consts::PI);
    let rel = (f3 - f3_closed).abs() / f3_closed;
    let near_124 = (f3 - 12.4).abs() / 12.4 < 0.02;
    ok &= rel < 0.02 && near_124;
    notes.push(format!("f3 = {f3:.3} Hz (closed form {f3_closed:.3})"));

    let peaks: Vec<f64> = [0, 50, 100, 150]
        .iter()
        .map(|&c| {
            carbody_accel_psd(&p, &track, c, x, &grid, true)
                .unwrap()
                .peak_in(7.0, 14.0)
                .unwrap_or(f64::NAN)
        })
        .collect();
    let shifting = peaks.windows(2).all(|w| w[1] < w[0]);
    ok &= shifting;
    notes.push(format!("flexible peak at 0/50/100/150 pax: {peaks:.2?}"));
    outcome(ok, notes.join("; "))
}

fn c5_a_matrix() -> Outcome {
    let a = build_a_matrix(3, 3).unwrap().to_dense();
    outcome(a == vec![vec![1, 1, 0], vec![0, 1, 1]], format!("{a:?}"))
}

fn c6_flow_conservation() -> Outcome {
    let cfg = shipped();
    let line = cfg.line_config();
    let mut ok = true;
    let mut station1 = Vec::with_capacity(1000);
    for s in 0..1000u64 {
        let run = run_scenario(&line, &cfg.apc, s).unwrap();
        let boarded: u64 = run
            .trace
            .cars
            .iter()
            .flat_map(|c| &c.boarded)
            .map(|&b| u64::from(b))
            .sum();
        let alighted: u64 = run
            .trace
            .cars
            .iter()
            .flat_map(|c| &c.alighted)
            .map(|&b| u64::from(b))
            .sum();
        ok &= boarded == alighted;
        ok &= run
            .trace
            .cars
            .iter()
            .all(|c| *c.crowding.last().unwrap() == 0);
        station1.push(
            run.trace
                .cars
                .iter()
                .map(|c| f64::from(c.boarded[0]))
                .sum::<f64>(),
        );
    }
    let m = mean(&station1);
    let se = (variance(&station1) / 1000.0).sqrt();
    let mean_ok = (m - 270.0).abs() < 5.0 * se;
    outcome(
        ok && mean_ok,
        format!(
            "1000 runs balanced: {ok}; station-1 boarders mean {m:.2} (se {se:.2}, target 270)"
        ),
    )
}

fn c7_estimator_oracle() -> Outcome {
    let settings = shipped().mcmc.settings();
    let (mut exact, mut near, mut far) = (0, 0, 0);
    for trial in 0..100u64 {
        let mut rng = seed::rng(0x0AC1E, &[trial]);
        let three = trial % 2 == 1;
        let sigma = if trial % 4 < 2 { 1.0 } else { 5.0 };
        let n = if three { 3 } else { 1 };
        let rates: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..=15.0)).collect();
        let b: Vec<f64> = rates
            .iter()
            .map(|&r| f64::from(sample_poisson(r, &mut rng)))
            .collect();
        let o = if three {
            vec![b[0] + b[1], b[1] + b[2]]
        } else {
            vec![b[0]]
        };
        let meas: Vec<f64> = o
            .iter()
            .map(|v| v + sigma * rng.sample::<f64, _>(StandardNormal))
            .collect();

        let lp = |x: &[f64]| {
            let pred = if three {
                vec![x[0] + x[1], x[1] + x[2]]
            } else {
                vec![x[0]]
            };
            pred.iter()
                .zip(&meas)
                .map(|(p, m)| -(m - p).powi(2) / (2.0 * sigma * sigma))
                .sum::<f64>()
                + x.iter()
                    .zip(&rates)
                    .map(|(v, r)| v * r.ln() - r - ln_gamma(v + 1.0))
                    .sum::<f64>()
        };
        let bound = |r: f64| (r + 10.0 * r.sqrt() + 10.0).ceil() as u32;
        let mut best = (f64::NEG_INFINITY, vec![]);
        let mut consider = |x: Vec<u32>| {
            let v = lp(&x.iter().map(|&u| f64::from(u)).collect::<Vec<_>>());
            if v > best.0 {
                best = (v, x);
            }
        };
        if three {
            for i in 0..=bound(rates[0]) {
                for j in 0..=bound(rates[1]) {
                    for k in 0..=bound(rates[2]) {
                        consider(vec![i, j, k]);
                    }
                }
            }
        } else {
            (0..=bound(rates[0])).for_each(|i| consider(vec![i]));
        }

        let prior = PriorSpec::new(rates).unwrap();
        let post = estimate_car(
            &prior,
            &meas,
            sigma,
            if three { 3 } else { 2 },
            &settings,
            &mut seed::rng(0x0AC1E, &[trial, 1]),
        )
        .unwrap();
        let off = post
            .best_state
            .entries
            .iter()
            .zip(&best.1)
            .map(|(a, b)| a.abs_diff(*b))
            .max()
            .unwrap();
        match off {
            0 => exact += 1,
            1 => near += 1,
            _ => far += 1,
        }
    }
    outcome(
        exact >= 95 && far == 0,
        format!("exact {exact}/100, off by one {near}, further {far}"),
    )
}

fn acc(r: &SigmaResult, t: f64) -> (f64, usize) {
    let n = r
        .pairwise
        .iter()
        .filter(|p| p.true_diff.abs() as f64 >= t)
        .count();
    (sign_accuracy(&r.pairwise, t).unwrap_or(f64::NAN), n)
}

fn binom_se(p: f64, n: usize) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

fn experiment(distortion: Distortion, sigmas: Vec<f64>) -> ExperimentResult {
    let cfg = shipped();
    let spec = ExperimentSpec {
        n_runs: 300,
        sigmas,
        distortion,
        ..cfg.experiment(cfg.mcmc.seed.unwrap())
    };
    run_experiment(&spec).unwrap()
}

fn c8_sigma5(base: &ExperimentResult, took: Duration) -> Outcome {
    let (a, n) = acc(base.sigma(5.0).unwrap(), 25.0);
    let ok = a >= 0.90 && took < Duration::from_secs(15 * 60);
    outcome(ok, format!("sigma 5, threshold 25: accuracy {a:.4} over {n} records (bound 0.90) [{took:.2?} for sigma 5/10/15]"))
}

fn c9_sigma15(base: &ExperimentResult) -> Outcome {
    let (a30, n30) = acc(base.sigma(15.0).unwrap(), 30.0);
    let (a15, _) = acc(base.sigma(15.0).unwrap(), 25.0);
    let (a5, _) = acc(base.sigma(5.0).unwrap(), 25.0);
    let ok = a30 >= 0.85 && a15 <= a5;
    let strict = if a15 < a5 { "strictly lower" } else { "tied" };
    outcome(
        ok,
        format!("sigma 15, threshold 30: {a30:.4} over {n30} (bound 0.85); threshold 25: sigma 15 {a15:.5} vs sigma 5 {a5:.5} ({strict})"),
    )
}

fn c10_prior_mismatch(base: &ExperimentResult) -> Outcome {
    let none = acc(base.sigma(10.0).unwrap(), 25.0);
    let moderate = acc(
        experiment(Distortion::Moderate, vec![10.0])
            .sigma(10.0)
            .unwrap(),
        25.0,
    );
    let severe = acc(
        experiment(Distortion::Severe, vec![10.0])
            .sigma(10.0)
            .unwrap(),
        25.0,
    );
    let holds = |hi: (f64, usize), lo: (f64, usize)| {
        let se = (binom_se(hi.0, hi.1).powi(2) + binom_se(lo.0, lo.1).powi(2)).sqrt();
        hi.0 >= lo.0 - 2.0 * se
    };
    let ok = holds(none, moderate) && holds(moderate, severe);
    outcome(
        ok,
        format!(
            "sigma 10, threshold 25: none {:.4}, moderate {:.4}, severe {:.4}",
            none.0, moderate.0, severe.0
        ),
    )
}

fn station_gap(r: &SigmaResult) -> (f64, f64, f64, f64) {
    let errs = |s: usize| -> BTreeMap<(usize, usize), f64> {
        r.cars
            .iter()
            .filter(|c| c.station == s)
            .map(|c| ((c.run, c.car), c.abs_error()))
            .collect()
    };
    let (e2, e4) = (errs(2), errs(4));
    let d: Vec<f64> = e4.iter().map(|(key, v)| v - e2[key]).collect();
    let e2v: Vec<f64> = e2.values().copied().collect();
    let e4v: Vec<f64> = e4.values().copied().collect();
    (
        mean(&e2v),
        mean(&e4v),
        mean(&d),
        (variance(&d) / d.len() as f64).sqrt(),
    )
}

fn pairwise_gap(r: &SigmaResult) -> (f64, f64) {
    let errs = |s: usize| -> BTreeMap<(usize, usize, usize), f64> {
        r.pairwise
            .iter()
            .filter(|p| p.station == s)
            .map(|p| {
                (
                    (p.run, p.k, p.kprime),
                    (p.pred_diff - p.true_diff as f64).abs(),
                )
            })
            .collect()
    };
    let (e2, e4) = (errs(2), errs(4));
    let d: Vec<f64> = e4.iter().map(|(key, v)| v - e2[key]).collect();
    (mean(&d), (variance(&d) / d.len() as f64).sqrt())
}

fn c11_station_information(base: &ExperimentResult) -> Outcome {
    let (m2, m4, d, se) = station_gap(base.sigma(5.0).unwrap());
    let (pd, pse) = pairwise_gap(base.sigma(5.0).unwrap());
    let ok = d <= 2.0 * se && pd <= 2.0 * pse;
    let others: Vec<String> = [10.0, 15.0]
        .iter()
        .map(|&s| {
            let (a, b, _, _) = station_gap(base.sigma(s).unwrap());
            format!("sigma {s}: {b:.3} vs {a:.3}")
        })
        .collect();
    outcome(
        ok,
        format!(
            "sigma 5: mean |crowding error| station 4 {m4:.3} vs station 2 {m2:.3}, paired diff {d:.3} (2 se {:.3}); pairwise-difference error gap {pd:.3} (2 se {:.3}); for reference {}",
            2.0 * se,
            2.0 * pse,
            others.join(", ")
        ),
    )
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().display().to_string();
                out.insert(rel, std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn c12_determinism() -> Outcome {
    let tmp = TempDir::new().unwrap();
    let observed = tmp.path().join("observed.csv");
    let seeded = |extra: &[&str]| -> Vec<String> {
        let mut v: Vec<String> = ["--config", DEFAULT_CONFIG, "--seed", "42"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        v.extend(extra.iter().map(|s| s.to_string()));
        v
    };
    let cases: Vec<(&str, Vec<String>)> = vec![
        ("modes", seeded(&["--counts", "0,150"])),
        ("tf2", seeded(&["--counts", "0,50,100,150"])),
        ("psd", seeded(&["--counts", "0,60"])),
        ("track", seeded(&[])),
        ("simulate", seeded(&[])),
        (
            "estimate",
            seeded(&["--sigma", "10", "--distortion", "moderate"]),
        ),
        ("mc", seeded(&["--runs", "10"])),
        (
            "estimate-load",
            seeded(&[
                "--observed",
                observed.to_str().unwrap(),
                "--counts",
                "0,30,60,90",
            ]),
        ),
    ];
    let mut failures = Vec::new();
    for (cmd, args) in &cases {
        if *cmd == "estimate-load" {
            std::fs::copy(tmp.path().join("psd/run0/psd_60.csv"), &observed).unwrap();
        }
        let mut snaps = Vec::new();
        for attempt in 0..2 {
            let out = tmp.path().join(cmd).join(format!("run{attempt}"));
            let status = Command::new(BIN)
                .arg(cmd)
                .args(args)
                .arg("--out")
                .arg(&out)
                .output()
                .unwrap();
            if !status.status.success() {
                failures.push(format!(
                    "{cmd} exited with {}: {}",
                    status.status,
                    String::from_utf8_lossy(&status.stderr)
                ));
            }
            snaps.push(snapshot(&out));
        }
        if snaps[0].is_empty() || snaps[0] != snaps[1] {
            failures.push(format!("{cmd} outputs differ"));
        }
    }
    let ok = failures.is_empty();
    outcome(
        ok,
        if ok {
            format!("{} subcommands, byte-identical reruns", cases.len())
        } else {
            failures.join("; ")
        },
    )
}

fn main() {
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    let mut report = |n: u32, name: &'static str, o: Outcome| {
        println!(
            "criterion {n:>2} {name}: {} : {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
        results.push((n, name, o));
    };
    report(
        1,
        "beam roots",
        timed(Duration::from_secs(1), c1_beam_roots),
    );
    report(2, "2-DOF DC gain", c2_dc_gain());
    report(
        3,
        "2-DOF load sensitivity",
        timed(Duration::from_secs(1), c3_load_sensitivity),
    );
    report(
        4,
        "multi-DOF spectral structure",
        timed(Duration::from_secs(30), c4_spectral_structure),
    );
    report(5, "A-matrix", c5_a_matrix());
    report(
        6,
        "flow conservation",
        timed(Duration::from_secs(60), c6_flow_conservation),
    );
    report(
        7,
        "estimator oracle",
        timed(Duration::from_secs(120), c7_estimator_oracle),
    );

    let t = Instant::now();
    let base = experiment(Distortion::None, vec![5.0, 10.0, 15.0]);
    let took = t.elapsed();
    report(8, "sign accuracy, sigma 5", c8_sigma5(&base, took));
    report(9, "sign accuracy, sigma 15", c9_sigma15(&base));
    report(10, "prior mismatch", c10_prior_mismatch(&base));
    report(11, "station information", c11_station_information(&base));
    report(12, "CLI determinism", c12_determinism());

    let failed: Vec<u32> = results.iter().filter(|r| !r.2.pass).map(|r| r.0).collect();
    println!(
        "acceptance: {} of {} criteria passed{}",
        results.len() - failed.len(),
        results.len(),
        if failed.is_empty() {
            String::new()
        } else {
            format!("; failed {failed:?}")
        }
    );
    if !failed.is_empty() {
        std::process::exit(1);
    }
}
