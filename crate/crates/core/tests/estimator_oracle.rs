//! MH MAP against exhaustive enumeration on small single-car problems.

use carcrowd::estimator::{estimate_car, MhSettings, PriorSpec};
use carcrowd::seed;
use carcrowd::simulator::sample_poisson;
use rand::Rng;
use rand_distr::StandardNormal;
use statrs::function::gamma::ln_gamma;

struct Instance {
    rates: Vec<f64>,
    sigma: f64,
    meas: Vec<f64>,
}

fn instance(trial: u64) -> Instance {
    let mut rng = seed::rng(0xA11CE, &[trial]);
    let m3 = trial % 2 == 1;
    let sigma = if (trial / 2).is_multiple_of(2) {
        1.0
    } else {
        5.0
    };
    let n = if m3 { 3 } else { 1 };
    let rates: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..=15.0)).collect();
    let b: Vec<f64> = rates
        .iter()
        .map(|&r| f64::from(sample_poisson(r, &mut rng)))
        .collect();
    // on-board after stations 1 and 2: b12 + b13, then b13 + b23
    let truth = if m3 {
        vec![b[0] + b[1], b[1] + b[2]]
    } else {
        vec![b[0]]
    };
    let meas = truth
        .iter()
        .map(|o| o + sigma * rng.sample::<f64, _>(StandardNormal))
        .collect();
    Instance { rates, sigma, meas }
}

fn log_post(inst: &Instance, b: &[u32]) -> f64 {
    let bf: Vec<f64> = b.iter().map(|&x| f64::from(x)).collect();
    let pred = if bf.len() == 3 {
        vec![bf[0] + bf[1], bf[1] + bf[2]]
    } else {
        vec![bf[0]]
    };
    let gauss: f64 = pred
        .iter()
        .zip(&inst.meas)
        .map(|(p, m)| -(m - p) * (m - p) / (2.0 * inst.sigma * inst.sigma))
        .sum();
    let prior: f64 = bf
        .iter()
        .zip(&inst.rates)
        .map(|(x, r)| x * r.ln() - r - ln_gamma(x + 1.0))
        .sum();
    gauss + prior
}

fn enumerate_map(inst: &Instance) -> Vec<u32> {
    let bounds: Vec<u32> = inst
        .rates
        .iter()
        .map(|r| (r + 10.0 * r.sqrt() + 10.0).ceil() as u32)
        .collect();
    let mut best = (f64::NEG_INFINITY, vec![]);
    let mut visit = |b: Vec<u32>| {
        let lp = log_post(inst, &b);
        if lp > best.0 {
            best = (lp, b);
        }
    };
    if bounds.len() == 1 {
        (0..=bounds[0]).for_each(|x| visit(vec![x]));
    } else {
        for x in 0..=bounds[0] {
            for y in 0..=bounds[1] {
                for z in 0..=bounds[2] {
                    visit(vec![x, y, z]);
                }
            }
        }
    }
    best.1
}

#[test]
fn mh_map_matches_enumeration() {
    let settings = MhSettings::default();
    let mut exact = 0;
    for trial in 0..100u64 {
        let inst = instance(trial);
        let oracle = enumerate_map(&inst);
        let prior = PriorSpec::new(inst.rates.clone()).unwrap();
        let target_station = if inst.rates.len() == 3 { 3 } else { 2 };
        let mut rng = seed::rng(0xB0B, &[trial]);
        let post = estimate_car(
            &prior,
            &inst.meas,
            inst.sigma,
            target_station,
            &settings,
            &mut rng,
        )
        .unwrap();
        let got = &post.best_state.entries;
        let off = got
            .iter()
            .zip(&oracle)
            .map(|(a, b)| a.abs_diff(*b))
            .max()
            .unwrap();
        assert!(off <= 1, "trial {trial}: {got:?} vs {oracle:?}");
        exact += usize::from(off == 0);
        assert!(
            (log_post(&inst, got) - post.best_log_posterior).abs()
                < 1e-6 * (1.0 + post.best_log_posterior.abs())
        );
    }
    assert!(exact >= 95, "{exact}/100 exact");
}
