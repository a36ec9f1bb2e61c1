use carcrowd::harness::{run_experiment, ExperimentSpec};
use carcrowd::transit::LineConfig;

fn spec(n_runs: usize) -> ExperimentSpec {
    ExperimentSpec {
        n_runs,
        ..ExperimentSpec::new(LineConfig::five_station_default(), 31)
    }
}

#[test]
fn sign_accuracy_does_not_drop_with_threshold() {
    let out = run_experiment(&spec(60)).unwrap();
    for res in &out.per_sigma {
        let accs: Vec<(f64, usize)> = res
            .metrics
            .sign_accuracy
            .iter()
            .map(|a| (a.accuracy.unwrap(), a.n))
            .collect();
        assert_eq!(accs.len(), 9);
        for w in accs.windows(2) {
            let ((lo_acc, lo_n), (hi_acc, _)) = (w[0], w[1]);
            let se = (lo_acc * (1.0 - lo_acc) / lo_n as f64).sqrt();
            assert!(hi_acc >= lo_acc - 2.0 * se, "sigma {}: {accs:?}", res.sigma);
        }
    }
}

#[test]
fn intervals_cover_at_least_eighty_percent() {
    let out = run_experiment(&ExperimentSpec {
        sigmas: vec![10.0],
        ..spec(300)
    })
    .unwrap();
    let m = &out.per_sigma[0].metrics;
    assert!(m.interval_coverage >= 0.8, "{}", m.interval_coverage);
    assert!((0.0..=1.0).contains(&m.mean_acceptance_rate));
}

#[test]
fn outputs_are_reproducible() {
    let a = run_experiment(&spec(4)).unwrap();
    let b = run_experiment(&spec(4)).unwrap();
    for (x, y) in a.per_sigma.iter().zip(&b.per_sigma) {
        assert_eq!(x.pairwise_csv(), y.pairwise_csv());
        assert_eq!(x.box_summary_csv(), y.box_summary_csv());
        assert_eq!(x.predictions_csv(), y.predictions_csv());
    }
    assert_eq!(a.metrics_json(), b.metrics_json());
    let c = run_experiment(&ExperimentSpec {
        master_seed: 32,
        ..spec(4)
    })
    .unwrap();
    assert_ne!(a.per_sigma[0].pairwise_csv(), c.per_sigma[0].pairwise_csv());
}

#[test]
fn every_ordered_pair_is_recorded() {
    let out = run_experiment(&spec(2)).unwrap();
    // 2 runs x stations 2..4 x 6*5 ordered pairs
    assert_eq!(out.per_sigma[0].pairwise.len(), 2 * 3 * 30);
}
