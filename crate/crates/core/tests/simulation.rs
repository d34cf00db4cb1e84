use rpm::generator;
use rpm::sim::{self, SimConfig};

fn within(est: f64, want: f64, stderr: f64) -> bool {
    (est - want).abs() <= 3.0 * stderr
}

#[test]
fn mean_rates_at_width_four() {
    let s = sim::run_trajectory(4, 1e5, 11).unwrap();
    let e = sim::estimate_cumulants(&[s]).unwrap();
    assert_eq!(e.tiles.batches, 100);
    assert!(within(e.tiles.c1, 2.4, e.tiles.stderr1), "{:?}", e.tiles);
    assert!(within(e.global.c1, 0.2, e.global.stderr1), "{:?}", e.global);
}

#[test]
fn global_rate_at_width_eight() {
    let runs = sim::run_ensemble(8, 5e4, 5, 8, &SimConfig::default()).unwrap();
    let e = sim::estimate_cumulants(&runs).unwrap();
    assert!(within(e.global.c1, 0.75 * 8.0 / 63.0, e.global.stderr1), "{:?}", e.global);
}

#[test]
fn variance_matches_spectral_value() {
    let runs = sim::run_ensemble(4, 5e4, 77, 8, &SimConfig::default()).unwrap();
    let e = sim::estimate_cumulants(&runs).unwrap();
    let c2 = generator::perron_derivative(4, generator::Observable::Tiles, 2).unwrap();
    assert!(within(e.tiles.c2, c2, e.tiles.stderr2), "{:?} vs {c2}", e.tiles);
}

#[test]
fn occupation_matches_stationary_state() {
    let cfg = SimConfig {
        batch_length: 1e3,
        record_occupation: true,
    };
    let runs = sim::run_ensemble(4, 2e4, 7, 16, &cfg).unwrap();
    let per_run: Vec<Vec<f64>> = runs
        .iter()
        .map(|r| sim::occupation_fractions(std::slice::from_ref(r)).unwrap())
        .collect();
    let pooled = sim::occupation_fractions(&runs).unwrap();
    let exact = generator::stationary_state(4).unwrap().probabilities;
    let n = per_run.len() as f64;
    for (k, &p) in exact.iter().enumerate() {
        let mean = per_run.iter().map(|f| f[k]).sum::<f64>() / n;
        let var = per_run.iter().map(|f| (f[k] - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((pooled[k] - mean).abs() < 1e-12);
        assert!(within(mean, p, (var / n).sqrt()), "state {k}: {mean} vs {p}");
    }
    assert!(sim::occupation_fractions(&[sim::run_trajectory(4, 10.0, 1).unwrap()]).is_err());
}

#[test]
fn ensemble_independent_of_thread_count() {
    let cfg = SimConfig {
        batch_length: 50.0,
        record_occupation: false,
    };
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| sim::run_ensemble(6, 500.0, 123, 6, &cfg).unwrap())
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn adsorption_balances_removal() {
    let s = sim::run_trajectory(6, 2e4, 8).unwrap();
    let removed = s.n_tiles as i64 - s.n_avalanches as i64;
    // the interface of width 6 holds a bounded number of tiles
    assert!((s.n_adsorbed as i64 - removed).abs() <= 9);
}
