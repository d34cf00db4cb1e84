use num_complex::Complex64;

use rpm::generator;
use rpm::xxz;

#[test]
fn bridge_beyond_the_unit_square() {
    // imaginary twist (α > 2 ln 2) and the gapped side (β < -ln 2)
    for (alpha, beta) in [(2.0, 0.3), (1.6, -1.5), (-2.0, -1.0), (0.0, 1.5)] {
        for width in [4, 6] {
            let d = generator::spectral_bridge(width, alpha, beta).unwrap();
            assert!(d < 1e-8, "L={width} ({alpha}, {beta}): {d}");
        }
    }
}

#[test]
fn stationary_conjectures_width_eight() {
    let s = generator::stationary_state(8).unwrap();
    let obs = generator::stationary_observables(&s);
    let l = 8.0f64;
    assert!((obs.avg_peaks - 3.0 * l.powi(3) / (8.0 * (l * l - 1.0))).abs() < 1e-8);
    assert!((obs.prob_global_susceptible - 3.0 * l / (4.0 * (l * l - 1.0))).abs() < 1e-8);
    assert!((obs.mean_tiles_rate - l * (5.0 * l * l - 8.0) / (8.0 * (l * l - 1.0))).abs() < 1e-8);
    assert!((obs.mean_global_rate - 0.75 * l / (l * l - 1.0)).abs() < 1e-8);
    // normalisation of the integer form for L = 8
    assert!((s.integer_form.iter().sum::<f64>() - 5544.0).abs() < 1e-6);
}

#[test]
fn sparse_perron_root_matches_dense() {
    for (alpha, beta) in [(0.3, -0.2), (-0.5, 0.4)] {
        let g = generator::build_generator(10, alpha, beta).unwrap();
        let dense = generator::largest_eigenvalue(&g).unwrap();
        let (power, v) = generator::perron_power(&g, 1e-14, 1e-12).unwrap();
        assert!((dense - power).abs() < 1e-9);
        assert!(v.iter().all(|&x| x > 0.0));
    }
}

#[test]
fn gapped_levels_pair_up() {
    // splitting of the two lowest levels shrinks with L
    let delta = -(1.5f64.cosh());
    let split = |width| {
        let p = xxz::XxzParams::new(width, delta, Complex64::new(0.0, 0.0)).unwrap();
        let (e0, e1) = xxz::lowest_two_dense(&p).unwrap();
        e1 - e0
    };
    let (s6, s8, s10) = (split(6), split(8), split(10));
    assert!(s6 > s8 && s8 > s10, "{s6} {s8} {s10}");
}
