use std::f64::consts::{LN_2, PI};

use rpm::generator::{self, Observable};
use rpm::ldt::{self, Phase};

const SQRT3: f64 = 1.732_050_807_568_877_2;

#[test]
fn closed_form_cumulants() {
    for width in [4usize, 10, 50] {
        let l = width as f64;
        let c1 = ldt::cumulants(Observable::Tiles, 1, width).unwrap();
        assert!((c1 - (5.0 * l / 8.0 - 3.0 / (8.0 * l))).abs() < 1e-12);
        let c2 = ldt::cumulants(Observable::Tiles, 2, width).unwrap();
        let want = (9.0 * SQRT3 / (2.0 * PI) - 11.0 / 6.0) * l + (3.0 * SQRT3 / (8.0 * PI) - 0.5) / l;
        assert!((c2 - want).abs() < 1e-12 * l);
        let g4 = ldt::cumulants(Observable::Global, 4, width).unwrap();
        assert!((g4 - (5.0 / 6.0 - 3.0 * SQRT3 / (2.0 * PI)) / l).abs() < 1e-12);
    }
    assert!(ldt::cumulants(Observable::Tiles, 5, 4).is_err());
}

#[test]
fn critical_rate_value() {
    let nc = ldt::critical_rate().unwrap();
    assert!((nc - (4.0 * LN_2 - 1.0) / 6.0).abs() < 1e-8);
    let p = ldt::tiles_rate_per_site(nc).unwrap();
    assert!((p.legendre_param + LN_2).abs() < 1e-6);
}

#[test]
fn joint_cgf_restricts_to_marginals() {
    for width in [4usize, 12] {
        for x in [-1.0, -0.3, 0.4, 1.2] {
            let j = ldt::joint_cgf(0.0, x, width).unwrap().total();
            let t = ldt::cgf_tiles(x, width).unwrap().total();
            assert!((j - t).abs() < 1e-9 * t.abs().max(1.0), "{x}: {j} vs {t}");
            let j = ldt::joint_cgf(x, 0.0, width).unwrap().total();
            let g = ldt::cgf_global(x, width).unwrap().total();
            assert!((j - g).abs() < 1e-9 * g.abs().max(1e-3), "{x}: {j} vs {g}");
        }
    }
}

#[test]
fn joint_cgf_approaches_exact_root() {
    let mut last = f64::INFINITY;
    for width in [4usize, 6, 8, 10, 12] {
        let exact = generator::largest_eigenvalue(&generator::build_generator(width, 0.1, 0.1).unwrap()).unwrap();
        let asym = ldt::joint_cgf(0.1, 0.1, width).unwrap().total();
        let gap = (exact - asym).abs();
        assert!(gap < last, "L={width}: {gap} vs {last}");
        last = gap;
    }
}

#[test]
fn cgfs_convex() {
    let grid: Vec<f64> = (0..=80).map(|k| -2.0 + 0.05 * k as f64).collect();
    for w in grid.windows(3) {
        let f = |b: f64| ldt::tiles_bulk_per_site(b).unwrap();
        assert!(f(w[0]) + f(w[2]) - 2.0 * f(w[1]) >= -1e-8, "tiles at {}", w[1]);
        let g = |a: f64| ldt::cgf_global(a, 6).unwrap().total();
        assert!(g(w[0]) + g(w[2]) - 2.0 * g(w[1]) >= -1e-8, "global at {}", w[1]);
    }
}

/// `L c(L)` fitted as `a + b/L²` over `L = 4..10`; returns `a`.
fn extrapolate(values: &[(usize, f64)]) -> f64 {
    let n = values.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(width, y) in values {
        let x = 1.0 / (width * width) as f64;
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let b = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    (sy - b * sx) / n
}

#[test]
fn spectral_cumulants_extrapolate_to_closed_forms() {
    let widths = [4usize, 6, 8, 10];
    for order in [1u32, 2] {
        let (bulk, fsc) = ldt::tiles_cumulant_coefficients(order).unwrap();
        let tiles: Vec<(usize, f64)> = widths
            .iter()
            .map(|&w| {
                let l = w as f64;
                let c = generator::perron_derivative(w, Observable::Tiles, order).unwrap();
                (w, l * (c - bulk * l))
            })
            .collect();
        let a = extrapolate(&tiles);
        // higher corrections in 1/L² are still visible at L = 10
        assert!((a - fsc).abs() < 0.05 * fsc.abs(), "tiles c{order}: {a} vs {fsc}");

        let g = ldt::global_cumulant_coefficient(order).unwrap();
        let global: Vec<(usize, f64)> = widths
            .iter()
            .map(|&w| (w, w as f64 * generator::perron_derivative(w, Observable::Global, order).unwrap()))
            .collect();
        let a = extrapolate(&global);
        assert!((a - g).abs() < 0.02 * g.abs(), "global c{order}: {a} vs {g}");
    }
}

#[test]
fn conditional_at_stationary_rate_is_global_cgf() {
    for width in [6usize, 20] {
        let y = 0.625 * width as f64;
        for alpha in [-1.0, 0.3, 1.0] {
            let c = ldt::conditional_cgf(alpha, y, width).unwrap();
            assert!(c.beta.abs() < 1e-9);
            assert_eq!(c.phase, Phase::Gapless);
            let want = ldt::cgf_global(alpha, width).unwrap().total();
            assert!((c.value.unwrap() - want).abs() < 1e-9 * want.abs().max(1e-6));
            assert!((c.tau.unwrap() - width as f64).abs() < 1e-8 * width as f64);
        }
        for y in [0.2, 0.3, 1.0] {
            let v = ldt::conditional_cgf(0.0, y * width as f64, width).unwrap().value.unwrap();
            assert!(v.abs() < 1e-14, "{y}: {v}");
        }
    }
    assert!((ldt::g_factor(0.0).unwrap() - ldt::GLOBAL_SCALE).abs() < 1e-12);
}

#[test]
fn subcritical_conditioning_is_poisson() {
    let width = 16;
    let c = ldt::conditional_cgf(0.0, 0.2 * width as f64, width).unwrap();
    assert_eq!(c.phase, Phase::Gapped);
    let tau = c.tau.unwrap();
    let cgf = |a: f64| ldt::conditional_cgf(a, 0.2 * width as f64, width).unwrap().value.unwrap() * tau;
    for x in [0.2f64, 0.5, 1.0, 3.0] {
        // rate in rescaled time: sup_α (α x - τ Λ(α)); maximiser α = 2 ln 2x
        let alpha = 2.0 * (2.0 * x).ln();
        let rate = alpha * x - cgf(alpha);
        let eps = 1e-3;
        assert!(rate >= (alpha + eps) * x - cgf(alpha + eps));
        assert!(rate >= (alpha - eps) * x - cgf(alpha - eps));
        let poisson = 2.0 * x * ((2.0 * x).ln() - 1.0) + 1.0;
        assert!((rate - poisson).abs() < 1e-10, "{x}: {rate} vs {poisson}");
    }
}

#[test]
fn conditional_phases() {
    let width = 10;
    let nc = ldt::critical_rate().unwrap();
    let above = ldt::conditional_cgf(0.5, 1.1 * nc * width as f64, width).unwrap();
    assert_eq!(above.phase, Phase::Gapless);
    let below = ldt::conditional_cgf(0.5, 0.9 * nc * width as f64, width).unwrap();
    assert_eq!(below.phase, Phase::Gapped);
    assert!(below.tau.unwrap() > above.tau.unwrap());
    assert!(ldt::conditional_cgf(0.5, -1.0, width).is_err());
}

#[test]
fn rate_function_grid() {
    let pts = ldt::rate_function(Observable::Tiles, 8, &[-1.0, 0.0, 5.0, 10.0]).unwrap();
    assert!(pts[0].rate.is_infinite() && pts[1].rate.is_infinite());
    assert!(pts[2].rate.abs() < 1e-10);
    assert!(pts[3].rate > 0.0);
    let g = ldt::rate_function(Observable::Global, 8, &[0.0, 0.75 / 8.0]).unwrap();
    assert!(g[0].rate > 0.0 && g[0].rate.is_finite());
    assert!(g[1].rate.abs() < 1e-10);
}
