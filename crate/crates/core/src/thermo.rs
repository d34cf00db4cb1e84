//! Thermodynamic ingredients of the XXZ ground state.
//!
//! `Y(γ)` and `Ỹ(λ)` give the bulk energy per site on either side of the
//! isotropic point `Δ = -1`; the finite-size corrections are the leading
//! `1/L` term in the gapless regime and the exponentially small splitting in
//! the gapped regime.

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::quadrature;

/// Upper end of the quadrature window; the integrand decays like `e^{-πx}`.
pub const Y_WINDOW: f64 = 12.0;

/// Highest supported derivative order of `Y`.
pub const Y_MAX_ORDER: usize = 6;

const Y_TOL: f64 = 1e-14;

/// `γ = arccos(e^{-β}/2)` for `β > -ln 2`, accurate near the boundary.
pub fn gamma_of_beta(beta: f64) -> f64 {
    let s = beta + LN_2;
    // 1 - cos γ = 1 - e^{-s}
    let one_minus_w = -(-s).exp_m1();
    2.0 * (0.5 * one_minus_w).sqrt().asin()
}

/// `λ = arccosh(e^{-β}/2)` for `β < -ln 2`, accurate near the boundary.
pub fn lambda_of_beta(beta: f64) -> f64 {
    let s = beta + LN_2;
    let w_minus_one = (-s).exp_m1();
    let root = (-2.0 * s).exp_m1().sqrt();
    (w_minus_one + root).ln_1p()
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma <= PI / 2.0 + 1e-12) {
        return Err(invalid(format!("gamma must lie in (0, pi/2], got {gamma}")));
    }
    Ok(())
}

/// `Y(γ) = ∫ dx / (cosh πx (cosh 2γx - cos γ))` over the real line.
pub fn y(gamma: f64) -> Result<f64> {
    Ok(y_derivs(gamma, 0)?[0])
}

/// n-th derivative of `Y` with respect to `γ`, `n ≤ 6`.
pub fn y_deriv(gamma: f64, n: usize) -> Result<f64> {
    Ok(y_derivs(gamma, n)?[n])
}

/// `Y` and its derivatives of order `0..=n`.
pub fn y_derivs(gamma: f64, n: usize) -> Result<Vec<f64>> {
    check_gamma(gamma)?;
    if n > Y_MAX_ORDER {
        return Err(invalid(format!("derivative order {n} exceeds {Y_MAX_ORDER}")));
    }
    Ok(y_derivs_unchecked(gamma, n, Y_WINDOW))
}

pub(crate) fn y_derivs_unchecked(gamma: f64, n: usize, window: f64) -> Vec<f64> {
    // Y blows up like 2 ln 2 / γ² and its derivatives like γ^{-2-k}
    let scale = (1.0 / (gamma * gamma)).max(1.0);
    (0..=n)
        .map(|k| {
            let tol = Y_TOL * scale * (1.0 / gamma).max(1.0).powi(k as i32) * 10f64.powi(k as i32);
            2.0 * quadrature::integrate(&|x| integrand_deriv(gamma, x, k), 0.0, window, tol)
        })
        .collect()
}

/// k-th γ-derivative of `1 / (cosh πx · D)`, `D = cosh 2γx - cos γ`.
fn integrand_deriv(gamma: f64, x: f64, k: usize) -> f64 {
    let sh = (gamma * x).sinh();
    let sn = (0.5 * gamma).sin();
    // cosh 2γx - cos γ without cancellation
    let d0 = 2.0 * (sh * sh + sn * sn);
    let mut dd = [0.0; Y_MAX_ORDER + 1];
    dd[0] = d0;
    let (c2, s2) = ((2.0 * gamma * x).cosh(), (2.0 * gamma * x).sinh());
    let mut pow = 1.0;
    for (j, slot) in dd.iter_mut().enumerate().skip(1) {
        pow *= 2.0 * x;
        let hyper = if j % 2 == 0 { c2 } else { s2 };
        *slot = pow * hyper - (gamma + j as f64 * PI / 2.0).cos();
    }
    // Leibniz rule on g·D = 1
    let mut g = [0.0; Y_MAX_ORDER + 1];
    g[0] = 1.0 / d0;
    for m in 1..=k {
        let mut acc = 0.0;
        let mut c = 1.0;
        for j in 0..m {
            acc += c * g[j] * dd[m - j];
            c = c * (m - j) as f64 / (j + 1) as f64;
        }
        g[m] = -acc / d0;
    }
    g[k] / (PI * x).cosh()
}

/// `S(λ) = Σ_{m∈ℤ} e^{-|m|λ} / cosh mλ = 1 + 4 Σ_{m≥1} 1/(e^{2mλ}+1)` and its
/// first two λ-derivatives. `Ỹ = S / sinh λ`.
pub fn ytilde_sum_derivs(lambda: f64) -> Result<[f64; 3]> {
    if !(lambda > 0.0) {
        return Err(invalid(format!("lambda must be positive, got {lambda}")));
    }
    Ok(sum_terms(lambda, usize::MAX))
}

fn sum_terms(lambda: f64, max_terms: usize) -> [f64; 3] {
    let mut s = [1.0, 0.0, 0.0];
    let mut m = 1usize;
    while m <= max_terms {
        let t = (-2.0 * m as f64 * lambda).exp();
        let mf = m as f64;
        let term = 4.0 * t / (1.0 + t);
        s[0] += term;
        s[1] -= 8.0 * mf * t / ((1.0 + t) * (1.0 + t));
        s[2] += 16.0 * mf * mf * t * (1.0 - t) / ((1.0 + t) * (1.0 + t) * (1.0 + t));
        if term < 1e-17 && 16.0 * mf * mf * t < 1e-17 * s[0].max(1.0) {
            break;
        }
        m += 1;
    }
    s
}

/// `Ỹ(λ) = (1/sinh λ) Σ_{m∈ℤ} e^{-|m|λ} / cosh mλ`.
pub fn ytilde(lambda: f64) -> Result<f64> {
    Ok(ytilde_sum_derivs(lambda)?[0] / lambda.sinh())
}

/// `Ỹ(λ)` with the sum cut after `terms` positive values of `m`.
pub fn ytilde_truncated(lambda: f64, terms: usize) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(invalid(format!("lambda must be positive, got {lambda}")));
    }
    Ok(sum_terms(lambda, terms)[0] / lambda.sinh())
}

/// Ground-state energy per site of the untwisted chain in the thermodynamic
/// limit, for `Δ < 0`.
pub fn bulk_energy(delta: f64) -> Result<f64> {
    if !(delta < 0.0) {
        return Err(invalid(format!("bulk energy needs Delta < 0, got {delta}")));
    }
    const SEAM: f64 = 1e-6;
    if (delta + 1.0).abs() < SEAM {
        let left = bulk_energy_branch(-1.0 - SEAM)?;
        let right = bulk_energy_branch(-1.0 + SEAM)?;
        return Ok(0.5 * (left + right));
    }
    bulk_energy_branch(delta)
}

fn bulk_energy_branch(delta: f64) -> Result<f64> {
    if delta > -1.0 {
        let gamma = (-delta).acos();
        let s = gamma.sin();
        Ok(0.5 * gamma.cos() - s * s * y(gamma)?)
    } else {
        let lambda = (-delta).acosh();
        let sum = ytilde_sum_derivs(lambda)?[0];
        Ok(0.5 * lambda.cosh() - lambda.sinh() * sum)
    }
}

/// `lim L (E_L - L e_∞)` in the gapless regime for twist angle `φ`, given as
/// `φ²` so that imaginary twists (`φ² < 0`) are covered.
pub fn fsc_gapless(gamma: f64, phi_sq: f64) -> Result<f64> {
    check_gamma(gamma)?;
    if phi_sq > PI * PI + 1e-12 {
        return Err(invalid(format!("phi^2 must not exceed pi^2, got {phi_sq}")));
    }
    let s = gamma.sin();
    Ok(-PI * PI * s / (6.0 * gamma) + phi_sq * PI * s / (4.0 * gamma * (PI - gamma)))
}

/// Moduli attached to the nome `e^{-λ}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EllipticModuli {
    pub lambda: f64,
    pub k: f64,
    pub k_prime: f64,
    pub k1: f64,
    /// `ln k₁`, accurate where `k₁` rounds to one.
    pub ln_k1: f64,
    pub big_k: f64,
    pub big_k_prime: f64,
}

/// Arithmetic-geometric mean.
pub fn agm(mut a: f64, mut b: f64) -> f64 {
    for _ in 0..64 {
        let next = (0.5 * (a + b), (a * b).sqrt());
        if next.0 == a && next.1 == b {
            break;
        }
        (a, b) = next;
        if (a - b).abs() <= f64::EPSILON * a {
            break;
        }
    }
    0.5 * (a + b)
}

/// Complete elliptic integral of the first kind from the modulus and its
/// complement, `K(k) = π / (2 agm(1, k'))`.
pub fn complete_k(k_prime: f64) -> f64 {
    PI / (2.0 * agm(1.0, k_prime))
}

/// `θ₂(q)`, `θ₃(q) - 1` and `θ₄(q) - 1`.
fn theta_series(q: f64) -> (f64, f64, f64) {
    let mut th2 = 0.0;
    let mut s3 = 0.0;
    let mut s4 = 0.0;
    let mut n = 0u32;
    loop {
        let half = (n as f64 + 0.5).powi(2);
        let t2 = q.powf(half);
        th2 += 2.0 * t2;
        if n >= 1 {
            let t = q.powf((n * n) as f64);
            s3 += 2.0 * t;
            s4 += if n % 2 == 0 { 2.0 * t } else { -2.0 * t };
            if t < 1e-17 && t2 < 1e-17 {
                break;
            }
        }
        n += 1;
        if n > 100_000 {
            break;
        }
    }
    (th2, s3, s4)
}

pub fn elliptic_moduli(lambda: f64) -> Result<EllipticModuli> {
    if !(lambda > 0.0) {
        return Err(invalid(format!("lambda must be positive, got {lambda}")));
    }
    // below λ = π the transformed nome e^{-π²/λ} is the smaller one and
    // swaps the roles of θ₂ and θ₄
    let (k, k_prime, ln_k) = if lambda >= PI {
        let (th2, s3, s4) = theta_series((-lambda).exp());
        let k = (th2 / (1.0 + s3)).powi(2);
        (k, ((1.0 + s4) / (1.0 + s3)).powi(2), k.ln())
    } else {
        let (th2, s3, s4) = theta_series((-PI * PI / lambda).exp());
        let ln_k = 2.0 * (s4.ln_1p() - s3.ln_1p());
        (ln_k.exp(), (th2 / (1.0 + s3)).powi(2), ln_k)
    };
    // (1 - k')/k = k/(1 + k')
    let ln_k1 = 2.0 * (ln_k - k_prime.ln_1p());
    let k1 = ln_k1.exp();
    Ok(EllipticModuli {
        lambda,
        k,
        k_prime,
        k1,
        ln_k1,
        big_k: complete_k(k_prime),
        big_k_prime: complete_k(k),
    })
}

/// `k₁` from its infinite product over the nome `e^{-2λ}`.
pub fn k1_product(lambda: f64) -> f64 {
    let q = (-2.0 * lambda).exp();
    let mut prod = 1.0;
    let mut n = 0;
    loop {
        let num = 1.0 + q.powi(2 * n + 2);
        let den = 1.0 + q.powi(2 * n + 1);
        let f = (num / den).powi(4);
        prod *= f;
        if (f - 1.0).abs() < 1e-18 || n > 10_000 {
            break;
        }
        n += 1;
    }
    4.0 * (-lambda).exp() * prod
}

/// Which of the two asymptotically degenerate gapped ground states.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GappedBranch {
    /// The real ground state (minus sign).
    Ground,
    /// Its partner (plus sign).
    Partner,
}

/// Leading gapped correction `E_L - L e_∞` for twist with `cos(φ/2)` given
/// (real for real or imaginary `φ`).
pub fn fsc_gapped(width: usize, lambda: f64, cos_half_phi: f64, branch: GappedBranch) -> Result<f64> {
    if width < 2 || width % 2 != 0 {
        return Err(invalid(format!("L must be even and >= 2, got {width}")));
    }
    let m = elliptic_moduli(lambda)?;
    let l = width as f64;
    let magnitude = cos_half_phi * lambda.sinh() * (8.0 * m.k_prime).sqrt() / (PI.powf(1.5) * l.sqrt())
        * m.big_k
        * (0.5 * l * m.ln_k1).exp();
    Ok(match branch {
        GappedBranch::Ground => -magnitude,
        GappedBranch::Partner => magnitude,
    })
}

/// Amplitude and correlation length of the gapped tiles correction,
/// `fsc = a e^{-L/ξ} / √L`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AXi {
    pub a: f64,
    pub xi: f64,
}

pub fn a_xi(beta: f64) -> Result<AXi> {
    if !(beta < -LN_2) {
        return Err(invalid(format!("a(beta), xi(beta) need beta < -ln 2, got {beta}")));
    }
    let lambda = lambda_of_beta(beta);
    let m = elliptic_moduli(lambda)?;
    let a = beta.exp() * 0.5 * lambda.sinh() * (8.0 * m.k_prime).sqrt() * m.big_k / PI.powf(1.5);
    Ok(AXi {
        a,
        xi: -2.0 / m.ln_k1,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const S3: f64 = 1.732_050_807_568_877_2;

    fn appendix() -> [f64; 7] {
        let p = PI;
        [
            4.0 / 3.0,
            -25.0 / (6.0 * S3),
            18.0 * S3 / p - 3.0,
            463.0 / (8.0 * S3) - 54.0 / p - 243.0 * S3 / (p * p),
            15059.0 / 18.0 - 9306.0 * S3 / (5.0 * p) + 972.0 / (p * p) + 3888.0 * S3 / p.powi(3),
            -33185.0 * S3 / 4.0 + 8946.0 / p + 72495.0 * S3 / (p * p) - 19440.0 / p.powi(3)
                - 72900.0 * S3 / p.powi(4),
            -3938533.0 / 6.0 + 10658034.0 * S3 / (7.0 * p) - 425250.0 / (p * p) - 2658420.0 * S3 / p.powi(3)
                + 437400.0 / p.powi(4)
                + 1574640.0 * S3 / p.powi(5),
        ]
    }

    #[test]
    fn appendix_values() {
        let d = y_derivs(PI / 3.0, 6).unwrap();
        let want = appendix();
        for n in 0..=6 {
            let tol = if n <= 4 { 1e-8 } else { 1e-5 };
            assert!((d[n] - want[n]).abs() < tol, "order {n}: {} vs {}", d[n], want[n]);
        }
        assert!((d[0] - 4.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn y_at_right_angle() {
        assert!((y(PI / 2.0).unwrap() - 2.0 / PI).abs() < 1e-12);
        let slope = y_deriv(PI / 2.0, 1).unwrap();
        assert!((slope + 0.5 + 2.0 / (PI * PI)).abs() < 1e-10, "{slope}");
        let h = 1e-3;
        let f = |g: f64| y_derivs_unchecked(g, 0, Y_WINDOW)[0];
        let cd = (f(PI / 2.0 + h) - f(PI / 2.0 - h)) / (2.0 * h);
        assert!((cd + 0.5 + 2.0 / (PI * PI)).abs() < 1e-6);
    }

    #[test]
    fn small_gamma_law() {
        let g = 1e-3;
        assert!((g * g * y(g).unwrap() - 2.0 * LN_2).abs() < 1e-4);
    }

    #[test]
    fn window_stability() {
        for g in [0.2, PI / 3.0, 1.5] {
            let a = y_derivs_unchecked(g, 0, Y_WINDOW)[0];
            let b = y_derivs_unchecked(g, 0, 2.0 * Y_WINDOW)[0];
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn domain_errors() {
        assert!(y(0.0).is_err());
        assert!(y(2.0).is_err());
        assert!(y_deriv(1.0, 7).is_err());
        assert!(ytilde(0.0).is_err());
        assert!(bulk_energy(0.0).is_err());
    }

    #[test]
    fn ytilde_tail() {
        let lam = 10.0;
        let sum = ytilde_sum_derivs(lam).unwrap()[0];
        // S - 1 = 4 e^{-2λ} + O(e^{-4λ})
        assert!(((sum - 1.0) / (4.0 * (-2.0 * lam).exp()) - 1.0).abs() < 1e-8);
        let a = ytilde(5.0).unwrap();
        let b = ytilde_truncated(5.0, 400).unwrap();
        assert!(((a - b) / a).abs() < 1e-14);
    }

    #[test]
    fn ytilde_derivatives() {
        let lam = 0.7;
        let d = ytilde_sum_derivs(lam).unwrap();
        let f = |x: f64| ytilde_sum_derivs(x).unwrap()[0];
        let h = 1e-4;
        assert!(((f(lam + h) - f(lam - h)) / (2.0 * h) - d[1]).abs() < 1e-7);
        assert!(((f(lam + h) - 2.0 * f(lam) + f(lam - h)) / (h * h) - d[2]).abs() < 1e-5);
    }

    #[test]
    fn bulk_energy_values() {
        assert!((bulk_energy(-0.5).unwrap() + 0.75).abs() < 1e-12);
        assert!((bulk_energy(-1e-6).unwrap() + 2.0 / PI).abs() < 1e-4);
        let left = bulk_energy(-1.0 - 1e-6).unwrap();
        let right = bulk_energy(-1.0 + 1e-6).unwrap();
        assert!((left - right).abs() < 1e-5);
        assert!((bulk_energy(-1.0).unwrap() - (0.5 - 2.0 * LN_2)).abs() < 1e-5);
    }

    #[test]
    fn gapless_corrections() {
        assert!(fsc_gapless(PI / 3.0, (2.0 * PI / 3.0).powi(2)).unwrap().abs() < 1e-14);
        let g = 0.9;
        assert!((fsc_gapless(g, 0.0).unwrap() + PI * PI * g.sin() / (6.0 * g)).abs() < 1e-14);
        assert!((fsc_gapless(PI / 2.0, PI * PI).unwrap() - 2.0 * PI / 3.0).abs() < 1e-13);
    }

    #[test]
    fn moduli_relations() {
        for lam in [0.3, 1.0, 3.0] {
            let m = elliptic_moduli(lam).unwrap();
            assert!((m.big_k_prime / m.big_k - lam / PI).abs() < 1e-10);
            assert!((m.k * m.k + m.k_prime * m.k_prime - 1.0).abs() < 1e-14);
            assert!((m.k1 - ((1.0 - m.k_prime) / m.k).powi(2)).abs() < 1e-10);
            assert!((m.k1 - k1_product(lam)).abs() < 1e-10);
            assert!(m.k1 > 0.0 && m.k1 < 1.0);
        }
    }

    #[test]
    fn correlation_length() {
        let near = a_xi(-LN_2 - 1e-3).unwrap().xi;
        let far = a_xi(-1.0).unwrap().xi;
        assert!(far.is_finite() && far > 0.0);
        assert!(near > 10.0 * far);
        assert!(a_xi(-LN_2).is_err());
    }

    #[test]
    fn amplitude_unwinds_gapped_correction() {
        for (beta, width) in [(-0.9, 8usize), (-1.5, 12), (-2.3, 20)] {
            let AXi { a, xi } = a_xi(beta).unwrap();
            let lhs = a * (-(width as f64) / xi).exp() / (width as f64).sqrt();
            let rhs = -beta.exp() * fsc_gapped(width, lambda_of_beta(beta), 0.5, GappedBranch::Ground).unwrap();
            assert!(((lhs - rhs) / rhs).abs() < 1e-12, "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn stable_parametrisation() {
        let b = 0.3;
        assert!((gamma_of_beta(b) - ((-b).exp() / 2.0).acos()).abs() < 1e-14);
        let b = -1.2;
        assert!((lambda_of_beta(b) - ((-b).exp() / 2.0).acosh()).abs() < 1e-14);
        let beta = -LN_2 + 1e-12;
        let s = beta + LN_2;
        assert!((gamma_of_beta(beta) - (2.0 * s).sqrt()).abs() < 1e-16);
    }
}
