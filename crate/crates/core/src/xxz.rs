//! Twisted XXZ chain in the zero-magnetisation sector.
//!
//! `H = -Σ_i [u σ⁺_i σ⁻_{i+1} + u⁻¹ σ⁻_i σ⁺_{i+1} + (Δ/2) σᶻ_i σᶻ_{i+1}]` with
//! periodic wrap. Basis states are `L`-bit integers, bit `i` set for an up
//! spin at site `i + 1`. Bethe magnons are the up spins.

use std::f64::consts::{LN_2, PI};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::linalg;

/// Largest width for dense sector matrices (dimension 924).
pub const MAX_DENSE_WIDTH: usize = 12;
/// Largest width for the Bethe solver.
pub const MAX_BETHE_WIDTH: usize = 12;
/// Largest width for assembling Bethe vectors (`m!` terms per amplitude).
pub const MAX_VECTOR_WIDTH: usize = 8;

const CONTINUATION_STEPS: usize = 50;
const MAX_HALVINGS: u32 = 10;
const NEWTON_TOL: f64 = 1e-12;
const NEWTON_MAX_ITER: usize = 60;
const ROOT_RESIDUAL: f64 = 1e-10;
const IMAG_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Regime {
    /// `Δ = -cos γ`, `0 ≤ γ ≤ π/2`.
    Gapless { gamma: f64 },
    /// `Δ = -cosh λ`, `λ > 0`.
    Gapped { lambda: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct XxzParams {
    pub width: usize,
    pub delta: f64,
    /// Twist angle; purely real or purely imaginary.
    pub phi: Complex64,
    /// `u = exp(i φ / L)`.
    pub u: Complex64,
    pub regime: Regime,
}

impl XxzParams {
    pub fn new(width: usize, delta: f64, phi: Complex64) -> Result<Self> {
        if width < 2 || width % 2 != 0 {
            return Err(invalid(format!("L must be even and >= 2, got {width}")));
        }
        if !(delta <= 0.0) {
            return Err(invalid(format!("Delta must be <= 0, got {delta}")));
        }
        if phi.re != 0.0 && phi.im != 0.0 {
            return Err(invalid(format!("twist must be real or pure imaginary, got {phi}")));
        }
        let regime = if delta >= -1.0 {
            Regime::Gapless { gamma: (-delta).acos() }
        } else {
            Regime::Gapped { lambda: (-delta).acosh() }
        };
        let u = (Complex64::i() * phi / width as f64).exp();
        Ok(XxzParams {
            width,
            delta,
            phi,
            u,
            regime,
        })
    }

    /// `cos(φ/2)`, real for both real and imaginary twists.
    pub fn cos_half_phi(&self) -> f64 {
        (self.phi / 2.0).cos().re
    }
}

/// Chain parameters for tilts `(α, β)`: `2Δ = -e^{-β}`, `2 cos(φ/2) = e^{α/2}`.
pub fn map_params(alpha: f64, beta: f64, width: usize) -> Result<XxzParams> {
    let delta = -0.5 * (-beta).exp();
    let c = 0.5 * (0.5 * alpha).exp();
    let phi = if alpha <= 2.0 * LN_2 {
        Complex64::new(2.0 * c.min(1.0).acos(), 0.0)
    } else {
        Complex64::new(0.0, 2.0 * c.acosh())
    };
    let mut p = XxzParams::new(width, delta, phi)?;
    // exact regime assignment from β rather than the rounded Δ
    p.regime = if beta >= -LN_2 {
        Regime::Gapless { gamma: crate::thermo::gamma_of_beta(beta) }
    } else {
        Regime::Gapped { lambda: crate::thermo::lambda_of_beta(beta) }
    };
    Ok(p)
}

/// Sector basis: all `L`-bit words with `L/2` bits set, ascending.
pub fn sector_basis(width: usize) -> Vec<u32> {
    (0u32..1 << width)
        .filter(|x| x.count_ones() as usize == width / 2)
        .collect()
}

fn hamiltonian(width: usize, delta: f64, u: Complex64, basis: &[u32]) -> DMatrix<Complex64> {
    let n = basis.len();
    let index = |x: u32| basis.binary_search(&x).ok();
    let mut h = DMatrix::zeros(n, n);
    let u_inv = u.inv();
    for (col, &x) in basis.iter().enumerate() {
        for i in 0..width {
            let j = (i + 1) % width;
            let up_i = x >> i & 1 == 1;
            let up_j = x >> j & 1 == 1;
            let zz = if up_i == up_j { 1.0 } else { -1.0 };
            h[(col, col)] -= Complex64::new(0.5 * delta * zz, 0.0);
            if up_i == up_j {
                continue;
            }
            let y = x ^ (1 << i) ^ (1 << j);
            if let Some(row) = index(y) {
                // σ⁺_i σ⁻_{i+1} raises i; σ⁻_i σ⁺_{i+1} lowers it
                h[(row, col)] -= if up_j { u } else { u_inv };
            }
        }
    }
    h
}

/// Dense Hamiltonian on the zero-magnetisation sector.
pub fn build_xxz(p: &XxzParams) -> Result<DMatrix<Complex64>> {
    if p.width > MAX_DENSE_WIDTH {
        return Err(Error::ResourceLimit(format!(
            "dense XXZ sector is limited to L <= {MAX_DENSE_WIDTH}, got {}",
            p.width
        )));
    }
    Ok(hamiltonian(p.width, p.delta, p.u, &sector_basis(p.width)))
}

/// Dense Hamiltonian on the full `2^L` space (for `L ≤ 10`).
pub fn build_xxz_full(width: usize, delta: f64, u: Complex64) -> Result<DMatrix<Complex64>> {
    if width > 10 {
        return Err(Error::ResourceLimit(format!("full XXZ space is limited to L <= 10, got {width}")));
    }
    let basis: Vec<u32> = (0u32..1 << width).collect();
    Ok(hamiltonian(width, delta, u, &basis))
}

/// All sector eigenvalues.
///
/// A real twist makes `H` Hermitian and an imaginary one makes it real, so
/// neither case needs a complex non-Hermitian solve.
pub fn spectrum_dense(p: &XxzParams) -> Result<Vec<Complex64>> {
    let h = build_xxz(p)?;
    if p.phi.im == 0.0 {
        Ok(linalg::eigenvalues_hermitian(&h)
            .into_iter()
            .map(|e| Complex64::new(e, 0.0))
            .collect())
    } else {
        Ok(linalg::eigenvalues_real(&h.map(|z| z.re)))
    }
}

/// Sector eigenvalues sorted by real part.
pub fn sorted_spectrum(p: &XxzParams) -> Result<Vec<Complex64>> {
    let mut ev = spectrum_dense(p)?;
    ev.sort_by(|a, b| a.re.total_cmp(&b.re));
    Ok(ev)
}

/// Eigenvalue with smallest real part, asserted real.
pub fn ground_energy_dense(p: &XxzParams) -> Result<f64> {
    let ev = sorted_spectrum(p)?;
    real_or_fail(ev[0], "dense ground energy")
}

/// The two lowest sector levels; in the gapped regime these are the
/// asymptotically degenerate pair.
pub fn lowest_two_dense(p: &XxzParams) -> Result<(f64, f64)> {
    let ev = sorted_spectrum(p)?;
    Ok((real_or_fail(ev[0], "ground level")?, ev.get(1).map_or(f64::NAN, |z| z.re)))
}

fn real_or_fail(z: Complex64, what: &str) -> Result<f64> {
    if z.im.abs() > IMAG_TOL * z.re.abs().max(1.0) {
        return Err(Error::numeric(format!("{what} is not real ({z})"), z.im.abs()));
    }
    Ok(z.re)
}

/// Ground-state Bethe roots.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BetheRoots {
    pub width: usize,
    pub m: usize,
    pub z: Vec<Complex64>,
    pub residual: f64,
}

/// Residuals and Jacobian of `z_i^L - (-1)^{m-1} Π_{j≠i} a_ij / b_ij` with
/// `a_ij = 1 - 2uΔ z_i + u² z_i z_j` and `b_ij = 1 - 2uΔ z_j + u² z_i z_j`.
fn bethe_system(z: &[Complex64], width: usize, delta: f64, u: Complex64) -> (DVector<Complex64>, DMatrix<Complex64>) {
    let m = z.len();
    let sign = if m % 2 == 1 { 1.0 } else { -1.0 };
    let two_ud = 2.0 * u * delta;
    let u2 = u * u;
    let mut f = DVector::zeros(m);
    let mut jac = DMatrix::zeros(m, m);
    for i in 0..m {
        let mut prod = Complex64::new(1.0, 0.0);
        let mut dl = vec![Complex64::new(0.0, 0.0); m];
        for j in 0..m {
            if j == i {
                continue;
            }
            let zz = u2 * z[i] * z[j];
            let a = 1.0 - two_ud * z[i] + zz;
            let b = 1.0 - two_ud * z[j] + zz;
            prod *= a / b;
            dl[i] += (-two_ud + u2 * z[j]) / a - u2 * z[j] / b;
            dl[j] += u2 * z[i] / a - (-two_ud + u2 * z[i]) / b;
        }
        f[i] = z[i].powu(width as u32) - sign * prod;
        for k in 0..m {
            jac[(i, k)] = -sign * prod * dl[k];
        }
        jac[(i, i)] += width as f64 * z[i].powu(width as u32 - 1);
    }
    (f, jac)
}

fn max_abs(v: &DVector<Complex64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.norm()))
}

fn newton(z0: &[Complex64], width: usize, delta: f64, u: Complex64) -> Option<(Vec<Complex64>, f64)> {
    let mut z = z0.to_vec();
    let start = max_abs(&bethe_system(&z, width, delta, u).0);
    for _ in 0..NEWTON_MAX_ITER {
        let (f, jac) = bethe_system(&z, width, delta, u);
        let r = max_abs(&f);
        if !r.is_finite() || r > 1e6 * start.max(1.0) {
            return None;
        }
        if r < NEWTON_TOL {
            return distinct(&z).then_some((z, r));
        }
        let dz = jac.lu().solve(&f)?;
        for (zi, d) in z.iter_mut().zip(dz.iter()) {
            *zi -= d;
        }
    }
    let r = max_abs(&bethe_system(&z, width, delta, u).0);
    (r < ROOT_RESIDUAL && distinct(&z)).then_some((z, r))
}

fn distinct(z: &[Complex64]) -> bool {
    (0..z.len()).all(|i| (i + 1..z.len()).all(|j| (z[i] - z[j]).norm() > 1e-8))
}

/// Free-fermion ground state: the `m` momenta of smallest modulus allowed by
/// `z^L = (-1)^{m-1}`.
fn free_fermion_roots(width: usize) -> Vec<Complex64> {
    let m = width / 2;
    let offset = if m % 2 == 0 { 1 } else { 0 };
    let mut ks: Vec<f64> = (-(width as i64)..width as i64)
        .map(|n| (2 * n + offset) as f64 * PI / width as f64)
        .filter(|k| k.abs() < PI)
        .collect();
    ks.sort_by(|a, b| a.abs().total_cmp(&b.abs()).then(a.total_cmp(b)));
    ks.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    ks.truncate(m);
    ks.sort_by(f64::total_cmp);
    ks.into_iter().map(|k| Complex64::from_polar(1.0, k)).collect()
}

/// Ground-state Bethe roots at `(Δ, u)`, continued from the free-fermion
/// point first in `Δ` (at `u = 1`) and then in `ln u` (at fixed `Δ`).
pub fn solve_bethe(width: usize, delta: f64, u: Complex64) -> Result<BetheRoots> {
    if width < 2 || width % 2 != 0 || width > MAX_BETHE_WIDTH {
        return Err(invalid(format!(
            "Bethe solver needs even 2 <= L <= {MAX_BETHE_WIDTH}, got {width}"
        )));
    }
    if !(delta <= 0.0) || u.norm() == 0.0 {
        return Err(invalid(format!("unsupported Bethe target Delta={delta}, u={u}")));
    }
    let log_u = u.ln();
    let phi_of = |t: f64| -Complex64::i() * log_u * t * width as f64;
    let z = free_fermion_roots(width);
    let z = continue_path(z, width, |t| (delta * t, Complex64::new(1.0, 0.0)), |t| (delta * t, Complex64::new(0.0, 0.0)))?;
    let z = continue_path(z, width, |t| (delta, (log_u * t).exp()), |t| (delta, phi_of(t)))?;
    let residual = max_abs(&bethe_system(&z, width, delta, u).0);
    Ok(BetheRoots {
        width,
        m: width / 2,
        z,
        residual,
    })
}

fn continue_path(
    mut z: Vec<Complex64>,
    width: usize,
    at: impl Fn(f64) -> (f64, Complex64),
    describe: impl Fn(f64) -> (f64, Complex64),
) -> Result<Vec<Complex64>> {
    let base = 1.0 / CONTINUATION_STEPS as f64;
    let min_step = base / 2f64.powi(MAX_HALVINGS as i32);
    let mut t = 0.0;
    let mut step = base;
    while t < 1.0 {
        let next = (t + step).min(1.0);
        let (d, u) = at(next);
        match newton(&z, width, d, u) {
            Some((znew, _)) => {
                z = znew;
                t = next;
                step = (step * 2.0).min(base);
            }
            None => {
                step *= 0.5;
                if step < min_step {
                    let (d, phi) = describe(t);
                    return Err(Error::ContinuationFailure {
                        message: format!("Newton failed near t = {next}"),
                        last_good_t: t,
                        last_good_delta: d,
                        last_good_phi: format!("{phi}"),
                    });
                }
            }
        }
    }
    Ok(z)
}

/// `E = Δ(2m - L/2) - Σ (u z + 1/(u z))`, asserted real.
pub fn bethe_energy(r: &BetheRoots, p: &XxzParams) -> Result<f64> {
    if !(r.residual < ROOT_RESIDUAL) {
        return Err(Error::numeric("Bethe roots are not converged", r.residual));
    }
    let m = r.z.len() as f64;
    let sum: Complex64 = r.z.iter().map(|&z| p.u * z + (p.u * z).inv()).sum();
    let e = Complex64::new(p.delta * (2.0 * m - 0.5 * p.width as f64), 0.0) - sum;
    real_or_fail(e, "Bethe energy")
}

/// Visits all permutations of `0..m` with their signs.
fn for_each_permutation(m: usize, mut visit: impl FnMut(&[usize], f64)) {
    let mut perm: Vec<usize> = (0..m).collect();
    let mut c = vec![0usize; m];
    let mut sign = 1.0;
    visit(&perm, sign);
    let mut i = 1;
    while i < m {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            sign = -sign;
            visit(&perm, sign);
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// Sector vector with amplitudes
/// `ψ(x_1<…<x_m) = Σ_σ sgn σ Π_{i<j} (1 - 2uΔ z_σi + u² z_σi z_σj) Π_k z_σk^{x_k}`,
/// `x_k` the 1-based up-spin sites.
pub fn bethe_vector(r: &BetheRoots, p: &XxzParams) -> Result<DVector<Complex64>> {
    if p.width > MAX_VECTOR_WIDTH {
        return Err(Error::ResourceLimit(format!(
            "Bethe vector assembly is limited to L <= {MAX_VECTOR_WIDTH}, got {}",
            p.width
        )));
    }
    let m = r.z.len();
    let two_ud = 2.0 * p.u * p.delta;
    let u2 = p.u * p.u;
    let basis = sector_basis(p.width);
    let amps = basis.iter().map(|&x| {
        let sites: Vec<i32> = (0..p.width).filter(|i| x >> i & 1 == 1).map(|i| i as i32 + 1).collect();
        let mut total = Complex64::new(0.0, 0.0);
        for_each_permutation(m, |s, sign| {
            let mut term = Complex64::new(sign, 0.0);
            for i in 0..m {
                for j in i + 1..m {
                    term *= 1.0 - two_ud * r.z[s[i]] + u2 * r.z[s[i]] * r.z[s[j]];
                }
                term *= r.z[s[i]].powi(sites[i]);
            }
            total += term;
        });
        total
    });
    Ok(DVector::from_iterator(basis.len(), amps))
}

/// `‖H v - E v‖ / ‖v‖` for the assembled Bethe vector.
pub fn verify_bethe_vector(r: &BetheRoots, p: &XxzParams) -> Result<f64> {
    let v = bethe_vector(r, p)?;
    let norm = v.norm();
    if !(norm > 1e-300) {
        return Err(Error::numeric("Bethe vector vanishes", norm));
    }
    let h = build_xxz(p)?;
    let e = bethe_energy(r, p)?;
    Ok((&h * &v - v.map(|a| a * e)).norm() / norm)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stochastic(width: usize) -> XxzParams {
        map_params(0.0, 0.0, width).unwrap()
    }

    #[test]
    fn parameter_map() {
        let p = stochastic(6);
        assert!((p.delta + 0.5).abs() < 1e-15);
        assert!((p.phi.re - 2.0 * PI / 3.0).abs() < 1e-14);
        assert!((p.u - Complex64::from_polar(1.0, 2.0 * PI / 18.0)).norm() < 1e-14);
        match p.regime {
            Regime::Gapless { gamma } => assert!((gamma - PI / 3.0).abs() < 1e-14),
            _ => panic!("expected gapless"),
        }
        let p = map_params(2.0 * LN_2, 0.0, 4).unwrap();
        assert!(p.phi.norm() < 1e-7 && (p.u - 1.0).norm() < 1e-7);
        let p = map_params(0.0, -LN_2, 4).unwrap();
        assert!((p.delta + 1.0).abs() < 1e-15);
        let p = map_params(2.0, -1.0, 4).unwrap();
        assert!(p.phi.re == 0.0 && p.phi.im > 0.0);
        assert!(((p.u.powu(2) + p.u.powi(-2)).re - 1f64.exp()).abs() < 1e-12);
        assert!(matches!(p.regime, Regime::Gapped { .. }));
    }

    #[test]
    fn sector_dimension() {
        for (width, dim) in [(2, 2), (4, 6), (6, 20), (8, 70)] {
            assert_eq!(build_xxz(&stochastic(width)).unwrap().nrows(), dim);
        }
    }

    #[test]
    fn width_two_matches_full_space() {
        let p = XxzParams::new(2, -0.5, Complex64::new(0.0, 0.0)).unwrap();
        let sector = build_xxz(&p).unwrap();
        let full = build_xxz_full(2, -0.5, p.u).unwrap();
        // states 01 and 10 sit at indices 1 and 2 of the full space
        for (a, fa) in [(0, 1), (1, 2)] {
            for (b, fb) in [(0, 1), (1, 2)] {
                assert!((sector[(a, b)] - full[(fa, fb)]).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn magnetisation_conserved() {
        let u = Complex64::from_polar(1.0, 0.3);
        for width in [2, 4, 6] {
            let h = build_xxz_full(width, -0.7, u).unwrap();
            for r in 0..h.nrows() {
                for c in 0..h.ncols() {
                    if (r as u32).count_ones() != (c as u32).count_ones() {
                        assert_eq!(h[(r, c)], Complex64::new(0.0, 0.0));
                    }
                }
            }
        }
    }

    #[test]
    fn stochastic_ground_energy() {
        for width in [4, 6] {
            let e = ground_energy_dense(&stochastic(width)).unwrap();
            assert!((e + 0.75 * width as f64).abs() < 1e-10, "L={width}: {e}");
        }
    }

    #[test]
    fn free_fermion_ground_energy() {
        let p = XxzParams::new(4, 0.0, Complex64::new(0.0, 0.0)).unwrap();
        assert!((ground_energy_dense(&p).unwrap() + 2.0 * 2f64.sqrt()).abs() < 1e-12);
        let r = solve_bethe(4, 0.0, Complex64::new(1.0, 0.0)).unwrap();
        let want = [Complex64::from_polar(1.0, -PI / 4.0), Complex64::from_polar(1.0, PI / 4.0)];
        for w in want {
            assert!(r.z.iter().any(|z| (z - w).norm() < 1e-12));
        }
        assert!((bethe_energy(&r, &p).unwrap() + 2.0 * 2f64.sqrt()).abs() < 1e-12);
        assert!(verify_bethe_vector(&r, &p).unwrap() < 1e-10);
    }

    #[test]
    fn bethe_at_stochastic_point() {
        for width in [4, 6] {
            let p = stochastic(width);
            let r = solve_bethe(width, p.delta, p.u).unwrap();
            assert!(r.residual < 1e-10);
            let e = bethe_energy(&r, &p).unwrap();
            assert!((e + 0.75 * width as f64).abs() < 1e-8);
            assert!(verify_bethe_vector(&r, &p).unwrap() < 1e-7);
        }
    }

    #[test]
    fn bethe_width_two_matches_dense() {
        let p = XxzParams::new(2, -0.5, Complex64::new(0.0, 0.0)).unwrap();
        let r = solve_bethe(2, p.delta, p.u).unwrap();
        assert!((bethe_energy(&r, &p).unwrap() - ground_energy_dense(&p).unwrap()).abs() < 1e-8);
    }

    #[test]
    fn twist_reversal() {
        let p = XxzParams::new(6, -0.6, Complex64::new(1.1, 0.0)).unwrap();
        let mut q = p;
        q.u = p.u.inv();
        let a = ground_energy_dense(&p).unwrap();
        let b = ground_energy_dense(&q).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn permutation_signs() {
        let mut count = 0;
        let mut total = 0.0;
        for_each_permutation(4, |p, s| {
            count += 1;
            total += s;
            let inversions = (0..4).flat_map(|i| (i + 1..4).map(move |j| (i, j))).filter(|&(i, j)| p[i] > p[j]).count();
            assert_eq!(s, if inversions % 2 == 0 { 1.0 } else { -1.0 });
        });
        assert_eq!(count, 24);
        assert_eq!(total, 0.0);
    }
}
