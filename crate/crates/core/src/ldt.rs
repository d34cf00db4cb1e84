//! Scaled cumulant generating functions of the avalanche counters and their
//! Legendre transforms in the large-`L` limit.
//!
//! The tiles CGF is `L b(β) + fsc(β)`: a bulk part `b` sewn from two closed
//! forms at `β = -ln 2` and a finite-size part that is `O(1/L)` above and
//! exponentially small below. The global CGF has no bulk part.

use std::f64::consts::{LN_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
pub use crate::generator::Observable;
use crate::numdiff;
use crate::thermo::{self, GappedBranch};

const SQRT3: f64 = 1.732_050_807_568_877_2;

/// `9√3 / (4π)`: coefficient of the global CGF at the stochastic point.
pub const GLOBAL_SCALE: f64 = 9.0 * SQRT3 / (4.0 * PI);

/// Half-width around `β = -ln 2` inside which the bulk value is interpolated
/// between the two branches.
const SEAM: f64 = 1e-6;

/// Domain cap for Legendre-parameter searches.
const PARAM_CAP: f64 = 60.0;

/// `β_c = -ln 2`.
pub const BETA_CRITICAL: f64 = -LN_2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Phase {
    Gapless,
    Gapped,
    Boundary,
}

/// Phase of the tiles tilt `β`.
pub fn phase_of(beta: f64) -> Phase {
    if beta > BETA_CRITICAL {
        Phase::Gapless
    } else if beta < BETA_CRITICAL {
        Phase::Gapped
    } else {
        Phase::Boundary
    }
}

/// A CGF value split into its extensive and finite-size parts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CgfValue {
    pub alpha: f64,
    pub beta: f64,
    pub width: usize,
    pub bulk: f64,
    /// Absent only on the phase boundary of the tiles CGF.
    pub fsc: Option<f64>,
    pub regime: Phase,
}

impl CgfValue {
    pub fn total(&self) -> f64 {
        self.bulk + self.fsc.unwrap_or(0.0)
    }
}

fn check_width(width: usize) -> Result<()> {
    if width < 2 || width % 2 != 0 {
        return Err(invalid(format!("L must be even and >= 2, got {width}")));
    }
    Ok(())
}

/// Gapless branch of the per-site bulk, `(e^β - e^{-β}/4) Y(γ) - 1`.
pub fn bulk_gapless_branch(beta: f64) -> Result<f64> {
    let gamma = thermo::gamma_of_beta(beta);
    let s = gamma.sin();
    Ok(beta.exp() * s * s * thermo::y(gamma)? - 1.0)
}

/// Gapped branch of the per-site bulk, `(e^{-β}/4 - e^β) Ỹ(λ) - 1`.
pub fn bulk_gapped_branch(beta: f64) -> Result<f64> {
    let lambda = thermo::lambda_of_beta(beta);
    let sum = thermo::ytilde_sum_derivs(lambda)?[0];
    Ok(beta.exp() * lambda.sinh() * sum - 1.0)
}

/// Per-site bulk of the tiles CGF, `b(β) = lim Λ₀(0, β) / L`.
pub fn tiles_bulk_per_site(beta: f64) -> Result<f64> {
    if !beta.is_finite() {
        return Err(invalid(format!("beta must be finite, got {beta}")));
    }
    let s = beta - BETA_CRITICAL;
    if s.abs() < SEAM {
        let left = bulk_gapped_branch(BETA_CRITICAL - SEAM)?;
        let right = bulk_gapless_branch(BETA_CRITICAL + SEAM)?;
        return Ok(left + (right - left) * (s + SEAM) / (2.0 * SEAM));
    }
    if s > 0.0 {
        bulk_gapless_branch(beta)
    } else {
        bulk_gapped_branch(beta)
    }
}

/// n-th β-derivative of the per-site bulk by Richardson extrapolation.
pub fn tiles_bulk_derivative(beta: f64, n: u32) -> Result<f64> {
    let (h, levels) = richardson_plan(n);
    differentiate(|b| tiles_bulk_per_site(b), beta, n, h, levels)
}

/// Base step and number of levels for an n-th derivative of the tiles CGF,
/// whose nearest non-smooth point is the transition at distance `ln 2`.
fn richardson_plan(n: u32) -> (f64, usize) {
    match n {
        0 | 1 => (2e-2, 3),
        2 => (5e-2, 3),
        _ => (1e-1, 4),
    }
}

/// The global CGF is analytic well beyond `|α| = 1`; wide steps keep
/// rounding out of the fourth derivative.
const GLOBAL_PLAN: (f64, usize) = (0.4, 4);

fn differentiate(f: impl Fn(f64) -> Result<f64>, x: f64, n: u32, h: f64, levels: usize) -> Result<f64> {
    let failure = std::cell::RefCell::new(None);
    let g = |t: f64| match f(t) {
        Ok(v) => v,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            f64::NAN
        }
    };
    let d = numdiff::richardson(&g, x, n, h, levels);
    match failure.into_inner() {
        Some(e) => Err(e),
        None => Ok(d),
    }
}

/// `L · lim L (finite-size part)` of the tiles CGF above the transition:
/// `π² √(4e^{2β}-1) / (12γ) · (1 - (2/3) π/(π-γ))`.
pub fn tiles_fsc_gapless_coefficient(beta: f64) -> f64 {
    let gamma = thermo::gamma_of_beta(beta);
    let root = 2.0 * beta.exp() * gamma.sin();
    PI * PI * root / (12.0 * gamma) * (1.0 - 2.0 / 3.0 * PI / (PI - gamma))
}

/// Scaled CGF of the tiles counter.
pub fn cgf_tiles(beta: f64, width: usize) -> Result<CgfValue> {
    check_width(width)?;
    let l = width as f64;
    let bulk = l * tiles_bulk_per_site(beta)?;
    let regime = phase_of(beta);
    let fsc = match regime {
        Phase::Gapless => Some(tiles_fsc_gapless_coefficient(beta) / l),
        Phase::Gapped => {
            let thermo::AXi { a, xi } = thermo::a_xi(beta)?;
            Some(a * (-l / xi).exp() / l.sqrt())
        }
        Phase::Boundary => None,
    };
    Ok(CgfValue {
        alpha: 0.0,
        beta,
        width,
        bulk,
        fsc,
        regime,
    })
}

/// `(θ, θ/sin θ)` for `cos θ = c` with `c ≤ 1`, or `(iθ)` continued as
/// `(-θ², θ/sinh θ)` in the squared angle for `c > 1`. Returns the squared
/// angle (negative beyond `c = 1`) and the ratio.
fn half_twist(c: f64) -> (f64, f64) {
    if c <= 1.0 {
        let theta = c.acos();
        let ratio = if theta < 1e-8 { 1.0 } else { theta / theta.sin() };
        (theta * theta, ratio)
    } else {
        let theta = c.acosh();
        let ratio = if theta < 1e-8 { 1.0 } else { theta / theta.sinh() };
        (-theta * theta, ratio)
    }
}

/// `(π/3)² - arccos²(e^{α/2}/2)`, continued past `α = 2 ln 2`.
pub fn global_shape(alpha: f64) -> f64 {
    (PI / 3.0).powi(2) - half_twist(0.5 * (0.5 * alpha).exp()).0
}

/// α-derivative of [`global_shape`].
pub fn global_shape_derivative(alpha: f64) -> f64 {
    let c = 0.5 * (0.5 * alpha).exp();
    c * half_twist(c).1
}

/// Scaled CGF of the global-avalanche counter.
pub fn cgf_global(alpha: f64, width: usize) -> Result<CgfValue> {
    check_width(width)?;
    if !alpha.is_finite() {
        return Err(invalid(format!("alpha must be finite, got {alpha}")));
    }
    Ok(CgfValue {
        alpha,
        beta: 0.0,
        width,
        bulk: 0.0,
        fsc: Some(GLOBAL_SCALE * global_shape(alpha) / width as f64),
        regime: Phase::Gapless,
    })
}

/// Joint scaled CGF `Λ₀(α, β) = -e^β E_L(Δ, u) - 3L/4` with the ground
/// energy replaced by its bulk and leading finite-size terms.
pub fn joint_cgf(alpha: f64, beta: f64, width: usize) -> Result<CgfValue> {
    check_width(width)?;
    if !alpha.is_finite() || !beta.is_finite() {
        return Err(invalid("alpha and beta must be finite"));
    }
    let l = width as f64;
    let regime = phase_of(beta);
    let bulk = match regime {
        Phase::Boundary => l * tiles_bulk_per_site(beta)?,
        _ => -beta.exp() * l * thermo::bulk_energy(-0.5 * (-beta).exp())? - 0.75 * l,
    };
    let c = 0.5 * (0.5 * alpha).exp();
    let fsc = match regime {
        Phase::Gapless => {
            let gamma = thermo::gamma_of_beta(beta);
            let phi_sq = 4.0 * half_twist(c).0;
            Some(-beta.exp() * thermo::fsc_gapless(gamma, phi_sq)? / l)
        }
        Phase::Gapped => {
            let lambda = thermo::lambda_of_beta(beta);
            Some(-beta.exp() * thermo::fsc_gapped(width, lambda, c, GappedBranch::Ground)?)
        }
        Phase::Boundary => None,
    };
    Ok(CgfValue {
        alpha,
        beta,
        width,
        bulk,
        fsc,
        regime,
    })
}

/// Closed-form coefficients `(bulk, fsc)` with `c_n ≈ bulk·L + fsc/L` for
/// the tiles counter.
pub fn tiles_cumulant_coefficients(order: u32) -> Result<(f64, f64)> {
    let p = PI;
    Ok(match order {
        1 => (5.0 / 8.0, -3.0 / 8.0),
        2 => (9.0 * SQRT3 / (2.0 * p) - 11.0 / 6.0, 3.0 * SQRT3 / (8.0 * p) - 0.5),
        3 => (217.0 / 32.0 - 243.0 / (4.0 * p * p), -81.0 / (16.0 * p * p)),
        4 => (
            719.0 / 12.0 - 1701.0 * SQRT3 / (10.0 * p) + 162.0 / (p * p) + 324.0 * SQRT3 / p.powi(3),
            135.0 * SQRT3 / (8.0 * p.powi(3)) + 27.0 / (2.0 * p * p) - 2.0,
        ),
        _ => return Err(invalid(format!("cumulant order must be 1..=4, got {order}"))),
    })
}

/// Closed-form coefficient `g_n` with `c_n ≈ g_n / L` for the global counter.
pub fn global_cumulant_coefficient(order: u32) -> Result<f64> {
    let p = PI;
    Ok(match order {
        1 => 0.75,
        2 => 0.5 - 3.0 * SQRT3 / (8.0 * p),
        3 => 0.5 - 3.0 * SQRT3 / (4.0 * p),
        4 => 5.0 / 6.0 - 3.0 * SQRT3 / (2.0 * p),
        _ => return Err(invalid(format!("cumulant order must be 1..=4, got {order}"))),
    })
}

/// `L c₁,₁ = 1 - 3√3/(8π)`.
pub fn covariance_coefficient() -> f64 {
    1.0 - 3.0 * SQRT3 / (8.0 * PI)
}

/// Relative tolerance of the closed-form vs differenced cumulant check.
pub const CUMULANT_TOL: f64 = 1e-6;

/// Closed-form and differenced versions of one cumulant coefficient.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CumulantCheck {
    pub closed_form: f64,
    pub numeric: f64,
}

impl CumulantCheck {
    pub fn relative_error(&self) -> f64 {
        (self.numeric - self.closed_form).abs() / self.closed_form.abs().max(1e-300)
    }
}

/// Differenced cumulant coefficients of the CGFs at the origin, component by
/// component: `(bulk, fsc)` for tiles and the single coefficient for global.
pub fn cumulant_checks(observable: Observable, order: u32) -> Result<Vec<CumulantCheck>> {
    match observable {
        Observable::Tiles => {
            let (bulk, fsc) = tiles_cumulant_coefficients(order)?;
            let (h, levels) = richardson_plan(order);
            let nb = differentiate(tiles_bulk_per_site, 0.0, order, h, levels)?;
            let nf = differentiate(|b| Ok(tiles_fsc_gapless_coefficient(b)), 0.0, order, h, levels)?;
            Ok(vec![
                CumulantCheck {
                    closed_form: bulk,
                    numeric: nb,
                },
                CumulantCheck {
                    closed_form: fsc,
                    numeric: nf,
                },
            ])
        }
        Observable::Global => {
            let g = global_cumulant_coefficient(order)?;
            let (h, levels) = GLOBAL_PLAN;
            let n = differentiate(|a| Ok(GLOBAL_SCALE * global_shape(a)), 0.0, order, h, levels)?;
            Ok(vec![CumulantCheck {
                closed_form: g,
                numeric: n,
            }])
        }
    }
}

/// Differenced `L c₁,₁` from the joint CGF.
pub fn covariance_check() -> Result<CumulantCheck> {
    let width = 2;
    let failure = std::cell::RefCell::new(None);
    let f = |a: f64, b: f64| match joint_cgf(a, b, width) {
        Ok(v) => v.total() * width as f64,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            f64::NAN
        }
    };
    let numeric = numdiff::richardson_mixed(&f, 0.0, 0.0, 5e-2, 4);
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(CumulantCheck {
        closed_form: covariance_coefficient(),
        numeric,
    })
}

/// Scaled cumulant of order `1..=4` at width `L` from the closed forms,
/// after confirming them against differenced CGFs.
pub fn cumulants(observable: Observable, order: u32, width: usize) -> Result<f64> {
    check_width(width)?;
    for check in cumulant_checks(observable, order)? {
        if check.relative_error() > CUMULANT_TOL {
            return Err(Error::numeric(
                format!("closed-form cumulant of order {order} disagrees with the differenced CGF"),
                check.relative_error(),
            ));
        }
    }
    let l = width as f64;
    Ok(match observable {
        Observable::Tiles => {
            let (bulk, fsc) = tiles_cumulant_coefficients(order)?;
            bulk * l + fsc / l
        }
        Observable::Global => global_cumulant_coefficient(order)? / l,
    })
}

/// A point `(y, I(y))` of a rate function with its Legendre parameter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub y: f64,
    /// `+∞` outside the support.
    pub rate: f64,
    /// `β*` (tiles) or `α*` (global); `±∞` at the edges of the support.
    pub legendre_param: f64,
}

/// Solves `f(x) = target` for increasing `f` by bracket expansion, bisection
/// and a secant polish.
fn solve_increasing(f: impl Fn(f64) -> Result<f64>, target: f64, start: (f64, f64)) -> Result<f64> {
    let (mut lo, mut hi) = start;
    let mut flo = f(lo)?;
    while flo > target {
        if lo < -PARAM_CAP {
            return Err(Error::numeric(
                format!("cannot bracket root below {lo} (target {target})"),
                flo - target,
            ));
        }
        hi = lo;
        lo = 2.0 * lo - 1.0;
        flo = f(lo)?;
    }
    let mut fhi = f(hi)?;
    while fhi < target {
        if hi > PARAM_CAP {
            return Err(Error::numeric(
                format!("cannot bracket root above {hi} (target {target})"),
                target - fhi,
            ));
        }
        lo = hi;
        flo = fhi;
        hi = 2.0 * hi + 1.0;
        fhi = f(hi)?;
    }
    for _ in 0..200 {
        if hi - lo < 1e-13 * (1.0 + lo.abs()) {
            break;
        }
        // regula falsi step guarded by bisection
        let mut mid = lo + (target - flo) * (hi - lo) / (fhi - flo);
        if !(mid > lo + 0.05 * (hi - lo) && mid < hi - 0.05 * (hi - lo)) {
            mid = 0.5 * (lo + hi);
        }
        let fm = f(mid)?;
        if fm < target {
            lo = mid;
            flo = fm;
        } else {
            hi = mid;
            fhi = fm;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `β` solving `b'(β) = ν` for the per-site tiles rate `ν > 0`.
pub fn beta_of_rate(nu: f64) -> Result<f64> {
    if !(nu > 0.0) || !nu.is_finite() {
        return Err(invalid(format!("tiles rate per site must be positive, got {nu}")));
    }
    solve_increasing(|b| tiles_bulk_derivative(b, 1), nu, (-1.0, 1.0))
}

/// Per-site tiles rate function `i(ν) = sup_β (βν - b(β))`.
pub fn tiles_rate_per_site(nu: f64) -> Result<RatePoint> {
    if nu <= 0.0 {
        return Ok(RatePoint {
            y: nu,
            rate: f64::INFINITY,
            legendre_param: f64::NEG_INFINITY,
        });
    }
    let beta = beta_of_rate(nu)?;
    Ok(RatePoint {
        y: nu,
        rate: (beta * nu - tiles_bulk_per_site(beta)?).max(0.0),
        legendre_param: beta,
    })
}

/// Rate function of the global counter in the scaled form `L I` versus
/// `x = L y`: `sup_α (α x - (9√3/4π) shape(α))`.
pub fn global_rate_scaled(x: f64) -> Result<RatePoint> {
    if x < 0.0 {
        return Ok(RatePoint {
            y: x,
            rate: f64::INFINITY,
            legendre_param: f64::NEG_INFINITY,
        });
    }
    if x == 0.0 {
        // α → -∞: shape → (π/3)² - (π/2)²
        return Ok(RatePoint {
            y: 0.0,
            rate: -GLOBAL_SCALE * ((PI / 3.0).powi(2) - (PI / 2.0).powi(2)),
            legendre_param: f64::NEG_INFINITY,
        });
    }
    let alpha = solve_increasing(|a| Ok(GLOBAL_SCALE * global_shape_derivative(a)), x, (-1.0, 1.0))?;
    Ok(RatePoint {
        y: x,
        rate: (alpha * x - GLOBAL_SCALE * global_shape(alpha)).max(0.0),
        legendre_param: alpha,
    })
}

/// Rate function of `observable` at width `L` on a grid of time-averaged
/// counts `y`. Tiles: `I(y) = L i(y/L)`; global: `I(y) = (L I)(L y) / L`.
pub fn rate_function(observable: Observable, width: usize, ys: &[f64]) -> Result<Vec<RatePoint>> {
    check_width(width)?;
    let l = width as f64;
    ys.iter()
        .map(|&y| match observable {
            Observable::Tiles => tiles_rate_per_site(y / l).map(|p| RatePoint {
                y,
                rate: l * p.rate,
                legendre_param: p.legendre_param,
            }),
            Observable::Global => global_rate_scaled(l * y).map(|p| RatePoint {
                y,
                rate: p.rate / l,
                legendre_param: p.legendre_param,
            }),
        })
        .collect()
}

/// `n_c`: per-site tiles rate at the transition.
pub fn critical_rate() -> Result<f64> {
    tiles_bulk_derivative(BETA_CRITICAL, 1)
}

/// `g(β) = π √(4e^{2β}-1) / (2γ(π-γ))` for `β > -ln 2`.
pub fn g_factor(beta: f64) -> Result<f64> {
    if !(beta > BETA_CRITICAL) {
        return Err(invalid(format!("g(beta) needs beta > -ln 2, got {beta}")));
    }
    let gamma = thermo::gamma_of_beta(beta);
    Ok(PI * beta.exp() * gamma.sin() / (gamma * (PI - gamma)))
}

/// Conditional scaled CGF of the global counter given the tiles rate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionalCgf {
    pub alpha: f64,
    pub y: f64,
    pub width: usize,
    pub beta: f64,
    pub phase: Phase,
    /// Absent at the critical rate.
    pub value: Option<f64>,
    /// Effective unit of time: the conditional CGF equals the scaled
    /// global CGF (critical phase) or `e^{α/2} - 1` (non-critical phase)
    /// divided by `tau`.
    pub tau: Option<f64>,
}

/// `Λ₀¹(α, β(y)) - Λ₀¹(0, β(y))` with `β(y)` solving `L b'(β) = y`.
pub fn conditional_cgf(alpha: f64, y: f64, width: usize) -> Result<ConditionalCgf> {
    check_width(width)?;
    if !(y > 0.0) {
        return Err(invalid(format!("conditioning rate must be positive, got {y}")));
    }
    let l = width as f64;
    let beta = beta_of_rate(y / l)?;
    let mut out = ConditionalCgf {
        alpha,
        y,
        width,
        beta,
        phase: phase_of(beta),
        value: None,
        tau: None,
    };
    if (beta - BETA_CRITICAL).abs() < 1e-9 {
        out.phase = Phase::Boundary;
        return Ok(out);
    }
    match out.phase {
        Phase::Gapless => {
            let g = g_factor(beta)?;
            out.value = Some(g / l * global_shape(alpha));
            out.tau = Some(GLOBAL_SCALE * l / g);
        }
        Phase::Gapped => {
            let thermo::AXi { a, xi } = thermo::a_xi(beta)?;
            let scale = a * (-l / xi).exp() / l.sqrt();
            out.value = Some((0.5 * alpha).exp_m1() * scale);
            out.tau = Some(1.0 / scale);
        }
        Phase::Boundary => {}
    }
    Ok(out)
}

/// One-sided limits at `β = -ln 2` of the two bulk branches: value and
/// derivatives of order 1..=3.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SewingReport {
    pub gapped: [f64; 4],
    pub gapless: [f64; 4],
}

impl SewingReport {
    pub fn max_mismatch(&self) -> f64 {
        self.gapped
            .iter()
            .zip(&self.gapless)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

const SEWING_OFFSET: f64 = 1e-4;
const SEWING_SPACING: f64 = 5e-3;
const SEWING_NODES: usize = 9;

/// Extrapolates each branch of the per-site bulk to the transition from
/// nodes starting `10⁻⁴` away on its own side, by polynomial interpolation.
pub fn sewing_limits() -> Result<SewingReport> {
    let side = |sign: f64, branch: fn(f64) -> Result<f64>| -> Result<[f64; 4]> {
        let xs: Vec<f64> = (0..SEWING_NODES)
            .map(|k| sign * (SEWING_OFFSET + k as f64 * SEWING_SPACING))
            .collect();
        let ys = xs
            .iter()
            .map(|&x| branch(BETA_CRITICAL + x))
            .collect::<Result<Vec<f64>>>()?;
        Ok(taylor_at_zero(&xs, &ys))
    };
    Ok(SewingReport {
        gapped: side(-1.0, bulk_gapped_branch)?,
        gapless: side(1.0, bulk_gapless_branch)?,
    })
}

/// Value and first three derivatives at 0 of the interpolating polynomial
/// through `(xs, ys)`.
fn taylor_at_zero(xs: &[f64], ys: &[f64]) -> [f64; 4] {
    // Newton divided differences, then expand the Newton form about 0
    let n = xs.len();
    let mut coef = ys.to_vec();
    for j in 1..n {
        for i in (j..n).rev() {
            coef[i] = (coef[i] - coef[i - 1]) / (xs[i] - xs[i - j]);
        }
    }
    // Horner on polynomials: p(x) = c0 + (x - x0)(c1 + (x - x1)(...))
    let mut poly = vec![0.0; n];
    poly[0] = coef[n - 1];
    let mut deg = 0;
    for k in (0..n - 1).rev() {
        // poly <- poly * (x - xs[k]) + coef[k]
        deg += 1;
        for i in (1..=deg).rev() {
            poly[i] = poly[i - 1] - xs[k] * poly[i];
        }
        poly[0] = coef[k] - xs[k] * poly[0];
    }
    [poly[0], poly[1], 2.0 * poly[2], 6.0 * poly[3]]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stochastic_point_is_zero() {
        for width in [4, 10, 100] {
            assert!(cgf_tiles(0.0, width).unwrap().total().abs() < 1e-10);
            assert!(cgf_global(0.0, width).unwrap().total().abs() < 1e-15);
            assert!(joint_cgf(0.0, 0.0, width).unwrap().total().abs() < 1e-10);
        }
    }

    #[test]
    fn mean_tiles_per_site() {
        assert!((tiles_bulk_derivative(0.0, 1).unwrap() - 0.625).abs() < 1e-10);
    }

    #[test]
    fn global_derivatives() {
        let f = |a: f64| cgf_global(a, 1 * 2).unwrap().total() * 2.0;
        let d1 = numdiff::richardson(&f, 0.0, 1, 1e-2, 3);
        let d2 = numdiff::richardson(&f, 0.0, 2, 1e-2, 3);
        assert!((d1 - 0.75).abs() < 1e-9);
        assert!((d2 - (0.5 - 3.0 * SQRT3 / (8.0 * PI))).abs() < 1e-8);
        assert!((global_shape_derivative(2.0 * LN_2) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn global_continuation_is_smooth() {
        let a0 = 2.0 * LN_2;
        let left = global_shape(a0 - 1e-7);
        let right = global_shape(a0 + 1e-7);
        assert!((left - right).abs() < 1e-6);
        let dl = global_shape_derivative(a0 - 1e-4);
        let dr = global_shape_derivative(a0 + 1e-4);
        assert!((dl - dr).abs() < 1e-3);
    }

    #[test]
    fn joint_reduces_to_marginals() {
        for width in [8, 50] {
            for beta in [-0.4, 0.2, 0.9, -1.3] {
                let j = joint_cgf(0.0, beta, width).unwrap();
                let t = cgf_tiles(beta, width).unwrap();
                assert!((j.bulk - t.bulk).abs() < 1e-9 * width as f64, "beta {beta}");
                assert!((j.fsc.unwrap() - t.fsc.unwrap()).abs() < 1e-12, "beta {beta}");
            }
            for alpha in [-1.0, 0.3, 2.0] {
                let j = joint_cgf(alpha, 0.0, width).unwrap();
                let g = cgf_global(alpha, width).unwrap();
                assert!((j.total() - g.total()).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn cumulant_closed_forms() {
        for order in 1..=4 {
            for obs in [Observable::Tiles, Observable::Global] {
                for c in cumulant_checks(obs, order).unwrap() {
                    assert!(c.relative_error() < CUMULANT_TOL, "{obs:?} {order}: {c:?}");
                }
            }
        }
        let c = covariance_check().unwrap();
        assert!((c.numeric - 0.793252).abs() < 1e-6, "{c:?}");
        assert!((cumulants(Observable::Tiles, 1, 8).unwrap() - (5.0 - 3.0 / 64.0)).abs() < 1e-12);
    }

    #[test]
    fn rate_zero_at_means() {
        let p = tiles_rate_per_site(0.625).unwrap();
        assert!(p.rate.abs() < 1e-12 && p.legendre_param.abs() < 1e-9);
        let g = global_rate_scaled(0.75).unwrap();
        assert!(g.rate.abs() < 1e-12 && g.legendre_param.abs() < 1e-9);
    }

    #[test]
    fn critical_rate_value() {
        let nc = critical_rate().unwrap();
        assert!((nc - (4.0 * LN_2 - 1.0) / 6.0).abs() < 1e-8, "{nc}");
    }

    #[test]
    fn conditional_matches_global_at_typical_rate() {
        let width = 40;
        let y = 0.625 * width as f64;
        for alpha in [-0.5, 0.4, 1.8] {
            let c = conditional_cgf(alpha, y, width).unwrap();
            let g = cgf_global(alpha, width).unwrap().total();
            assert!((c.value.unwrap() - g).abs() < 1e-9, "{c:?} vs {g}");
        }
        assert!((g_factor(0.0).unwrap() - GLOBAL_SCALE).abs() < 1e-12);
        assert_eq!(conditional_cgf(0.0, 0.1 * width as f64, width).unwrap().value, Some(0.0));
    }

    #[test]
    fn taylor_of_cubic() {
        let xs = [0.1, 0.3, 0.4, 0.7, 0.9];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 - x + 3.0 * x * x + 0.5 * x * x * x).collect();
        let t = taylor_at_zero(&xs, &ys);
        for (a, b) in t.iter().zip([2.0, -1.0, 6.0, 3.0]) {
            assert!((a - b).abs() < 1e-10, "{t:?}");
        }
    }
}
