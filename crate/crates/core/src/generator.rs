//! The forward generator of the model, tilted by the avalanche counters.
//!
//! Off-diagonal entries are the unit drop rates reweighted by
//! `exp(alpha * global + beta * tiles_removed)`; the diagonal holds minus the
//! number of non-reflecting sites. At `alpha = beta = 0` this is the Markov
//! generator itself, and for real `(alpha, beta)` its Perron root is the
//! scaled cumulant generating function of the two counters.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dyck::{self, DyckConfig, MAX_ENUMERATION_WIDTH};
use crate::error::{Error, Result};
use crate::linalg;
use crate::numdiff;
use crate::xxz;

/// Dimension up to which eigen-problems are solved densely.
pub const DENSE_LIMIT: usize = 1000;

const POWER_MAX_ITER: usize = 2_000_000;

/// Time-integrated counter of the avalanche dynamics.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Observable {
    /// Tiles removed by local and global avalanches.
    Tiles,
    /// Number of global avalanches.
    Global,
}

/// One non-reflecting drop out of a source state.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Event {
    pub target: u32,
    pub tiles: u32,
    pub global: bool,
}

/// Parameter-independent structure of the generator: every state with its
/// non-reflecting drops and its peak count.
#[derive(Clone, Debug)]
pub struct TransitionTable {
    pub width: usize,
    pub states: Vec<DyckConfig>,
    pub events: Vec<Vec<Event>>,
    pub peaks: Vec<u32>,
}

impl TransitionTable {
    pub fn new(width: usize) -> Result<Self> {
        if width > MAX_ENUMERATION_WIDTH {
            return Err(Error::ResourceLimit(format!(
                "generator enumeration is limited to L <= {MAX_ENUMERATION_WIDTH}, got {width}"
            )));
        }
        let states = dyck::enumerate(width)?;
        let rows: Vec<(Vec<Event>, u32)> = states
            .par_iter()
            .map(|c| {
                let mut events = Vec::with_capacity(width);
                let mut peaks = 0;
                for site in 1..=width {
                    let out = c.drop_tile(site).expect("site in range");
                    if out.kind == dyck::DropKind::Reflection {
                        peaks += 1;
                        continue;
                    }
                    let target = out.next.rank().expect("rankable width").index as u32;
                    events.push(Event {
                        target,
                        tiles: out.tiles_removed,
                        global: out.global,
                    });
                }
                (events, peaks)
            })
            .collect();
        let (events, peaks) = rows.into_iter().unzip();
        Ok(TransitionTable {
            width,
            states,
            events,
            peaks,
        })
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }
}

/// Sparse tilted generator in compressed-column form.
#[derive(Clone, Debug)]
pub struct DeformedGenerator {
    pub width: usize,
    pub alpha: f64,
    pub beta: f64,
    col_ptr: Vec<usize>,
    row_idx: Vec<u32>,
    values: Vec<f64>,
    diagonal: Vec<f64>,
}

/// Builds the tilted generator for width `width` at `(alpha, beta)`.
pub fn build_generator(width: usize, alpha: f64, beta: f64) -> Result<DeformedGenerator> {
    let table = TransitionTable::new(width)?;
    Ok(DeformedGenerator::from_table(&table, alpha, beta))
}

impl DeformedGenerator {
    pub fn from_table(table: &TransitionTable, alpha: f64, beta: f64) -> Self {
        let n = table.dim();
        let mut col_ptr = Vec::with_capacity(n + 1);
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        col_ptr.push(0);
        for events in &table.events {
            // merge drops that lead to the same target
            let mut col: Vec<(u32, f64)> = events
                .iter()
                .map(|e| {
                    let g = if e.global { 1.0 } else { 0.0 };
                    (e.target, (alpha * g + beta * e.tiles as f64).exp())
                })
                .collect();
            col.sort_by_key(|&(r, _)| r);
            let mut k = 0;
            while k < col.len() {
                let (r, mut w) = col[k];
                k += 1;
                while k < col.len() && col[k].0 == r {
                    w += col[k].1;
                    k += 1;
                }
                row_idx.push(r);
                values.push(w);
            }
            col_ptr.push(row_idx.len());
        }
        let diagonal = table
            .peaks
            .iter()
            .map(|&p| -((table.width as u32 - p) as f64))
            .collect();
        DeformedGenerator {
            width: table.width,
            alpha,
            beta,
            col_ptr,
            row_idx,
            values,
            diagonal,
        }
    }

    pub fn dim(&self) -> usize {
        self.diagonal.len()
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    /// Off-diagonal entries of column `col` as `(row, weight)` pairs.
    pub fn column(&self, col: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.col_ptr[col]..self.col_ptr[col + 1];
        self.row_idx[range.clone()]
            .iter()
            .zip(&self.values[range])
            .map(|(&r, &w)| (r as usize, w))
    }

    /// Entry `(row, col)`.
    pub fn entry(&self, row: usize, col: usize) -> f64 {
        let off: f64 = self.column(col).filter(|&(r, _)| r == row).map(|(_, w)| w).sum();
        if row == col {
            off + self.diagonal[col]
        } else {
            off
        }
    }

    /// `y = G x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y: Vec<f64> = self.diagonal.iter().zip(x).map(|(d, v)| d * v).collect();
        for (col, &xc) in x.iter().enumerate() {
            for (r, w) in self.column(col) {
                y[r] += w * xc;
            }
        }
        y
    }

    pub fn column_sums(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|c| self.diagonal[c] + self.column(c).map(|(_, w)| w).sum::<f64>())
            .collect()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for c in 0..n {
            m[(c, c)] += self.diagonal[c];
            for (r, w) in self.column(c) {
                m[(r, c)] += w;
            }
        }
        m
    }

    /// Full spectrum (dense).
    pub fn spectrum(&self) -> Result<Vec<Complex64>> {
        if self.dim() > DENSE_LIMIT {
            return Err(Error::ResourceLimit(format!(
                "full spectrum needs a dense solve, dimension {} exceeds {DENSE_LIMIT}",
                self.dim()
            )));
        }
        Ok(linalg::eigenvalues_real(&self.to_dense()))
    }
}

/// Perron root of the tilted generator.
///
/// Dense non-symmetric solve up to [`DENSE_LIMIT`], shifted power iteration
/// beyond.
pub fn largest_eigenvalue(g: &DeformedGenerator) -> Result<f64> {
    if g.dim() <= DENSE_LIMIT {
        let ev = g.spectrum()?;
        let top = ev
            .iter()
            .max_by(|a, b| a.re.total_cmp(&b.re))
            .copied()
            .expect("non-empty spectrum");
        if top.im.abs() > 1e-8 {
            return Err(Error::numeric(
                "eigenvalue with largest real part is not real",
                top.im.abs(),
            ));
        }
        Ok(top.re)
    } else {
        perron_power(g, 1e-12, 1e-10).map(|(lambda, _)| lambda)
    }
}

/// Shifted power iteration on `G + L·1`, which is entrywise non-negative.
///
/// Returns the Perron root and the positive Perron vector normalised to unit
/// sum. Stops when the eigenvalue changes by less than `delta_tol` and the
/// residual `‖G v − λ v‖∞ / ‖v‖∞` is below `residual_tol`.
pub fn perron_power(g: &DeformedGenerator, delta_tol: f64, residual_tol: f64) -> Result<(f64, Vec<f64>)> {
    let shift = g.width as f64;
    let n = g.dim();
    let mut v = vec![1.0 / n as f64; n];
    let mut lambda = f64::NAN;
    let mut residual = f64::INFINITY;
    for _ in 0..POWER_MAX_ITER {
        let gv = g.apply(&v);
        let sum_v: f64 = v.iter().sum();
        let next_lambda = gv.iter().sum::<f64>() / sum_v;
        let vmax = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        residual = gv
            .iter()
            .zip(&v)
            .map(|(a, b)| (a - next_lambda * b).abs())
            .fold(0.0, f64::max)
            / vmax;
        let delta = (next_lambda - lambda).abs();
        lambda = next_lambda;
        if delta < delta_tol && residual < residual_tol {
            let total: f64 = v.iter().sum();
            v.iter_mut().for_each(|x| *x /= total);
            return Ok((lambda, v));
        }
        let mut w: Vec<f64> = gv.iter().zip(&v).map(|(a, b)| a + shift * b).collect();
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= total);
        v = w;
    }
    Err(Error::numeric(
        format!("power iteration did not converge in {POWER_MAX_ITER} steps (lambda ≈ {lambda})"),
        residual,
    ))
}

/// Stationary distribution of the untilted dynamics.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StationaryState {
    pub width: usize,
    pub states: Vec<DyckConfig>,
    /// Probabilities in rank order, summing to one.
    pub probabilities: Vec<f64>,
    /// The same vector rescaled so that its smallest entry is one.
    pub integer_form: Vec<f64>,
    /// Largest distance of an `integer_form` entry to the nearest integer.
    pub max_integer_deviation: f64,
    /// `‖G π‖∞` for the untilted generator.
    pub residual: f64,
}

/// Tolerance of the integrality check on `integer_form` (enforced for L ≤ 8).
pub const INTEGRALITY_TOL: f64 = 1e-6;

pub fn stationary_state(width: usize) -> Result<StationaryState> {
    let table = TransitionTable::new(width)?;
    let g = DeformedGenerator::from_table(&table, 0.0, 0.0);
    let mut p: Vec<f64> = if g.dim() <= DENSE_LIMIT * 4 {
        let dense = g.to_dense();
        let x = linalg::kernel_vector(&dense, 0)?;
        x.iter().copied().collect()
    } else {
        perron_power(&g, 1e-15, 1e-13)?.1
    };
    if p.iter().any(|&x| x <= 0.0) {
        return Err(Error::numeric(
            "stationary vector has non-positive entries",
            p.iter().cloned().fold(f64::INFINITY, f64::min),
        ));
    }
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= total);
    let residual = g.apply(&p).iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let min = p.iter().cloned().fold(f64::INFINITY, f64::min);
    let integer_form: Vec<f64> = p.iter().map(|x| x / min).collect();
    let max_integer_deviation = integer_form
        .iter()
        .map(|x| (x - x.round()).abs())
        .fold(0.0, f64::max);
    if width <= 8 && max_integer_deviation > INTEGRALITY_TOL {
        return Err(Error::numeric(
            "integer form of the stationary vector is not integral",
            max_integer_deviation,
        ));
    }
    Ok(StationaryState {
        width,
        states: table.states,
        probabilities: p,
        integer_form,
        max_integer_deviation,
        residual,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationaryObservables {
    pub avg_peaks: f64,
    pub prob_global_susceptible: f64,
    pub mean_tiles_rate: f64,
    pub mean_global_rate: f64,
}

pub fn stationary_observables(s: &StationaryState) -> StationaryObservables {
    let mut obs = StationaryObservables {
        avg_peaks: 0.0,
        prob_global_susceptible: 0.0,
        mean_tiles_rate: 0.0,
        mean_global_rate: 0.0,
    };
    for (c, &p) in s.states.iter().zip(&s.probabilities) {
        let mut tiles = 0u32;
        let mut globals = 0u32;
        let mut peaks = 0u32;
        for site in 1..=c.width() {
            let out = c.drop_tile(site).expect("site in range");
            tiles += out.tiles_removed;
            globals += out.global as u32;
            peaks += (out.kind == dyck::DropKind::Reflection) as u32;
        }
        obs.avg_peaks += p * peaks as f64;
        obs.mean_tiles_rate += p * tiles as f64;
        obs.mean_global_rate += p * globals as f64;
        if globals > 0 {
            obs.prob_global_susceptible += p;
        }
    }
    obs
}

/// Derivative of the Perron root with respect to one tilt parameter at the
/// origin, by Richardson-extrapolated central differences (base step 1e-2,
/// three levels).
pub fn perron_derivative(width: usize, observable: Observable, order: u32) -> Result<f64> {
    let table = TransitionTable::new(width)?;
    perron_derivative_at(&table, observable, order, 0.0, 0.0)
}

/// As [`perron_derivative`], at an arbitrary point `(alpha, beta)`.
pub fn perron_derivative_at(
    table: &TransitionTable,
    observable: Observable,
    order: u32,
    alpha: f64,
    beta: f64,
) -> Result<f64> {
    let failure = std::cell::RefCell::new(None);
    let f = |t: f64| {
        let (a, b) = match observable {
            Observable::Tiles => (alpha, beta + t),
            Observable::Global => (alpha + t, beta),
        };
        match largest_eigenvalue(&DeformedGenerator::from_table(table, a, b)) {
            Ok(v) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        }
    };
    let d = numdiff::richardson(&f, 0.0, order, 1e-2, 3);
    match failure.into_inner() {
        Some(e) => Err(e),
        None => Ok(d),
    }
}

/// Largest distance between the generator spectrum and the mapped XXZ
/// spectrum `{ -e^β E - 3L/4 }` in the zero-magnetisation sector.
pub fn spectral_bridge(width: usize, alpha: f64, beta: f64) -> Result<f64> {
    let g = build_generator(width, alpha, beta)?;
    let lhs = g.spectrum()?;
    let params = xxz::map_params(alpha, beta, width)?;
    let energies = xxz::spectrum_dense(&params)?;
    let rhs: Vec<Complex64> = energies
        .iter()
        .map(|e| -beta.exp() * e - 0.75 * width as f64)
        .collect();
    Ok(linalg::spectrum_distance(&lhs, &rhs))
}

/// Kernel residual helper for tests and reports.
pub fn kernel_residual(g: &DeformedGenerator, v: &[f64]) -> f64 {
    let x = DVector::from_column_slice(v);
    let y = g.apply(x.as_slice());
    y.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}
