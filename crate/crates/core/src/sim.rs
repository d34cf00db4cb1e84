//! Continuous-time Monte Carlo of the tile-drop dynamics.
//!
//! Every site carries a unit-rate Poisson clock, so the next drop happens
//! after an `Exp(L)` waiting time at a uniformly chosen site.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dyck::{self, DropKind, DyckConfig};
use crate::error::{invalid, Result};

/// Default batch length in units of time.
pub const DEFAULT_BATCH_LENGTH: f64 = 1e3;
/// Minimum number of batches for variance estimates.
pub const MIN_BATCHES: usize = 16;
/// Largest width for which state occupation times can be recorded.
pub const MAX_OCCUPATION_WIDTH: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub batch_length: f64,
    /// Record the time spent in each state (rank order).
    pub record_occupation: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            batch_length: DEFAULT_BATCH_LENGTH,
            record_occupation: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryStats {
    pub width: usize,
    pub seed: u64,
    pub stream: u64,
    pub t_total: f64,
    /// Tiles removed by avalanches, dropped tiles included.
    pub n_tiles: u64,
    /// Global avalanches.
    pub n_global: u64,
    /// Local and global avalanches.
    pub n_avalanches: u64,
    /// Tiles that stuck to the interface.
    pub n_adsorbed: u64,
    pub batch_length: f64,
    /// Per-batch increments of `n_tiles` over complete batches.
    pub batch_tiles: Vec<u64>,
    /// Per-batch increments of `n_global` over complete batches.
    pub batch_global: Vec<u64>,
    /// Time spent in each state, in rank order, when recorded.
    pub occupation: Option<Vec<f64>>,
    pub final_state: DyckConfig,
}

/// Stream id of trajectory `index` under master seed `seed`.
pub fn stream_id(seed: u64, index: u64) -> u64 {
    seed ^ index
}

/// One trajectory from the substrate up to time `t_max`.
pub fn run_trajectory(width: usize, t_max: f64, seed: u64) -> Result<TrajectoryStats> {
    run_trajectory_with(width, t_max, seed, 0, &SimConfig::default())
}

pub fn run_trajectory_with(
    width: usize,
    t_max: f64,
    seed: u64,
    index: u64,
    config: &SimConfig,
) -> Result<TrajectoryStats> {
    if !(t_max > 0.0) || !t_max.is_finite() {
        return Err(invalid(format!("t_max must be positive and finite, got {t_max}")));
    }
    if !(config.batch_length > 0.0) {
        return Err(invalid(format!("batch length must be positive, got {}", config.batch_length)));
    }
    if config.record_occupation && width > MAX_OCCUPATION_WIDTH {
        return Err(invalid(format!(
            "occupation recording is limited to L <= {MAX_OCCUPATION_WIDTH}, got {width}"
        )));
    }
    let start = dyck::substrate(width)?;
    let mut h = start.heights().to_vec();
    let stream = stream_id(seed, index);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let clock = Exp::new(width as f64).expect("positive rate");

    let n_batches = (t_max / config.batch_length).floor() as usize;
    let mut batch_tiles = vec![0u64; n_batches];
    let mut batch_global = vec![0u64; n_batches];
    let mut occupation = config
        .record_occupation
        .then(|| vec![0.0; dyck::state_count(width).expect("checked width") as usize]);

    let (mut n_tiles, mut n_global, mut n_avalanches, mut n_adsorbed) = (0u64, 0u64, 0u64, 0u64);
    let mut t = 0.0;
    loop {
        let dt: f64 = clock.sample(&mut rng);
        if let Some(occ) = occupation.as_mut() {
            let idx = current_rank(&h);
            occ[idx] += dt.min(t_max - t);
        }
        t += dt;
        if t > t_max {
            break;
        }
        let site = rng.random_range(0..width);
        let (tiles, kind) = dyck::relax(&mut h, site);
        let batch = (t / config.batch_length) as usize;
        match kind {
            DropKind::Reflection => {}
            DropKind::Adsorption => n_adsorbed += 1,
            DropKind::LocalAvalanche | DropKind::GlobalAvalanche => {
                n_avalanches += 1;
                n_tiles += tiles as u64;
                if batch < n_batches {
                    batch_tiles[batch] += tiles as u64;
                }
                if kind == DropKind::GlobalAvalanche {
                    n_global += 1;
                    if batch < n_batches {
                        batch_global[batch] += 1;
                    }
                }
            }
        }
    }
    Ok(TrajectoryStats {
        width,
        seed,
        stream,
        t_total: t_max,
        n_tiles,
        n_global,
        n_avalanches,
        n_adsorbed,
        batch_length: config.batch_length,
        batch_tiles,
        batch_global,
        occupation,
        final_state: DyckConfig::new(h)?,
    })
}

fn current_rank(h: &[i32]) -> usize {
    DyckConfig::new(h.to_vec())
        .and_then(|c| c.rank())
        .expect("dynamics preserves validity")
        .index as usize
}

/// `count` independent trajectories, run in parallel and returned in index
/// order.
pub fn run_ensemble(width: usize, t_max: f64, seed: u64, count: usize, config: &SimConfig) -> Result<Vec<TrajectoryStats>> {
    (0..count as u64)
        .into_par_iter()
        .map(|i| run_trajectory_with(width, t_max, seed, i, config))
        .collect()
}

/// Long-time scaled mean and variance of one counter with standard errors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CounterEstimate {
    pub c1: f64,
    pub c2: f64,
    pub stderr1: f64,
    pub stderr2: f64,
    pub batches: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CumulantEstimates {
    pub tiles: CounterEstimate,
    pub global: CounterEstimate,
}

/// Batch-means estimates pooled over all complete batches of the ensemble.
pub fn estimate_cumulants(ensemble: &[TrajectoryStats]) -> Result<CumulantEstimates> {
    let Some(first) = ensemble.first() else {
        return Err(invalid("empty trajectory ensemble"));
    };
    if ensemble.iter().any(|s| s.batch_length != first.batch_length || s.width != first.width) {
        return Err(invalid("trajectories differ in width or batch length"));
    }
    let tiles: Vec<f64> = ensemble.iter().flat_map(|s| s.batch_tiles.iter().map(|&x| x as f64)).collect();
    let global: Vec<f64> = ensemble.iter().flat_map(|s| s.batch_global.iter().map(|&x| x as f64)).collect();
    if tiles.len() < MIN_BATCHES {
        return Err(invalid(format!(
            "at least {MIN_BATCHES} complete batches are needed, got {}",
            tiles.len()
        )));
    }
    Ok(CumulantEstimates {
        tiles: batch_estimate(&tiles, first.batch_length),
        global: batch_estimate(&global, first.batch_length),
    })
}

fn batch_estimate(xs: &[f64], tb: f64) -> CounterEstimate {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
    // large-sample variance of the sample variance
    let var_of_var = ((m4 - var * var * (n - 3.0) / (n - 1.0)) / n).max(0.0);
    CounterEstimate {
        c1: mean / tb,
        c2: var / tb,
        stderr1: (var / n).sqrt() / tb,
        stderr2: var_of_var.sqrt() / tb,
        batches: xs.len(),
    }
}

/// Empirical state distribution from recorded occupation times.
pub fn occupation_fractions(ensemble: &[TrajectoryStats]) -> Result<Vec<f64>> {
    let mut total: Option<Vec<f64>> = None;
    for s in ensemble {
        let occ = s
            .occupation
            .as_ref()
            .ok_or_else(|| invalid("trajectory was run without occupation recording"))?;
        match total.as_mut() {
            None => total = Some(occ.clone()),
            Some(t) => t.iter_mut().zip(occ).for_each(|(a, b)| *a += b),
        }
    }
    let mut total = total.ok_or_else(|| invalid("empty trajectory ensemble"))?;
    let sum: f64 = total.iter().sum();
    total.iter_mut().for_each(|x| *x /= sum);
    Ok(total)
}
