//! Subcommand definitions and their evaluation.

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Value};

use rpm::generator::{self, Observable};
use rpm::{appendix, dyck, ldt, sim, xxz, Error, Result};

use crate::output::{parse_grid, Cell, Table};
use crate::record::{num, opt, RunRecord};

#[derive(Debug, Parser)]
#[command(name = "rpm", version, about = "Avalanche statistics of the periodic raise and peel model")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    #[command(flatten)]
    pub io: IoArgs,
}

#[derive(Debug, Args, Clone, Default)]
pub struct IoArgs {
    /// Write the output to FILE instead of standard output.
    #[arg(long, global = true, value_name = "FILE")]
    pub out: Option<std::path::PathBuf>,
    /// Emit CSV instead of a JSON record.
    #[arg(long, global = true, conflicts_with = "table")]
    pub csv: bool,
    /// Emit an aligned human-readable table instead of a JSON record.
    #[arg(long, global = true)]
    pub table: bool,
    /// Worker threads for grid and trajectory evaluation.
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CgfObservable {
    Tiles,
    Global,
    Joint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RateObservable {
    Tiles,
    Global,
}

impl From<RateObservable> for Observable {
    fn from(o: RateObservable) -> Self {
        match o {
            RateObservable::Tiles => Observable::Tiles,
            RateObservable::Global => Observable::Global,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Stationary distribution and its conjectured observables.
    Stationary {
        #[arg(long = "L", value_name = "N")]
        width: usize,
        /// List every state with its integer weight.
        #[arg(long)]
        states: bool,
    },
    /// Perron root of the tilted generator and its match to the spin chain.
    Eigen {
        #[arg(long = "L", value_name = "N")]
        width: usize,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        alpha: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        beta: f64,
    },
    /// Bethe roots of the zero-magnetisation ground state.
    Bethe {
        #[arg(long = "L", value_name = "N")]
        width: usize,
        #[arg(long, allow_negative_numbers = true)]
        delta: f64,
        /// Real twist angle.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        phi: f64,
    },
    /// Scaled CGF on a grid: bulk, finite-size part and total.
    Cgf {
        #[arg(long, value_enum)]
        observable: CgfObservable,
        #[arg(long = "L", value_name = "N")]
        width: usize,
        /// `start:stop:step`; β for tiles and joint, α for global.
        #[arg(long, allow_hyphen_values = true)]
        grid: String,
        /// Fixed α along a joint grid.
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        alpha: f64,
    },
    /// Rate function on a grid of time-averaged counts.
    Rate {
        #[arg(long, value_enum)]
        observable: RateObservable,
        #[arg(long = "L", value_name = "N")]
        width: usize,
        /// `start:stop:step` in counts per unit time.
        #[arg(long, allow_hyphen_values = true)]
        grid: String,
    },
    /// Closed-form cumulants against differenced CGFs, optionally against
    /// simulation.
    Cumulants {
        #[arg(long = "L", value_name = "N")]
        width: usize,
        #[arg(long, default_value_t = 4)]
        max_order: u32,
        /// Add Monte Carlo estimates of the first two cumulants.
        #[arg(long)]
        simulate: bool,
        #[arg(long, default_value_t = 1e5)]
        tmax: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 8)]
        trajectories: usize,
    },
    /// Monte Carlo trajectories from the substrate.
    Simulate {
        #[arg(long = "L", value_name = "N")]
        width: usize,
        #[arg(long)]
        tmax: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        trajectories: usize,
        #[arg(long, default_value_t = sim::DEFAULT_BATCH_LENGTH)]
        batch_length: f64,
    },
    /// Reference values of the integrals `Y` and `Ỹ`.
    VerifyAppendix,
}

/// A record with its tabular form.
pub struct Output {
    pub record: RunRecord,
    pub table: Table,
}

pub fn run(command: &Command) -> Result<Output> {
    match command {
        Command::Stationary { width, states } => stationary(*width, *states),
        Command::Eigen { width, alpha, beta } => eigen(*width, *alpha, *beta),
        Command::Bethe { width, delta, phi } => bethe(*width, *delta, *phi),
        Command::Cgf {
            observable,
            width,
            grid,
            alpha,
        } => cgf(*observable, *width, grid, *alpha),
        Command::Rate { observable, width, grid } => rate(*observable, *width, grid),
        Command::Cumulants {
            width,
            max_order,
            simulate,
            tmax,
            seed,
            trajectories,
        } => cumulants(*width, *max_order, simulate.then_some((*tmax, *seed, *trajectories))),
        Command::Simulate {
            width,
            tmax,
            seed,
            trajectories,
            batch_length,
        } => simulate(*width, *tmax, *seed, *trajectories, *batch_length),
        Command::VerifyAppendix => verify_appendix(),
    }
}

fn key_value(rows: &[(&str, Cell)]) -> Table {
    let mut t = Table::new(&["quantity", "value"]);
    for (k, v) in rows {
        t.push(vec![Cell::from(*k), v.clone()]);
    }
    t
}

fn stationary(width: usize, list_states: bool) -> Result<Output> {
    let s = generator::stationary_state(width)?;
    let obs = generator::stationary_observables(&s);
    let l = width as f64;
    let norm: f64 = s.integer_form.iter().sum();
    let peaks_conj = 3.0 * l.powi(3) / (8.0 * (l * l - 1.0));
    let susc_conj = 3.0 * l / (4.0 * (l * l - 1.0));
    let mut results = json!({
        "dimension": s.states.len(),
        "normalization": num(norm.round()),
        "max_integer_deviation": num(s.max_integer_deviation),
        "kernel_residual": num(s.residual),
        "avg_peaks": num(obs.avg_peaks),
        "avg_peaks_conjecture": num(peaks_conj),
        "global_susceptibility": num(obs.prob_global_susceptible),
        "global_susceptibility_conjecture": num(susc_conj),
        "mean_tiles_rate": num(obs.mean_tiles_rate),
        "mean_global_rate": num(obs.mean_global_rate),
    });
    let mut table = key_value(&[
        ("dimension", (s.states.len() as i64).into()),
        ("normalization", (norm.round() as i64).into()),
        ("max integer deviation", s.max_integer_deviation.into()),
        ("kernel residual", s.residual.into()),
        ("average peaks", obs.avg_peaks.into()),
        ("  conjecture", peaks_conj.into()),
        ("global susceptibility", obs.prob_global_susceptible.into()),
        ("  conjecture", susc_conj.into()),
        ("mean tiles rate", obs.mean_tiles_rate.into()),
        ("mean global rate", obs.mean_global_rate.into()),
    ]);
    if list_states {
        let states: Vec<Value> = s
            .states
            .iter()
            .zip(&s.integer_form)
            .map(|(c, w)| json!({"steps": c.to_hex(), "heights": c.heights(), "weight": num(*w)}))
            .collect();
        results["states"] = Value::from(states);
        table = Table::new(&["steps", "heights", "weight"]);
        for (c, w) in s.states.iter().zip(&s.integer_form) {
            table.push(vec![c.to_hex().into(), format!("{c}").into(), (*w).into()]);
        }
    }
    let record = RunRecord::new("stationary", json!({"L": width, "states": list_states}), results)
        .tolerance("integrality", generator::INTEGRALITY_TOL);
    Ok(Output {
        record,
        table,
    })
}

fn eigen(width: usize, alpha: f64, beta: f64) -> Result<Output> {
    let g = generator::build_generator(width, alpha, beta)?;
    let root = generator::largest_eigenvalue(&g)?;
    let bridge = if width <= xxz::MAX_DENSE_WIDTH && g.dim() <= generator::DENSE_LIMIT {
        Some(generator::spectral_bridge(width, alpha, beta)?)
    } else {
        None
    };
    let asymptotic = ldt::joint_cgf(alpha, beta, width)?;
    let results = json!({
        "dimension": g.dim(),
        "perron_root": num(root),
        "bridge_residual": opt(bridge),
        "asymptotic_cgf": num(asymptotic.total()),
        "regime": asymptotic.regime,
    });
    let table = key_value(&[
        ("dimension", (g.dim() as i64).into()),
        ("Perron root", root.into()),
        ("bridge residual", bridge.into()),
        ("asymptotic CGF", asymptotic.total().into()),
        ("regime", format!("{:?}", asymptotic.regime).into()),
    ]);
    let record = RunRecord::new("eigen", json!({"L": width, "alpha": alpha, "beta": beta}), results)
        .tolerance("bridge", 1e-8);
    Ok(Output {
        record,
        table,
    })
}

fn bethe(width: usize, delta: f64, phi: f64) -> Result<Output> {
    let p = xxz::XxzParams::new(width, delta, Complex64::new(phi, 0.0))?;
    let r = xxz::solve_bethe(width, delta, p.u)?;
    let energy = xxz::bethe_energy(&r, &p)?;
    let vector_residual = if width <= xxz::MAX_VECTOR_WIDTH {
        Some(xxz::verify_bethe_vector(&r, &p)?)
    } else {
        None
    };
    let dense = if width <= xxz::MAX_DENSE_WIDTH {
        Some(xxz::ground_energy_dense(&p)?)
    } else {
        None
    };
    let roots: Vec<Value> = r.z.iter().map(|z| json!([num(z.re), num(z.im)])).collect();
    let results = json!({
        "roots": roots,
        "energy": num(energy),
        "root_residual": num(r.residual),
        "eigenvector_residual": opt(vector_residual),
        "dense_energy": opt(dense),
    });
    let mut table = Table::new(&["root", "re", "im"]);
    for (k, z) in r.z.iter().enumerate() {
        table.push(vec![format!("z{}", k + 1).into(), z.re.into(), z.im.into()]);
    }
    table.push(vec!["energy".into(), energy.into(), Cell::Missing]);
    table.push(vec!["dense energy".into(), dense.into(), Cell::Missing]);
    table.push(vec!["root residual".into(), r.residual.into(), Cell::Missing]);
    table.push(vec!["eigenvector residual".into(), vector_residual.into(), Cell::Missing]);
    let record = RunRecord::new("bethe", json!({"L": width, "delta": delta, "phi": phi}), results)
        .tolerance("root_residual", 1e-10)
        .tolerance("eigenvector_residual", 1e-7);
    Ok(Output {
        record,
        table,
    })
}

fn cgf(observable: CgfObservable, width: usize, grid: &str, alpha: f64) -> Result<Output> {
    let points = parse_grid(grid)?;
    let values: Vec<ldt::CgfValue> = points
        .par_iter()
        .map(|&x| match observable {
            CgfObservable::Tiles => ldt::cgf_tiles(x, width),
            CgfObservable::Global => ldt::cgf_global(x, width),
            CgfObservable::Joint => ldt::joint_cgf(alpha, x, width),
        })
        .collect::<Result<_>>()?;
    let mut table = Table::new(&["param", "bulk", "fsc", "total"]);
    let mut rows = Vec::with_capacity(values.len());
    for (x, v) in points.iter().zip(&values) {
        table.push(vec![(*x).into(), v.bulk.into(), v.fsc.into(), v.total().into()]);
        rows.push(json!({
            "param": num(*x),
            "bulk": num(v.bulk),
            "fsc": opt(v.fsc),
            "total": num(v.total()),
            "regime": v.regime,
        }));
    }
    let name = match observable {
        CgfObservable::Tiles => "tiles",
        CgfObservable::Global => "global",
        CgfObservable::Joint => "joint",
    };
    let mut params = json!({"observable": name, "L": width, "grid": grid});
    if observable == CgfObservable::Joint {
        params["alpha"] = num(alpha);
    }
    Ok(Output {
        record: RunRecord::new("cgf", params, Value::from(rows)),
        table,
    })
}

fn rate(observable: RateObservable, width: usize, grid: &str) -> Result<Output> {
    let ys = parse_grid(grid)?;
    let obs: Observable = observable.into();
    let chunks: Vec<Vec<ldt::RatePoint>> = ys
        .par_chunks(16)
        .map(|c| ldt::rate_function(obs, width, c))
        .collect::<Result<_>>()?;
    let mut table = Table::new(&["y", "rate", "legendre_param"]);
    let mut rows = Vec::with_capacity(ys.len());
    for p in chunks.into_iter().flatten() {
        table.push(vec![p.y.into(), p.rate.into(), p.legendre_param.into()]);
        rows.push(json!({"y": num(p.y), "rate": num(p.rate), "legendre_param": num(p.legendre_param)}));
    }
    let name = match observable {
        RateObservable::Tiles => "tiles",
        RateObservable::Global => "global",
    };
    Ok(Output {
        record: RunRecord::new("rate", json!({"observable": name, "L": width, "grid": grid}), Value::from(rows)),
        table,
    })
}

fn cumulants(width: usize, max_order: u32, simulation: Option<(f64, u64, usize)>) -> Result<Output> {
    if !(1..=4).contains(&max_order) {
        return Err(Error::InvalidArgument(format!("max order must lie in 1..=4, got {max_order}")));
    }
    if width < 2 || width % 2 != 0 {
        return Err(Error::InvalidArgument(format!("L must be even and >= 2, got {width}")));
    }
    let l = width as f64;
    let estimates = match simulation {
        Some((tmax, seed, k)) => {
            let runs = sim::run_ensemble(width, tmax, seed, k, &sim::SimConfig::default())?;
            Some(sim::estimate_cumulants(&runs)?)
        }
        None => None,
    };
    let mut table = Table::new(&["observable", "order", "closed_form", "numeric", "simulated", "stderr"]);
    let mut rows = Vec::new();
    for order in 1..=max_order {
        for obs in [Observable::Tiles, Observable::Global] {
            let closed = ldt::cumulants(obs, order, width)?;
            let checks = ldt::cumulant_checks(obs, order)?;
            let numeric = match obs {
                Observable::Tiles => checks[0].numeric * l + checks[1].numeric / l,
                Observable::Global => checks[0].numeric / l,
            };
            let sim = estimates.and_then(|e| {
                let c = match obs {
                    Observable::Tiles => e.tiles,
                    Observable::Global => e.global,
                };
                match order {
                    1 => Some((c.c1, c.stderr1)),
                    2 => Some((c.c2, c.stderr2)),
                    _ => None,
                }
            });
            let name = match obs {
                Observable::Tiles => "tiles",
                Observable::Global => "global",
            };
            table.push(vec![
                name.into(),
                (order as i64).into(),
                closed.into(),
                numeric.into(),
                sim.map(|s| s.0).into(),
                sim.map(|s| s.1).into(),
            ]);
            rows.push(json!({
                "observable": name,
                "order": order,
                "closed_form": num(closed),
                "numeric": num(numeric),
                "simulated": opt(sim.map(|s| s.0)),
                "stderr": opt(sim.map(|s| s.1)),
            }));
        }
    }
    let params = match simulation {
        Some((tmax, seed, k)) => json!({"L": width, "max_order": max_order, "simulate": true,
            "tmax": tmax, "seed": seed, "trajectories": k}),
        None => json!({"L": width, "max_order": max_order, "simulate": false}),
    };
    Ok(Output {
        record: RunRecord::new("cumulants", params, Value::from(rows)).tolerance("cumulant_relative", ldt::CUMULANT_TOL),
        table,
    })
}

fn simulate(width: usize, tmax: f64, seed: u64, count: usize, batch_length: f64) -> Result<Output> {
    if count == 0 {
        return Err(Error::InvalidArgument("at least one trajectory is needed".into()));
    }
    let cfg = sim::SimConfig {
        batch_length,
        record_occupation: false,
    };
    let runs = sim::run_ensemble(width, tmax, seed, count, &cfg)?;
    let mut table = Table::new(&["stream", "t_total", "n_tiles", "n_global", "n_avalanches", "n_adsorbed", "final_state"]);
    let mut trajectories = Vec::new();
    for r in &runs {
        table.push(vec![
            (r.stream as i64).into(),
            r.t_total.into(),
            (r.n_tiles as i64).into(),
            (r.n_global as i64).into(),
            (r.n_avalanches as i64).into(),
            (r.n_adsorbed as i64).into(),
            r.final_state.to_hex().into(),
        ]);
        trajectories.push(json!({
            "stream": r.stream,
            "t_total": num(r.t_total),
            "n_tiles": r.n_tiles,
            "n_global": r.n_global,
            "n_avalanches": r.n_avalanches,
            "n_adsorbed": r.n_adsorbed,
            "batches": r.batch_tiles.len(),
            "final_state": r.final_state.to_hex(),
        }));
    }
    let estimate = |c: sim::CounterEstimate| {
        json!({"c1": num(c.c1), "c2": num(c.c2), "stderr1": num(c.stderr1), "stderr2": num(c.stderr2), "batches": c.batches})
    };
    let estimates = match sim::estimate_cumulants(&runs) {
        Ok(e) => json!({"tiles": estimate(e.tiles), "global": estimate(e.global)}),
        Err(Error::InvalidArgument(_)) => Value::Null,
        Err(e) => return Err(e),
    };
    let results = json!({"trajectories": trajectories, "estimates": estimates});
    let params = json!({"L": width, "tmax": tmax, "seed": seed, "trajectories": count,
        "batch_length": batch_length, "substrate": dyck::substrate(width)?.to_hex()});
    Ok(Output {
        record: RunRecord::new("simulate", params, results),
        table,
    })
}

fn verify_appendix() -> Result<Output> {
    let checks = appendix::checks()?;
    let mut table = Table::new(&["check", "expected", "computed", "error", "tolerance", "status"]);
    let mut rows = Vec::new();
    for c in &checks {
        let status = if c.passed() { "PASS" } else { "FAIL" };
        table.push(vec![
            c.name.as_str().into(),
            c.expected.into(),
            c.computed.into(),
            c.error().into(),
            c.tolerance.into(),
            status.into(),
        ]);
        rows.push(json!({
            "name": c.name,
            "expected": num(c.expected),
            "computed": num(c.computed),
            "error": num(c.error()),
            "tolerance": num(c.tolerance),
            "relative": c.relative,
            "passed": c.passed(),
        }));
    }
    let passed = checks.iter().filter(|c| c.passed()).count();
    let results = json!({"checks": rows, "passed": passed, "total": checks.len()});
    Ok(Output {
        record: RunRecord::new("verify-appendix", json!({}), results),
        table,
    })
}
