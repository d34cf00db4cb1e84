//! Raise and Peel model on a periodic lattice.
//!
//! The crate is layered bottom-up:
//!
//! * [`dyck`]: stable configurations (periodic Dyck paths) and the exact
//!   single-tile-drop dynamics.
//! * [`generator`]: the Markov generator tilted by avalanche counters, its
//!   Perron root and the stationary state.
//! * [`xxz`]: the twisted XXZ chain in the zero-magnetisation sector, dense
//!   diagonalisation and a Bethe-equation solver.
//! * [`thermo`]: closed-form thermodynamic ingredients (bulk energies,
//!   finite-size corrections, elliptic moduli).
//! * [`ldt`]: scaled cumulant generating functions, cumulants, rate
//!   functions and the conditional generating function.
//! * [`sim`]: continuous-time Monte Carlo of trajectories with avalanche
//!   counters.
//!
//! Every layer can be checked against another one: the tilted generator
//! against the XXZ spectrum, the XXZ ground state against the Bethe roots,
//! the asymptotic formulas against exact diagonalisation sequences, and the
//! spectral cumulants against simulation.

pub mod appendix;
pub mod dyck;
pub mod error;
pub mod generator;
pub mod ldt;
pub mod linalg;
pub mod numdiff;
pub mod quadrature;
pub mod sim;
pub mod thermo;
pub mod xxz;

pub use error::{Error, Result};
