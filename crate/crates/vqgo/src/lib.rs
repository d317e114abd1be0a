//! Pulse-level simulator and variational gate optimizer for chains of
//! fixed-frequency transmons.
//!
//! The crate models driven transmon chains at two tiers — a fast
//! rotating-frame qubit model and a full anharmonic lab-frame model — and
//! layers gate characterization (process tomography, reduced process
//! tomography, zero-fidelity estimation), a hardware-like stochastic layer
//! (projective shots, readout error, drive-line distortion, slow parameter
//! drift) and a Gaussian-process Bayesian optimizer on top. Scenario
//! drivers wire these into closed-loop pulse optimizations of two- and
//! three-qubit entangling gates, including a Floquet-engineered three-body
//! interaction.
//!
//! See the `examples/` directory for one runnable program per capability;
//! the thin `vqgo` binary exposes the same scenarios as subcommands.

pub mod bayesopt;
pub mod config;
pub mod device;
pub mod error;
pub mod io;
pub mod linalg;
pub mod noise;
pub mod pauli;
pub mod pulse;
pub mod random;
pub mod rates;
pub mod scenario;
pub mod states;
pub mod tomography;
pub mod zerofid;

pub use error::{Error, Result};
pub use linalg::{CMat, CVec};
