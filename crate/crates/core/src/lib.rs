//! Loss-tolerant parity measurement of two remote qubits with cat-state probes.
//!
//! The crate is organised bottom-up:
//!
//! - [`qmath`]: two-qubit density matrices, Bell basis, local gates, qubit relaxation
//!   and the cat-state normalization constants.
//! - [`kraus`]: the four Kraus operators of the lossy cat-probe measurement, outcome
//!   probabilities and stochastic back-action.
//! - [`oracle`]: an independent rederivation of those Kraus operators by exact
//!   coherent-state simulation of the probe pipeline.
//! - [`analytics`]: closed-form rates, Lyapunov/coherence diagnostics, the measurement
//!   count estimate, Lambert W, the Bell-population rate model and the probe-size optimizer.
//! - [`feedback`]: quantum filters, the parity controller and the stabilization steppers.
//! - [`protocol`]: the abstract ξ-model, generalized root-of-identity channels, the
//!   phase-flip counterexample and entanglement-assisted parity measurement.
//! - [`harness`]: Monte-Carlo trajectories, ensembles, experiment presets and CSV output.

pub mod analytics;
pub mod error;
pub mod feedback;
pub mod harness;
pub mod kraus;
pub mod oracle;
pub mod protocol;
pub mod qmath;
pub mod rng;

pub use error::{Error, Result};
