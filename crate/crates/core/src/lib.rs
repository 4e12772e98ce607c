//! Coherence witnesses for Markovian open quantum systems from Zeno
//! susceptibilities.
//!
//! The crate simulates a Lindblad system driven by a measurement Hamiltonian
//! `k·H_m`, extracts population-transfer rates at several drive strengths,
//! and inverts their `k`-dependence into the Zeno susceptibilities `T_μ`,
//! the inter-block coupling norms `‖H_ij‖₂` and the witness `Ω ≤ 𝔠(H)`.
//!
//! Modules:
//! - [`superop`]: models, decompositions, superoperators and their oracles.
//! - [`propagate`]: driven evolution and transition/rate matrices.
//! - [`witness`]: measurement design, pseudoinverse, susceptibilities, `Ω`.
//! - [`models`]: the qubit, rollercoaster and ladder example systems.
//! - [`cli`]: configuration, pipeline commands and CSV/JSON outputs.

pub mod cli;
pub mod error;
pub mod linalg;
pub mod models;
pub mod propagate;
pub mod superop;
pub mod witness;

pub use error::{Error, Result};
pub use models::{DecompositionPattern, ModelFamily, ModelSpec};
pub use propagate::{MeasurementDesign, RateMode, TransitionData};
pub use superop::{QuantumModel, SuperOp, ZenoDecomposition};
pub use witness::WitnessReport;
