//! Causal discovery over mixtures of DAGs.
//!
//! The crate is organised bottom-up:
//!
//! - [`graph`]: vertices, directed graphs, DAGs, mixed graphs with endpoint
//!   marks, and two independent d-separation deciders.
//! - [`mixture`]: mixture graphs built from component DAGs, fused graphs,
//!   grouped d-separation and the ancestral ground truth over observed
//!   variables.
//! - [`ci`]: conditional-independence backends behind one trait (graphical
//!   oracle, exact discrete tables, Fisher-z, GCM).
//! - [`cim`]: the CIM search (skeleton, wave arrowheads, tail rules) and a
//!   PC-stable baseline.
//! - [`synth`]: the linear-Gaussian mixture benchmark generator.
//! - [`eval`]: endpoint scoring, bootstrap comparison and figure fixtures.
//! - [`checks`]: randomized property suites shared by tests and the CLI.
//! - [`io`]: text, JSON and CSV formats.

pub mod checks;
pub mod ci;
pub mod cim;
pub mod error;
pub mod eval;
pub mod graph;
pub mod io;
pub mod mixture;
pub mod synth;

pub use error::{Error, Result};
