//! Exact and certified computations on the independent set sequences of
//! trees.
//!
//! * [`seq`]: unimodality / log-concavity predicates, convolution, extension
//!   averages and real-rootedness, all decided in exact arithmetic.
//! * [`tree`]: labelled trees, Prüfer codes, uniform sampling, free-tree
//!   enumeration and the tree dynamic programs.
//! * [`checks`]: named per-tree properties (sequence predicates and the
//!   structural theorems) used by exhaustive verification.
//! * [`counts`]: exact Matrix-Tree-Theorem counting formulas for uniformly
//!   random labelled trees, with a brute-force oracle over all Prüfer codes.
//! * [`asymptotics`]: floating-point saddle-point heuristics for the growth
//!   rate of the expected number of independent sets with a given number of
//!   extensions.
//! * [`certifier`]: interval-arithmetic verification of the grid inequality
//!   that makes the heuristic rigorous, with bootstrapped refinement and
//!   replayable certificates.

pub mod asymptotics;
pub mod certifier;
pub mod checks;
pub mod counts;
pub mod seq;
pub mod tree;

pub use certifier::{CertReport, Enclosure, GridCell, Regime};
pub use checks::{Property, Violation};
pub use counts::{ExactScalar, ExtensionProfile};
pub use seq::{CountSequence, ExtensionAverages};
pub use tree::{PruferCode, Tree, TreeStats};
