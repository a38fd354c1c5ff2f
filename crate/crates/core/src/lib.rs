//! Exact bond-percolation thresholds for graphs with a tree-like structure of
//! finite pieces.
//!
//! A [`TreeStructure`] lists finitely many model pieces, each a finite graph
//! with an ordered border and child slots. The [`solver`] turns it into a
//! multi-type branching process over colors of border sets and finds the
//! smallest `p` where the first-moment matrix has spectral radius 1.
//!
//! ```no_run
//! use perctree::{builders, solver};
//!
//! let sl2z = builders::sl2z();
//! let report = solver::critical_probability(&sl2z, &Default::default()).unwrap();
//! println!("p_c = {:.10}", report.p_c);
//! ```

pub mod builders;
pub mod closedform;
pub mod error;
pub mod format;
pub mod montecarlo;
pub mod partition;
pub mod solver;
pub mod structure;

pub use builders::FiniteGraph;
pub use error::{Error, Result};
pub use partition::{Color, EdgeSubset, Partition};
pub use solver::{CriticalProbability, Engine, MomentMatrix, SolverOptions};
pub use structure::{ChildSlot, ModelPiece, RootPiece, TreeStructure};
