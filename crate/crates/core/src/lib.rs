//! Quadratic and Clifford pseudospectra of tuples of Hermitian observables.

pub mod clifford;
pub mod error;
pub mod io;
pub mod linalg;
pub mod models;
pub mod operator;
pub mod pseudospectra;
pub mod states;
pub mod sweep;
pub mod truncation;

pub use clifford::{build_clifford, verify_clifford, CliffordRep};
pub use error::{Error, Result};
pub use linalg::SolverOptions;
pub use operator::{HermitianOperator, StateVector};
pub use pseudospectra::{GapKind, ObservableTuple, ProbePoint};
