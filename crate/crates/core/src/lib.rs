//! Random k-XORSAT and (k,d)-UE-CSP: instance generation, exact solving,
//! linear-time search heuristics, leaf removal and the mean-field theory
//! of their dynamics.

pub mod arith;
pub mod error;
pub mod gauss;
pub mod meanfield;
pub mod model;
pub mod peel;
pub mod phase;
pub mod roots;
pub mod scaling;
pub mod search;

pub use error::{Error, Result};
pub use gauss::{gaussian_solve, SatVerdict};
pub use model::{
    check_solution, generate_random_formula, reduce_by_assignment, Assignment, ClauseCounts, DegreeProfile, Formula,
};
pub use peel::{leaf_remove, reconstruct_solution, CoreReport};
pub use search::{estimate_success_probability, run_search, HeuristicPolicy, SearchOutcome};
