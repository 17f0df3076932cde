//! Numerical studies for the bilinear boundary-control solver: the
//! boundary-bump tracking benchmark with its mesh-refinement error tables,
//! the manufactured-solution verification suite, and their CSV/JSON output.

pub mod benchmark;
pub mod emit;
pub mod mms;

pub use benchmark::{
    run_benchmark, BenchmarkOutcome, BenchmarkSpec, BumpAxis, CurvePoint, LevelSolution, RunOptions,
    SolverChoice, StudyError, StudyRow,
};
pub use mms::{run_mms, MmsRow};
