//! Reachable sets of differential inclusions, computed by tracking only the
//! boundaries of discrete reachable sets on adaptively refined space-time
//! grids.
//!
//! The crate is organized around a fully discrete set-valued Euler scheme:
//!
//! - [`grid`]: scaled integer lattices, digital sets, Chebyshev/Hausdorff
//!   metrics and rasterization of convex sets,
//! - [`topology`]: boundary layers of digital images, the trace map and its
//!   inverse, and restriction between nested grids,
//! - [`dynamics`]: set-valued right-hand sides and the one-step Euler image,
//! - [`scheme`]: space-time discretizations, admissibility, and the full-set
//!   Euler recursion (the correctness oracle for everything else),
//! - [`tracking`]: the boundary-tracking step and run with cost counters,
//! - [`refine`]: the a-priori error bound, the heuristic cost estimator, the
//!   greedy subdivision loop and the iterative driver,
//! - [`analysis`]: exact solutions for the shipped examples, error
//!   measurement and report assembly.
//!
//! ```
//! use reachtrack_core::analysis::simp7_problem;
//! use reachtrack_core::refine::{error_e, iterate};
//! use reachtrack_core::topology::reconstruct;
//!
//! let problem = simp7_problem(1.0)?;
//! let outcome = iterate(&problem, &[8.0, 4.0])?;
//! let bound = error_e(&outcome.delta, 1.0, problem.rhs.bound(), 1.0);
//! assert!(bound <= 4.0);
//! let final_set = reconstruct(outcome.run.pairs.last().unwrap())?;
//! assert!(!final_set.is_empty());
//! # Ok::<(), reachtrack_core::Error>(())
//! ```

pub mod analysis;
pub mod dynamics;
pub mod error;
pub mod grid;
pub mod refine;
pub mod scheme;
pub mod topology;
pub mod tracking;

pub use error::{Error, Result};
