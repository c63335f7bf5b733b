//! Fractional query algorithms for Boolean functions.
//!
//! The crate is organised around the objects that appear when a decision tree
//! is relaxed into an axis-aligned martingale on `[-1, 1]^n`:
//!
//! * [`boolean_fn`] holds Boolean functions (dense truth tables and composition
//!   circuits), their Fourier expansion, harmonic extension, derivatives and
//!   influences.
//! * [`jump_process`] simulates axis-aligned jump processes driven by a
//!   [`strategies::Strategy`] and estimates cost and per-bit revealment.
//! * [`dp_solver`] computes the optimal cost `u_ε` on dyadic lattices and exact
//!   expected query counts of decision trees.
//! * [`analytic_or`] is the closed-form limiting cost of the 2-bit OR.
//! * [`bounds`] checks revealment inequalities against simulated statistics.
//! * [`random_turn`] plays fractional random-turn games.
//!
//! Coordinates are 0-based throughout the library API. External text formats
//! (function ids, CSV dumps, JSON reports) use 1-based coordinates.

pub mod analytic_or;
pub mod boolean_fn;
pub mod bounds;
pub mod dp_solver;
mod error;
pub mod jump_process;
pub mod random_turn;
pub mod rng;
pub mod stats;
pub mod strategies;

pub use boolean_fn::{BooleanFunction, FourierTable, Node, Sign};
pub use error::{Error, Result};
