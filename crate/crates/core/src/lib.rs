//! Exact and statistical analysis of Herman's randomized self-stabilizing
//! token ring.
//!
//! The crate is organised bottom-up:
//!
//! * [`steg`]: gap vectors, triples with even gaps and the `steg` cubic form.
//! * [`moves`]: the `2^m` alternating ±1 moves on gap vectors and the exact
//!   one-step expectation of `steg` under a uniformly random move.
//! * [`ring`]: the protocol itself (token passing with annihilation), cost
//!   accounting, trajectories and the exact one-step martingale check.
//! * [`chain`]: the absorbing Markov chain over rotation classes of gap
//!   vectors, solved in exact rational arithmetic.
//! * [`experiments`]: Monte Carlo estimation, bound tables and the pathwise
//!   telescoping identity relating stabilization time to cost.
//! * [`verify`]: randomized and exhaustive checks of the identities above,
//!   packaged as serializable reports.

pub mod chain;
pub mod error;
pub mod experiments;
pub mod linalg;
pub mod moves;
pub mod rational;
pub mod ring;
pub mod steg;
pub mod verify;

pub use chain::{
    build_state_space, conjecture_sweep, solve, transition_distribution, CanonicalState,
    ChainLimits, ExactSolution, SolvedState, SweepReport,
};
pub use error::{HermanError, Result};
pub use experiments::{bound_table, estimate, telescoping_check, BoundRow, McEstimate, Target};
pub use moves::{apply_move, enumerate_moves, expected_steg_after_move, Orientation, RingMove};
pub use rational::{ratio_string, Rational};
pub use ring::{
    coin_to_move, gap_vector, run, step, verify_martingale_step, Coin, CoinPattern,
    CollisionReport, RingState, RunConfig, Trajectory,
};
pub use steg::{
    annihilate_at, enumerate_teg, perturbation_delta, steg, steg_upper_bound, teg_count, GapVector,
    TegTriple,
};
