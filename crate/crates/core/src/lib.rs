//! Hamilton-Jacobi reachability for an ego vehicle between a leader and a
//! follower, with a least-restrictive safety filter and a closed-loop
//! simulator.
//!
//! States are relative: `x_g1`/`v_g1` are the gap and speed difference to
//! the leader, `x_g2`/`v_g2` the gap and speed difference to the follower.
//! The planar scenario drops the follower.

pub mod dynamics;
pub mod error;
pub mod grid;
pub mod hamiltonian;
pub mod idm;
pub mod io;
pub mod safe_set;
pub mod sim;
pub mod solver;

pub use dynamics::{constraint_margin, flow2, flow4, ActuationBounds, ConstraintBox, RelativeState, Scenario, STATE_NAMES};
pub use error::{Error, Result};
pub use grid::{Grid, ValueField};
pub use hamiltonian::{hamiltonian, Costate, DisturbanceModel, ReactionRule, SaddleInputs};
pub use idm::IdmParams;
pub use io::{ModelKind, ScenarioConfig};
pub use safe_set::{gradient_at, is_safe, safety_filter, value_at, NominalPolicy, SafetyFilterConfig};
pub use sim::{AgentBehavior, FollowerBehavior, LeaderBehavior, SimContext, Trace};
pub use solver::{solve, LevelSetSolver, Scheme, SolveOutcome, SolverSettings};
