//! Planning library and simulator for a UAS sharing a gridded workplace with
//! human co-workers.
//!
//! - [`grid`]: workplace cells, obstacles, stations and A* search.
//! - [`petri`]: dual human/UAS Petri net over work stations and the head-count safety rule.
//! - [`human`]: simulated humans walking toward hidden destinations.
//! - [`perception`]: distraction and intention estimators.
//! - [`mdp`]: time-expanded MDP, cost field and backward-induction solver.
//! - [`scenario`]: config files, the closed planning loop and trace output.

pub mod grid;
pub mod human;
pub mod mdp;
pub mod perception;
pub mod petri;
pub mod scenario;

pub use grid::{astar_path, euclidean, Cell, GridError, GridWorkplace, Path};
pub use mdp::{build_cost, build_transitions, solve, Action, CostField, PlanResult};
pub use petri::{check_rule4, CoWorker, ConstructKind, Marking, PetriNet, PlaceId};
pub use scenario::{emit_trace, load_scenario, run, RunTrace, Scenario, ScenarioError};
