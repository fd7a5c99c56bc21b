//! Time-expanded finite-horizon MDP for the UAS.
//!
//! States are `(cell, τ)` with `τ ∈ 1..=N_τ`. Transitions are deterministic and
//! ignore obstacles; obstacles are priced out through the cost instead. The
//! value function is solved by backward induction over the τ-layers.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{euclidean, Cell, GridWorkplace};
use crate::human::{DesiredState, HumanId};
use crate::perception::DistractionModel;
use crate::petri::PlaceId;

pub const DEFAULT_HORIZON: usize = 10;
pub const DEFAULT_GAMMA: f64 = 1.0;
pub const DEFAULT_C0: f64 = 100.0;
pub const DEFAULT_C_GOAL: f64 = -1.0e4;
pub const DEFAULT_C_OBS: f64 = 1.0e4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("horizon must be at least 1")]
    InvalidHorizon,
    #[error("goal {0} is not a free cell of the workplace")]
    InvalidGoal(Cell),
    #[error("human {human} candidate {candidate} has {got} projected states, expected {expected}")]
    MissingProjection { human: HumanId, candidate: PlaceId, got: usize, expected: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Action {
    E,
    NE,
    N,
    NW,
    W,
    SW,
    S,
    SE,
    O,
}

impl Action {
    /// Tie-breaking order.
    pub const ALL: [Action; 9] = [
        Action::E,
        Action::NE,
        Action::N,
        Action::NW,
        Action::W,
        Action::SW,
        Action::S,
        Action::SE,
        Action::O,
    ];

    pub fn delta(self) -> (i32, i32) {
        match self {
            Action::E => (1, 0),
            Action::NE => (1, 1),
            Action::N => (0, 1),
            Action::NW => (-1, 1),
            Action::W => (-1, 0),
            Action::SW => (-1, -1),
            Action::S => (0, -1),
            Action::SE => (1, -1),
            Action::O => (0, 0),
        }
    }

    /// 1-based index, 1 = E through 9 = O.
    pub fn index(self) -> usize {
        self as usize + 1
    }

    pub fn from_index(i: usize) -> Option<Action> {
        i.checked_sub(1).and_then(|j| Self::ALL.get(j).copied())
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct TimeState {
    pub cell: Cell,
    pub tau: usize,
}

/// Deterministic successor table shared by every τ-layer.
#[derive(Clone, Debug)]
pub struct Transitions {
    n_x: i32,
    n_y: i32,
    horizon: usize,
    next: Vec<[u32; 9]>,
}

pub fn build_transitions(world: &GridWorkplace, horizon: usize) -> Result<Transitions, PlanError> {
    if horizon == 0 {
        return Err(PlanError::InvalidHorizon);
    }
    let (n_x, n_y) = (world.n_x(), world.n_y());
    let next = world
        .cells()
        .map(|c| {
            let mut row = [0u32; 9];
            for (slot, a) in row.iter_mut().zip(Action::ALL) {
                let (dx, dy) = a.delta();
                let mut x = c.x;
                let mut y = c.y;
                if dx > 0 && x < n_x {
                    x += 1;
                }
                if dx < 0 && x > 1 {
                    x -= 1;
                }
                if dy > 0 && y < n_y {
                    y += 1;
                }
                if dy < 0 && y > 1 {
                    y -= 1;
                }
                *slot = world.index(Cell::new(x, y)) as u32;
            }
            row
        })
        .collect();
    Ok(Transitions { n_x, n_y, horizon, next })
}

impl Transitions {
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn cell_count(&self) -> usize {
        self.next.len()
    }

    fn cell_at(&self, i: usize) -> Cell {
        let i = i as i32;
        Cell::new(i % self.n_x + 1, i / self.n_x + 1)
    }

    fn index(&self, c: Cell) -> usize {
        ((c.y - 1) * self.n_x + (c.x - 1)) as usize
    }

    pub fn contains(&self, c: Cell) -> bool {
        (1..=self.n_x).contains(&c.x) && (1..=self.n_y).contains(&c.y)
    }

    /// `s⁺ = f(s, a)`: each axis moves unless at the border; `τ⁺ = min(τ + 1, N_τ)`.
    pub fn successor(&self, s: TimeState, a: Action) -> TimeState {
        let cell = self.cell_at(self.next[self.index(s.cell)][a as usize] as usize);
        TimeState { cell, tau: (s.tau + 1).min(self.horizon) }
    }

    pub fn next_cell(&self, cell: Cell, a: Action) -> Cell {
        self.cell_at(self.next[self.index(cell)][a as usize] as usize)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    pub c0: f64,
    pub c_goal: f64,
    pub c_obs: f64,
    /// Adds every layer's human term to every layer instead of evaluating it per τ.
    pub horizon_sum: bool,
}

impl Default for CostParams {
    fn default() -> Self {
        Self { c0: DEFAULT_C0, c_goal: DEFAULT_C_GOAL, c_obs: DEFAULT_C_OBS, horizon_sum: false }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CandidateForecast {
    pub place: PlaceId,
    pub probability: f64,
    /// Desired state `τ` steps ahead, at index `τ - 1`.
    pub projection: Vec<DesiredState>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HumanForecast {
    pub human: HumanId,
    pub candidates: Vec<CandidateForecast>,
}

/// State cost over all τ-layers, stored layer-major, cells row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CostField {
    n_x: i32,
    n_y: i32,
    horizon: usize,
    pub goal: Cell,
    pub k: u64,
    values: Vec<f64>,
}

impl CostField {
    pub fn from_fn(
        n_x: i32,
        n_y: i32,
        horizon: usize,
        goal: Cell,
        mut f: impl FnMut(Cell, usize) -> f64,
    ) -> Self {
        let n = (n_x * n_y) as usize;
        let mut values = Vec::with_capacity(n * horizon);
        for tau in 1..=horizon {
            for i in 0..n as i32 {
                values.push(f(Cell::new(i % n_x + 1, i / n_x + 1), tau));
            }
        }
        Self { n_x, n_y, horizon, goal, k: 0, values }
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn n_x(&self) -> i32 {
        self.n_x
    }

    pub fn n_y(&self) -> i32 {
        self.n_y
    }

    fn cells(&self) -> usize {
        (self.n_x * self.n_y) as usize
    }

    pub fn value(&self, cell: Cell, tau: usize) -> f64 {
        let i = ((cell.y - 1) * self.n_x + (cell.x - 1)) as usize;
        self.values[(tau - 1) * self.cells() + i]
    }

    pub fn layer(&self, tau: usize) -> &[f64] {
        let n = self.cells();
        &self.values[(tau - 1) * n..tau * n]
    }

    pub fn shifted(&self, constant: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v += constant);
        out
    }
}

/// Time-varying state cost: goal reward, obstacle penalty, distance to goal plus
/// the expected human occupancy at each layer, weighted by `c0`.
pub fn build_cost(
    world: &GridWorkplace,
    goal: Cell,
    humans: &[HumanForecast],
    model: &DistractionModel,
    params: &CostParams,
    horizon: usize,
    k: u64,
) -> Result<CostField, PlanError> {
    if horizon == 0 {
        return Err(PlanError::InvalidHorizon);
    }
    if !world.is_free(goal) {
        return Err(PlanError::InvalidGoal(goal));
    }
    for h in humans {
        for c in &h.candidates {
            if c.projection.len() < horizon {
                return Err(PlanError::MissingProjection {
                    human: h.human,
                    candidate: c.place,
                    got: c.projection.len(),
                    expected: horizon,
                });
            }
        }
    }

    let n = world.cell_count();
    let mut occupancy = vec![0.0; n * horizon];
    if params.c0 != 0.0 {
        for tau in 1..=horizon {
            let layer = &mut occupancy[(tau - 1) * n..tau * n];
            for h in humans {
                for c in &h.candidates {
                    let s = c.projection[tau - 1];
                    for (cell, alpha) in model.distribution(h.human, s.current, s.velocity.speed_class, world)
                    {
                        layer[world.index(cell)] += c.probability * alpha;
                    }
                }
            }
        }
        if params.horizon_sum {
            let mut total = vec![0.0; n];
            for layer in occupancy.chunks(n) {
                total.iter_mut().zip(layer).for_each(|(t, v)| *t += v);
            }
            for layer in occupancy.chunks_mut(n) {
                layer.copy_from_slice(&total);
            }
        }
    }

    let mut values = Vec::with_capacity(n * horizon);
    for tau in 0..horizon {
        for i in 0..n {
            let cell = world.cell_at(i);
            values.push(if cell == goal {
                params.c_goal
            } else if world.is_obstacle(cell) {
                params.c_obs
            } else {
                euclidean(cell, goal) + params.c0 * occupancy[tau * n + i]
            });
        }
    }
    Ok(CostField { n_x: world.n_x(), n_y: world.n_y(), horizon, goal, k, values })
}

#[derive(Clone, Debug)]
pub struct PlanResult {
    n_x: i32,
    horizon: usize,
    values: Vec<f64>,
    policy: Vec<Action>,
}

impl PlanResult {
    fn at(&self, cell: Cell, tau: usize) -> usize {
        let n = self.values.len() / self.horizon;
        (tau - 1) * n + ((cell.y - 1) * self.n_x + (cell.x - 1)) as usize
    }

    pub fn value(&self, cell: Cell, tau: usize) -> f64 {
        self.values[self.at(cell, tau)]
    }

    pub fn policy(&self, cell: Cell, tau: usize) -> Action {
        self.policy[self.at(cell, tau)]
    }

    /// `a* = π*(r_U, 1)`.
    pub fn first_action(&self, cell: Cell) -> Action {
        self.policy(cell, 1)
    }

    pub fn value_layer(&self, tau: usize) -> &[f64] {
        let n = self.values.len() / self.horizon;
        &self.values[(tau - 1) * n..tau * n]
    }
}

/// Backward induction:
/// `V(r, N_τ) = C(r, N_τ)`, `V(r, τ) = C(r, τ) + γ · min_a V(f((r, τ), a))`.
///
/// The policy at every layer is the first minimizing action in [`Action::ALL`]
/// order; on the last layer it minimizes over that same layer.
pub fn solve(cost: &CostField, transitions: &Transitions, gamma: f64) -> PlanResult {
    let n = transitions.cell_count();
    let horizon = cost.horizon;
    assert_eq!(n, cost.cells(), "cost field and transition table disagree on grid size");
    assert_eq!(horizon, transitions.horizon(), "cost field and transition table disagree on horizon");

    let mut values = vec![0.0; n * horizon];
    let mut policy = vec![Action::O; n * horizon];
    let last = (horizon - 1) * n;
    values[last..].copy_from_slice(cost.layer(horizon));

    let best = |next_layer: &[f64], row: &[u32; 9]| {
        let mut best = (f64::INFINITY, Action::O);
        for (a, &j) in Action::ALL.iter().zip(row) {
            let v = next_layer[j as usize];
            if v < best.0 {
                best = (v, *a);
            }
        }
        best
    };

    for i in 0..n {
        let (_, a) = best(&values[last..], &transitions.next[i]);
        policy[last + i] = a;
    }
    for tau in (1..horizon).rev() {
        let (head, tail) = values.split_at_mut(tau * n);
        let next_layer = &tail[..n];
        let here = &mut head[(tau - 1) * n..];
        let c = cost.layer(tau);
        for i in 0..n {
            let (v, a) = best(next_layer, &transitions.next[i]);
            here[i] = c[i] + gamma * v;
            policy[(tau - 1) * n + i] = a;
        }
    }
    PlanResult { n_x: cost.n_x, horizon, values, policy }
}

/// Formats `v` with 6 significant digits, `%g` style.
pub fn sig6(v: f64) -> String {
    if v == 0.0 || !v.is_finite() {
        return if v == 0.0 { "0".into() } else { v.to_string() };
    }
    let exp = v.abs().log10().floor() as i32;
    // rounding may bump the exponent
    let rounded: f64 = format!("{v:.5e}").parse().unwrap_or(v);
    let exp = if rounded.abs() >= 10f64.powi(exp + 1) { exp + 1 } else { exp };
    if (-5..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        let s = format!("{rounded:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        let s = format!("{v:.5e}");
        let (mantissa, e) = s.split_once('e').expect("scientific format");
        let mantissa = if mantissa.contains('.') {
            mantissa.trim_end_matches('0').trim_end_matches('.')
        } else {
            mantissa
        };
        format!("{mantissa}e{e}")
    }
}

/// One layer as CSV: rows are `y` ascending, columns `x` ascending.
pub fn layer_csv(layer: &[f64], n_x: i32) -> String {
    let mut out = String::new();
    for row in layer.chunks(n_x as usize) {
        let line: Vec<String> = row.iter().map(|&v| sig6(v)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}
