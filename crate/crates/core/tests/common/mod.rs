//! Independent reference implementations used by the integration and acceptance tests.
#![allow(dead_code)]

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};

use cowork_core::grid::{Cell, GridWorkplace};
use cowork_core::mdp::{Action, CostField};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Exact length `a + b·√2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Surd {
    pub a: i64,
    pub b: i64,
}

impl Surd {
    pub fn zero() -> Self {
        Surd { a: 0, b: 0 }
    }
}

impl Ord for Surd {
    fn cmp(&self, o: &Self) -> Ordering {
        // sign of (a1 - a2) + (b1 - b2)·√2
        let (da, db) = (self.a - o.a, self.b - o.b);
        let s = |v: i64| v.cmp(&0);
        if db == 0 {
            return s(da);
        }
        if da == 0 || da.signum() == db.signum() {
            return if da == 0 { s(db) } else { s(da) };
        }
        let (x, y) = (da * da, 2 * db * db);
        if da > 0 {
            x.cmp(&y)
        } else {
            y.cmp(&x)
        }
    }
}

impl PartialOrd for Surd {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// Length of a cell sequence in exact units; panics on a non-unit step.
pub fn path_surd(cells: &[Cell]) -> Surd {
    let mut s = Surd::zero();
    for w in cells.windows(2) {
        let (dx, dy) = ((w[1].x - w[0].x).abs(), (w[1].y - w[0].y).abs());
        match (dx, dy) {
            (1, 1) => s.b += 1,
            (1, 0) | (0, 1) => s.a += 1,
            _ => panic!("invalid step {:?} -> {:?}", w[0], w[1]),
        }
    }
    s
}

/// Plain Dijkstra on the 8-connected grid with corner cutting allowed.
pub fn dijkstra(world: &GridWorkplace, start: Cell, goal: Cell) -> Option<Surd> {
    let mut best: BTreeMap<Cell, Surd> = BTreeMap::new();
    let mut heap = BinaryHeap::new();
    best.insert(start, Surd::zero());
    heap.push(std::cmp::Reverse((Surd::zero(), start)));
    while let Some(std::cmp::Reverse((d, c))) = heap.pop() {
        if best.get(&c).is_some_and(|b| *b < d) {
            continue;
        }
        if c == goal {
            return Some(d);
        }
        for dx in -1..=1 {
            for dy in -1..=1 {
                if dx == 0 && dy == 0 {
                    continue;
                }
                let n = Cell::new(c.x + dx, c.y + dy);
                if n.x < 1 || n.y < 1 || n.x > world.n_x() || n.y > world.n_y() || world.is_obstacle(n) {
                    continue;
                }
                let step = if dx != 0 && dy != 0 { Surd { a: 0, b: 1 } } else { Surd { a: 1, b: 0 } };
                let nd = Surd { a: d.a + step.a, b: d.b + step.b };
                if best.get(&n).is_none_or(|b| nd < *b) {
                    best.insert(n, nd);
                    heap.push(std::cmp::Reverse((nd, n)));
                }
            }
        }
    }
    None
}

/// Random world with roughly `density` obstacle cells.
pub fn random_world(seed: u64, n: i32, density: f64) -> GridWorkplace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut obstacles = Vec::new();
    for x in 1..=n {
        for y in 1..=n {
            if rng.gen_bool(density) {
                obstacles.push(Cell::new(x, y));
            }
        }
    }
    GridWorkplace::new(n, n, obstacles, BTreeMap::new()).unwrap()
}

/// Border-clamped successor written from the action semantics.
pub fn step(world: &GridWorkplace, c: Cell, a: Action) -> Cell {
    let (dx, dy) = match a {
        Action::E => (1, 0),
        Action::NE => (1, 1),
        Action::N => (0, 1),
        Action::NW => (-1, 1),
        Action::W => (-1, 0),
        Action::SW => (-1, -1),
        Action::S => (0, -1),
        Action::SE => (1, -1),
        Action::O => (0, 0),
    };
    Cell::new((c.x + dx).clamp(1, world.n_x()), (c.y + dy).clamp(1, world.n_y()))
}

/// Minimum over every action sequence of the discounted cost collected from
/// `(start, 1)` through layer `N_τ`.
pub fn brute_force_value(world: &GridWorkplace, cost: &CostField, gamma: f64, start: Cell) -> f64 {
    brute_force_from(world, cost, gamma, start, 1)
}

/// First actions of every sequence achieving the brute-force minimum (within `tol`).
pub fn brute_force_optimal_first(
    world: &GridWorkplace,
    cost: &CostField,
    gamma: f64,
    start: Cell,
    tol: f64,
) -> Vec<Action> {
    let best = brute_force_value(world, cost, gamma, start);
    Action::ALL
        .iter()
        .copied()
        .filter(|&a| {
            let next = step(world, start, a);
            let v = if cost.horizon() == 1 {
                cost.value(start, 1)
            } else {
                cost.value(start, 1) + gamma * brute_force_from(world, cost, gamma, next, 2)
            };
            (v - best).abs() <= tol
        })
        .collect()
}

fn brute_force_from(world: &GridWorkplace, cost: &CostField, gamma: f64, c: Cell, tau: usize) -> f64 {
    let here = cost.value(c, tau);
    if tau == cost.horizon() {
        return here;
    }
    let rest = Action::ALL
        .iter()
        .map(|&a| brute_force_from(world, cost, gamma, step(world, c, a), tau + 1))
        .fold(f64::INFINITY, f64::min);
    here + gamma * rest
}

/// Direct windowed intention formula over a full history of
/// `(tick, actual, desired per candidate)` records.
pub fn intention_formula(history: &[(u64, Cell, Vec<Cell>)], k: u64, window: u64) -> Vec<f64> {
    let n = history.first().map_or(0, |h| h.2.len());
    let lo = k.saturating_sub(window);
    let mut sums = vec![0.0; n];
    for (t, actual, desired) in history {
        if *t >= lo && *t < k {
            for (s, d) in sums.iter_mut().zip(desired) {
                let dx = f64::from(actual.x - d.x);
                let dy = f64::from(actual.y - d.y);
                *s += (-(dx * dx + dy * dy).sqrt()).exp();
            }
        }
    }
    let total: f64 = sums.iter().sum();
    sums.iter().map(|s| s / total).collect()
}

/// Scripts one destination per human (drawn from `seed`), silences the noise,
/// runs the loop and checks that the intention argmax names the true destination
/// on every tick at which the time-aligned candidate paths have been at least
/// two cells apart for `window` consecutive ticks. Returns the number of such
/// ticks, or a description of the first miss.
pub fn intention_convergence_check(
    cfg: &cowork_core::scenario::ScenarioConfig,
    seed: u64,
) -> Result<usize, String> {
    use cowork_core::grid::{astar_path, euclidean};
    use cowork_core::petri::CoWorker;

    let mut cfg = cfg.clone();
    cfg.planner.seed = seed;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scn = cfg.validate().map_err(|e| e.to_string())?;
    for h in &mut cfg.humans {
        let options: Vec<u32> = scn
            .net
            .next_stations(h.origin, CoWorker::Human)
            .map_err(|e| e.to_string())?
            .into_iter()
            .collect();
        h.destinations = Some(vec![options[rng.gen_range(0..options.len())]]);
        h.epsilon = 0.0;
    }
    let scn = cfg.validate().map_err(|e| e.to_string())?;
    let trace = cowork_core::scenario::run(&scn).map_err(|e| e.to_string())?;
    let window = scn.planner.window;
    let mut total = 0;
    for (slot, spec) in scn.humans.iter().enumerate() {
        let start = scn.world.station(spec.origin).ok_or("origin without station")?;
        let paths: BTreeMap<u32, Vec<Cell>> = scn
            .net
            .next_stations(spec.origin, CoWorker::Human)
            .map_err(|e| e.to_string())?
            .into_iter()
            .map(|p| {
                let goal = scn.world.station(p).expect("validated station");
                (p, astar_path(&scn.world, start, goal).expect("reachable").cells)
            })
            .collect();
        let at = |p: u32, k: usize| {
            let cells = &paths[&p];
            cells[k.min(cells.len() - 1)]
        };
        let mut apart = 0;
        let mut qualified = 0;
        for r in &trace.records {
            let h = &r.humans[slot];
            if h.origin != spec.origin || h.candidates.len() < 2 {
                break;
            }
            let k = r.k as usize;
            let truth = h.true_destination;
            let gap = paths
                .keys()
                .filter(|&&p| p != truth)
                .map(|&p| euclidean(at(p, k), at(truth, k)))
                .fold(f64::INFINITY, f64::min);
            apart = if gap >= 2.0 { apart + 1 } else { 0 };
            if apart >= window {
                let best = h.candidates.iter().fold(&h.candidates[0], |b, c| {
                    if c.probability > b.probability {
                        c
                    } else {
                        b
                    }
                });
                if best.place != truth {
                    return Err(format!(
                        "seed {seed} human {} tick {}: argmax ws{} ({:.3}) but heading to ws{truth}",
                        h.id, r.k, best.place, best.probability
                    ));
                }
                qualified += 1;
            }
        }
        if qualified == 0 {
            return Err(format!(
                "seed {seed} human {}: candidate paths never apart for a full window",
                spec.id
            ));
        }
        total += qualified;
    }
    Ok(total)
}
