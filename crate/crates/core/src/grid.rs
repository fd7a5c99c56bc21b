//! Discretized workplace and 8-connected shortest-path search.
//!
//! Cells are 1-based: `x ∈ 1..=n_x`, `y ∈ 1..=n_y`. Work stations are cells
//! keyed by their Petri-net place id.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use std::f64::consts::SQRT_2;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::petri::PlaceId;

/// Neighbor offsets in the fixed expansion order E, NE, N, NW, W, SW, S, SE.
pub const NEIGHBOR_OFFSETS: [(i32, i32); 8] =
    [(1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0), (-1, -1), (0, -1), (1, -1)];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("cell {0} is outside the grid or on an obstacle")]
    InvalidCell(Cell),
    #[error("no path from {from} to {to}")]
    NoPath { from: Cell, to: Cell },
    #[error("invalid workplace: {0}")]
    InvalidWorld(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "(i32, i32)", into = "(i32, i32)")]
pub struct Cell {
    pub x: i32,
    pub y: i32,
}

impl Cell {
    pub const fn new(x: i32, y: i32) -> Self {
        Self { x, y }
    }

    pub fn offset(self, dx: i32, dy: i32) -> Self {
        Self::new(self.x + dx, self.y + dy)
    }

    /// Componentwise difference `self - other`.
    pub fn delta(self, other: Cell) -> (i32, i32) {
        (self.x - other.x, self.y - other.y)
    }

    pub fn chebyshev(self, other: Cell) -> i32 {
        (self.x - other.x).abs().max((self.y - other.y).abs())
    }
}

impl From<(i32, i32)> for Cell {
    fn from((x, y): (i32, i32)) -> Self {
        Self::new(x, y)
    }
}

impl From<Cell> for (i32, i32) {
    fn from(c: Cell) -> Self {
        (c.x, c.y)
    }
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

pub fn euclidean(a: Cell, b: Cell) -> f64 {
    let dx = f64::from(a.x - b.x);
    let dy = f64::from(a.y - b.y);
    (dx * dx + dy * dy).sqrt()
}

#[derive(Clone, Debug)]
pub struct GridWorkplace {
    n_x: i32,
    n_y: i32,
    blocked: Vec<bool>,
    obstacles: BTreeSet<Cell>,
    stations: BTreeMap<PlaceId, Cell>,
    corner_cutting: bool,
}

impl GridWorkplace {
    /// Builds a workplace, checking that obstacles lie inside the grid and that
    /// stations are distinct free cells.
    pub fn new(
        n_x: i32,
        n_y: i32,
        obstacles: impl IntoIterator<Item = Cell>,
        stations: BTreeMap<PlaceId, Cell>,
    ) -> Result<Self, GridError> {
        if n_x < 1 || n_y < 1 {
            return Err(GridError::InvalidWorld(format!(
                "grid dimensions must be positive, got {n_x}x{n_y}"
            )));
        }
        let mut world = Self {
            n_x,
            n_y,
            blocked: vec![false; (n_x * n_y) as usize],
            obstacles: BTreeSet::new(),
            stations: BTreeMap::new(),
            corner_cutting: true,
        };
        for c in obstacles {
            if !world.contains(c) {
                return Err(GridError::InvalidWorld(format!("obstacle {c} is outside the grid")));
            }
            let i = world.index(c);
            world.blocked[i] = true;
            world.obstacles.insert(c);
        }
        let mut seen = BTreeMap::new();
        for (&place, &cell) in &stations {
            if !world.contains(cell) {
                return Err(GridError::InvalidWorld(format!(
                    "station {place} at {cell} is outside the grid"
                )));
            }
            if world.is_obstacle(cell) {
                return Err(GridError::InvalidWorld(format!("station {place} at {cell} is on an obstacle")));
            }
            if let Some(other) = seen.insert(cell, place) {
                return Err(GridError::InvalidWorld(format!(
                    "stations {other} and {place} share cell {cell}"
                )));
            }
        }
        world.stations = stations;
        Ok(world)
    }

    pub fn with_corner_cutting(mut self, allowed: bool) -> Self {
        self.corner_cutting = allowed;
        self
    }

    pub fn n_x(&self) -> i32 {
        self.n_x
    }

    pub fn n_y(&self) -> i32 {
        self.n_y
    }

    pub fn cell_count(&self) -> usize {
        (self.n_x * self.n_y) as usize
    }

    pub fn corner_cutting(&self) -> bool {
        self.corner_cutting
    }

    pub fn contains(&self, c: Cell) -> bool {
        (1..=self.n_x).contains(&c.x) && (1..=self.n_y).contains(&c.y)
    }

    /// Row-major index with `y` as rows and `x` as columns.
    pub fn index(&self, c: Cell) -> usize {
        debug_assert!(self.contains(c));
        ((c.y - 1) * self.n_x + (c.x - 1)) as usize
    }

    pub fn cell_at(&self, index: usize) -> Cell {
        let i = index as i32;
        Cell::new(i % self.n_x + 1, i / self.n_x + 1)
    }

    pub fn is_obstacle(&self, c: Cell) -> bool {
        self.contains(c) && self.blocked[self.index(c)]
    }

    pub fn is_free(&self, c: Cell) -> bool {
        self.contains(c) && !self.blocked[self.index(c)]
    }

    pub fn obstacles(&self) -> &BTreeSet<Cell> {
        &self.obstacles
    }

    pub fn stations(&self) -> &BTreeMap<PlaceId, Cell> {
        &self.stations
    }

    pub fn station(&self, place: PlaceId) -> Option<Cell> {
        self.stations.get(&place).copied()
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.cell_count()).map(|i| self.cell_at(i))
    }

    /// Free 8-neighbors of `c` in expansion order, honoring the corner-cutting flag.
    pub fn free_neighbors(&self, c: Cell) -> impl Iterator<Item = Cell> + '_ {
        NEIGHBOR_OFFSETS.iter().filter_map(move |&(dx, dy)| {
            let n = c.offset(dx, dy);
            if !self.is_free(n) {
                return None;
            }
            if dx != 0 && dy != 0 && !self.corner_cutting {
                let side_a = c.offset(dx, 0);
                let side_b = c.offset(0, dy);
                if !self.is_free(side_a) || !self.is_free(side_b) {
                    return None;
                }
            }
            Some(n)
        })
    }
}

/// Exact path length `straight + diagonal·√2`.
///
/// Comparison is exact: two lengths are equal only when both step counts match.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct StepCount {
    pub straight: u32,
    pub diagonal: u32,
}

impl StepCount {
    pub fn push(self, dx: i32, dy: i32) -> Self {
        if dx != 0 && dy != 0 {
            Self { diagonal: self.diagonal + 1, ..self }
        } else {
            Self { straight: self.straight + 1, ..self }
        }
    }

    pub fn length(self) -> f64 {
        f64::from(self.straight) + f64::from(self.diagonal) * SQRT_2
    }
}

impl Ord for StepCount {
    fn cmp(&self, other: &Self) -> Ordering {
        // sign of da + db·√2
        let da = i64::from(self.straight) - i64::from(other.straight);
        let db = i64::from(self.diagonal) - i64::from(other.diagonal);
        match (da.signum(), db.signum()) {
            (0, s) | (s, 0) => s.cmp(&0),
            (a, b) if a == b => a.cmp(&0),
            (a, _) => {
                // opposite signs: compare da² with 2·db²
                let lhs = da * da;
                let rhs = 2 * db * db;
                if a > 0 {
                    lhs.cmp(&rhs)
                } else {
                    rhs.cmp(&lhs)
                }
            }
        }
    }
}

impl PartialOrd for StepCount {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Path {
    pub cells: Vec<Cell>,
    pub cost: f64,
}

impl Path {
    pub fn start(&self) -> Cell {
        self.cells[0]
    }

    pub fn end(&self) -> Cell {
        *self.cells.last().expect("path is never empty")
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Cell at `index`, clamped to the final cell.
    pub fn at(&self, index: usize) -> Cell {
        self.cells[index.min(self.cells.len() - 1)]
    }
}

#[derive(Clone, Copy, Debug)]
struct OpenEntry {
    f: f64,
    seq: u64,
    node: usize,
}

impl PartialEq for OpenEntry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for OpenEntry {}

impl Ord for OpenEntry {
    // BinaryHeap is a max-heap: smallest f first, then earliest insertion.
    fn cmp(&self, other: &Self) -> Ordering {
        other.f.total_cmp(&self.f).then_with(|| other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for OpenEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Minimum-length 8-connected obstacle-free path between two free cells.
///
/// Straight steps cost 1, diagonal steps √2, the heuristic is Euclidean distance.
/// Equal keys pop in insertion order, neighbors expand E, NE, N, NW, W, SW, S, SE.
pub fn astar_path(world: &GridWorkplace, start: Cell, goal: Cell) -> Result<Path, GridError> {
    for c in [start, goal] {
        if !world.is_free(c) {
            return Err(GridError::InvalidCell(c));
        }
    }
    if start == goal {
        return Ok(Path { cells: vec![start], cost: 0.0 });
    }

    let n = world.cell_count();
    let mut best: Vec<Option<StepCount>> = vec![None; n];
    let mut parent: Vec<usize> = vec![usize::MAX; n];
    let mut open = BinaryHeap::new();
    let mut seq = 0u64;

    let s = world.index(start);
    let g = world.index(goal);
    best[s] = Some(StepCount::default());
    open.push(OpenEntry { f: euclidean(start, goal), seq, node: s });

    while let Some(OpenEntry { f, node, .. }) = open.pop() {
        let g_here = best[node].expect("queued nodes have a label");
        let cell = world.cell_at(node);
        // stale entry
        if f > g_here.length() + euclidean(cell, goal) {
            continue;
        }
        if node == g {
            break;
        }
        for next in world.free_neighbors(cell) {
            let (dx, dy) = next.delta(cell);
            let candidate = g_here.push(dx, dy);
            let j = world.index(next);
            if best[j].is_none_or(|old| candidate < old) {
                best[j] = Some(candidate);
                parent[j] = node;
                seq += 1;
                open.push(OpenEntry { f: candidate.length() + euclidean(next, goal), seq, node: j });
            }
        }
    }

    let total = best[g].ok_or(GridError::NoPath { from: start, to: goal })?;
    let mut cells = vec![goal];
    let mut at = g;
    while at != s {
        at = parent[at];
        cells.push(world.cell_at(at));
    }
    cells.reverse();
    Ok(Path { cells, cost: total.length() })
}
