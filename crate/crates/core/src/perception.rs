//! Online estimators for human distraction and intention.
//!
//! Distraction is a visit histogram over a rigid neighborhood of offsets around
//! the desired position (the moving neighboring set), kept per human and per
//! desired speed class. Intention is a windowed, normalized sum of exponential
//! deviation rewards against each candidate's desired trajectory.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{euclidean, Cell, GridWorkplace};
use crate::human::{DesiredVelocity, HumanId, SpeedClass};
use crate::petri::PlaceId;

pub const DEFAULT_DEGREE: u32 = 2;
pub const DEFAULT_WINDOW: usize = 10;
pub const DEFAULT_PSEUDO_COUNT: f64 = 1.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PerceptionError {
    #[error("intention window is empty")]
    EmptyWindow,
    #[error("expected {expected} desired cells, got {got}")]
    CandidateMismatch { expected: usize, got: usize },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MnsMode {
    /// Offsets in `{0..d}² \ {(0,0)}`.
    #[default]
    Quadrant,
    /// Offsets in `{-d..d}² \ {(0,0)}`.
    Symmetric,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MnsSpec {
    pub degree: u32,
    pub mode: MnsMode,
    offsets: Vec<(i32, i32)>,
}

impl MnsSpec {
    pub fn new(degree: u32, mode: MnsMode) -> Self {
        let d = degree as i32;
        let lo = match mode {
            MnsMode::Quadrant => 0,
            MnsMode::Symmetric => -d,
        };
        let offsets = (lo..=d).flat_map(|i| (lo..=d).map(move |j| (i, j))).filter(|&o| o != (0, 0)).collect();
        Self { degree, mode, offsets }
    }

    pub fn offsets(&self) -> &[(i32, i32)] {
        &self.offsets
    }

    fn offset_index(&self, offset: (i32, i32)) -> Option<usize> {
        self.offsets.iter().position(|&o| o == offset)
    }
}

/// Cells of the neighborhood around `center` that fall inside the grid.
/// Obstacles are kept.
pub fn mns_cells(spec: &MnsSpec, center: Cell, world: &GridWorkplace) -> Vec<Cell> {
    spec.offsets.iter().map(|&(dx, dy)| center.offset(dx, dy)).filter(|&c| world.contains(c)).collect()
}

/// `exp(-‖actual - desired‖)`, 1 on the desired cell and decaying toward 0.
pub fn deviation_reward(actual: Cell, desired: Cell) -> f64 {
    (-euclidean(actual, desired)).exp()
}

#[derive(Clone, Debug)]
pub struct DistractionModel {
    spec: MnsSpec,
    pseudo_count: f64,
    counts: BTreeMap<(HumanId, SpeedClass), Vec<f64>>,
}

impl DistractionModel {
    pub fn new(spec: MnsSpec, pseudo_count: f64) -> Self {
        Self { spec, pseudo_count, counts: BTreeMap::new() }
    }

    pub fn spec(&self) -> &MnsSpec {
        &self.spec
    }

    pub fn pseudo_count(&self) -> f64 {
        self.pseudo_count
    }

    /// Records one visit. Returns whether `actual - desired` fell inside the neighborhood.
    pub fn observe(
        &mut self,
        human: HumanId,
        actual: Cell,
        desired: Cell,
        velocity: DesiredVelocity,
    ) -> bool {
        let Some(i) = self.spec.offset_index(actual.delta(desired)) else {
            return false;
        };
        let n = self.spec.offsets.len();
        self.counts.entry((human, velocity.speed_class)).or_insert_with(|| vec![0.0; n])[i] += 1.0;
        true
    }

    /// Raw visit count at one offset.
    pub fn count(&self, human: HumanId, speed: SpeedClass, offset: (i32, i32)) -> f64 {
        match (self.spec.offset_index(offset), self.counts.get(&(human, speed))) {
            (Some(i), Some(row)) => row[i],
            _ => 0.0,
        }
    }

    fn mass(&self, human: HumanId, speed: SpeedClass, index: usize) -> f64 {
        let raw = self.counts.get(&(human, speed)).map_or(0.0, |row| row[index]);
        raw + self.pseudo_count
    }

    /// Probability that the human is at `cell` given desired position `desired`
    /// and speed class. Normalized over in-grid offsets only; 0 outside them.
    pub fn distraction(
        &self,
        human: HumanId,
        cell: Cell,
        desired: Cell,
        speed: SpeedClass,
        world: &GridWorkplace,
    ) -> f64 {
        if !world.contains(cell) {
            return 0.0;
        }
        let Some(i) = self.spec.offset_index(cell.delta(desired)) else {
            return 0.0;
        };
        let total = self.in_grid_mass(human, desired, speed, world);
        if total > 0.0 {
            self.mass(human, speed, i) / total
        } else {
            0.0
        }
    }

    fn in_grid_mass(&self, human: HumanId, desired: Cell, speed: SpeedClass, world: &GridWorkplace) -> f64 {
        self.spec
            .offsets
            .iter()
            .enumerate()
            .filter(|(_, &(dx, dy))| world.contains(desired.offset(dx, dy)))
            .map(|(i, _)| self.mass(human, speed, i))
            .sum()
    }

    /// Full in-grid distribution around `desired`, in offset order.
    pub fn distribution(
        &self,
        human: HumanId,
        desired: Cell,
        speed: SpeedClass,
        world: &GridWorkplace,
    ) -> Vec<(Cell, f64)> {
        let total = self.in_grid_mass(human, desired, speed, world);
        self.spec
            .offsets
            .iter()
            .enumerate()
            .filter_map(|(i, &(dx, dy))| {
                let c = desired.offset(dx, dy);
                world.contains(c).then(|| {
                    let p = if total > 0.0 { self.mass(human, speed, i) / total } else { 0.0 };
                    (c, p)
                })
            })
            .collect()
    }

    /// Raw counts for one human, by speed class, in offset order.
    pub fn histogram(&self, human: HumanId) -> BTreeMap<SpeedClass, Vec<f64>> {
        let n = self.spec.offsets.len();
        SpeedClass::ALL
            .iter()
            .map(|&s| (s, self.counts.get(&(human, s)).cloned().unwrap_or_else(|| vec![0.0; n])))
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
struct WindowRecord {
    k: u64,
    actual: Cell,
    desired: Vec<Cell>,
}

/// Sliding-window intention estimator for one human's current leg.
#[derive(Clone, Debug)]
pub struct IntentionEstimate {
    window_len: usize,
    candidates: Vec<PlaceId>,
    window: VecDeque<WindowRecord>,
}

impl IntentionEstimate {
    pub fn new(window_len: usize, candidates: Vec<PlaceId>) -> Self {
        Self { window_len: window_len.max(1), candidates, window: VecDeque::new() }
    }

    pub fn candidates(&self) -> &[PlaceId] {
        &self.candidates
    }

    pub fn len(&self) -> usize {
        self.window.len()
    }

    pub fn is_empty(&self) -> bool {
        self.window.is_empty()
    }

    /// Drops the window and switches to a new candidate set.
    pub fn reset(&mut self, candidates: Vec<PlaceId>) {
        self.candidates = candidates;
        self.window.clear();
    }

    /// Adds the observation at time `k`; `desired[i]` is candidate `i`'s desired cell.
    pub fn push(&mut self, k: u64, actual: Cell, desired: Vec<Cell>) -> Result<(), PerceptionError> {
        if desired.len() != self.candidates.len() {
            return Err(PerceptionError::CandidateMismatch {
                expected: self.candidates.len(),
                got: desired.len(),
            });
        }
        self.window.push_back(WindowRecord { k, actual, desired });
        while self.window.len() > self.window_len {
            self.window.pop_front();
        }
        Ok(())
    }

    /// Probability of each candidate at time `k`, from records with
    /// `k - N_p <= τ <= k - 1`.
    pub fn intention(&self, k: u64) -> Result<Vec<(PlaceId, f64)>, PerceptionError> {
        let lo = k.saturating_sub(self.window_len as u64);
        let mut sums = vec![0.0; self.candidates.len()];
        let mut used = 0;
        for rec in self.window.iter().filter(|r| r.k >= lo && r.k < k) {
            used += 1;
            for (s, &d) in sums.iter_mut().zip(&rec.desired) {
                *s += deviation_reward(rec.actual, d);
            }
        }
        if used == 0 || self.candidates.is_empty() {
            return Err(PerceptionError::EmptyWindow);
        }
        let total: f64 = sums.iter().sum();
        Ok(self.candidates.iter().copied().zip(sums.into_iter().map(|s| s / total)).collect())
    }
}
