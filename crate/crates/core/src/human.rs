//! Simulated human co-workers.
//!
//! Each human walks from an origin station toward a hidden true destination
//! along an A* path, deviating to a random neighbor cell with probability
//! `epsilon` per tick. Progress along every candidate path is tracked from the
//! observed positions alone, so the same counters can feed the estimators.

use std::collections::VecDeque;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{astar_path, euclidean, Cell, GridError, GridWorkplace, Path};
use crate::petri::{CoWorker, PetriError, PetriNet, PlaceId};

pub type HumanId = u32;

pub const DEFAULT_EPSILON: f64 = 0.2;
pub const DEFAULT_STRAY_LIMIT: u32 = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HumanError {
    #[error("place {0} is not a candidate destination")]
    UnknownCandidate(PlaceId),
    #[error("place {0} has no station cell")]
    MissingStation(PlaceId),
    #[error("scripted destination {wanted} is not reachable from {origin} (candidates {candidates:?})")]
    ScriptedNotCandidate { origin: PlaceId, wanted: PlaceId, candidates: Vec<PlaceId> },
    #[error(transparent)]
    Petri(#[from] PetriError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SpeedClass {
    Stay,
    Straight,
    Diagonal,
}

impl SpeedClass {
    pub const ALL: [SpeedClass; 3] = [SpeedClass::Stay, SpeedClass::Straight, SpeedClass::Diagonal];
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct DesiredVelocity {
    pub dx: i32,
    pub dy: i32,
    pub speed_class: SpeedClass,
}

impl DesiredVelocity {
    /// Velocity of a single grid step `to - from`. Both cells must be 8-adjacent or equal.
    pub fn between(from: Cell, to: Cell) -> Self {
        let (dx, dy) = to.delta(from);
        debug_assert!(dx.abs() <= 1 && dy.abs() <= 1, "non-adjacent step {from} -> {to}");
        let speed_class = match (dx != 0, dy != 0) {
            (false, false) => SpeedClass::Stay,
            (true, true) => SpeedClass::Diagonal,
            _ => SpeedClass::Straight,
        };
        Self { dx, dy, speed_class }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DesiredState {
    pub current: Cell,
    pub next: Cell,
    pub velocity: DesiredVelocity,
}

/// How a new true destination is picked on arrival.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub enum DestinationChoice {
    #[default]
    Uniform,
    Scripted(VecDeque<PlaceId>),
}

#[derive(Clone, Debug)]
pub struct CandidateTrack {
    pub place: PlaceId,
    pub path: Path,
    pub index: usize,
    stray: u32,
}

impl CandidateTrack {
    fn new(place: PlaceId, path: Path) -> Self {
        Self { place, path, index: 0, stray: 0 }
    }

    fn state_at(&self, index: usize) -> DesiredState {
        let current = self.path.at(index);
        let next = self.path.at(index + 1);
        DesiredState { current, next, velocity: DesiredVelocity::between(current, next) }
    }

    fn advance(&mut self, actual: Cell, stray_limit: u32) {
        let last = self.path.len() - 1;
        if self.index < last && actual == self.path.cells[self.index + 1] {
            self.index += 1;
            self.stray = 0;
        } else if actual == self.path.cells[self.index] {
            self.stray = 0;
        } else {
            self.stray += 1;
            if self.stray > stray_limit {
                // nearest path cell, later index on ties
                let mut best = (f64::INFINITY, self.index);
                for (i, &c) in self.path.cells.iter().enumerate() {
                    let d = euclidean(c, actual);
                    if d <= best.0 {
                        best = (d, i);
                    }
                }
                self.index = best.1;
                self.stray = 0;
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct HumanTrack {
    pub id: HumanId,
    origin: PlaceId,
    candidates: Vec<CandidateTrack>,
    true_destination: PlaceId,
    stationary: bool,
    actual_history: Vec<(u64, Cell)>,
    choice: DestinationChoice,
    stray_limit: u32,
}

impl HumanTrack {
    /// Places a human at its origin station at time 0 and plans its first leg.
    pub fn new<R: Rng>(
        id: HumanId,
        origin: PlaceId,
        net: &PetriNet,
        world: &GridWorkplace,
        choice: DestinationChoice,
        stray_limit: u32,
        rng: &mut R,
    ) -> Result<Self, HumanError> {
        let cell = world.station(origin).ok_or(HumanError::MissingStation(origin))?;
        let mut track = Self {
            id,
            origin,
            candidates: Vec::new(),
            true_destination: origin,
            stationary: true,
            actual_history: vec![(0, cell)],
            choice,
            stray_limit,
        };
        track.plan_leg(origin, net, world, rng)?;
        Ok(track)
    }

    /// A human who never leaves `origin`.
    pub fn stationary(
        id: HumanId,
        origin: PlaceId,
        world: &GridWorkplace,
        stray_limit: u32,
    ) -> Result<Self, HumanError> {
        let cell = world.station(origin).ok_or(HumanError::MissingStation(origin))?;
        Ok(Self {
            id,
            origin,
            candidates: vec![CandidateTrack::new(origin, Path { cells: vec![cell], cost: 0.0 })],
            true_destination: origin,
            stationary: true,
            actual_history: vec![(0, cell)],
            choice: DestinationChoice::Uniform,
            stray_limit,
        })
    }

    pub fn origin(&self) -> PlaceId {
        self.origin
    }

    /// Hidden from the planner; exposed for tracing and tests.
    pub fn true_destination(&self) -> PlaceId {
        self.true_destination
    }

    pub fn is_stationary(&self) -> bool {
        self.stationary
    }

    pub fn candidates(&self) -> Vec<PlaceId> {
        self.candidates.iter().map(|c| c.place).collect()
    }

    pub fn candidate_tracks(&self) -> &[CandidateTrack] {
        &self.candidates
    }

    pub fn position(&self) -> Cell {
        self.actual_history.last().expect("history starts at the origin").1
    }

    pub fn time(&self) -> u64 {
        self.actual_history.last().expect("history starts at the origin").0
    }

    pub fn actual_history(&self) -> &[(u64, Cell)] {
        &self.actual_history
    }

    fn candidate(&self, place: PlaceId) -> Result<&CandidateTrack, HumanError> {
        self.candidates.iter().find(|c| c.place == place).ok_or(HumanError::UnknownCandidate(place))
    }

    /// Current desired cell, next desired cell and desired velocity along the
    /// path to `candidate`. Past the path end the human desires to stay.
    pub fn desired_state(&self, candidate: PlaceId) -> Result<DesiredState, HumanError> {
        let c = self.candidate(candidate)?;
        Ok(c.state_at(c.index))
    }

    /// Desired state `tau` steps ahead of current progress, clamped at the path end.
    pub fn projected_state(&self, candidate: PlaceId, tau: usize) -> Result<DesiredState, HumanError> {
        let c = self.candidate(candidate)?;
        Ok(c.state_at(c.index + tau))
    }

    pub fn desired_path(&self, candidate: PlaceId) -> Result<&Path, HumanError> {
        Ok(&self.candidate(candidate)?.path)
    }

    /// True when the human stands on its true destination's station and still has
    /// somewhere to go afterwards.
    pub fn arrived(&self, world: &GridWorkplace) -> bool {
        !self.stationary && world.station(self.true_destination) == Some(self.position())
    }

    /// Advances one tick and returns the new actual cell.
    pub fn step_actual<R: Rng>(&mut self, rng: &mut R, epsilon: f64, world: &GridWorkplace) -> Cell {
        let here = self.position();
        let target = {
            let c = self.candidate(self.true_destination).expect("true destination is a candidate");
            c.path.at(c.index + 1)
        };
        let next = if epsilon > 0.0 && rng.gen_bool(epsilon.min(1.0)) {
            let mut options = vec![here];
            options.extend(world.free_neighbors(here));
            options[rng.gen_range(0..options.len())]
        } else if here.chebyshev(target) <= 1 {
            target
        } else {
            // off the path by more than a step: close in greedily
            let mut best = (euclidean(here, target), here);
            for n in world.free_neighbors(here) {
                let d = euclidean(n, target);
                if d < best.0 {
                    best = (d, n);
                }
            }
            best.1
        };
        let k = self.time() + 1;
        self.actual_history.push((k, next));
        let limit = self.stray_limit;
        for c in &mut self.candidates {
            c.advance(next, limit);
        }
        next
    }

    /// Starts the next leg after arriving at the true destination: the destination
    /// becomes the origin, candidates come from the net, and a new hidden
    /// destination is drawn. With no candidates the human stays put for good.
    pub fn retarget<R: Rng>(
        &mut self,
        net: &PetriNet,
        world: &GridWorkplace,
        rng: &mut R,
    ) -> Result<(), HumanError> {
        let origin = self.true_destination;
        self.plan_leg(origin, net, world, rng)
    }

    fn plan_leg<R: Rng>(
        &mut self,
        origin: PlaceId,
        net: &PetriNet,
        world: &GridWorkplace,
        rng: &mut R,
    ) -> Result<(), HumanError> {
        let start = world.station(origin).ok_or(HumanError::MissingStation(origin))?;
        let next: Vec<PlaceId> = net.next_stations(origin, CoWorker::Human)?.into_iter().collect();
        self.origin = origin;
        if next.is_empty() {
            self.stationary = true;
            self.true_destination = origin;
            self.candidates = vec![CandidateTrack::new(origin, Path { cells: vec![start], cost: 0.0 })];
            return Ok(());
        }
        let mut candidates = Vec::with_capacity(next.len());
        for &p in &next {
            let goal = world.station(p).ok_or(HumanError::MissingStation(p))?;
            candidates.push(CandidateTrack::new(p, astar_path(world, start, goal)?));
        }
        let destination = match &mut self.choice {
            DestinationChoice::Scripted(queue) if !queue.is_empty() => {
                let wanted = queue.pop_front().expect("checked non-empty");
                if !next.contains(&wanted) {
                    return Err(HumanError::ScriptedNotCandidate { origin, wanted, candidates: next });
                }
                wanted
            }
            _ => next[rng.gen_range(0..next.len())],
        };
        self.stationary = false;
        self.true_destination = destination;
        self.candidates = candidates;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeMap;

    fn world_and_net() -> (GridWorkplace, PetriNet) {
        let mut stations = BTreeMap::new();
        stations.insert(1, Cell::new(1, 1));
        stations.insert(2, Cell::new(8, 1));
        stations.insert(3, Cell::new(1, 8));
        stations.insert(4, Cell::new(8, 8));
        let world = GridWorkplace::new(10, 10, [], stations).unwrap();
        let mut net = PetriNet::new([1, 2, 3, 4]);
        net.add_transition("a", CoWorker::Human, &[1], &[2]).unwrap();
        net.add_transition("b", CoWorker::Human, &[1], &[3]).unwrap();
        net.add_transition("c", CoWorker::Human, &[2], &[4]).unwrap();
        (world, net)
    }

    fn track_with_path(cells: Vec<Cell>) -> HumanTrack {
        let path = Path { cells: cells.clone(), cost: 0.0 };
        HumanTrack {
            id: 0,
            origin: 1,
            candidates: vec![CandidateTrack::new(2, path)],
            true_destination: 2,
            stationary: false,
            actual_history: vec![(0, cells[0])],
            choice: DestinationChoice::Uniform,
            stray_limit: DEFAULT_STRAY_LIMIT,
        }
    }

    #[test]
    fn desired_state_walks_the_path() {
        let mut t = track_with_path(vec![Cell::new(1, 1), Cell::new(2, 2), Cell::new(3, 2)]);
        let s = t.desired_state(2).unwrap();
        assert_eq!((s.current, s.next), (Cell::new(1, 1), Cell::new(2, 2)));
        assert_eq!(s.velocity.speed_class, SpeedClass::Diagonal);

        t.candidates[0].index = 1;
        let s = t.desired_state(2).unwrap();
        assert_eq!((s.current, s.next), (Cell::new(2, 2), Cell::new(3, 2)));
        assert_eq!(s.velocity.speed_class, SpeedClass::Straight);

        t.candidates[0].index = 2;
        let s = t.desired_state(2).unwrap();
        assert_eq!((s.velocity.dx, s.velocity.dy), (0, 0));
        assert_eq!(s.velocity.speed_class, SpeedClass::Stay);

        assert_eq!(t.desired_state(7), Err(HumanError::UnknownCandidate(7)));
    }

    #[test]
    fn noiseless_walk_follows_the_path() {
        let (world, net) = world_and_net();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut t = HumanTrack::new(1, 1, &net, &world, DestinationChoice::Scripted([2].into()), 5, &mut rng)
            .unwrap();
        let path = t.desired_path(2).unwrap().clone();
        for k in 1..path.len() {
            let c = t.step_actual(&mut rng, 0.0, &world);
            assert_eq!(c, path.cells[k]);
        }
        // reached at step L-1
        assert!(t.arrived(&world));
        assert_eq!(t.time() as usize, path.len() - 1);
    }

    #[test]
    fn retarget_into_dead_end_stays() {
        let (world, net) = world_and_net();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut t = HumanTrack::new(1, 1, &net, &world, DestinationChoice::Scripted([3].into()), 5, &mut rng)
            .unwrap();
        assert_eq!(t.candidates(), vec![2, 3]);
        while !t.arrived(&world) {
            t.step_actual(&mut rng, 0.0, &world);
        }
        t.retarget(&net, &world, &mut rng).unwrap();
        assert!(t.is_stationary());
        assert_eq!(t.origin(), 3);
        for _ in 0..10 {
            assert_eq!(t.step_actual(&mut rng, 0.0, &world), Cell::new(1, 8));
        }
        assert_eq!(t.desired_state(3).unwrap().velocity.speed_class, SpeedClass::Stay);
    }

    #[test]
    fn retarget_single_candidate_is_forced() {
        let (world, net) = world_and_net();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut t = HumanTrack::new(1, 1, &net, &world, DestinationChoice::Scripted([2].into()), 5, &mut rng)
            .unwrap();
        while !t.arrived(&world) {
            t.step_actual(&mut rng, 0.0, &world);
        }
        t.retarget(&net, &world, &mut rng).unwrap();
        assert_eq!(t.candidates(), vec![4]);
        assert_eq!(t.true_destination(), 4);
        let p = t.desired_path(4).unwrap();
        assert_eq!((p.start(), p.end()), (Cell::new(8, 1), Cell::new(8, 8)));
    }

    #[test]
    fn scripted_choice_must_be_a_candidate() {
        let (world, net) = world_and_net();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let err = HumanTrack::new(1, 1, &net, &world, DestinationChoice::Scripted([4].into()), 5, &mut rng)
            .unwrap_err();
        assert!(matches!(err, HumanError::ScriptedNotCandidate { wanted: 4, .. }));
    }

    #[test]
    fn seeded_noise_is_reproducible() {
        let (world, net) = world_and_net();
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(42);
            let mut t = HumanTrack::new(1, 1, &net, &world, DestinationChoice::Uniform, 5, &mut rng).unwrap();
            for _ in 0..40 {
                t.step_actual(&mut rng, 0.3, &world);
            }
            t.actual_history().to_vec()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn stray_reanchors_to_nearest_cell() {
        let cells: Vec<Cell> = (1..=6).map(|x| Cell::new(x, 1)).collect();
        let mut c = CandidateTrack::new(2, Path { cells, cost: 5.0 });
        for _ in 0..=DEFAULT_STRAY_LIMIT {
            c.advance(Cell::new(5, 3), DEFAULT_STRAY_LIMIT);
        }
        assert_eq!(c.index, 4);
    }
}
