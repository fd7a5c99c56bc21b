//! Scenario files: TOML with `[world]`, `[net]`, `[[humans]]`, `[uas]` and
//! `[planner]` sections. Unknown keys are rejected.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ScenarioError;
use crate::grid::{Cell, GridWorkplace};
use crate::human::{DestinationChoice, DEFAULT_EPSILON, DEFAULT_STRAY_LIMIT};
use crate::mdp::{CostParams, DEFAULT_C0, DEFAULT_C_GOAL, DEFAULT_C_OBS, DEFAULT_GAMMA, DEFAULT_HORIZON};
use crate::perception::{MnsMode, DEFAULT_DEGREE, DEFAULT_PSEUDO_COUNT, DEFAULT_WINDOW};
use crate::petri::{CoWorker, Marking, PetriNet, PlaceId, TransitionId};

pub const DEFAULT_K_MAX: u64 = 200;

/// The bundled workplace: 50×50 grid, 22 stations, five humans, UAS 21 → 22.
pub const BUNDLED_SCENARIO: &str = include_str!("../../scenarios/shared_workplace.toml");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub world: WorldConfig,
    pub net: NetConfig,
    #[serde(default)]
    pub humans: Vec<HumanConfig>,
    pub uas: UasConfig,
    #[serde(default)]
    pub planner: PlannerConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorldConfig {
    /// `[n_x, n_y]`
    pub size: (i32, i32),
    #[serde(default = "yes")]
    pub corner_cutting: bool,
    #[serde(default)]
    pub obstacles: Vec<Cell>,
    #[serde(default)]
    pub obstacle_rects: Vec<RectConfig>,
    #[serde(default)]
    pub obstacle_discs: Vec<DiscConfig>,
    pub stations: Vec<StationConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RectConfig {
    pub min: Cell,
    pub max: Cell,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscConfig {
    pub center: Cell,
    pub radius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StationConfig {
    pub id: PlaceId,
    pub cell: Cell,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetConfig {
    pub places: Vec<PlaceId>,
    #[serde(default)]
    pub transitions: Vec<TransitionConfig>,
    /// Explicit initial tokens; derived from co-worker origins when absent.
    #[serde(default)]
    pub initial: Option<MarkingConfig>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionConfig {
    pub id: TransitionId,
    #[serde(default)]
    pub human_in: Vec<PlaceId>,
    #[serde(default)]
    pub human_out: Vec<PlaceId>,
    #[serde(default)]
    pub uas_in: Vec<PlaceId>,
    #[serde(default)]
    pub uas_out: Vec<PlaceId>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarkingConfig {
    /// `[[place, tokens], ...]`
    #[serde(default)]
    pub human: Vec<(PlaceId, u32)>,
    #[serde(default)]
    pub uas: Vec<(PlaceId, u32)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HumanConfig {
    pub origin: PlaceId,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    /// Stream offset for this human's random generator; defaults to its position in the list.
    #[serde(default)]
    pub seed: Option<u64>,
    /// Scripted destination sequence; uniform sampling once exhausted.
    #[serde(default)]
    pub destinations: Option<Vec<PlaceId>>,
    #[serde(default)]
    pub stationary: bool,
    #[serde(default = "default_stray_limit")]
    pub stray_limit: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UasConfig {
    pub origin: PlaceId,
    pub goal: PlaceId,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlannerConfig {
    pub horizon: usize,
    pub gamma: f64,
    pub c0: f64,
    pub c_goal: f64,
    pub c_obs: f64,
    pub mns_degree: u32,
    pub mns_mode: MnsMode,
    pub window: usize,
    pub pseudo_count: f64,
    /// Literal sum of the human term over the whole horizon (comparison only).
    pub horizon_sum: bool,
    pub k_max: u64,
    pub seed: u64,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            horizon: DEFAULT_HORIZON,
            gamma: DEFAULT_GAMMA,
            c0: DEFAULT_C0,
            c_goal: DEFAULT_C_GOAL,
            c_obs: DEFAULT_C_OBS,
            mns_degree: DEFAULT_DEGREE,
            mns_mode: MnsMode::Quadrant,
            window: DEFAULT_WINDOW,
            pseudo_count: DEFAULT_PSEUDO_COUNT,
            horizon_sum: false,
            k_max: DEFAULT_K_MAX,
            seed: 0,
        }
    }
}

fn yes() -> bool {
    true
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

fn default_stray_limit() -> u32 {
    DEFAULT_STRAY_LIMIT
}

impl PlannerConfig {
    pub fn cost_params(&self) -> CostParams {
        CostParams { c0: self.c0, c_goal: self.c_goal, c_obs: self.c_obs, horizon_sum: self.horizon_sum }
    }
}

#[derive(Clone, Debug)]
pub struct HumanSpec {
    pub id: u32,
    pub origin: PlaceId,
    pub epsilon: f64,
    pub stream: u64,
    pub choice: DestinationChoice,
    pub stationary: bool,
    pub stray_limit: u32,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct UasSpec {
    pub origin: PlaceId,
    pub goal: PlaceId,
    pub origin_cell: Cell,
    pub goal_cell: Cell,
}

/// A validated scenario.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub world: GridWorkplace,
    pub net: PetriNet,
    pub initial_marking: Marking,
    pub humans: Vec<HumanSpec>,
    pub uas: UasSpec,
    pub planner: PlannerConfig,
}

fn invalid(msg: impl Into<String>) -> ScenarioError {
    ScenarioError::Validation(msg.into())
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, ScenarioError> {
        toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))
    }

    fn obstacle_cells(&self) -> BTreeSet<Cell> {
        let w = &self.world;
        let mut cells: BTreeSet<Cell> = w.obstacles.iter().copied().collect();
        for r in &w.obstacle_rects {
            for x in r.min.x..=r.max.x {
                for y in r.min.y..=r.max.y {
                    cells.insert(Cell::new(x, y));
                }
            }
        }
        for d in &w.obstacle_discs {
            let reach = d.radius.ceil() as i32;
            for dx in -reach..=reach {
                for dy in -reach..=reach {
                    if f64::from(dx * dx + dy * dy) <= d.radius * d.radius {
                        let c = d.center.offset(dx, dy);
                        if (1..=w.size.0).contains(&c.x) && (1..=w.size.1).contains(&c.y) {
                            cells.insert(c);
                        }
                    }
                }
            }
        }
        cells
    }

    /// Builds the grid and net and checks every cross-reference.
    pub fn validate(&self) -> Result<Scenario, ScenarioError> {
        let p = &self.planner;
        if p.horizon == 0 {
            return Err(invalid("planner.horizon must be at least 1"));
        }
        if !(0.0..=1.0).contains(&p.gamma) {
            return Err(invalid(format!("planner.gamma must lie in [0, 1], got {}", p.gamma)));
        }
        if p.c0 < 0.0 || !p.c0.is_finite() {
            return Err(invalid(format!("planner.c0 must be a finite nonnegative number, got {}", p.c0)));
        }
        if p.c_goal >= 0.0 {
            return Err(invalid("planner.c_goal must be negative"));
        }
        if p.c_obs <= 0.0 {
            return Err(invalid("planner.c_obs must be positive"));
        }
        if p.mns_degree == 0 {
            return Err(invalid("planner.mns_degree must be at least 1"));
        }
        if p.window == 0 {
            return Err(invalid("planner.window must be at least 1"));
        }
        if p.pseudo_count < 0.0 {
            return Err(invalid("planner.pseudo_count must be nonnegative"));
        }

        let mut stations = BTreeMap::new();
        for s in &self.world.stations {
            if stations.insert(s.id, s.cell).is_some() {
                return Err(invalid(format!("station {} declared twice", s.id)));
            }
        }
        let world = GridWorkplace::new(self.world.size.0, self.world.size.1, self.obstacle_cells(), stations)
            .map_err(|e| invalid(e.to_string()))?
            .with_corner_cutting(self.world.corner_cutting);

        let places: BTreeSet<PlaceId> = self.net.places.iter().copied().collect();
        if places.len() != self.net.places.len() {
            return Err(invalid("net.places contains duplicates"));
        }
        for p in &places {
            if world.station(*p).is_none() {
                return Err(invalid(format!("place {p} has no station cell")));
            }
        }
        for s in world.stations().keys() {
            if !places.contains(s) {
                return Err(invalid(format!("station {s} is not a declared place")));
            }
        }
        let mut net = PetriNet::new(places.iter().copied());
        let mut seen = BTreeSet::new();
        for t in &self.net.transitions {
            if !seen.insert(t.id.clone()) {
                return Err(invalid(format!("transition {:?} declared twice", t.id)));
            }
            if !t.human_in.is_empty() || !t.human_out.is_empty() {
                net.add_transition(t.id.clone(), CoWorker::Human, &t.human_in, &t.human_out)
                    .map_err(|e| invalid(format!("transition {:?}: {e}", t.id)))?;
            }
            if !t.uas_in.is_empty() || !t.uas_out.is_empty() {
                net.add_transition(t.id.clone(), CoWorker::Uas, &t.uas_in, &t.uas_out)
                    .map_err(|e| invalid(format!("transition {:?}: {e}", t.id)))?;
            }
        }

        let u = &self.uas;
        for (what, place) in [("origin", u.origin), ("goal", u.goal)] {
            if !places.contains(&place) {
                return Err(invalid(format!("uas.{what} {place} is not a declared place")));
            }
        }
        let reachable = net.next_stations(u.origin, CoWorker::Uas).map_err(|e| invalid(e.to_string()))?;
        if !reachable.contains(&u.goal) {
            return Err(invalid(format!(
                "uas.goal {} is not a next station of uas.origin {} (next: {:?})",
                u.goal, u.origin, reachable
            )));
        }
        let uas = UasSpec {
            origin: u.origin,
            goal: u.goal,
            origin_cell: world.station(u.origin).expect("checked above"),
            goal_cell: world.station(u.goal).expect("checked above"),
        };

        let mut humans = Vec::with_capacity(self.humans.len());
        for (i, h) in self.humans.iter().enumerate() {
            let id = i as u32 + 1;
            if !places.contains(&h.origin) {
                return Err(invalid(format!("human {id}: origin {} is not a declared place", h.origin)));
            }
            if !(0.0..=1.0).contains(&h.epsilon) {
                return Err(invalid(format!("human {id}: epsilon must lie in [0, 1], got {}", h.epsilon)));
            }
            let next = net.next_stations(h.origin, CoWorker::Human).map_err(|e| invalid(e.to_string()))?;
            if next.is_empty() && !h.stationary {
                return Err(invalid(format!(
                    "human {id}: origin {} has no next station; mark the human stationary",
                    h.origin
                )));
            }
            let choice = match &h.destinations {
                Some(seq) => {
                    let mut at = h.origin;
                    for &d in seq {
                        let options =
                            net.next_stations(at, CoWorker::Human).map_err(|e| invalid(e.to_string()))?;
                        if !options.contains(&d) {
                            return Err(invalid(format!(
                                "human {id}: scripted destination {d} is not a next station of {at}"
                            )));
                        }
                        at = d;
                    }
                    DestinationChoice::Scripted(seq.iter().copied().collect::<VecDeque<_>>())
                }
                None => DestinationChoice::Uniform,
            };
            humans.push(HumanSpec {
                id,
                origin: h.origin,
                epsilon: h.epsilon,
                stream: h.seed.unwrap_or(u64::from(id)),
                choice,
                stationary: h.stationary,
                stray_limit: h.stray_limit,
            });
        }

        let initial_marking = match &self.net.initial {
            Some(m) => {
                let mut marking = Marking::default();
                for (who, entries) in [(CoWorker::Human, &m.human), (CoWorker::Uas, &m.uas)] {
                    for &(p, n) in entries {
                        if !places.contains(&p) {
                            return Err(invalid(format!("net.initial: unknown place {p}")));
                        }
                        marking.add(p, who, n);
                    }
                }
                marking
            }
            None => {
                let mut marking = Marking::default();
                for h in &humans {
                    marking.add(h.origin, CoWorker::Human, 1);
                }
                marking.add(uas.origin, CoWorker::Uas, 1);
                marking
            }
        };

        Ok(Scenario { world, net, initial_marking, humans, uas, planner: self.planner.clone() })
    }
}

/// Reads and validates a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    read_config(path)?.validate()
}

pub fn read_config(path: impl AsRef<Path>) -> Result<ScenarioConfig, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|source| ScenarioError::Io { path: path.to_path_buf(), source })?;
    ScenarioConfig::parse(&text)
}

pub fn bundled_config() -> ScenarioConfig {
    ScenarioConfig::parse(BUNDLED_SCENARIO).expect("bundled scenario parses")
}
