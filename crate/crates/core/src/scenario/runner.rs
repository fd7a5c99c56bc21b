//! Closed observe → estimate → plan → act loop.

use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{HumanSpec, Scenario};
use super::trace::{CandidateTick, HumanTick, RunSummary, RunTrace, TickRecord};
use super::ScenarioError;
use crate::grid::{euclidean, Cell};
use crate::human::{HumanError, HumanTrack};
use crate::mdp::{
    build_cost, build_transitions, layer_csv, solve, Action, CandidateForecast, CostField, HumanForecast,
    PlanResult, Transitions,
};
use crate::perception::{DistractionModel, IntentionEstimate, MnsSpec};
use crate::petri::{check_rule4, CoWorker, Marking};

/// Random stream for one human: keyed by the master seed, split by the human's stream id.
pub fn human_rng(master_seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(stream);
    rng
}

struct SimHuman {
    spec: HumanSpec,
    track: HumanTrack,
    rng: ChaCha8Rng,
    intention: IntentionEstimate,
}

struct Loop<'a> {
    scn: &'a Scenario,
    transitions: Transitions,
    model: DistractionModel,
    humans: Vec<SimHuman>,
    marking: Marking,
}

impl<'a> Loop<'a> {
    fn new(scn: &'a Scenario) -> Result<Self, ScenarioError> {
        let p = &scn.planner;
        let transitions = build_transitions(&scn.world, p.horizon)?;
        let model = DistractionModel::new(MnsSpec::new(p.mns_degree, p.mns_mode), p.pseudo_count);
        let mut humans = Vec::with_capacity(scn.humans.len());
        for spec in &scn.humans {
            let mut rng = human_rng(p.seed, spec.stream);
            let track = if spec.stationary {
                HumanTrack::stationary(spec.id, spec.origin, &scn.world, spec.stray_limit)?
            } else {
                HumanTrack::new(
                    spec.id,
                    spec.origin,
                    &scn.net,
                    &scn.world,
                    spec.choice.clone(),
                    spec.stray_limit,
                    &mut rng,
                )?
            };
            let intention = IntentionEstimate::new(p.window, track.candidates());
            humans.push(SimHuman { spec: spec.clone(), track, rng, intention });
        }
        Ok(Self { scn, transitions, model, humans, marking: scn.initial_marking.clone() })
    }

    /// Feeds tick-`k` positions to both estimators.
    fn observe(&mut self, k: u64) -> Result<(), ScenarioError> {
        for h in &mut self.humans {
            let actual = h.track.position();
            let mut desired = Vec::new();
            for c in h.track.candidates() {
                let s = h.track.desired_state(c)?;
                self.model.observe(h.spec.id, actual, s.current, s.velocity);
                desired.push(s.current);
            }
            h.intention.push(k, actual, desired)?;
        }
        Ok(())
    }

    fn forecasts(&self, k: u64) -> Result<Vec<HumanForecast>, ScenarioError> {
        let horizon = self.scn.planner.horizon;
        self.humans
            .iter()
            .map(|h| {
                let probs = h.intention.intention(k + 1)?;
                let candidates = probs
                    .into_iter()
                    .map(|(place, probability)| {
                        let projection = (1..=horizon)
                            .map(|tau| h.track.projected_state(place, tau))
                            .collect::<Result<Vec<_>, HumanError>>()?;
                        Ok(CandidateForecast { place, probability, projection })
                    })
                    .collect::<Result<Vec<_>, ScenarioError>>()?;
                Ok(HumanForecast { human: h.spec.id, candidates })
            })
            .collect()
    }

    fn plan(&self, k: u64) -> Result<(Vec<HumanForecast>, CostField, PlanResult), ScenarioError> {
        let p = &self.scn.planner;
        let forecasts = self.forecasts(k)?;
        let cost = build_cost(
            &self.scn.world,
            self.scn.uas.goal_cell,
            &forecasts,
            &self.model,
            &p.cost_params(),
            p.horizon,
            k,
        )?;
        let plan = solve(&cost, &self.transitions, p.gamma);
        Ok((forecasts, cost, plan))
    }

    fn human_ticks(&self, forecasts: &[HumanForecast]) -> Result<Vec<HumanTick>, ScenarioError> {
        let world = &self.scn.world;
        self.humans
            .iter()
            .zip(forecasts)
            .map(|(h, f)| {
                let candidates = f
                    .candidates
                    .iter()
                    .map(|c| {
                        let s = h.track.desired_state(c.place)?;
                        let distraction = self
                            .model
                            .distribution(h.spec.id, s.current, s.velocity.speed_class, world)
                            .into_iter()
                            .map(|(_, p)| p)
                            .collect();
                        Ok(CandidateTick {
                            place: c.place,
                            desired: s.current,
                            speed: s.velocity.speed_class,
                            probability: c.probability,
                            distraction,
                        })
                    })
                    .collect::<Result<Vec<_>, ScenarioError>>()?;
                Ok(HumanTick {
                    id: h.spec.id,
                    position: h.track.position(),
                    origin: h.track.origin(),
                    true_destination: h.track.true_destination(),
                    candidates,
                    mns: self.model.histogram(h.spec.id),
                })
            })
            .collect()
    }

    /// Head-count rule on positions: a co-worker is at a station when within distance 1 of it.
    fn positional_rule4(&self, uas: Cell) -> Vec<u32> {
        let mut m = Marking::default();
        for (&place, &cell) in self.scn.world.stations() {
            if euclidean(uas, cell) <= 1.0 {
                m.add(place, CoWorker::Uas, 1);
            }
            for h in &self.humans {
                if euclidean(h.track.position(), cell) <= 1.0 {
                    m.add(place, CoWorker::Human, 1);
                }
            }
        }
        check_rule4(&m)
    }

    fn fire(&mut self, from: u32, to: u32, who: CoWorker, k: u64, summary: &mut RunSummary) {
        let Some(t) = self.scn.net.transition_between(from, to, who) else {
            summary.petri_faults.push(format!("tick {k}: no {who} transition from {from} to {to}"));
            return;
        };
        match self.scn.net.fire(&self.marking, &t, who) {
            Ok(next) => {
                self.marking = next;
                summary.fired.push((k, t));
            }
            Err(e) => summary.petri_faults.push(format!("tick {k}: {e}")),
        }
    }
}

fn metrics(summary: &mut RunSummary, uas: Cell, humans: impl Iterator<Item = Cell>, scn: &Scenario) {
    if scn.world.is_obstacle(uas) {
        summary.obstacle_entries += 1;
    }
    for h in humans {
        let d = euclidean(uas, h);
        summary.min_distance = Some(summary.min_distance.map_or(d, |m| m.min(d)));
        if h == uas {
            summary.collisions += 1;
        }
    }
}

/// Runs the closed loop until the UAS reaches its goal or the tick budget runs out.
pub fn run(scn: &Scenario) -> Result<RunTrace, ScenarioError> {
    run_inner(scn, None)
}

/// Like [`run`], additionally writing cost and value layers for every tick into `dir`.
pub fn run_with_dumps(scn: &Scenario, dir: &Path) -> Result<RunTrace, ScenarioError> {
    fs::create_dir_all(dir).map_err(|source| ScenarioError::Io { path: dir.to_path_buf(), source })?;
    run_inner(scn, Some(dir))
}

fn dump_layers(
    dir: &Path,
    k: u64,
    cost: &CostField,
    plan: &PlanResult,
) -> Result<Vec<String>, ScenarioError> {
    let mut names = Vec::new();
    for tau in 1..=cost.horizon() {
        for (kind, layer) in [("cost", cost.layer(tau)), ("value", plan.value_layer(tau))] {
            let name = format!("tick{k:04}_{kind}_tau{tau:02}.csv");
            let path = dir.join(&name);
            fs::write(&path, layer_csv(layer, cost.n_x()))
                .map_err(|source| ScenarioError::Io { path: path.clone(), source })?;
            names.push(name);
        }
    }
    Ok(names)
}

fn run_inner(scn: &Scenario, dump: Option<&Path>) -> Result<RunTrace, ScenarioError> {
    let mut sim = Loop::new(scn)?;
    let goal = scn.uas.goal_cell;
    let mut uas = scn.uas.origin_cell;
    let mut summary = RunSummary {
        seed: scn.planner.seed,
        c0: scn.planner.c0,
        reached_goal: false,
        steps: 0,
        min_distance: None,
        collisions: 0,
        obstacle_entries: 0,
        rule4_violation_ticks: 0,
        fired: Vec::new(),
        petri_faults: Vec::new(),
    };
    let mut records = Vec::new();
    let mut k = 0u64;

    loop {
        metrics(&mut summary, uas, sim.humans.iter().map(|h| h.track.position()), scn);
        if uas == goal || k >= scn.planner.k_max {
            break;
        }
        sim.observe(k)?;
        let (forecasts, cost, plan) = sim.plan(k)?;
        let action: Action = plan.first_action(uas);

        let rule4_positional = sim.positional_rule4(uas);
        let rule4_marking = check_rule4(&sim.marking);
        if !rule4_positional.is_empty() {
            summary.rule4_violation_ticks += 1;
        }
        let dumps = match dump {
            Some(dir) => dump_layers(dir, k, &cost, &plan)?,
            None => Vec::new(),
        };
        records.push(TickRecord {
            k,
            uas,
            action,
            humans: sim.human_ticks(&forecasts)?,
            rule4_positional,
            rule4_marking,
            dumps,
        });

        // simultaneous move
        uas = sim.transitions.next_cell(uas, action);
        for i in 0..sim.humans.len() {
            let h = &mut sim.humans[i];
            h.track.step_actual(&mut h.rng, h.spec.epsilon, &scn.world);
            if h.track.arrived(&scn.world) {
                let (from, to) = (h.track.origin(), h.track.true_destination());
                h.track.retarget(&scn.net, &scn.world, &mut h.rng)?;
                let candidates = h.track.candidates();
                h.intention.reset(candidates);
                sim.fire(from, to, CoWorker::Human, k + 1, &mut summary);
            }
        }
        if uas == goal {
            sim.fire(scn.uas.origin, scn.uas.goal, CoWorker::Uas, k + 1, &mut summary);
        }
        k += 1;
    }

    summary.reached_goal = uas == goal;
    summary.steps = k;
    Ok(RunTrace {
        summary,
        records,
        final_uas: uas,
        final_humans: sim.humans.iter().map(|h| h.track.position()).collect(),
    })
}

/// One solve from the initial state, as seen at tick 0.
pub struct PlanSnapshot {
    pub cost: CostField,
    pub plan: PlanResult,
    pub first_action: Action,
}

impl PlanSnapshot {
    /// Writes every cost and value layer as CSV into `dir`, returning file names.
    pub fn dump(&self, dir: &Path) -> Result<Vec<String>, ScenarioError> {
        fs::create_dir_all(dir).map_err(|source| ScenarioError::Io { path: dir.to_path_buf(), source })?;
        dump_layers(dir, 0, &self.cost, &self.plan)
    }
}

pub fn plan_once(scn: &Scenario) -> Result<PlanSnapshot, ScenarioError> {
    let mut sim = Loop::new(scn)?;
    sim.observe(0)?;
    let (_, cost, plan) = sim.plan(0)?;
    let first_action = plan.first_action(scn.uas.origin_cell);
    Ok(PlanSnapshot { cost, plan, first_action })
}
