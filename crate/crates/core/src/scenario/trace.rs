use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::ScenarioError;
use crate::grid::Cell;
use crate::human::{HumanId, SpeedClass};
use crate::mdp::Action;
use crate::petri::{PlaceId, TransitionId};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CandidateTick {
    pub place: PlaceId,
    pub desired: Cell,
    pub speed: SpeedClass,
    pub probability: f64,
    /// In-grid distraction distribution around `desired`, in offset order.
    pub distraction: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HumanTick {
    pub id: HumanId,
    pub position: Cell,
    pub origin: PlaceId,
    pub true_destination: PlaceId,
    pub candidates: Vec<CandidateTick>,
    /// Raw visit counts per speed class, in offset order.
    pub mns: BTreeMap<SpeedClass, Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TickRecord {
    pub k: u64,
    pub uas: Cell,
    pub action: Action,
    pub humans: Vec<HumanTick>,
    /// Places breaking the head-count rule when positions within distance 1 of a
    /// station count as being at it.
    pub rule4_positional: Vec<PlaceId>,
    /// Same rule evaluated on the Petri-net marking.
    pub rule4_marking: Vec<PlaceId>,
    /// Matrix files written for this tick, if dumping was enabled.
    pub dumps: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunSummary {
    pub seed: u64,
    pub c0: f64,
    pub reached_goal: bool,
    pub steps: u64,
    /// Minimum UAS-human Euclidean distance over all ticks; absent without humans.
    pub min_distance: Option<f64>,
    /// (tick, human) pairs sharing a cell with the UAS.
    pub collisions: u64,
    pub obstacle_entries: u64,
    pub rule4_violation_ticks: u64,
    pub fired: Vec<(u64, TransitionId)>,
    pub petri_faults: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunTrace {
    pub summary: RunSummary,
    pub records: Vec<TickRecord>,
    pub final_uas: Cell,
    pub final_humans: Vec<Cell>,
}

impl RunTrace {
    /// UAS cells for ticks `0..=steps`.
    pub fn uas_path(&self) -> Vec<Cell> {
        let mut cells: Vec<Cell> = self.records.iter().map(|r| r.uas).collect();
        cells.push(self.final_uas);
        cells
    }

    pub fn actions(&self) -> Vec<Action> {
        self.records.iter().map(|r| r.action).collect()
    }
}

#[derive(Clone, Debug, Default)]
pub struct EmitOptions {
    /// Also write the full per-tick trace as `trace.json`.
    pub json_trace: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Manifest {
    pub mandatory: Vec<PathBuf>,
    pub optional: Vec<PathBuf>,
}

fn write(path: PathBuf, contents: &str) -> Result<PathBuf, ScenarioError> {
    fs::write(&path, contents).map_err(|source| ScenarioError::Io { path: path.clone(), source })?;
    Ok(path)
}

fn json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("trace types serialize");
    s.push('\n');
    s
}

/// Writes `uas_path.csv`, `humanN_path.csv`, `humanN_intent.csv` and
/// `run_summary.json` into `dir`.
pub fn emit_trace(trace: &RunTrace, dir: &Path, options: &EmitOptions) -> Result<Manifest, ScenarioError> {
    fs::create_dir_all(dir).map_err(|source| ScenarioError::Io { path: dir.to_path_buf(), source })?;
    let mut manifest = Manifest::default();

    let mut uas = String::from("k,x,y,action_index\n");
    for r in &trace.records {
        let _ = writeln!(uas, "{},{},{},{}", r.k, r.uas.x, r.uas.y, r.action.index());
    }
    let _ = writeln!(uas, "{},{},{},", trace.records.len(), trace.final_uas.x, trace.final_uas.y);
    manifest.mandatory.push(write(dir.join("uas_path.csv"), &uas)?);

    let human_ids: Vec<HumanId> = trace
        .records
        .first()
        .map(|r| r.humans.iter().map(|h| h.id).collect())
        .unwrap_or_else(|| (1..=trace.final_humans.len() as u32).collect());
    for (slot, &id) in human_ids.iter().enumerate() {
        let mut path = String::from("k,x,y,origin,true_destination\n");
        // every candidate ever seen, in first-seen order
        let mut columns: Vec<PlaceId> = Vec::new();
        for r in &trace.records {
            let h = &r.humans[slot];
            let _ = writeln!(
                path,
                "{},{},{},{},{}",
                r.k, h.position.x, h.position.y, h.origin, h.true_destination
            );
            for c in &h.candidates {
                if !columns.contains(&c.place) {
                    columns.push(c.place);
                }
            }
        }
        if let Some(end) = trace.final_humans.get(slot) {
            let _ = writeln!(path, "{},{},{},,", trace.records.len(), end.x, end.y);
        }
        manifest.mandatory.push(write(dir.join(format!("human{id}_path.csv")), &path)?);

        let mut intent = String::from("k");
        for p in &columns {
            let _ = write!(intent, ",ws{p}");
        }
        intent.push('\n');
        for r in &trace.records {
            let h = &r.humans[slot];
            let _ = write!(intent, "{}", r.k);
            for p in &columns {
                let prob = h.candidates.iter().find(|c| c.place == *p).map_or(0.0, |c| c.probability);
                let _ = write!(intent, ",{prob}");
            }
            intent.push('\n');
        }
        manifest.mandatory.push(write(dir.join(format!("human{id}_intent.csv")), &intent)?);
    }

    manifest.mandatory.push(write(dir.join("run_summary.json"), &json(&trace.summary))?);

    if options.json_trace {
        manifest.optional.push(write(dir.join("trace.json"), &json(trace))?);
    }
    for r in &trace.records {
        manifest.optional.extend(r.dumps.iter().map(|d| dir.join(d)));
    }
    Ok(manifest)
}
