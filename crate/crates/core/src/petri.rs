//! Dual-layer Petri net over work stations.
//!
//! Human and UAS co-workers share places and transitions but have separate arc
//! sets and token layers. All arc weights are 1.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Work-station / place identifier.
pub type PlaceId = u32;
pub type TransitionId = String;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PetriError {
    #[error("unknown place {0}")]
    UnknownPlace(PlaceId),
    #[error("unknown transition {0:?}")]
    UnknownTransition(TransitionId),
    #[error("transition {transition:?} is not enabled for {who}")]
    NotEnabled { transition: TransitionId, who: CoWorker },
    #[error("duplicate {0}")]
    Duplicate(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CoWorker {
    Human,
    Uas,
}

impl fmt::Display for CoWorker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CoWorker::Human => "human",
            CoWorker::Uas => "UAS",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Arc {
    Input(PlaceId, TransitionId),
    Output(TransitionId, PlaceId),
}

impl Arc {
    pub fn place(&self) -> PlaceId {
        match self {
            Arc::Input(p, _) | Arc::Output(_, p) => *p,
        }
    }

    pub fn transition(&self) -> &TransitionId {
        match self {
            Arc::Input(_, t) | Arc::Output(t, _) => t,
        }
    }

    pub fn reversed(&self) -> Arc {
        match self {
            Arc::Input(p, t) => Arc::Output(t.clone(), *p),
            Arc::Output(t, p) => Arc::Input(*p, t.clone()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum ConstructKind {
    Cyclic,
    Sequential,
    Conflict,
    Dependency,
    Concurrency,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PetriNet {
    places: BTreeSet<PlaceId>,
    transitions: BTreeSet<TransitionId>,
    arcs_h: BTreeSet<Arc>,
    arcs_u: BTreeSet<Arc>,
}

impl PetriNet {
    pub fn new(places: impl IntoIterator<Item = PlaceId>) -> Self {
        Self { places: places.into_iter().collect(), ..Self::default() }
    }

    pub fn add_place(&mut self, p: PlaceId) {
        self.places.insert(p);
    }

    /// Declares a transition with its input and output places for one co-worker class.
    /// Calling again for the other class adds that class's arcs to the same transition.
    pub fn add_transition(
        &mut self,
        id: impl Into<TransitionId>,
        who: CoWorker,
        inputs: &[PlaceId],
        outputs: &[PlaceId],
    ) -> Result<(), PetriError> {
        let id = id.into();
        for p in inputs.iter().chain(outputs) {
            if !self.places.contains(p) {
                return Err(PetriError::UnknownPlace(*p));
            }
        }
        self.transitions.insert(id.clone());
        let arcs = self.arcs_mut(who);
        for &p in inputs {
            if !arcs.insert(Arc::Input(p, id.clone())) {
                return Err(PetriError::Duplicate(format!("arc ({p}, {id})")));
            }
        }
        for &p in outputs {
            if !arcs.insert(Arc::Output(id.clone(), p)) {
                return Err(PetriError::Duplicate(format!("arc ({id}, {p})")));
            }
        }
        Ok(())
    }

    pub fn places(&self) -> &BTreeSet<PlaceId> {
        &self.places
    }

    pub fn transitions(&self) -> &BTreeSet<TransitionId> {
        &self.transitions
    }

    pub fn arcs(&self, who: CoWorker) -> &BTreeSet<Arc> {
        match who {
            CoWorker::Human => &self.arcs_h,
            CoWorker::Uas => &self.arcs_u,
        }
    }

    fn arcs_mut(&mut self, who: CoWorker) -> &mut BTreeSet<Arc> {
        match who {
            CoWorker::Human => &mut self.arcs_h,
            CoWorker::Uas => &mut self.arcs_u,
        }
    }

    /// Arc weight; every arc of this net has weight 1.
    pub fn weight(&self, arc: &Arc, who: CoWorker) -> Option<u32> {
        self.arcs(who).contains(arc).then_some(1)
    }

    fn check_place(&self, p: PlaceId) -> Result<(), PetriError> {
        if self.places.contains(&p) {
            Ok(())
        } else {
            Err(PetriError::UnknownPlace(p))
        }
    }

    fn check_transition(&self, t: &str) -> Result<(), PetriError> {
        if self.transitions.contains(t) {
            Ok(())
        } else {
            Err(PetriError::UnknownTransition(t.to_string()))
        }
    }

    pub fn inputs<'a>(&'a self, t: &'a str, who: CoWorker) -> impl Iterator<Item = PlaceId> + 'a {
        self.arcs(who).iter().filter_map(move |a| match a {
            Arc::Input(p, tt) if tt == t => Some(*p),
            _ => None,
        })
    }

    pub fn outputs<'a>(&'a self, t: &'a str, who: CoWorker) -> impl Iterator<Item = PlaceId> + 'a {
        self.arcs(who).iter().filter_map(move |a| match a {
            Arc::Output(tt, p) if tt == t => Some(*p),
            _ => None,
        })
    }

    /// Out-neighbor transitions `{t : (p, t) ∈ E}` of place `p`.
    pub fn out_transitions(&self, p: PlaceId, who: CoWorker) -> Result<BTreeSet<TransitionId>, PetriError> {
        self.check_place(p)?;
        Ok(self
            .arcs(who)
            .iter()
            .filter_map(|a| match a {
                Arc::Input(q, t) if *q == p => Some(t.clone()),
                _ => None,
            })
            .collect())
    }

    /// Arcs whose reverse also exists, over both co-worker arc sets.
    pub fn cyclic_arcs(&self) -> BTreeSet<Arc> {
        let all: BTreeSet<&Arc> = self.arcs_h.iter().chain(&self.arcs_u).collect();
        all.iter().filter(|a| all.contains(&a.reversed())).map(|a| (*a).clone()).collect()
    }

    /// Possible next stations from `p`, ignoring cyclic arcs. Empty when the
    /// co-worker stays at `p`.
    pub fn next_stations(&self, p: PlaceId, who: CoWorker) -> Result<BTreeSet<PlaceId>, PetriError> {
        let out = self.out_transitions(p, who)?;
        let cyclic = self.cyclic_arcs();
        Ok(self
            .arcs(who)
            .iter()
            .filter(|a| !cyclic.contains(*a))
            .filter_map(|a| match a {
                Arc::Output(t, q) if out.contains(t) => Some(*q),
                _ => None,
            })
            .collect())
    }

    pub fn classify_place(&self, p: PlaceId, who: CoWorker) -> Result<BTreeSet<ConstructKind>, PetriError> {
        let next = self.next_stations(p, who)?;
        let out = self.out_transitions(p, who)?;
        let cyclic = self.cyclic_arcs();
        let mut kinds = BTreeSet::new();
        match next.len() {
            0 => {}
            1 => {
                kinds.insert(ConstructKind::Sequential);
            }
            _ => {
                kinds.insert(ConstructKind::Conflict);
            }
        }
        if self.arcs(who).iter().any(|a| a.place() == p && cyclic.contains(a)) {
            kinds.insert(ConstructKind::Cyclic);
        }
        if out.iter().any(|t| self.inputs(t, who).count() >= 2) {
            kinds.insert(ConstructKind::Dependency);
        }
        if out.iter().any(|t| self.outputs(t, who).count() >= 2) {
            kinds.insert(ConstructKind::Concurrency);
        }
        Ok(kinds)
    }

    /// Enabling check: every input place holds at least the arc weight.
    pub fn can_fire(&self, m: &Marking, t: &str, who: CoWorker) -> Result<bool, PetriError> {
        self.check_transition(t)?;
        Ok(self.inputs(t, who).all(|p| m.tokens(p, who) >= 1))
    }

    /// Consumes from every input place and produces into every output place of `t`
    /// in `who`'s layer. The other layer is untouched.
    pub fn fire(&self, m: &Marking, t: &str, who: CoWorker) -> Result<Marking, PetriError> {
        if !self.can_fire(m, t, who)? {
            return Err(PetriError::NotEnabled { transition: t.to_string(), who });
        }
        let mut next = m.clone();
        let layer = next.layer_mut(who);
        for p in self.inputs(t, who) {
            *layer.entry(p).or_default() -= 1;
        }
        for p in self.outputs(t, who) {
            *layer.entry(p).or_default() += 1;
        }
        layer.retain(|_, n| *n > 0);
        Ok(next)
    }

    /// The transition moving `who` from `from` to `to`, if any.
    pub fn transition_between(&self, from: PlaceId, to: PlaceId, who: CoWorker) -> Option<TransitionId> {
        let out = self.out_transitions(from, who).ok()?;
        out.into_iter().find(|t| self.outputs(t, who).any(|p| p == to))
    }
}

/// Token counts per place for both co-worker layers. Absent places hold 0.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Marking {
    pub tokens_h: BTreeMap<PlaceId, u32>,
    pub tokens_u: BTreeMap<PlaceId, u32>,
}

impl Marking {
    pub fn tokens(&self, p: PlaceId, who: CoWorker) -> u32 {
        match who {
            CoWorker::Human => self.tokens_h.get(&p).copied().unwrap_or(0),
            CoWorker::Uas => self.tokens_u.get(&p).copied().unwrap_or(0),
        }
    }

    pub fn set(&mut self, p: PlaceId, who: CoWorker, n: u32) {
        let layer = self.layer_mut(who);
        if n == 0 {
            layer.remove(&p);
        } else {
            layer.insert(p, n);
        }
    }

    pub fn add(&mut self, p: PlaceId, who: CoWorker, n: u32) {
        let cur = self.tokens(p, who);
        self.set(p, who, cur + n);
    }

    fn layer_mut(&mut self, who: CoWorker) -> &mut BTreeMap<PlaceId, u32> {
        match who {
            CoWorker::Human => &mut self.tokens_h,
            CoWorker::Uas => &mut self.tokens_u,
        }
    }
}

/// Places where a UAS is present and the combined head count exceeds 2.
pub fn check_rule4(m: &Marking) -> Vec<PlaceId> {
    m.tokens_u
        .iter()
        .filter(|&(&p, &u)| u > 0 && u + m.tokens(p, CoWorker::Human) > 2)
        .map(|(&p, _)| p)
        .collect()
}
