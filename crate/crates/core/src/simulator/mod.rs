//! Deterministic tick-based execution of a model.

mod check;
mod conflict;
mod inject;
mod trace;
mod world;

use std::collections::BTreeMap;

pub use check::{
    channel_balance, check_trace, instance_path, ChannelBalance, ChannelConformity,
    ConformanceReport, NotificationCheck, TraceModelMismatch, CONFORMITY_TOL,
};
pub use conflict::{resolve_conflict, ConflictError, Proposal, Resolution};
pub use inject::{parse_schedule, InjectedAction, Injection, ScheduleError};
pub use trace::{events_from_jsonl, events_to_jsonl, Trace, TraceEvent, TraceKind};
pub use world::{
    channel_label, literal_json, lookup, spec_label, AgentInstance, ChannelState, Coordinator,
    Firing, InFlight, Inbound, VetoWindow, World,
};

use crate::diagnostic::Diagnostic;
use crate::model::{ExpandError, Literal};

pub const ATTENTION_BASE: u32 = 4;
pub const RELIABILITY_THRESHOLD: f64 = 0.5;
pub const DETRIMENT_LIMIT: f64 = 0.0;

/// What happens to objects beyond a channel's per-tick capacity.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Overflow {
    DropNewest,
    /// Keep them in flight for the next tick.
    #[default]
    Queue,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub attention_base: u32,
    pub reliability_threshold: f64,
    /// Gate deliveries with probability equal to the reliability instead of
    /// comparing it with the threshold.
    pub stochastic_reliability: bool,
    pub overflow: Overflow,
    pub detriment_limit: f64,
    /// Instance counts by agent path, for multi-instance agents.
    pub instance_counts: BTreeMap<String, u32>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            attention_base: ATTENTION_BASE,
            reliability_threshold: RELIABILITY_THRESHOLD,
            stochastic_reliability: false,
            overflow: Overflow::default(),
            detriment_limit: DETRIMENT_LIMIT,
            instance_counts: BTreeMap::new(),
        }
    }
}

/// One entry of an event object's payload, such as an action candidate.
#[derive(Clone, Debug, PartialEq)]
pub struct Item {
    pub id: String,
    pub fields: BTreeMap<String, Literal>,
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("the model has validation errors; run `validate` first ({} error(s))", .0.len())]
    ValidationRequired(Vec<Diagnostic>),
    #[error("`{agent}` allows at most {max} instance(s), {requested} requested")]
    CardinalityExceeded { agent: String, requested: u32, max: u32 },
    #[error("`{agent}` needs at least {min} instance(s), {requested} requested")]
    CardinalityBelowMinimum { agent: String, requested: u32, min: u32 },
    #[error("injection names `{0}`, which is not an agent of the model")]
    UnknownAgent(String),
    #[error("global references could not be expanded: {0}")]
    Expand(#[from] ExpandError),
}

/// Runs up to `max_ticks` ticks, stopping early once nothing is in flight,
/// no veto window is pending and no injection remains.
pub fn run(
    model: &crate::model::Model,
    seed: u64,
    max_ticks: u64,
    injections: &[Injection],
    config: RunConfig,
) -> Result<Trace, SimError> {
    let mut world = World::instantiate(model, seed, config)?;
    let mut paths = std::collections::BTreeSet::new();
    for root in model.expand()? {
        for a in root.preorder() {
            paths.insert(a.path.clone());
        }
    }
    for inj in injections {
        let known = paths.contains(&crate::model::AgentPath::parse(&inj.agent));
        if !known && world.targets(&inj.agent).is_empty() {
            return Err(SimError::UnknownAgent(inj.agent.clone()));
        }
    }
    let mut schedule: Vec<&Injection> = injections.iter().collect();
    schedule.sort_by_key(|i| i.tick);

    let mut events = Vec::new();
    let pending = |world: &World| !world.is_idle() || schedule.iter().any(|i| i.tick >= world.tick);
    while world.tick < max_ticks && pending(&world) {
        let now: Vec<Injection> = schedule
            .iter()
            .filter(|i| i.tick == world.tick)
            .map(|i| (*i).clone())
            .collect();
        events.extend(world.step(&now));
    }
    Ok(Trace {
        events,
        end_tick: world.tick,
        quiescent: !pending(&world),
        in_flight: world.channels.iter().map(|c| c.in_flight.len()).collect(),
    })
}
