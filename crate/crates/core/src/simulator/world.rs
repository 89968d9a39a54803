use std::collections::{BTreeMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use super::conflict::{better, resolve_conflict, Proposal};
use super::inject::{InjectedAction, Injection};
use super::trace::{TraceEvent, TraceKind};
use super::{Item, Overflow, RunConfig, SimError};
use crate::model::*;
use crate::validator;

/// Something waiting in an instance's inbox: a delivered event object or
/// the start stimulus.
#[derive(Clone, Debug, PartialEq)]
pub struct Inbound {
    pub start: bool,
    pub spec: Option<EventObjectSpec>,
    pub payload: Vec<Item>,
    /// Sending instance id (empty for the start stimulus).
    pub sender: String,
    pub sender_path: AgentPath,
    /// Sensor it arrived on.
    pub sensor: String,
    pub channel: Option<usize>,
}

impl Inbound {
    fn start() -> Self {
        Inbound {
            start: true,
            spec: None,
            payload: Vec::new(),
            sender: String::new(),
            sender_path: AgentPath::root(),
            sensor: String::new(),
            channel: None,
        }
    }

    fn is_instruction(&self) -> bool {
        self.spec
            .as_ref()
            .is_some_and(|s| matches!(s.specialization, Specialization::Instruction(_)))
    }

    fn label(&self) -> String {
        match &self.spec {
            Some(s) => spec_label(s),
            None => "start".into(),
        }
    }
}

/// Social concept and utility of the agent enclosing an instance.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Coordinator {
    pub social: Option<SocialConcept>,
    pub utility: Option<UtilityFunction>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AgentInstance {
    /// Dotted path with `[i]` after each multi-instance segment.
    pub id: String,
    /// Agent path without instance indices.
    pub path: AgentPath,
    pub instance_index: u32,
    /// Effective definition, without children.
    pub def: AgentDef,
    pub coordinator: Coordinator,
    pub states: BTreeMap<String, Literal>,
    pub inbox: VecDeque<Inbound>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InFlight {
    pub object: Inbound,
    /// Receiving instance.
    pub target: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChannelState {
    pub connection: Connection,
    pub label: String,
    /// `None` for unlimited.
    pub capacity_per_tick: Option<usize>,
    pub overflow: Overflow,
    pub in_flight: VecDeque<InFlight>,
}

/// State captured when a rule fires, kept by veto windows for their expiry.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Firing {
    pub rule: String,
    pub trigger: Vec<Item>,
    pub selected: Option<Item>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VetoWindow {
    pub id: String,
    /// Owning instance.
    pub owner: usize,
    pub opened_at: u64,
    pub duration: u32,
    pub on_expiry: Vec<Action>,
    pub vetoed: bool,
    pub context: Firing,
}

impl VetoWindow {
    pub fn expires_at(&self) -> u64 {
        self.opened_at + u64::from(self.duration)
    }
}

#[derive(Clone, Debug)]
pub struct World {
    pub instances: Vec<AgentInstance>,
    /// One per connection, in canonical connection order.
    pub channels: Vec<ChannelState>,
    pub tick: u64,
    pub rng_seed: u64,
    pub pending_windows: Vec<VetoWindow>,
    pub config: RunConfig,
    rng: ChaCha8Rng,
    seq: u64,
    windows_opened: u64,
    events: Vec<TraceEvent>,
}

pub fn spec_label(spec: &EventObjectSpec) -> String {
    match spec.quant {
        Some(q) => format!("{}/{}", spec.specialization, q),
        None => spec.specialization.to_string(),
    }
}

pub fn channel_label(c: &Connection) -> String {
    let arrow = match c.style {
        ConnectionStyle::Continuous => "->",
        ConnectionStyle::Discontinuous => "-->",
    };
    format!("{} {arrow} {}", c.from, c.to)
}

pub fn literal_json(l: &Literal) -> Value {
    match l {
        Literal::Number(n) => json!(n),
        Literal::Text(s) => json!(s),
        Literal::Bool(b) => json!(b),
    }
}

/// Looks up a variable: own states, `trigger.<field>` and `selected.<field>`
/// (fields of the first trigger item and of the selected candidate; `id`
/// gives the item id).
pub fn lookup(states: &BTreeMap<String, Literal>, ctx: &Firing, name: &str) -> Option<Literal> {
    let field = |item: Option<&Item>, f: &str| {
        let item = item?;
        if f == "id" {
            Some(Literal::Text(item.id.clone()))
        } else {
            item.fields.get(f).cloned()
        }
    };
    if let Some(f) = name.strip_prefix("trigger.") {
        field(ctx.trigger.first(), f)
    } else if let Some(f) = name.strip_prefix("selected.") {
        field(ctx.selected.as_ref(), f)
    } else {
        states.get(name).cloned()
    }
}

fn utility_of(u: &Option<UtilityFunction>, item: &Item) -> Option<f64> {
    u.as_ref()
        .map(|u| u.evaluate(|m| item.fields.get(m).and_then(Literal::as_number)))
}

impl World {
    /// Builds the initial world. Multi-instance agents get their minimum
    /// number of instances unless `config.instance_counts` asks for more.
    pub fn instantiate(model: &Model, seed: u64, config: RunConfig) -> Result<World, SimError> {
        let errors: Vec<_> = validator::validate(model)
            .into_iter()
            .filter(|d| d.is_error())
            .collect();
        if !errors.is_empty() {
            return Err(SimError::ValidationRequired(errors));
        }
        let roots = model.expand()?;
        let mut instances = Vec::new();
        for root in &roots {
            add_instances(root, None, &Coordinator::default(), &config, &mut instances)?;
        }
        let base = f64::from(config.attention_base);
        let channels = model
            .sorted_connections()
            .into_iter()
            .map(|c| ChannelState {
                connection: c.clone(),
                label: channel_label(c),
                capacity_per_tick: c
                    .params
                    .attention
                    .map(|a| ((a * base).ceil() as usize).max(1)),
                overflow: config.overflow,
                in_flight: VecDeque::new(),
            })
            .collect();
        Ok(World {
            instances,
            channels,
            tick: 0,
            rng_seed: seed,
            pending_windows: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            config,
            seq: 0,
            windows_opened: 0,
            events: Vec::new(),
        })
    }

    /// Instances addressed by an agent path or an instance id.
    pub fn targets(&self, agent: &str) -> Vec<usize> {
        let path = AgentPath::parse(agent);
        (0..self.instances.len())
            .filter(|&i| self.instances[i].id == agent || self.instances[i].path == path)
            .collect()
    }

    /// Nothing in flight, queued or pending.
    pub fn is_idle(&self) -> bool {
        self.channels.iter().all(|c| c.in_flight.is_empty())
            && self.pending_windows.is_empty()
            && self.instances.iter().all(|i| i.inbox.is_empty())
    }

    /// Advances one tick. Phases: injections, delivery with capacity and
    /// reliability gating, rule evaluation in document order, veto-window
    /// expiry, tick increment. Candidate selection happens inside rule
    /// evaluation, where `select` actions run.
    pub fn step(&mut self, injected: &[Injection]) -> Vec<TraceEvent> {
        for inj in injected {
            self.inject(inj);
        }
        for c in 0..self.channels.len() {
            self.deliver(c);
        }
        for i in 0..self.instances.len() {
            let items: Vec<Inbound> = self.instances[i].inbox.drain(..).collect();
            for item in items {
                self.consume(i, item);
            }
        }
        self.expire_windows();
        self.tick += 1;
        std::mem::take(&mut self.events)
    }

    fn record(&mut self, kind: TraceKind, subject: &str, object: &str, detail: Value) {
        self.events.push(TraceEvent {
            tick: self.tick,
            seq: self.seq,
            kind,
            subject: subject.to_owned(),
            object: object.to_owned(),
            detail,
        });
        self.seq += 1;
    }

    fn inject(&mut self, inj: &Injection) {
        let targets = self.targets(&inj.agent);
        if targets.is_empty() {
            self.record(
                TraceKind::InstructionIgnored,
                &inj.agent,
                inj.action.keyword(),
                json!({ "reason": "no instances" }),
            );
        }
        for i in targets {
            match &inj.action {
                InjectedAction::Act(action) => {
                    let mut ctx = Firing {
                        rule: "inject".into(),
                        ..Firing::default()
                    };
                    self.exec(i, std::slice::from_ref(action), &mut ctx);
                }
                other => {
                    let spec = EventObjectSpec::new(
                        other.specialization().expect("shorthand actions name an object"),
                        Quant::Single,
                    );
                    let path = self.instances[i].path.clone();
                    let actuators: Vec<String> = self.instances[i]
                        .def
                        .actuators
                        .iter()
                        .filter(|a| {
                            self.channels.iter().any(|c| {
                                c.connection.from.agent == path
                                    && c.connection.from.interface == a.name
                                    && c.connection.carries_specialization(|s| *s == spec.specialization)
                            })
                        })
                        .map(|a| a.name.clone())
                        .collect();
                    if actuators.is_empty() {
                        let id = self.instances[i].id.clone();
                        self.record(
                            TraceKind::InstructionIgnored,
                            &id,
                            other.keyword(),
                            json!({ "reason": "no channel carries it", "spec": spec_label(&spec) }),
                        );
                    }
                    for a in actuators {
                        self.send(i, &a, &spec, Vec::new());
                    }
                }
            }
        }
    }

    fn send(&mut self, from: usize, actuator: &str, spec: &EventObjectSpec, payload: Vec<Item>) {
        let sender = self.instances[from].id.clone();
        let sender_path = self.instances[from].path.clone();
        let label = spec_label(spec);
        let ids: Vec<&str> = payload.iter().map(|i| i.id.as_str()).collect();
        let items = json!(ids);
        let mut sent = false;
        for c in 0..self.channels.len() {
            let conn = &self.channels[c].connection;
            if conn.from.agent != sender_path
                || conn.from.interface != actuator
                || !(conn.carries.is_empty()
                    || conn.carries.iter().any(|o| o.specialization == spec.specialization))
            {
                continue;
            }
            let to = conn.to.clone();
            for t in 0..self.instances.len() {
                if self.instances[t].path != to.agent {
                    continue;
                }
                sent = true;
                self.channels[c].in_flight.push_back(InFlight {
                    object: Inbound {
                        start: false,
                        spec: Some(spec.clone()),
                        payload: payload.clone(),
                        sender: sender.clone(),
                        sender_path: sender_path.clone(),
                        sensor: to.interface.clone(),
                        channel: Some(c),
                    },
                    target: t,
                });
                let ch_label = self.channels[c].label.clone();
                let target = self.instances[t].id.clone();
                self.record(
                    TraceKind::Emitted,
                    &sender,
                    &ch_label,
                    json!({ "channel": c, "spec": label, "to": target, "items": items }),
                );
            }
        }
        if !sent {
            self.record(
                TraceKind::Emitted,
                &sender,
                &format!("{sender}.{actuator}"),
                json!({ "channel": null, "spec": label, "to": null, "items": items }),
            );
        }
    }

    fn deliver(&mut self, c: usize) {
        let ch = &mut self.channels[c];
        let n = ch.capacity_per_tick.unwrap_or(usize::MAX).min(ch.in_flight.len());
        let now: Vec<InFlight> = ch.in_flight.drain(..n).collect();
        let dropped: Vec<InFlight> = match ch.overflow {
            Overflow::DropNewest => ch.in_flight.drain(..).collect(),
            Overflow::Queue => Vec::new(),
        };
        let label = ch.label.clone();
        let reliability = ch.connection.params.reliability;
        for f in now {
            let considered = match reliability {
                None => true,
                Some(r) if self.config.stochastic_reliability => self.rng.gen::<f64>() < r,
                Some(r) => r >= self.config.reliability_threshold,
            };
            let target = self.instances[f.target].id.clone();
            self.record(
                TraceKind::Delivered,
                &target,
                &label,
                json!({ "channel": c, "spec": f.object.label(), "from": f.object.sender, "considered": considered }),
            );
            if considered {
                self.instances[f.target].inbox.push_back(f.object);
            } else if f.object.is_instruction() {
                self.record(
                    TraceKind::InstructionIgnored,
                    &target,
                    &label,
                    json!({ "channel": c, "reason": "unreliable" }),
                );
            }
        }
        for f in dropped {
            let target = self.instances[f.target].id.clone();
            self.record(
                TraceKind::Dropped,
                &target,
                &label,
                json!({ "channel": c, "spec": f.object.label(), "from": f.object.sender }),
            );
        }
    }

    fn matches(rule: &Rule, item: &Inbound) -> bool {
        let t = &rule.trigger;
        if item.start {
            return t.spec == SpecPattern::Start && t.from.is_none() && t.at.is_none();
        }
        let Some(spec) = &item.spec else { return false };
        t.spec.matches(&spec.specialization)
            && t.from.as_ref().is_none_or(|f| item.sender_path.starts_with(f))
            && t.at.as_ref().is_none_or(|a| *a == item.sensor)
    }

    /// First rule, top to bottom, whose trigger matches and whose guard holds
    /// consumes the object.
    fn consume(&mut self, i: usize, item: Inbound) {
        let inst = &self.instances[i];
        let ctx = Firing {
            rule: String::new(),
            trigger: item.payload.clone(),
            selected: None,
        };
        let fired = inst.def.behavior.rules.iter().find(|r| {
            Self::matches(r, &item)
                && r.guard.as_ref().is_none_or(|g| {
                    g.eval_bool(&|n| lookup(&inst.states, &ctx, n)) == Ok(true)
                })
        });
        let id = inst.id.clone();
        let channel = item.channel;
        match fired {
            Some(rule) => {
                let name = rule.name.clone();
                let actions = rule.actions.clone();
                let from = if item.start { Value::Null } else { json!(item.sender) };
                self.record(
                    TraceKind::RuleFired,
                    &id,
                    &name,
                    json!({ "trigger": item.label(), "from": from, "channel": channel }),
                );
                if item.is_instruction() {
                    self.record(
                        TraceKind::InstructionFollowed,
                        &id,
                        &name,
                        json!({ "channel": channel }),
                    );
                }
                let mut ctx = Firing { rule: name, ..ctx };
                self.exec(i, &actions, &mut ctx);
            }
            None if item.is_instruction() => {
                self.record(
                    TraceKind::InstructionIgnored,
                    &id,
                    &item.label(),
                    json!({ "channel": channel, "reason": "no matching rule" }),
                );
            }
            None => {}
        }
    }

    fn eval(&self, i: usize, e: &Expr, ctx: &Firing) -> Result<Literal, EvalError> {
        let states = &self.instances[i].states;
        e.eval(&|n| lookup(states, ctx, n))
    }

    fn ignore(&mut self, i: usize, ctx: &Firing, reason: String) {
        let id = self.instances[i].id.clone();
        self.record(TraceKind::InstructionIgnored, &id, &ctx.rule, json!({ "reason": reason }));
    }

    /// Runs actions in order. Returns true when a delegation ended the firing.
    fn exec(&mut self, i: usize, actions: &[Action], ctx: &mut Firing) -> bool {
        for action in actions {
            match action {
                Action::Emit {
                    actuator,
                    object,
                    payload,
                } => {
                    let items = match payload {
                        None => Vec::new(),
                        Some(PayloadTemplate::Selected) => ctx.selected.iter().cloned().collect(),
                        Some(PayloadTemplate::Trigger) => ctx.trigger.clone(),
                        Some(PayloadTemplate::Items(templates)) => {
                            match self.eval_items(i, templates, ctx) {
                                Ok(items) => items,
                                Err(e) => {
                                    self.ignore(i, ctx, e.to_string());
                                    continue;
                                }
                            }
                        }
                    };
                    self.send(i, actuator, object, items);
                }
                Action::SetState { name, value } => match self.eval(i, value, ctx) {
                    Ok(v) => {
                        let old = self.instances[i].states.insert(name.clone(), v.clone());
                        let id = self.instances[i].id.clone();
                        let from = old.as_ref().map(literal_json).unwrap_or(Value::Null);
                        self.record(
                            TraceKind::StateChanged,
                            &id,
                            name,
                            json!({ "from": from, "to": literal_json(&v) }),
                        );
                    }
                    Err(e) => self.ignore(i, ctx, e.to_string()),
                },
                Action::Select(strategy) => {
                    ctx.selected = None;
                    if let Some((item, detail)) = self.select(i, strategy, &ctx.trigger) {
                        let id = self.instances[i].id.clone();
                        self.record(TraceKind::CandidateSelected, &id, &item.id, detail);
                        ctx.selected = Some(item);
                    }
                }
                Action::VetoWindow {
                    duration,
                    on_expiry,
                } => {
                    self.windows_opened += 1;
                    let w = VetoWindow {
                        id: format!("w{}", self.windows_opened),
                        owner: i,
                        opened_at: self.tick,
                        duration: *duration,
                        on_expiry: on_expiry.clone(),
                        vetoed: false,
                        context: ctx.clone(),
                    };
                    let id = self.instances[i].id.clone();
                    self.record(
                        TraceKind::WindowOpened,
                        &id,
                        &w.id,
                        json!({ "duration": duration, "expires_at": w.expires_at() }),
                    );
                    self.pending_windows.push(w);
                }
                Action::Commit => {
                    for w in self.take_windows(i) {
                        self.commit(w, true);
                    }
                }
                Action::AbortPending => {
                    for mut w in self.take_windows(i) {
                        w.vetoed = true;
                        let id = self.instances[i].id.clone();
                        self.record(
                            TraceKind::WindowVetoed,
                            &id,
                            &w.id,
                            json!({ "opened_at": w.opened_at, "duration": w.duration }),
                        );
                    }
                }
                Action::Delegate {
                    probability,
                    actions,
                } => {
                    let draw: f64 = self.rng.gen();
                    if draw < *probability {
                        self.exec(i, actions, ctx);
                        return true;
                    }
                }
            }
        }
        false
    }

    fn eval_items(&self, i: usize, templates: &[ItemTemplate], ctx: &Firing) -> Result<Vec<Item>, EvalError> {
        templates
            .iter()
            .map(|t| {
                let mut fields = BTreeMap::new();
                for (name, e) in &t.fields {
                    fields.insert(name.clone(), self.eval(i, e, ctx)?);
                }
                Ok(Item {
                    id: t.id.clone(),
                    fields,
                })
            })
            .collect()
    }

    fn select(&self, i: usize, strategy: &SelectStrategy, candidates: &[Item]) -> Option<(Item, Value)> {
        match strategy {
            SelectStrategy::First => candidates
                .first()
                .map(|c| (c.clone(), json!({ "strategy": "first" }))),
            SelectStrategy::Named(n) => candidates
                .iter()
                .find(|c| &c.id == n)
                .map(|c| (c.clone(), json!({ "strategy": "named" }))),
            SelectStrategy::UtilityArgmax => {
                if candidates.is_empty() {
                    return None;
                }
                let inst = &self.instances[i];
                let own = |c: &Item| utility_of(&inst.def.behavior.utility, c).unwrap_or(0.0);
                let concept = inst.coordinator.social.or(inst.def.nature.social());
                if let Some(concept) = concept {
                    let proposals: Vec<Proposal> = candidates
                        .iter()
                        .map(|c| Proposal {
                            child: inst.id.clone(),
                            candidate: c.id.clone(),
                            own_utility: own(c),
                            group_utility: utility_of(&inst.coordinator.utility, c).unwrap_or(own(c)),
                        })
                        .collect();
                    let r = resolve_conflict(Some(concept), &proposals, self.config.detriment_limit)
                        .expect("concept and candidates are present");
                    let p = &proposals[r.chosen];
                    let mut detail = json!({
                        "strategy": "utility_argmax",
                        "concept": concept.keyword(),
                        "own_utility": p.own_utility,
                        "group_utility": p.group_utility,
                        "fallback": r.fallback,
                    });
                    if r.fallback {
                        detail["warning"] =
                            json!("no candidate met the social concept's constraint; took the best overall");
                    }
                    Some((candidates[r.chosen].clone(), detail))
                } else {
                    let mut best = 0;
                    for k in 1..candidates.len() {
                        if better(own(&candidates[k]), &candidates[k].id, own(&candidates[best]), &candidates[best].id) {
                            best = k;
                        }
                    }
                    let c = &candidates[best];
                    Some((
                        c.clone(),
                        json!({ "strategy": "utility_argmax", "own_utility": own(c) }),
                    ))
                }
            }
        }
    }

    fn take_windows(&mut self, owner: usize) -> Vec<VetoWindow> {
        let (mine, rest): (Vec<_>, Vec<_>) = std::mem::take(&mut self.pending_windows)
            .into_iter()
            .partition(|w| w.owner == owner);
        self.pending_windows = rest;
        mine
    }

    fn commit(&mut self, w: VetoWindow, early: bool) {
        let id = self.instances[w.owner].id.clone();
        self.record(
            TraceKind::WindowCommitted,
            &id,
            &w.id,
            json!({ "opened_at": w.opened_at, "duration": w.duration, "early": early }),
        );
        let mut ctx = w.context;
        self.exec(w.owner, &w.on_expiry, &mut ctx);
    }

    fn expire_windows(&mut self) {
        let tick = self.tick;
        let (due, rest): (Vec<_>, Vec<_>) = std::mem::take(&mut self.pending_windows)
            .into_iter()
            .partition(|w| tick >= w.expires_at());
        self.pending_windows = rest;
        for w in due {
            self.commit(w, false);
        }
    }
}

fn add_instances(
    agent: &ExpandedAgent,
    prefix: Option<&str>,
    coordinator: &Coordinator,
    config: &RunConfig,
    out: &mut Vec<AgentInstance>,
) -> Result<(), SimError> {
    let key = agent.path.to_string();
    let min = agent.instancing.min_instances();
    let max = agent.instancing.max_instances();
    let count = match config.instance_counts.get(&key) {
        Some(&n) if n < min => {
            return Err(SimError::CardinalityBelowMinimum {
                agent: key,
                requested: n,
                min,
            })
        }
        Some(&n) if max.is_some_and(|m| n > m) => {
            return Err(SimError::CardinalityExceeded {
                agent: key,
                requested: n,
                max: max.unwrap_or(n),
            })
        }
        Some(&n) => n,
        None => min,
    };
    let mut def = agent.def.clone();
    def.children.clear();
    let states: BTreeMap<String, Literal> = def
        .behavior
        .states
        .iter()
        .map(|s| (s.name.clone(), s.value.clone()))
        .collect();
    let starts = def.behavior.rules.iter().any(|r| r.trigger.spec == SpecPattern::Start);
    let inner = Coordinator {
        social: def.nature.social(),
        utility: def.behavior.utility.clone(),
    };
    for index in 0..count {
        let name = if agent.instancing.is_multi() {
            format!("{}[{index}]", agent.name)
        } else {
            agent.name.to_owned()
        };
        let id = match prefix {
            Some(p) => format!("{p}.{name}"),
            None => name,
        };
        out.push(AgentInstance {
            id: id.clone(),
            path: agent.path.clone(),
            instance_index: index,
            def: def.clone(),
            coordinator: coordinator.clone(),
            states: states.clone(),
            inbox: if starts {
                VecDeque::from([Inbound::start()])
            } else {
                VecDeque::new()
            },
        });
        for child in &agent.children {
            add_instances(child, Some(&id), &inner, config, out)?;
        }
    }
    Ok(())
}
