//! Naive reference interpreter for the simulator's trace semantics.
//!
//! Written from the execution rules alone, without looking at how the
//! simulator organizes its state: instances and messages live in flat
//! vectors, every lookup is a linear scan, and each tick walks the phases
//! literally. Only expression evaluation is borrowed from the model crate.

use amn_core::model::*;
use amn_core::simulator::{InjectedAction, Injection, Item, Overflow, RunConfig, TraceEvent, TraceKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

#[derive(Clone, Debug)]
struct Msg {
    start: bool,
    spec: Option<EventObjectSpec>,
    items: Vec<Item>,
    sender: String,
    sender_path: Vec<String>,
    sensor: String,
    channel: Option<usize>,
    target: usize,
}

#[derive(Clone, Debug)]
struct Inst {
    id: String,
    path: Vec<String>,
    body: AgentDef,
    parent_social: Option<SocialConcept>,
    parent_utility: Option<UtilityFunction>,
    vars: Vec<(String, Literal)>,
    queue: Vec<Msg>,
}

#[derive(Clone, Debug)]
struct Win {
    name: String,
    owner: usize,
    opened: u64,
    duration: u32,
    then: Vec<Action>,
    trigger: Vec<Item>,
    selected: Option<Item>,
    rule: String,
}

struct Sim {
    cfg: RunConfig,
    insts: Vec<Inst>,
    conns: Vec<Connection>,
    /// Per channel, oldest first.
    wires: Vec<Vec<Msg>>,
    windows: Vec<Win>,
    opened: u64,
    rng: ChaCha8Rng,
    tick: u64,
    out: Vec<TraceEvent>,
}

/// Result of a reference run.
#[derive(Clone, Debug, PartialEq)]
pub struct RefTrace {
    pub events: Vec<TraceEvent>,
    pub end_tick: u64,
    pub quiescent: bool,
}

/// Runs `model` like the simulator does. The model must validate and the
/// injections must name existing agents.
pub fn run(model: &Model, seed: u64, max_ticks: u64, injections: &[Injection], cfg: RunConfig) -> RefTrace {
    let mut insts = Vec::new();
    for a in &model.agents {
        build(model, a, "", &[], None, None, &cfg, &mut insts);
    }
    let mut conns: Vec<Connection> = model.connections.clone();
    // Insertion sort on the endpoint strings, segment by segment.
    for i in 1..conns.len() {
        let mut j = i;
        while j > 0 && key(&conns[j]) < key(&conns[j - 1]) {
            conns.swap(j, j - 1);
            j -= 1;
        }
    }
    let wires = vec![Vec::new(); conns.len()];
    let mut sim = Sim {
        rng: ChaCha8Rng::seed_from_u64(seed),
        cfg,
        insts,
        conns,
        wires,
        windows: Vec::new(),
        opened: 0,
        tick: 0,
        out: Vec::new(),
    };
    loop {
        let remaining = injections.iter().any(|i| i.tick >= sim.tick);
        let busy = sim.wires.iter().any(|w| !w.is_empty())
            || !sim.windows.is_empty()
            || sim.insts.iter().any(|i| !i.queue.is_empty());
        if sim.tick >= max_ticks || !(busy || remaining) {
            let quiescent = !(busy || remaining);
            return RefTrace {
                events: sim.out,
                end_tick: sim.tick,
                quiescent,
            };
        }
        sim.tick_once(injections);
    }
}

fn key(c: &Connection) -> (Vec<String>, String, Vec<String>, String) {
    (
        c.from.agent.segments().to_vec(),
        c.from.interface.clone(),
        c.to.agent.segments().to_vec(),
        c.to.interface.clone(),
    )
}

#[allow(clippy::too_many_arguments)]
fn build(
    model: &Model,
    written: &AgentDef,
    prefix: &str,
    parent_path: &[String],
    social: Option<SocialConcept>,
    utility: Option<UtilityFunction>,
    cfg: &RunConfig,
    out: &mut Vec<Inst>,
) {
    let (body, inst) = match &written.kind {
        AgentKind::GlobalRef(g) => {
            let gd = model.globals.iter().find(|d| &d.name == g).expect("reference resolves");
            let inst = match written.instancing {
                Instancing::Multi { .. } => written.instancing,
                Instancing::Single => gd.instancing,
            };
            (gd.clone(), inst)
        }
        _ => (written.clone(), written.instancing),
    };
    let mut path = parent_path.to_vec();
    path.push(written.name.clone());
    let count = match inst {
        Instancing::Single => 1,
        Instancing::Multi { min, .. } => cfg.instance_counts.get(&path.join(".")).copied().unwrap_or(min),
    };
    let mut flat = body.clone();
    flat.children = Vec::new();
    for k in 0..count {
        let name = match inst {
            Instancing::Single => written.name.clone(),
            Instancing::Multi { .. } => format!("{}[{}]", written.name, k),
        };
        let id = if prefix.is_empty() {
            name
        } else {
            format!("{prefix}.{name}")
        };
        let has_start = flat.behavior.rules.iter().any(|r| r.trigger.spec == SpecPattern::Start);
        let me = out.len();
        out.push(Inst {
            id: id.clone(),
            path: path.clone(),
            body: flat.clone(),
            parent_social: social,
            parent_utility: utility.clone(),
            vars: flat
                .behavior
                .states
                .iter()
                .map(|s| (s.name.clone(), s.value.clone()))
                .collect(),
            queue: Vec::new(),
        });
        if has_start {
            out[me].queue.push(Msg {
                start: true,
                spec: None,
                items: Vec::new(),
                sender: String::new(),
                sender_path: Vec::new(),
                sensor: String::new(),
                channel: None,
                target: me,
            });
        }
        let my_social = body.nature.social.first().copied();
        let my_utility = body.behavior.utility.clone();
        for c in &body.children {
            build(model, c, &id, &path, my_social, my_utility.clone(), cfg, out);
        }
    }
}

fn label(spec: &EventObjectSpec) -> String {
    let mut s = spec.specialization.to_string();
    if let Some(q) = spec.quant {
        s.push('/');
        s.push_str(q.keyword());
    }
    s
}

fn msg_label(m: &Msg) -> String {
    match &m.spec {
        None => "start".to_string(),
        Some(s) => label(s),
    }
}

fn wire_label(c: &Connection) -> String {
    let arrow = if c.style == ConnectionStyle::Discontinuous { "-->" } else { "->" };
    format!("{} {} {}", c.from, arrow, c.to)
}

fn lit(l: &Literal) -> Value {
    match l {
        Literal::Number(n) => json!(n),
        Literal::Text(s) => json!(s),
        Literal::Bool(b) => json!(b),
    }
}

fn is_instruction(m: &Msg) -> bool {
    matches!(
        m.spec.as_ref().map(|s| &s.specialization),
        Some(Specialization::Instruction(_))
    )
}

fn weighted(u: &UtilityFunction, item: &Item) -> f64 {
    let mut parts = Vec::new();
    for t in &u.terms {
        let v = match item.fields.get(&t.metric) {
            Some(Literal::Number(n)) => *n,
            _ => 0.0,
        };
        parts.push(t.weight * v);
    }
    parts.into_iter().sum()
}

impl Sim {
    fn log(&mut self, kind: TraceKind, subject: String, object: String, detail: Value) {
        let seq = self.out.len() as u64;
        self.out.push(TraceEvent {
            tick: self.tick,
            seq,
            kind,
            subject,
            object,
            detail,
        });
    }

    fn tick_once(&mut self, injections: &[Injection]) {
        // Injections of this tick, in schedule order.
        let now = self.tick;
        for inj in injections.iter().filter(|i| i.tick == now) {
            self.inject(inj);
        }
        // Delivery.
        for c in 0..self.conns.len() {
            let mut wire = std::mem::take(&mut self.wires[c]);
            let cap = match self.conns[c].params.attention {
                None => wire.len(),
                Some(a) => {
                    let mut n = (a * f64::from(self.cfg.attention_base)).ceil() as usize;
                    if n < 1 {
                        n = 1;
                    }
                    n.min(wire.len())
                }
            };
            let rest = wire.split_off(cap);
            let lbl = wire_label(&self.conns[c]);
            for m in wire {
                let considered = match self.conns[c].params.reliability {
                    None => true,
                    Some(r) => {
                        if self.cfg.stochastic_reliability {
                            let x: f64 = self.rng.gen();
                            x < r
                        } else {
                            r >= self.cfg.reliability_threshold
                        }
                    }
                };
                let who = self.insts[m.target].id.clone();
                self.log(
                    TraceKind::Delivered,
                    who.clone(),
                    lbl.clone(),
                    json!({"channel": c, "spec": msg_label(&m), "from": m.sender.clone(), "considered": considered}),
                );
                if considered {
                    let t = m.target;
                    self.insts[t].queue.push(m);
                } else if is_instruction(&m) {
                    self.log(
                        TraceKind::InstructionIgnored,
                        who,
                        lbl.clone(),
                        json!({"channel": c, "reason": "unreliable"}),
                    );
                }
            }
            if self.cfg.overflow == Overflow::Queue {
                self.wires[c] = rest;
            } else {
                for m in rest {
                    let who = self.insts[m.target].id.clone();
                    self.log(
                        TraceKind::Dropped,
                        who,
                        lbl.clone(),
                        json!({"channel": c, "spec": msg_label(&m), "from": m.sender}),
                    );
                }
            }
        }
        // Rules, instance by instance.
        for i in 0..self.insts.len() {
            let queue = std::mem::take(&mut self.insts[i].queue);
            for m in queue {
                self.handle(i, m);
            }
        }
        // Expiry.
        let mut due = Vec::new();
        let mut keep = Vec::new();
        for w in std::mem::take(&mut self.windows) {
            if self.tick >= w.opened + u64::from(w.duration) {
                due.push(w);
            } else {
                keep.push(w);
            }
        }
        self.windows = keep;
        for w in due {
            self.commit(w, false);
        }
        self.tick += 1;
    }

    fn inject(&mut self, inj: &Injection) {
        let wanted = AgentPath::parse(&inj.agent);
        let targets: Vec<usize> = (0..self.insts.len())
            .filter(|&i| self.insts[i].id == inj.agent || self.insts[i].path == wanted.segments())
            .collect();
        if targets.is_empty() {
            self.log(
                TraceKind::InstructionIgnored,
                inj.agent.clone(),
                inj.action.keyword().to_string(),
                json!({"reason": "no instances"}),
            );
        }
        for i in targets {
            let spec = match &inj.action {
                InjectedAction::Act(a) => {
                    let mut f = Frame {
                        rule: "inject".to_string(),
                        trigger: Vec::new(),
                        selected: None,
                    };
                    self.run_actions(i, std::slice::from_ref(a), &mut f);
                    continue;
                }
                InjectedAction::Veto => Specialization::Reaction(Some(ReactionKind::Veto)),
                InjectedAction::Approve => Specialization::Reaction(Some(ReactionKind::Acceptance)),
                InjectedAction::Refuse => Specialization::Reaction(Some(ReactionKind::Refusal)),
                InjectedAction::Request => Specialization::Instruction(Some(InstructionKind::request())),
                InjectedAction::Instruct(k) => Specialization::Instruction(Some(k.clone())),
            };
            let spec = EventObjectSpec::new(spec, Quant::Single);
            let mut acts = Vec::new();
            for a in &self.insts[i].body.actuators {
                let carried = self.conns.iter().any(|c| {
                    c.from.agent.segments() == self.insts[i].path.as_slice()
                        && c.from.interface == a.name
                        && c.carries.iter().any(|o| o.specialization == spec.specialization)
                });
                if carried {
                    acts.push(a.name.clone());
                }
            }
            if acts.is_empty() {
                let who = self.insts[i].id.clone();
                self.log(
                    TraceKind::InstructionIgnored,
                    who,
                    inj.action.keyword().to_string(),
                    json!({"reason": "no channel carries it", "spec": label(&spec)}),
                );
            }
            for a in acts {
                self.emit(i, &a, &spec, Vec::new());
            }
        }
    }

    fn emit(&mut self, from: usize, actuator: &str, spec: &EventObjectSpec, items: Vec<Item>) {
        let ids: Vec<String> = items.iter().map(|i| i.id.clone()).collect();
        let sender = self.insts[from].id.clone();
        let sender_path = self.insts[from].path.clone();
        let mut any = false;
        for c in 0..self.conns.len() {
            let conn = self.conns[c].clone();
            if conn.from.agent.segments() != sender_path.as_slice() || conn.from.interface != actuator {
                continue;
            }
            let carries = conn.carries.is_empty()
                || conn.carries.iter().any(|o| o.specialization == spec.specialization);
            if !carries {
                continue;
            }
            for t in 0..self.insts.len() {
                if self.insts[t].path.as_slice() != conn.to.agent.segments() {
                    continue;
                }
                any = true;
                self.wires[c].push(Msg {
                    start: false,
                    spec: Some(spec.clone()),
                    items: items.clone(),
                    sender: sender.clone(),
                    sender_path: sender_path.clone(),
                    sensor: conn.to.interface.clone(),
                    channel: Some(c),
                    target: t,
                });
                let to = self.insts[t].id.clone();
                self.log(
                    TraceKind::Emitted,
                    sender.clone(),
                    wire_label(&conn),
                    json!({"channel": c, "spec": label(spec), "to": to, "items": ids.clone()}),
                );
            }
        }
        if !any {
            self.log(
                TraceKind::Emitted,
                sender.clone(),
                format!("{sender}.{actuator}"),
                json!({"channel": null, "spec": label(spec), "to": null, "items": ids}),
            );
        }
    }

    fn triggers(rule: &Rule, m: &Msg) -> bool {
        let t = &rule.trigger;
        if m.start {
            return t.spec == SpecPattern::Start && t.from.is_none() && t.at.is_none();
        }
        let spec = &m.spec.as_ref().expect("objects have a spec").specialization;
        let kind_ok = match (&t.spec, spec) {
            (SpecPattern::Any, _) => true,
            (SpecPattern::Start, _) => false,
            (SpecPattern::Generic(None), Specialization::Generic(_)) => true,
            (SpecPattern::Generic(Some(w)), Specialization::Generic(g)) => w == g,
            (SpecPattern::Reaction(None), Specialization::Reaction(_)) => true,
            (SpecPattern::Reaction(Some(w)), Specialization::Reaction(g)) => Some(*w) == *g,
            (SpecPattern::Task, Specialization::Task) => true,
            (SpecPattern::ActionCandidates, Specialization::ActionCandidates) => true,
            (SpecPattern::Instruction(None), Specialization::Instruction(_)) => true,
            (SpecPattern::Instruction(Some(w)), Specialization::Instruction(g)) => g.as_ref() == Some(w),
            (SpecPattern::Notification(None), Specialization::Notification(_)) => true,
            (SpecPattern::Notification(Some(w)), Specialization::Notification(g)) => Some(*w) == *g,
            (SpecPattern::Metric, Specialization::Metric) => true,
            _ => false,
        };
        let from_ok = match &t.from {
            None => true,
            Some(f) => {
                let f = f.segments();
                m.sender_path.len() >= f.len() && &m.sender_path[..f.len()] == f
            }
        };
        let at_ok = match &t.at {
            None => true,
            Some(a) => *a == m.sensor,
        };
        kind_ok && from_ok && at_ok
    }

    fn handle(&mut self, i: usize, m: Msg) {
        let frame = Frame {
            rule: String::new(),
            trigger: m.items.clone(),
            selected: None,
        };
        let mut chosen = None;
        for r in &self.insts[i].body.behavior.rules {
            if !Self::triggers(r, &m) {
                continue;
            }
            let ok = match &r.guard {
                None => true,
                Some(g) => {
                    let vars = &self.insts[i].vars;
                    matches!(g.eval(&|n| resolve(vars, &frame, n)), Ok(Literal::Bool(true)))
                }
            };
            if ok {
                chosen = Some(r.clone());
                break;
            }
        }
        let who = self.insts[i].id.clone();
        match chosen {
            Some(r) => {
                let from = if m.start { Value::Null } else { Value::String(m.sender.clone()) };
                self.log(
                    TraceKind::RuleFired,
                    who.clone(),
                    r.name.clone(),
                    json!({"trigger": msg_label(&m), "from": from, "channel": m.channel}),
                );
                if is_instruction(&m) {
                    self.log(TraceKind::InstructionFollowed, who, r.name.clone(), json!({"channel": m.channel}));
                }
                let mut f = Frame {
                    rule: r.name.clone(),
                    ..frame
                };
                self.run_actions(i, &r.actions, &mut f);
            }
            None => {
                if is_instruction(&m) {
                    self.log(
                        TraceKind::InstructionIgnored,
                        who,
                        msg_label(&m),
                        json!({"channel": m.channel, "reason": "no matching rule"}),
                    );
                }
            }
        }
    }

    fn skip(&mut self, i: usize, f: &Frame, why: String) {
        let who = self.insts[i].id.clone();
        self.log(TraceKind::InstructionIgnored, who, f.rule.clone(), json!({"reason": why}));
    }

    /// Returns false when a delegation took over the rest of the list.
    fn run_actions(&mut self, i: usize, actions: &[Action], f: &mut Frame) -> bool {
        for a in actions {
            match a {
                Action::Emit {
                    actuator,
                    object,
                    payload,
                } => {
                    let items = match payload {
                        None => Vec::new(),
                        Some(PayloadTemplate::Selected) => f.selected.clone().into_iter().collect(),
                        Some(PayloadTemplate::Trigger) => f.trigger.clone(),
                        Some(PayloadTemplate::Items(ts)) => {
                            let mut items = Vec::new();
                            let mut failed = None;
                            'outer: for t in ts {
                                let mut it = Item {
                                    id: t.id.clone(),
                                    fields: Default::default(),
                                };
                                for (k, e) in &t.fields {
                                    let vars = &self.insts[i].vars;
                                    match e.eval(&|n| resolve(vars, f, n)) {
                                        Ok(v) => {
                                            it.fields.insert(k.clone(), v);
                                        }
                                        Err(err) => {
                                            failed = Some(err.to_string());
                                            break 'outer;
                                        }
                                    }
                                }
                                items.push(it);
                            }
                            if let Some(why) = failed {
                                self.skip(i, f, why);
                                continue;
                            }
                            items
                        }
                    };
                    self.emit(i, actuator, object, items);
                }
                Action::SetState { name, value } => {
                    let vars = &self.insts[i].vars;
                    match value.eval(&|n| resolve(vars, f, n)) {
                        Ok(v) => {
                            let slot = self.insts[i].vars.iter().position(|(k, _)| k == name);
                            let old = match slot {
                                Some(p) => {
                                    let old = self.insts[i].vars[p].1.clone();
                                    self.insts[i].vars[p].1 = v.clone();
                                    lit(&old)
                                }
                                None => {
                                    self.insts[i].vars.push((name.clone(), v.clone()));
                                    Value::Null
                                }
                            };
                            let who = self.insts[i].id.clone();
                            self.log(TraceKind::StateChanged, who, name.clone(), json!({"from": old, "to": lit(&v)}));
                        }
                        Err(err) => self.skip(i, f, err.to_string()),
                    }
                }
                Action::Select(strategy) => {
                    f.selected = None;
                    if let Some((item, detail)) = self.choose(i, strategy, &f.trigger) {
                        let who = self.insts[i].id.clone();
                        self.log(TraceKind::CandidateSelected, who, item.id.clone(), detail);
                        f.selected = Some(item);
                    }
                }
                Action::VetoWindow { duration, on_expiry } => {
                    self.opened += 1;
                    let w = Win {
                        name: format!("w{}", self.opened),
                        owner: i,
                        opened: self.tick,
                        duration: *duration,
                        then: on_expiry.clone(),
                        trigger: f.trigger.clone(),
                        selected: f.selected.clone(),
                        rule: f.rule.clone(),
                    };
                    let who = self.insts[i].id.clone();
                    self.log(
                        TraceKind::WindowOpened,
                        who,
                        w.name.clone(),
                        json!({"duration": duration, "expires_at": self.tick + u64::from(*duration)}),
                    );
                    self.windows.push(w);
                }
                Action::Commit => {
                    let mine: Vec<Win> = self.windows.iter().filter(|w| w.owner == i).cloned().collect();
                    self.windows.retain(|w| w.owner != i);
                    for w in mine {
                        self.commit(w, true);
                    }
                }
                Action::AbortPending => {
                    let mine: Vec<Win> = self.windows.iter().filter(|w| w.owner == i).cloned().collect();
                    self.windows.retain(|w| w.owner != i);
                    for w in mine {
                        let who = self.insts[i].id.clone();
                        self.log(
                            TraceKind::WindowVetoed,
                            who,
                            w.name.clone(),
                            json!({"opened_at": w.opened, "duration": w.duration}),
                        );
                    }
                }
                Action::Delegate { probability, actions } => {
                    let x: f64 = self.rng.gen();
                    if x < *probability {
                        self.run_actions(i, actions, f);
                        return false;
                    }
                }
            }
        }
        true
    }

    fn choose(&self, i: usize, strategy: &SelectStrategy, cands: &[Item]) -> Option<(Item, Value)> {
        match strategy {
            SelectStrategy::First => cands.first().map(|c| (c.clone(), json!({"strategy": "first"}))),
            SelectStrategy::Named(n) => cands
                .iter()
                .find(|c| &c.id == n)
                .map(|c| (c.clone(), json!({"strategy": "named"}))),
            SelectStrategy::UtilityArgmax => {
                if cands.is_empty() {
                    return None;
                }
                let inst = &self.insts[i];
                let own: Vec<f64> = cands
                    .iter()
                    .map(|c| inst.body.behavior.utility.as_ref().map(|u| weighted(u, c)).unwrap_or(0.0))
                    .collect();
                let group: Vec<f64> = cands
                    .iter()
                    .zip(&own)
                    .map(|(c, o)| inst.parent_utility.as_ref().map(|u| weighted(u, c)).unwrap_or(*o))
                    .collect();
                let concept = inst.parent_social.or(inst.body.nature.social.first().copied());
                // Index of the best score among `allowed`; ties to the smaller id.
                let argmax = |score: &[f64], allowed: &dyn Fn(usize) -> bool| -> Option<usize> {
                    let mut order: Vec<usize> = (0..cands.len()).filter(|&k| allowed(k)).collect();
                    order.sort_by(|&a, &b| {
                        score[b]
                            .partial_cmp(&score[a])
                            .unwrap_or(std::cmp::Ordering::Equal)
                            .then(cands[a].id.cmp(&cands[b].id))
                            .then(a.cmp(&b))
                    });
                    order.first().copied()
                };
                match concept {
                    None => {
                        let k = argmax(&own, &|_| true)?;
                        Some((cands[k].clone(), json!({"strategy": "utility_argmax", "own_utility": own[k]})))
                    }
                    Some(c) => {
                        let limit = self.cfg.detriment_limit;
                        let (score, allowed): (&[f64], Box<dyn Fn(usize) -> bool>) = match c {
                            SocialConcept::SelfInterested => (&own, Box::new(|k| group[k] >= -limit)),
                            SocialConcept::Helpful => (&group, Box::new(|k| own[k] >= 0.0)),
                            SocialConcept::Cooperative => (&group, Box::new(|_| true)),
                        };
                        let (k, fallback) = match argmax(score, &*allowed) {
                            Some(k) => (k, false),
                            None => (argmax(score, &|_| true)?, true),
                        };
                        let mut detail = json!({
                            "strategy": "utility_argmax",
                            "concept": c.keyword(),
                            "own_utility": own[k],
                            "group_utility": group[k],
                            "fallback": fallback,
                        });
                        if fallback {
                            detail["warning"] =
                                json!("no candidate met the social concept's constraint; took the best overall");
                        }
                        Some((cands[k].clone(), detail))
                    }
                }
            }
        }
    }

    fn commit(&mut self, w: Win, early: bool) {
        let who = self.insts[w.owner].id.clone();
        self.log(
            TraceKind::WindowCommitted,
            who,
            w.name.clone(),
            json!({"opened_at": w.opened, "duration": w.duration, "early": early}),
        );
        let mut f = Frame {
            rule: w.rule,
            trigger: w.trigger,
            selected: w.selected,
        };
        self.run_actions(w.owner, &w.then, &mut f);
    }
}

struct Frame {
    rule: String,
    trigger: Vec<Item>,
    selected: Option<Item>,
}

fn resolve(vars: &[(String, Literal)], f: &Frame, name: &str) -> Option<Literal> {
    let field = |item: Option<&Item>, k: &str| -> Option<Literal> {
        let item = item?;
        if k == "id" {
            return Some(Literal::Text(item.id.clone()));
        }
        item.fields.get(k).cloned()
    };
    if let Some(k) = name.strip_prefix("trigger.") {
        return field(f.trigger.first(), k);
    }
    if let Some(k) = name.strip_prefix("selected.") {
        return field(f.selected.as_ref(), k);
    }
    vars.iter().find(|(k, _)| k == name).map(|(_, v)| v.clone())
}
