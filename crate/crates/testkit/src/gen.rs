//! Seeded random models that pass the validator without errors.
//!
//! Generation runs in two passes: the agent forest first (names, kinds,
//! interfaces, nature), then behavior and connections, which need every
//! agent path and interface to pick from.

use std::collections::BTreeMap;

use amn_core::model::*;
use amn_core::simulator::{InjectedAction, Injection, Overflow, RunConfig};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const AGENT_NAMES: &[&str] = &[
    "Alpha", "Bravo", "Charlie", "Delta", "Echo", "Foxtrot", "Golf", "Hotel", "India", "Juliet",
    "Kilo", "Lima",
];
const GLOBAL_NAMES: &[&str] = &["Sensor", "Worker", "Relay"];
const SENSORS: &[&str] = &["inbox", "feed", "requests", "alerts"];
const ACTUATORS: &[&str] = &["outbox", "orders", "notices", "signal"];
const STATES: &[&str] = &["level", "count", "busy", "mode", "awaiting"];
const GOALS: &[&str] = &["stock", "uptime", "margin_goal"];
const METRICS: &[&str] = &["value", "margin", "satisfaction", "level"];
const FIELDS: &[&str] = &["value", "margin", "satisfaction"];
const ITEMS: &[&str] = &["oak", "pine", "walnut", "ash"];
const TAGS: &[&str] = &["bus", "edi", "say \"hi\"", "a\\b", "order"];
const FUNCTIONAL: &[&str] = &["human", "filter", "aggregator", "supplier", "odd \"one\""];
const RULES: &[&str] = &["react", "relay", "decide", "record"];

/// Size limits for generated models.
#[derive(Clone, Debug)]
pub struct GenConfig {
    /// Total agent definitions outside globals.
    pub max_agents: usize,
    pub max_roots: usize,
    pub max_children: usize,
    pub max_depth: usize,
    pub max_globals: usize,
    pub max_interfaces: usize,
    pub max_rules: usize,
    pub max_actions: usize,
    pub max_connections: usize,
    pub max_states: usize,
    pub max_window: u32,
    /// Use one modality everywhere so any actuator can reach any sensor.
    pub single_modality: bool,
    /// Biases triggers towards `start` so small runs do something.
    pub lively: bool,
}

impl GenConfig {
    /// Broad coverage of the syntax, for round-trip tests.
    pub fn rich() -> Self {
        GenConfig {
            max_agents: 10,
            max_roots: 4,
            max_children: 3,
            max_depth: 3,
            max_globals: 2,
            max_interfaces: 3,
            max_rules: 3,
            max_actions: 4,
            max_connections: 8,
            max_states: 3,
            max_window: 30,
            single_modality: false,
            lively: false,
        }
    }

    /// At most three agents with at most two rules each, for the oracle.
    pub fn small() -> Self {
        GenConfig {
            max_agents: 3,
            max_roots: 3,
            max_children: 2,
            max_depth: 2,
            max_globals: 1,
            max_interfaces: 2,
            max_rules: 2,
            max_actions: 3,
            max_connections: 5,
            max_states: 2,
            max_window: 3,
            single_modality: true,
            lively: true,
        }
    }
}

struct Gen<'c> {
    rng: ChaCha8Rng,
    cfg: &'c GenConfig,
    agents: usize,
    /// Agent budget in force; one is held back for a root while globals grow.
    limit: usize,
}

/// Random model for `seed`. Deterministic.
pub fn model(seed: u64, cfg: &GenConfig) -> Model {
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(seed),
        cfg,
        agents: 0,
        limit: cfg.max_agents.saturating_sub(1),
    };
    g.model()
}

fn pick<'a, T>(rng: &mut ChaCha8Rng, xs: &'a [T]) -> &'a T {
    xs.choose(rng).expect("non-empty pool")
}

/// Up to `n` distinct names from `pool`.
fn distinct(rng: &mut ChaCha8Rng, pool: &[&str], n: usize) -> Vec<String> {
    pool.choose_multiple(rng, n.min(pool.len()))
        .map(|s| s.to_string())
        .collect()
}

/// One of k/100 for k in `lo..=hi`.
fn percent(rng: &mut ChaCha8Rng, lo: u32, hi: u32) -> f64 {
    f64::from(rng.gen_range(lo..=hi)) / 100.0
}

impl Gen<'_> {
    fn chance(&mut self, p: f64) -> bool {
        self.rng.gen_bool(p)
    }

    fn modality(&mut self) -> Modality {
        if self.cfg.single_modality {
            return Modality::generic("bus");
        }
        match self.rng.gen_range(0..6) {
            0 => Modality::Visual,
            1 => Modality::Auditory,
            2 => Modality::Tactile,
            3 => Modality::Olfactory,
            4 => Modality::generic("edi"),
            _ => Modality::generic("bus"),
        }
    }

    fn model(&mut self) -> Model {
        let mut m = Model::new();
        let nglobals = self.rng.gen_range(0..=self.cfg.max_globals);
        for name in distinct(&mut self.rng, GLOBAL_NAMES, nglobals) {
            if self.agents >= self.limit {
                break;
            }
            // Globals hold no references, so there is never a cycle.
            let g = self.agent(name, 1, &[]);
            m.globals.push(g);
        }
        let global_names: Vec<String> = m.globals.iter().map(|g| g.name.clone()).collect();
        let nroots = self.rng.gen_range(1..=self.cfg.max_roots);
        let names = distinct(&mut self.rng, AGENT_NAMES, nroots);
        self.limit = self.cfg.max_agents;
        for name in names {
            if self.agents >= self.limit {
                break;
            }
            let a = self.agent(name, 1, &global_names);
            m.agents.push(a);
        }
        self.shares(&mut m.agents, &m.globals.clone());
        for gi in 0..m.globals.len() {
            let globals = m.globals.clone();
            self.shares(&mut m.globals[gi..=gi], &globals);
        }

        let paths = agent_paths(&m);
        for gi in 0..m.globals.len() {
            let mut g = std::mem::replace(&mut m.globals[gi], AgentDef::new(""));
            self.behave_tree(&mut g, &paths);
            m.globals[gi] = g;
        }
        for ai in 0..m.agents.len() {
            let mut a = std::mem::replace(&mut m.agents[ai], AgentDef::new(""));
            self.behave_tree(&mut a, &paths);
            m.agents[ai] = a;
        }
        self.connections(&mut m);
        m
    }

    fn agent(&mut self, name: String, depth: usize, globals: &[String]) -> AgentDef {
        self.agents += 1;
        let instancing = if self.chance(0.25) {
            let min = self.rng.gen_range(u32::from(self.cfg.lively)..=2);
            let max = if self.chance(0.2) {
                None
            } else {
                Some(min.max(1) + self.rng.gen_range(0..=2))
            };
            Instancing::Multi { min, max }
        } else {
            Instancing::Single
        };
        if !globals.is_empty() && self.chance(0.2) {
            let g = pick(&mut self.rng, globals).clone();
            let mut a = AgentDef::global_ref(name, g);
            a.instancing = instancing;
            return a;
        }
        let mut a = if self.chance(0.15) {
            AgentDef::calling(name)
        } else {
            AgentDef::new(name)
        };
        a.instancing = instancing;
        let least = usize::from(self.cfg.lively);
        let ns = self.rng.gen_range(least..=self.cfg.max_interfaces);
        for s in distinct(&mut self.rng, SENSORS, ns) {
            let m = self.modality();
            a.sensors.push(Interface::new(s, m));
        }
        let na = self.rng.gen_range(least..=self.cfg.max_interfaces);
        for s in distinct(&mut self.rng, ACTUATORS, na) {
            let m = self.modality();
            a.actuators.push(Interface::new(s, m));
        }
        self.nature(&mut a.nature);
        if a.kind == AgentKind::Standard && depth < self.cfg.max_depth {
            let n = self.rng.gen_range(0..=self.cfg.max_children);
            for c in distinct(&mut self.rng, AGENT_NAMES, n) {
                if self.agents >= self.limit {
                    break;
                }
                let child = self.agent(c, depth + 1, globals);
                a.children.push(child);
            }
        }
        a
    }

    fn nature(&mut self, n: &mut Nature) {
        if self.chance(0.4) {
            n.social.push(*pick(&mut self.rng, SocialConcept::ALL));
        }
        if self.chance(0.3) {
            n.ethical.push(*pick(&mut self.rng, EthicalConcept::ALL));
        }
        if self.chance(0.3) {
            n.autonomy_type.push(*pick(&mut self.rng, AutonomyType::ALL));
        }
        if self.chance(0.3) {
            n.archetype.push(*pick(&mut self.rng, Archetype::ALL));
        }
        if self.chance(0.25) {
            n.functional_type.push(pick(&mut self.rng, FUNCTIONAL).to_string());
        }
    }

    /// Sensor shares between siblings, recursively.
    fn shares(&mut self, siblings: &mut [AgentDef], globals: &[AgentDef]) {
        let effective = |a: &AgentDef| -> AgentDef {
            match &a.kind {
                AgentKind::GlobalRef(g) => globals.iter().find(|d| &d.name == g).cloned().unwrap_or_else(|| a.clone()),
                _ => a.clone(),
            }
        };
        let defs: Vec<AgentDef> = siblings.iter().map(effective).collect();
        for i in 0..siblings.len() {
            if matches!(siblings[i].kind, AgentKind::GlobalRef(_)) {
                continue;
            }
            let others: Vec<usize> = (0..defs.len())
                .filter(|&j| j != i && defs[j].name != siblings[i].name && !defs[j].sensors.is_empty())
                .collect();
            if !others.is_empty() && self.chance(0.2) {
                let j = *pick(&mut self.rng, &others);
                let s = pick(&mut self.rng, &defs[j].sensors).name.clone();
                siblings[i].shares.push(SharedSensor {
                    agent: siblings[j].name.clone(),
                    sensor: s,
                });
            }
            let mut children = std::mem::take(&mut siblings[i].children);
            self.shares(&mut children, globals);
            siblings[i].children = children;
        }
    }

    fn behave_tree(&mut self, a: &mut AgentDef, paths: &[AgentPath]) {
        if !matches!(a.kind, AgentKind::GlobalRef(_)) {
            self.behavior(a, paths);
        }
        for c in &mut a.children {
            self.behave_tree(c, paths);
        }
    }

    fn behavior(&mut self, a: &mut AgentDef, paths: &[AgentPath]) {
        let ns = self.rng.gen_range(0..=self.cfg.max_states);
        let states = distinct(&mut self.rng, STATES, ns);
        for s in &states {
            let value = self.literal();
            a.behavior.states.push(StateDecl {
                name: s.clone(),
                value,
            });
        }
        if !self.cfg.lively {
            let ng = self.rng.gen_range(0..=2);
            let mut prios: Vec<i64> = (0..10).collect();
            prios.shuffle(&mut self.rng);
            for (k, name) in distinct(&mut self.rng, GOALS, ng).into_iter().enumerate() {
                let target = self.expr(2, &states, false);
                a.behavior.goals.push(Goal {
                    name,
                    priority: prios[k],
                    target,
                });
            }
        }
        if self.chance(0.5) {
            let nt = self.rng.gen_range(1..=2);
            let terms = distinct(&mut self.rng, METRICS, nt)
                .into_iter()
                .map(|metric| UtilityTerm {
                    metric,
                    weight: f64::from(self.rng.gen_range(-4..=8)) / 2.0,
                })
                .collect();
            a.behavior.utility = Some(UtilityFunction { terms });
        }
        let nr = self.rng.gen_range(usize::from(self.cfg.lively)..=self.cfg.max_rules);
        for name in distinct(&mut self.rng, RULES, nr) {
            let r = self.rule(name, a, &states, paths);
            a.behavior.rules.push(r);
        }
    }

    fn literal(&mut self) -> Literal {
        match self.rng.gen_range(0..5) {
            0 | 1 => Literal::Number(f64::from(self.rng.gen_range(-5..=20))),
            2 => Literal::Number(f64::from(self.rng.gen_range(0..=40)) / 4.0),
            3 => Literal::Bool(self.chance(0.5)),
            _ => Literal::Text(pick(&mut self.rng, TAGS).to_string()),
        }
    }

    fn expr(&mut self, depth: usize, states: &[String], scoped: bool) -> Expr {
        let leaf = depth == 0 || self.chance(0.35);
        if leaf {
            let var = match (states.is_empty(), scoped) {
                (false, _) if self.chance(0.4) => Some(pick(&mut self.rng, states).clone()),
                (_, true) if self.chance(0.4) => {
                    let scope = if self.chance(0.5) { "trigger" } else { "selected" };
                    Some(format!("{scope}.{}", pick(&mut self.rng, FIELDS)))
                }
                _ => None,
            };
            return match var {
                Some(v) => Expr::Var(v),
                None => Expr::Lit(self.literal()),
            };
        }
        match self.rng.gen_range(0..6) {
            0 => {
                let op = if self.chance(0.5) { UnOp::Neg } else { UnOp::Not };
                Expr::Unary(op, Box::new(self.expr(depth - 1, states, scoped)))
            }
            _ => {
                let op = *pick(
                    &mut self.rng,
                    &[
                        BinOp::Or,
                        BinOp::And,
                        BinOp::Eq,
                        BinOp::Ne,
                        BinOp::Lt,
                        BinOp::Le,
                        BinOp::Gt,
                        BinOp::Ge,
                        BinOp::Add,
                        BinOp::Sub,
                        BinOp::Mul,
                        BinOp::Div,
                    ],
                );
                let l = self.expr(depth - 1, states, scoped);
                let r = self.expr(depth - 1, states, scoped);
                Expr::bin(op, l, r)
            }
        }
    }

    fn specialization(&mut self) -> Specialization {
        match self.rng.gen_range(0..7) {
            0 => Specialization::Generic(pick(&mut self.rng, TAGS).to_string()),
            1 => Specialization::Reaction(Some(*pick(&mut self.rng, ReactionKind::ALL))),
            2 => Specialization::Task,
            3 => Specialization::ActionCandidates,
            4 => Specialization::Instruction(Some(match self.rng.gen_range(0..5) {
                0 => InstructionKind::Instantiate,
                1 => InstructionKind::Suspend,
                2 => InstructionKind::Abort,
                3 => InstructionKind::request(),
                _ => InstructionKind::Custom("reroute".into()),
            })),
            5 => Specialization::Notification(Some(*pick(&mut self.rng, NotificationMode::ALL))),
            _ => Specialization::Metric,
        }
    }

    fn object(&mut self, media: Option<&Modality>) -> EventObjectSpec {
        let s = self.specialization();
        let mut o = EventObjectSpec::new(s, *pick(&mut self.rng, Quant::ALL));
        if let Some(m) = media {
            if !self.cfg.lively && self.chance(0.2) {
                o.media = Some(m.clone());
            }
        }
        if !self.cfg.lively && self.chance(0.2) {
            let n = self.rng.gen_range(1..=2);
            for f in distinct(&mut self.rng, FIELDS, n) {
                let ty = *pick(&mut self.rng, PrimitiveType::ALL);
                o.payload_schema.push((f, ty));
            }
        }
        o
    }

    fn pattern(&mut self) -> SpecPattern {
        if self.cfg.lively && self.chance(0.7) {
            return if self.chance(0.5) { SpecPattern::Start } else { SpecPattern::Any };
        }
        match self.rng.gen_range(0..11) {
            0 => SpecPattern::Any,
            1 => SpecPattern::Start,
            2 => SpecPattern::Generic(None),
            3 => SpecPattern::Generic(Some(pick(&mut self.rng, TAGS).to_string())),
            4 => SpecPattern::Reaction(self.chance(0.5).then(|| *pick(&mut self.rng, ReactionKind::ALL))),
            5 => SpecPattern::Task,
            6 => SpecPattern::ActionCandidates,
            7 => SpecPattern::Instruction(self.chance(0.5).then(|| InstructionKind::Suspend)),
            8 => SpecPattern::Notification(self.chance(0.5).then(|| *pick(&mut self.rng, NotificationMode::ALL))),
            9 => SpecPattern::Metric,
            _ => SpecPattern::Any,
        }
    }

    fn rule(&mut self, name: String, a: &AgentDef, states: &[String], paths: &[AgentPath]) -> Rule {
        let spec = self.pattern();
        let mut trigger = EventPattern::on(spec.clone());
        if spec != SpecPattern::Start {
            if self.chance(0.2) {
                trigger.from = Some(pick(&mut self.rng, paths).clone());
            }
            if !a.sensors.is_empty() && self.chance(0.2) {
                trigger.at = Some(pick(&mut self.rng, &a.sensors).name.clone());
            }
        }
        let guard = self.chance(0.3).then(|| self.expr(2, states, true));
        let n = self.rng.gen_range(1..=self.cfg.max_actions);
        let actions = self.actions(n, 2, a, states);
        Rule {
            name,
            trigger,
            guard,
            actions,
        }
    }

    fn actions(&mut self, n: usize, depth: usize, a: &AgentDef, states: &[String]) -> Vec<Action> {
        (0..n).map(|_| self.action(depth, a, states)).collect()
    }

    fn action(&mut self, depth: usize, a: &AgentDef, states: &[String]) -> Action {
        loop {
            match self.rng.gen_range(0..12) {
                0..=4 if !a.actuators.is_empty() => {
                    let act = pick(&mut self.rng, &a.actuators).clone();
                    let object = self.object(Some(&act.modality));
                    let payload = match self.rng.gen_range(0..if self.cfg.lively { 7 } else { 5 }) {
                        0 => None,
                        1 => Some(PayloadTemplate::Selected),
                        2 => Some(PayloadTemplate::Trigger),
                        _ => {
                            let n = self.rng.gen_range(1..=3);
                            let items = distinct(&mut self.rng, ITEMS, n)
                                .into_iter()
                                .map(|id| {
                                    let nf = self.rng.gen_range(0..=2);
                                    let fields = distinct(&mut self.rng, FIELDS, nf)
                                        .into_iter()
                                        .map(|f| {
                                            let e = if self.cfg.lively && self.chance(0.7) {
                                                Expr::num(f64::from(self.rng.gen_range(-3..=10)))
                                            } else {
                                                self.expr(1, states, true)
                                            };
                                            (f, e)
                                        })
                                        .collect();
                                    ItemTemplate { id, fields }
                                })
                                .collect();
                            Some(PayloadTemplate::Items(items))
                        }
                    };
                    return Action::Emit {
                        actuator: act.name,
                        object,
                        payload,
                    };
                }
                5 if !states.is_empty() => {
                    return Action::SetState {
                        name: pick(&mut self.rng, states).clone(),
                        value: self.expr(2, states, true),
                    }
                }
                6 => {
                    return Action::Select(match self.rng.gen_range(0..3) {
                        0 => SelectStrategy::First,
                        1 => SelectStrategy::Named(pick(&mut self.rng, ITEMS).to_string()),
                        _ => SelectStrategy::UtilityArgmax,
                    })
                }
                7 if depth > 0 => {
                    let n = self.rng.gen_range(0..=2);
                    return Action::VetoWindow {
                        duration: self.rng.gen_range(1..=self.cfg.max_window),
                        on_expiry: self.actions(n, depth - 1, a, states),
                    };
                }
                8 => return Action::Commit,
                9 => return Action::AbortPending,
                10 if depth > 0 => {
                    let n = self.rng.gen_range(0..=2);
                    return Action::Delegate {
                        probability: percent(&mut self.rng, 0, 100),
                        actions: self.actions(n, depth - 1, a, states),
                    };
                }
                _ => {}
            }
        }
    }

    fn connections(&mut self, m: &mut Model) {
        let ends = interface_ends(m);
        let actuators: Vec<&(AgentPath, String, Modality)> = ends.iter().filter(|e| e.0 == Direction::Actuator).map(|e| &e.1).collect();
        let sensors: Vec<&(AgentPath, String, Modality)> = ends.iter().filter(|e| e.0 == Direction::Sensor).map(|e| &e.1).collect();
        if actuators.is_empty() || sensors.is_empty() {
            return;
        }
        let least = if self.cfg.lively { 2 } else { 0 };
        let n = self.rng.gen_range(least..=self.cfg.max_connections);
        for _ in 0..n {
            let (fp, fi, fm) = *pick(&mut self.rng, &actuators);
            let reachable: Vec<_> = sensors.iter().filter(|s| s.2 == *fm).collect();
            let Some(&&&(ref tp, ref ti, _)) = reachable.choose(&mut self.rng) else {
                continue;
            };
            let mut params = ChannelParams::default();
            if self.chance(0.4) {
                params.attention = Some(percent(&mut self.rng, 0, 100));
            }
            if self.chance(0.4) {
                // Thresholds used by `run_config` show up often, to pin the boundary.
                params.reliability = Some(if self.chance(0.5) {
                    *pick(&mut self.rng, &[0.3, 0.5, 0.8])
                } else {
                    percent(&mut self.rng, 0, 100)
                });
            }
            if self.chance(0.3) {
                params.conformity = Some(percent(&mut self.rng, 0, 100));
            }
            if self.chance(0.2) {
                params.security = Some(percent(&mut self.rng, 0, 100));
            }
            let nc = if self.cfg.lively && self.chance(0.5) { 0 } else { self.rng.gen_range(0..=2) };
            let carries = (0..nc).map(|_| self.object(Some(fm))).collect();
            m.connections.push(Connection {
                from: Endpoint {
                    agent: fp.clone(),
                    interface: fi.clone(),
                },
                to: Endpoint {
                    agent: tp.clone(),
                    interface: ti.clone(),
                },
                style: if self.chance(0.3) {
                    ConnectionStyle::Discontinuous
                } else {
                    ConnectionStyle::Continuous
                },
                params,
                carries,
            });
        }
    }
}

/// Paths of every agent of the root forest, references expanded.
pub fn agent_paths(m: &Model) -> Vec<AgentPath> {
    fn walk(m: &Model, a: &AgentDef, prefix: &AgentPath, out: &mut Vec<AgentPath>) {
        let path = prefix.child(&a.name);
        out.push(path.clone());
        let body = match &a.kind {
            AgentKind::GlobalRef(g) => m.globals.iter().find(|d| &d.name == g).unwrap_or(a),
            _ => a,
        };
        for c in &body.children {
            walk(m, c, &path, out);
        }
    }
    let mut out = Vec::new();
    for a in &m.agents {
        walk(m, a, &AgentPath::root(), &mut out);
    }
    out
}

type End = (Direction, (AgentPath, String, Modality));

fn interface_ends(m: &Model) -> Vec<End> {
    let mut out = Vec::new();
    for p in agent_paths(m) {
        let Ok(def) = m.resolve(&p) else { continue };
        for s in &def.sensors {
            out.push((Direction::Sensor, (p.clone(), s.name.clone(), s.modality.clone())));
        }
        for s in &def.actuators {
            out.push((Direction::Actuator, (p.clone(), s.name.clone(), s.modality.clone())));
        }
    }
    out
}

/// Random injection schedule over agents of `m` for ticks `0..ticks`.
pub fn injections(m: &Model, seed: u64, ticks: u64) -> Vec<Injection> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let paths = agent_paths(m);
    if paths.is_empty() {
        return Vec::new();
    }
    let n = rng.gen_range(0..=3);
    (0..n)
        .map(|_| {
            let path = pick(&mut rng, &paths).clone();
            let def = m.resolve(&path).expect("generated paths resolve");
            let action = match rng.gen_range(0..8) {
                0 => InjectedAction::Veto,
                1 => InjectedAction::Approve,
                2 => InjectedAction::Refuse,
                3 => InjectedAction::Request,
                4 => InjectedAction::Instruct(InstructionKind::Suspend),
                5 => InjectedAction::Act(Action::Commit),
                6 => InjectedAction::Act(Action::AbortPending),
                _ => match def.actuators.first() {
                    Some(a) => InjectedAction::Act(Action::Emit {
                        actuator: a.name.clone(),
                        object: EventObjectSpec::new(Specialization::ActionCandidates, Quant::All),
                        payload: Some(PayloadTemplate::Items(vec![
                            ItemTemplate {
                                id: "oak".into(),
                                fields: vec![("value".into(), Expr::num(3.0))],
                            },
                            ItemTemplate {
                                id: "ash".into(),
                                fields: vec![("value".into(), Expr::num(3.0))],
                            },
                        ])),
                    }),
                    None => InjectedAction::Veto,
                },
            };
            Injection::new(rng.gen_range(0..ticks.max(1)), &path.to_string(), action)
        })
        .collect()
}

/// Random run configuration valid for `m`.
pub fn run_config(m: &Model, seed: u64) -> RunConfig {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xc0f1);
    let mut counts = BTreeMap::new();
    for p in agent_paths(m) {
        let Ok(def) = m.resolve(&p) else { continue };
        let written = written_instancing(m, &p).unwrap_or(def.instancing);
        if let Instancing::Multi { min, max } = written {
            if rng.gen_bool(0.5) {
                let hi = max.unwrap_or(min + 2).min(min + 2);
                counts.insert(p.to_string(), rng.gen_range(min..=hi));
            }
        }
    }
    RunConfig {
        attention_base: rng.gen_range(1..=4),
        reliability_threshold: *pick(&mut rng, &[0.5, 0.3, 0.8]),
        stochastic_reliability: rng.gen_bool(0.5),
        overflow: if rng.gen_bool(0.5) {
            Overflow::Queue
        } else {
            Overflow::DropNewest
        },
        detriment_limit: *pick(&mut rng, &[0.0, 1.0]),
        instance_counts: counts,
    }
}

/// Cardinality in effect at `path`: a multi-instance reference overrides
/// the global's.
fn written_instancing(m: &Model, path: &AgentPath) -> Option<Instancing> {
    let mut level: &[AgentDef] = &m.agents;
    let mut found = None;
    for seg in path.segments() {
        let a = level.iter().find(|a| &a.name == seg)?;
        let (body, inst) = match &a.kind {
            AgentKind::GlobalRef(g) => {
                let gd = m.globals.iter().find(|d| &d.name == g)?;
                let inst = if a.instancing.is_multi() { a.instancing } else { gd.instancing };
                (gd, inst)
            }
            _ => (a, a.instancing),
        };
        found = Some(inst);
        level = &body.children;
    }
    found
}
