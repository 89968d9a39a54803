//! Conformance checks of a parsed model against the meta model.
//!
//! Every finding carries a stable code from [`CATALOGUE`]. Structural
//! violations are errors; likely mistakes that still leave an executable
//! model are warnings.

use std::collections::{BTreeMap, BTreeSet};

use crate::diagnostic::{self, Diagnostic, Severity};
use crate::model::*;

/// Published diagnostic codes with their severity and a one-line meaning.
pub const CATALOGUE: &[(&str, Severity, &str)] = &[
    ("AMN-DR1-01", Severity::Error, "containment cycle through global references"),
    ("AMN-DR1-02", Severity::Error, "calling agent has sub-agents"),
    ("AMN-DR1-03", Severity::Error, "unresolved global reference"),
    ("AMN-DR2-01", Severity::Error, "incompatible modalities on a connection"),
    ("AMN-DR2-02", Severity::Error, "event object media differs from the emitting actuator's modality"),
    ("AMN-DR2-03", Severity::Error, "generic modality without a parameter"),
    ("AMN-DR3-01", Severity::Error, "connection source is not an actuator or target is not a sensor"),
    ("AMN-DR4-01", Severity::Error, "rule uses an interface the agent does not have"),
    ("AMN-DR4-02", Severity::Error, "expression references an undeclared state"),
    ("AMN-DR5-01", Severity::Error, "duplicate goal priority"),
    ("AMN-DR5-02", Severity::Warning, "utility metric is never produced by a state or an inbound object"),
    ("AMN-DR6-01", Severity::Error, "attention outside [0, 1]"),
    ("AMN-DR7-01", Severity::Error, "more than one social self-concept"),
    ("AMN-DR7-02", Severity::Error, "invalid multi-instance cardinality"),
    ("AMN-DR7-03", Severity::Warning, "cooperative parent whose sub-agents are all self-interested"),
    ("AMN-DR7-04", Severity::Error, "more than one ethical concept, autonomy type, archetype or functional type"),
    ("AMN-DR8-01", Severity::Error, "reliability, conformity or security outside [0, 1]"),
    ("AMN-DR8-02", Severity::Warning, "security declared on a connection that carries no objects"),
    ("AMN-DR9-01", Severity::Error, "task object without a quantitative indicator"),
    ("AMN-DR10-01", Severity::Error, "reaction or instruction without its kind"),
    ("AMN-DR11-01", Severity::Error, "event object without a quantitative indicator"),
    ("AMN-DR12-01", Severity::Error, "notification without a mode"),
    ("AMN-GEN-01", Severity::Error, "duplicate name"),
    ("AMN-GEN-02", Severity::Error, "connection endpoint does not resolve"),
    ("AMN-GEN-03", Severity::Error, "shared sensor does not resolve"),
];

/// All findings, sorted by (file, span, code). Empty iff the model conforms.
pub fn validate(model: &Model) -> Vec<Diagnostic> {
    let mut v = Validator {
        model,
        out: Vec::new(),
    };
    v.run();
    let mut out = v.out;
    diagnostic::sort(&mut out);
    out.dedup();
    out
}

/// True when `validate` reports no error-severity finding.
pub fn is_valid(model: &Model) -> bool {
    !diagnostic::has_errors(&validate(model))
}

struct Validator<'m> {
    model: &'m Model,
    out: Vec<Diagnostic>,
}

impl<'m> Validator<'m> {
    fn span(&self, id: &ElementId) -> SourceSpan {
        if let Some(s) = self.model.span(id) {
            return s.clone();
        }
        // Fall back to the owning agent, then to any span for the file name.
        let owner = match id {
            ElementId::Agent(l)
            | ElementId::Cardinality(l)
            | ElementId::Interface(l, ..)
            | ElementId::Share(l, _)
            | ElementId::Nature(l, ..)
            | ElementId::Goal(l, _)
            | ElementId::Utility(l)
            | ElementId::UtilityTerm(l, _)
            | ElementId::Rule(l, _)
            | ElementId::Guard(l, _)
            | ElementId::Action(l, ..)
            | ElementId::State(l, _) => Some(ElementId::Agent(l.clone())),
            ElementId::ConnectionParam(i, _) | ElementId::Carried(i, _) => {
                Some(ElementId::Connection(*i))
            }
            ElementId::Connection(_) => None,
        };
        if let Some(s) = owner.and_then(|o| self.model.span(&o)) {
            return s.clone();
        }
        match self.model.spans.values().next() {
            Some(s) => SourceSpan::new(s.file.clone(), Position::new(1, 1), Position::new(1, 1)),
            None => SourceSpan::synthetic(),
        }
    }

    fn error(&mut self, code: &'static str, msg: String, id: &ElementId) {
        let span = self.span(id);
        self.out.push(Diagnostic::error(code, msg, span));
    }

    fn warning(&mut self, code: &'static str, msg: String, id: &ElementId) {
        let span = self.span(id);
        self.out.push(Diagnostic::warning(code, msg, span));
    }

    fn run(&mut self) {
        let model = self.model;
        self.duplicate_names(
            model.agents.iter().map(|a| a.name.as_str()),
            |i| ElementId::Agent(AgentLoc::root(i)),
            "root agent",
        );
        self.duplicate_names(
            model.globals.iter().map(|a| a.name.as_str()),
            |i| ElementId::Agent(AgentLoc::global(i)),
            "global",
        );
        for cyclic in ops_global_cycle(model) {
            let i = model
                .globals
                .iter()
                .position(|g| g.name == cyclic)
                .expect("cycle names come from globals");
            self.error(
                "AMN-DR1-01",
                format!("global `{cyclic}` contains itself through global references"),
                &ElementId::Agent(AgentLoc::global(i)),
            );
        }
        for w in model.walk() {
            self.agent(&w);
        }
        for (i, c) in model.connections.iter().enumerate() {
            self.connection(i, c);
        }
        self.utility_sources();
    }

    fn duplicate_names<'a>(
        &mut self,
        names: impl Iterator<Item = &'a str>,
        id: impl Fn(usize) -> ElementId,
        what: &str,
    ) {
        let mut first: BTreeMap<&str, usize> = BTreeMap::new();
        for (i, n) in names.enumerate() {
            if let Some(&j) = first.get(n) {
                let related = self.span(&id(j));
                let span = self.span(&id(i));
                self.out.push(
                    Diagnostic::error("AMN-GEN-01", format!("duplicate {what} name `{n}`"), span)
                        .with_related(related),
                );
            } else {
                first.insert(n, i);
            }
        }
    }

    fn agent(&mut self, w: &WalkedAgent<'m>) {
        let def = w.def;
        let loc = &w.loc;
        let at = ElementId::Agent(loc.clone());

        // Structure.
        match &def.kind {
            AgentKind::Calling if !def.children.is_empty() => self.error(
                "AMN-DR1-02",
                format!("calling agent `{}` cannot contain sub-agents", def.name),
                &at,
            ),
            AgentKind::GlobalRef(g) if !self.model.globals.iter().any(|d| &d.name == g) => self
                .error(
                    "AMN-DR1-03",
                    format!("agent `{}` refers to undefined global `{g}`", def.name),
                    &at,
                ),
            _ => {}
        }
        self.duplicate_names(
            def.children.iter().map(|c| c.name.as_str()),
            |i| ElementId::Agent(loc.child(i)),
            &format!("sub-agent (in `{}`)", def.name),
        );
        if let Instancing::Multi { min, max } = def.instancing {
            let bad = match max {
                Some(0) => Some("the maximum must be at least 1".to_string()),
                Some(max) if min > max => Some(format!("minimum {min} exceeds maximum {max}")),
                _ => None,
            };
            if let Some(why) = bad {
                let id = if self.model.span(&ElementId::Cardinality(loc.clone())).is_some() {
                    ElementId::Cardinality(loc.clone())
                } else {
                    at.clone()
                };
                self.error(
                    "AMN-DR7-02",
                    format!("invalid cardinality on `{}`: {why}", def.name),
                    &id,
                );
            }
        }

        // Interfaces.
        for (dir, list) in [(Direction::Sensor, &def.sensors), (Direction::Actuator, &def.actuators)] {
            self.duplicate_names(
                list.iter().map(|i| i.name.as_str()),
                |i| ElementId::Interface(loc.clone(), dir, i),
                &format!("{dir}"),
            );
            for (i, iface) in list.iter().enumerate() {
                if matches!(&iface.modality, Modality::Generic(p) if p.trim().is_empty()) {
                    self.error(
                        "AMN-DR2-03",
                        format!("{dir} `{}` has a generic modality without a parameter", iface.name),
                        &ElementId::Interface(loc.clone(), dir, i),
                    );
                }
            }
        }
        for (i, s) in def.shares.iter().enumerate() {
            let siblings: &[AgentDef] = match w.parent {
                Some(p) => &p.children,
                None => match loc.scope {
                    Scope::Root => &self.model.agents,
                    Scope::Global => &self.model.globals,
                },
            };
            let owner = siblings
                .iter()
                .find(|a| a.name == s.agent && a.name != def.name)
                .map(|a| self.effective(a));
            if !owner.is_some_and(|a| a.sensor(&s.sensor).is_some()) {
                self.error(
                    "AMN-GEN-03",
                    format!(
                        "shared sensor `{}.{}` is not a sensor of a sibling agent",
                        s.agent, s.sensor
                    ),
                    &ElementId::Share(loc.clone(), i),
                );
            }
        }

        // Nature.
        let n = &def.nature;
        if n.social.len() > 1 {
            self.error(
                "AMN-DR7-01",
                format!("agent `{}` declares {} social self-concepts; at most one is allowed", def.name, n.social.len()),
                &ElementId::Nature(loc.clone(), NatureField::Social, 1),
            );
        }
        for (field, count, what) in [
            (NatureField::Ethical, n.ethical.len(), "ethical concepts"),
            (NatureField::AutonomyType, n.autonomy_type.len(), "autonomy types"),
            (NatureField::Archetype, n.archetype.len(), "archetypes"),
            (NatureField::Functional, n.functional_type.len(), "functional types"),
        ] {
            if count > 1 {
                self.error(
                    "AMN-DR7-04",
                    format!("agent `{}` declares {count} {what}; at most one is allowed", def.name),
                    &ElementId::Nature(loc.clone(), field, 1),
                );
            }
        }
        if n.social() == Some(SocialConcept::Cooperative) && !def.children.is_empty() {
            let all_selfish = def
                .children
                .iter()
                .all(|c| self.effective(c).nature.social() == Some(SocialConcept::SelfInterested));
            if all_selfish {
                self.warning(
                    "AMN-DR7-03",
                    format!(
                        "`{}` is cooperative but all of its sub-agents are self-interested",
                        def.name
                    ),
                    &ElementId::Nature(loc.clone(), NatureField::Social, 0),
                );
            }
        }

        // Behavior.
        let b = &def.behavior;
        self.duplicate_names(
            b.goals.iter().map(|g| g.name.as_str()),
            |i| ElementId::Goal(loc.clone(), i),
            "goal",
        );
        let mut prio: BTreeMap<i64, usize> = BTreeMap::new();
        for (i, g) in b.goals.iter().enumerate() {
            if let Some(&j) = prio.get(&g.priority) {
                let related = self.span(&ElementId::Goal(loc.clone(), j));
                let span = self.span(&ElementId::Goal(loc.clone(), i));
                self.out.push(
                    Diagnostic::error(
                        "AMN-DR5-01",
                        format!("goals `{}` and `{}` share priority {}", b.goals[j].name, g.name, g.priority),
                        span,
                    )
                    .with_related(related),
                );
            } else {
                prio.insert(g.priority, i);
            }
        }
        if let Some(u) = &b.utility {
            self.duplicate_names(
                u.terms.iter().map(|t| t.metric.as_str()),
                |i| ElementId::UtilityTerm(loc.clone(), i),
                "utility metric",
            );
        }
        self.duplicate_names(
            b.rules.iter().map(|r| r.name.as_str()),
            |i| ElementId::Rule(loc.clone(), i),
            "rule",
        );
        self.duplicate_names(
            b.states.iter().map(|s| s.name.as_str()),
            |i| ElementId::State(loc.clone(), i),
            "state",
        );
        let states: BTreeSet<&str> = b.states.iter().map(|s| s.name.as_str()).collect();
        for (ri, r) in b.rules.iter().enumerate() {
            if let Some(at) = &r.trigger.at {
                if def.sensor(at).is_none() {
                    self.error(
                        "AMN-DR4-01",
                        format!("rule `{}` listens at `{at}`, which is not a sensor of `{}`", r.name, def.name),
                        &ElementId::Rule(loc.clone(), ri),
                    );
                }
            }
            if let Some(g) = &r.guard {
                let id = ElementId::Guard(loc.clone(), ri);
                self.expr_names(g, &states, &r.name, &id);
            }
            self.actions(def, loc, ri, &r.name, &r.actions, &mut Vec::new(), &states);
        }
    }

    /// Definition behind a reference, or the agent itself.
    fn effective<'a>(&self, a: &'a AgentDef) -> &'a AgentDef
    where
        'm: 'a,
    {
        match &a.kind {
            AgentKind::GlobalRef(g) => self
                .model
                .globals
                .iter()
                .find(|d| &d.name == g)
                .unwrap_or(a),
            _ => a,
        }
    }

    fn expr_names(&mut self, e: &Expr, states: &BTreeSet<&str>, rule: &str, id: &ElementId) {
        for v in e.variables() {
            let ok = match v.split_once('.') {
                Some((scope, _)) => scope == "trigger" || scope == "selected",
                None => states.contains(v),
            };
            if !ok {
                self.error(
                    "AMN-DR4-02",
                    format!("rule `{rule}` references `{v}`, which is not a declared state"),
                    id,
                );
            }
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn actions(
        &mut self,
        def: &AgentDef,
        loc: &AgentLoc,
        ri: usize,
        rule: &str,
        actions: &[Action],
        path: &mut Vec<usize>,
        states: &BTreeSet<&str>,
    ) {
        for (i, a) in actions.iter().enumerate() {
            path.push(i);
            let id = ElementId::Action(loc.clone(), ri, path.clone());
            match a {
                Action::Emit {
                    actuator,
                    object,
                    payload,
                } => {
                    match def.actuator(actuator) {
                        None => self.error(
                            "AMN-DR4-01",
                            format!("rule `{rule}` emits on `{actuator}`, which is not an actuator of `{}`", def.name),
                            &id,
                        ),
                        Some(act) => {
                            if let Some(m) = &object.media {
                                if !compatible(m, &act.modality) {
                                    self.error(
                                        "AMN-DR2-02",
                                        format!(
                                            "object media {m} differs from actuator `{actuator}` modality {}",
                                            act.modality
                                        ),
                                        &id,
                                    );
                                }
                            }
                        }
                    }
                    self.object(object, &id);
                    if let Some(PayloadTemplate::Items(items)) = payload {
                        for it in items {
                            for (_, e) in &it.fields {
                                self.expr_names(e, states, rule, &id);
                            }
                        }
                    }
                }
                Action::SetState { name, value } => {
                    if !states.contains(name.as_str()) {
                        self.error(
                            "AMN-DR4-02",
                            format!("rule `{rule}` sets `{name}`, which is not a declared state"),
                            &id,
                        );
                    }
                    self.expr_names(value, states, rule, &id);
                }
                Action::VetoWindow { on_expiry: nested, .. }
                | Action::Delegate { actions: nested, .. } => {
                    self.actions(def, loc, ri, rule, nested, path, states);
                }
                Action::Select(_) | Action::Commit | Action::AbortPending => {}
            }
            path.pop();
        }
    }

    /// Specialization arguments, quantitative indicator and media parameter.
    fn object(&mut self, o: &EventObjectSpec, id: &ElementId) {
        match &o.specialization {
            Specialization::Reaction(None) => self.error(
                "AMN-DR10-01",
                "reaction object without its kind (acceptance, refusal or veto)".into(),
                id,
            ),
            Specialization::Instruction(None) => self.error(
                "AMN-DR10-01",
                "instruction object without its kind".into(),
                id,
            ),
            Specialization::Notification(None) => self.error(
                "AMN-DR12-01",
                "notification object without a mode (discretion, on_request or always)".into(),
                id,
            ),
            _ => {}
        }
        if o.quant.is_none() {
            if o.specialization == Specialization::Task {
                self.error(
                    "AMN-DR9-01",
                    "task object without a quantitative indicator (/single, /selection or /all)".into(),
                    id,
                );
            } else {
                self.error(
                    "AMN-DR11-01",
                    format!(
                        "{} object without a quantitative indicator (/single, /selection or /all)",
                        o.specialization
                    ),
                    id,
                );
            }
        }
        if matches!(&o.media, Some(Modality::Generic(p)) if p.trim().is_empty()) {
            self.error(
                "AMN-DR2-03",
                "object media is a generic modality without a parameter".into(),
                id,
            );
        }
    }

    fn connection(&mut self, i: usize, c: &Connection) {
        let at = ElementId::Connection(i);
        let from = self.endpoint(&c.from, Direction::Actuator, &at);
        let to = self.endpoint(&c.to, Direction::Sensor, &at);
        if let (Some(a), Some(b)) = (&from, &to) {
            if !compatible(a, b) {
                self.error(
                    "AMN-DR2-01",
                    format!("{} ({a}) cannot reach {} ({b}): modalities differ", c.from, c.to),
                    &at,
                );
            }
        }
        for (k, v) in c.params.entries() {
            if (0.0..=1.0).contains(&v) {
                continue;
            }
            let code = if k == "attention" { "AMN-DR6-01" } else { "AMN-DR8-01" };
            let id = if self.model.span(&ElementId::ConnectionParam(i, k)).is_some() {
                ElementId::ConnectionParam(i, k)
            } else {
                at.clone()
            };
            self.error(
                code,
                format!("{k} = {}% is outside 0%..100%", crate::dsl::percent(v)),
                &id,
            );
        }
        if c.params.security.is_some() && c.carries.is_empty() {
            self.warning(
                "AMN-DR8-02",
                format!("security is declared on {} -> {}, which carries no objects", c.from, c.to),
                &at,
            );
        }
        for (j, o) in c.carries.iter().enumerate() {
            let id = ElementId::Carried(i, j);
            self.object(o, &id);
            if let (Some(m), Some(act)) = (&o.media, &from) {
                if !compatible(m, act) {
                    self.error(
                        "AMN-DR2-02",
                        format!("object media {m} differs from actuator {} modality {act}", c.from),
                        &id,
                    );
                }
            }
        }
    }

    /// Modality of the endpoint when it resolves with the right direction.
    fn endpoint(&mut self, ep: &Endpoint, want: Direction, at: &ElementId) -> Option<Modality> {
        let Ok(def) = self.model.resolve(&ep.agent) else {
            self.error(
                "AMN-GEN-02",
                format!("connection endpoint `{ep}`: no agent `{}`", ep.agent),
                at,
            );
            return None;
        };
        if let Some(i) = def.interface(want, &ep.interface) {
            return Some(i.modality.clone());
        }
        let other = match want {
            Direction::Sensor => Direction::Actuator,
            Direction::Actuator => Direction::Sensor,
        };
        if def.interface(other, &ep.interface).is_some() {
            let role = match want {
                Direction::Actuator => "source",
                Direction::Sensor => "target",
            };
            self.error(
                "AMN-DR3-01",
                format!("connection {role} `{ep}` is a {other}; connections run from actuators to sensors"),
                at,
            );
        } else {
            self.error(
                "AMN-GEN-02",
                format!("connection endpoint `{ep}`: `{}` has no interface `{}`", ep.agent, ep.interface),
                at,
            );
        }
        None
    }

    /// Utility metrics of concrete agents must be produced by a state or by
    /// an object flowing into the agent's subtree.
    fn utility_sources(&mut self) {
        let model = self.model;
        let Ok(roots) = model.expand() else {
            return;
        };
        for root in &roots {
            for a in root.preorder() {
                let Some(u) = &a.def.behavior.utility else {
                    continue;
                };
                let produced = self.produced_into(&a.path);
                let states: BTreeSet<&str> =
                    a.def.behavior.states.iter().map(|s| s.name.as_str()).collect();
                for (i, t) in u.terms.iter().enumerate() {
                    if states.contains(t.metric.as_str()) || produced.contains(&t.metric) {
                        continue;
                    }
                    self.warning(
                        "AMN-DR5-02",
                        format!(
                            "utility metric `{}` of `{}` is neither a state nor a field of any object flowing into it",
                            t.metric, a.path
                        ),
                        &ElementId::UtilityTerm(a.loc.clone(), i),
                    );
                }
            }
        }
    }

    /// Payload names (item ids, item fields, schema fields) of objects sent
    /// over connections that end inside `path`.
    fn produced_into(&self, path: &AgentPath) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        for c in &self.model.connections {
            if !c.to.agent.starts_with(path) {
                continue;
            }
            for o in &c.carries {
                out.extend(o.payload_schema.iter().map(|(f, _)| f.clone()));
            }
            let Ok(src) = self.model.resolve(&c.from.agent) else {
                continue;
            };
            for r in &src.behavior.rules {
                r.visit_actions(&mut |a| {
                    if let Action::Emit {
                        actuator,
                        object,
                        payload,
                    } = a
                    {
                        if actuator != &c.from.interface {
                            return;
                        }
                        out.extend(object.payload_schema.iter().map(|(f, _)| f.clone()));
                        if let Some(PayloadTemplate::Items(items)) = payload {
                            for it in items {
                                out.insert(it.id.clone());
                                out.extend(it.fields.iter().map(|(f, _)| f.clone()));
                            }
                        }
                    }
                });
            }
        }
        out
    }
}

fn ops_global_cycle(model: &Model) -> Vec<String> {
    crate::model::global_cycle(model)
}
