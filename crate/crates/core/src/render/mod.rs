//! DOT output for the graphical notation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use crate::diagnostic::Diagnostic;
use crate::model::*;
use crate::validator;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum BadgeStyle {
    #[default]
    ShortCodes,
    Words,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RenderOptions {
    pub show_params: bool,
    pub show_behavior: bool,
    /// Agents at this depth (roots are depth 1) are drawn without their children.
    pub collapse_below_depth: Option<usize>,
    pub badge_style: BadgeStyle,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            show_params: true,
            show_behavior: false,
            collapse_below_depth: None,
            badge_style: BadgeStyle::ShortCodes,
        }
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum RenderError {
    #[error("the model has validation errors ({} error(s)); fix them before rendering", .0.len())]
    RefusesInvalid(Vec<Diagnostic>),
    #[error("collapse depth must be at least 1")]
    InvalidCollapse,
}

fn social_code(c: SocialConcept) -> &'static str {
    match c {
        SocialConcept::SelfInterested => "self",
        SocialConcept::Helpful => "help",
        SocialConcept::Cooperative => "coop",
    }
}

fn ethical_code(c: EthicalConcept) -> &'static str {
    match c {
        EthicalConcept::NonEthical => "non",
        EthicalConcept::Implicit => "impl",
        EthicalConcept::Explicit => "expl",
        EthicalConcept::Full => "full",
    }
}

fn type_code(t: AutonomyType) -> &'static str {
    match t {
        AutonomyType::Interpretation => "interp",
        AutonomyType::KnowHow => "know",
        AutonomyType::Plan => "plan",
        AutonomyType::Goal => "goal",
        AutonomyType::Reasoning => "reason",
        AutonomyType::Monitoring => "monit",
        AutonomyType::Skill => "skill",
        AutonomyType::Resource => "res",
        AutonomyType::Condition => "cond",
    }
}

fn archetype_code(a: Archetype) -> &'static str {
    match a {
        Archetype::Reflex => "reflex",
        Archetype::InternalState => "state",
        Archetype::GoalBased => "goal",
        Archetype::UtilityBased => "util",
    }
}

fn social_word(c: SocialConcept) -> &'static str {
    match c {
        SocialConcept::SelfInterested => "self-interested",
        SocialConcept::Helpful => "helpful",
        SocialConcept::Cooperative => "cooperative",
    }
}

fn ethical_word(c: EthicalConcept) -> &'static str {
    match c {
        EthicalConcept::NonEthical => "non-ethical",
        EthicalConcept::Implicit => "implicit ethical",
        EthicalConcept::Explicit => "explicit ethical",
        EthicalConcept::Full => "full ethical",
    }
}

fn type_word(t: AutonomyType) -> &'static str {
    match t {
        AutonomyType::Interpretation => "interpretation",
        AutonomyType::KnowHow => "know-how",
        AutonomyType::Plan => "plan",
        AutonomyType::Goal => "goal",
        AutonomyType::Reasoning => "reasoning",
        AutonomyType::Monitoring => "monitoring",
        AutonomyType::Skill => "skill",
        AutonomyType::Resource => "resource",
        AutonomyType::Condition => "condition",
    }
}

fn archetype_word(a: Archetype) -> &'static str {
    match a {
        Archetype::Reflex => "simple reflex",
        Archetype::InternalState => "internal state",
        Archetype::GoalBased => "goal-based",
        Archetype::UtilityBased => "utility-based",
    }
}

/// Badge text for an agent's nature, e.g. `[SOC:coop][ETH:impl][TYP:plan]`.
pub fn badges(nature: &Nature, style: BadgeStyle) -> String {
    let mut out = String::new();
    let mut push = |code: String, word: String| match style {
        BadgeStyle::ShortCodes => {
            let _ = write!(out, "[{code}]");
        }
        BadgeStyle::Words => {
            let _ = write!(out, "[{word}]");
        }
    };
    for &c in &nature.social {
        push(format!("SOC:{}", social_code(c)), social_word(c).into());
    }
    for &c in &nature.ethical {
        push(format!("ETH:{}", ethical_code(c)), ethical_word(c).into());
    }
    for &t in &nature.autonomy_type {
        push(format!("TYP:{}", type_code(t)), type_word(t).into());
    }
    for &a in &nature.archetype {
        push(format!("ARC:{}", archetype_code(a)), archetype_word(a).into());
    }
    for f in &nature.functional_type {
        if f == HUMAN_TAG {
            push("H".into(), "human".into());
        } else {
            push(format!("FN:{f}"), format!("function: {f}"));
        }
    }
    out
}

/// Escapes text for a double-quoted DOT string; `\n` separates lines.
fn q(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            _ => out.push(ch),
        }
    }
    out.push('"');
    out
}

struct Emitter<'a> {
    opts: &'a RenderOptions,
    out: String,
    /// Written path → DOT node id used for edges, and whether it is a cluster.
    anchors: BTreeMap<String, (String, Option<String>)>,
    /// Agent paths that connections name directly.
    endpoints: BTreeSet<String>,
}

impl Emitter<'_> {
    fn indent(&mut self, depth: usize) {
        for _ in 0..depth {
            self.out.push_str("  ");
        }
    }

    fn label(&self, def: &AgentDef, collapsed_children: usize) -> String {
        let mut lines = Vec::new();
        let b = badges(&def.nature, self.opts.badge_style);
        if !b.is_empty() {
            lines.push(b);
        }
        let mut title = def.name.clone();
        if def.instancing.is_multi() {
            let _ = write!(title, " {}", def.instancing);
        }
        if let AgentKind::GlobalRef(g) = &def.kind {
            let _ = write!(title, " : {g}");
        }
        if collapsed_children > 0 {
            let _ = write!(title, " (+{collapsed_children})");
        }
        lines.push(title);
        let names = |ifaces: &[Interface]| {
            ifaces
                .iter()
                .map(|i| format!("{} ({})", i.name, i.modality))
                .collect::<Vec<_>>()
                .join(", ")
        };
        if !def.sensors.is_empty() {
            lines.push(format!("in: {}", names(&def.sensors)));
        }
        if !def.actuators.is_empty() {
            lines.push(format!("out: {}", names(&def.actuators)));
        }
        if self.opts.show_behavior {
            let b = &def.behavior;
            if !b.goals.is_empty() {
                let goals: Vec<String> = b.goals.iter().map(|g| format!("{} ({})", g.name, g.priority)).collect();
                lines.push(format!("goals: {}", goals.join(", ")));
            }
            if let Some(u) = &b.utility {
                let terms: Vec<String> = u.terms.iter().map(|t| format!("{} * {}", t.weight, t.metric)).collect();
                lines.push(format!("utility: {}", terms.join(" + ")));
            }
            if !b.rules.is_empty() {
                let rules: Vec<&str> = b.rules.iter().map(|r| r.name.as_str()).collect();
                lines.push(format!("rules: {}", rules.join(", ")));
            }
            if !b.states.is_empty() {
                let states: Vec<String> = b.states.iter().map(|s| format!("{} = {}", s.name, s.value)).collect();
                lines.push(format!("states: {}", states.join(", ")));
            }
        }
        lines.join("\n")
    }

    fn border(def: &AgentDef, global: bool) -> &'static str {
        match (&def.kind, global) {
            (AgentKind::Calling, true) => "dashed,bold",
            (AgentKind::Calling, false) => "dashed",
            (AgentKind::GlobalRef(_), _) | (_, true) => "bold",
            (AgentKind::Standard, false) => "solid",
        }
    }

    /// Emits an agent as a node, or as a cluster when it has visible children.
    fn agent(&mut self, def: &AgentDef, id_path: &str, depth: usize, global: bool) {
        let collapsed = self
            .opts
            .collapse_below_depth
            .is_some_and(|limit| depth >= limit);
        let style = Self::border(def, global);
        let node = format!("agent:{id_path}");
        if def.children.is_empty() || collapsed {
            let label = self.label(def, if collapsed { count_all(&def.children) } else { 0 });
            self.indent(depth);
            let _ = writeln!(self.out, "{} [label={}, style={}];", q(&node), q(&label), q(style));
            self.anchors.insert(id_path.to_owned(), (node, None));
            if collapsed {
                self.hide(&def.children, id_path);
            }
            return;
        }
        let cluster = format!("cluster_agent:{id_path}");
        let label = self.label(def, 0);
        self.indent(depth);
        let _ = writeln!(self.out, "subgraph {} {{", q(&cluster));
        self.indent(depth + 1);
        let _ = writeln!(self.out, "label={};", q(&label));
        self.indent(depth + 1);
        let _ = writeln!(self.out, "style={};", q(style));
        if self.endpoints.contains(id_path) {
            let anchor = format!("port:{id_path}");
            self.indent(depth + 1);
            let _ = writeln!(self.out, "{} [shape=point, style=invis, label=\"\"];", q(&anchor));
            self.anchors.insert(id_path.to_owned(), (anchor, Some(cluster)));
        }
        for c in &def.children {
            self.agent(c, &format!("{id_path}.{}", c.name), depth + 1, global);
        }
        self.indent(depth);
        self.out.push_str("}\n");
    }

    /// Hidden descendants route their edges to the collapsed ancestor.
    fn hide(&mut self, children: &[AgentDef], via: &str) {
        let target = self.anchors[via].clone();
        let mut stack: Vec<(String, &AgentDef)> = children.iter().map(|c| (format!("{via}.{}", c.name), c)).collect();
        while let Some((path, def)) = stack.pop() {
            stack.extend(def.children.iter().map(|c| (format!("{path}.{}", c.name), c)));
            self.anchors.insert(path, target.clone());
        }
    }

    /// The drawn element an endpoint path lands on: the deepest drawn
    /// agent on the path.
    fn endpoint(&self, path: &AgentPath) -> Option<&(String, Option<String>)> {
        let segs = path.segments();
        (1..=segs.len())
            .rev()
            .find_map(|n| self.anchors.get(&segs[..n].join(".")))
    }
}

fn count_all(children: &[AgentDef]) -> usize {
    children.iter().map(|c| 1 + count_all(&c.children)).sum()
}

/// Renders a valid model as a DOT digraph: agents as nodes, containment as
/// nested clusters, connections as edges from actuators to sensors.
pub fn to_dot(model: &Model, opts: &RenderOptions) -> Result<String, RenderError> {
    if opts.collapse_below_depth == Some(0) {
        return Err(RenderError::InvalidCollapse);
    }
    let errors: Vec<Diagnostic> = validator::validate(model)
        .into_iter()
        .filter(Diagnostic::is_error)
        .collect();
    if !errors.is_empty() {
        return Err(RenderError::RefusesInvalid(errors));
    }
    let mut e = Emitter {
        opts,
        out: String::new(),
        anchors: BTreeMap::new(),
        endpoints: model
            .connections
            .iter()
            .flat_map(|c| [c.from.agent.to_string(), c.to.agent.to_string()])
            .collect(),
    };
    e.out.push_str("digraph amn {\n");
    e.out.push_str("  graph [compound=true, rankdir=LR, fontname=\"Helvetica\"];\n");
    e.out.push_str("  node [shape=box, fontname=\"Helvetica\"];\n");
    e.out.push_str("  edge [fontname=\"Helvetica\"];\n");
    for g in &model.globals {
        e.agent(g, &format!("global:{}", g.name), 1, true);
    }
    // Global definitions are drawn with their own ids; only root-forest
    // paths resolve connection endpoints.
    e.anchors.clear();
    for a in &model.agents {
        e.agent(a, &a.name, 1, false);
    }

    for c in model.sorted_connections() {
        let (Some(from), Some(to)) = (e.endpoint(&c.from.agent), e.endpoint(&c.to.agent)) else {
            continue;
        };
        if from.0 == to.0 && opts.collapse_below_depth.is_some() {
            continue;
        }
        let mut lines = vec![format!("{} -> {}", c.from.interface, c.to.interface)];
        if opts.show_params && !c.params.is_empty() {
            let params: Vec<String> = c
                .params
                .entries()
                .map(|(k, v)| format!("{}={}%", &k[..3], crate::dsl::percent(v)))
                .collect();
            lines.push(params.join(" "));
        }
        lines.extend(c.carries.iter().map(ToString::to_string));
        let mut attrs = vec![
            format!("label={}", q(&lines.join("\n"))),
            "tailport=e".to_owned(),
            "headport=w".to_owned(),
        ];
        if c.style == ConnectionStyle::Discontinuous {
            attrs.push("style=dashed".into());
        }
        if let Some(cl) = &from.1 {
            attrs.push(format!("ltail={}", q(cl)));
        }
        if let Some(cl) = &to.1 {
            attrs.push(format!("lhead={}", q(cl)));
        }
        let _ = writeln!(e.out, "  {} -> {} [{}];", q(&from.0), q(&to.0), attrs.join(", "));
    }
    e.out.push_str("}\n");
    Ok(e.out)
}

/// A standalone graph listing every badge code and border/edge style.
pub fn legend(opts: &RenderOptions) -> String {
    let mut entries: Vec<(String, String)> = Vec::new();
    let style = opts.badge_style;
    let entry = |code: String, word: &str, meaning: &str| match style {
        BadgeStyle::ShortCodes => (format!("[{code}]"), meaning.to_owned()),
        BadgeStyle::Words => (format!("[{word}]"), meaning.to_owned()),
    };
    for &c in SocialConcept::ALL {
        entries.push(entry(format!("SOC:{}", social_code(c)), social_word(c), &format!("social concept: {}", social_word(c))));
    }
    for &c in EthicalConcept::ALL {
        entries.push(entry(format!("ETH:{}", ethical_code(c)), ethical_word(c), &format!("ethical concept: {}", ethical_word(c))));
    }
    for &t in AutonomyType::ALL {
        entries.push(entry(format!("TYP:{}", type_code(t)), type_word(t), &format!("autonomy type: {}", type_word(t))));
    }
    for &a in Archetype::ALL {
        entries.push(entry(format!("ARC:{}", archetype_code(a)), archetype_word(a), &format!("archetype: {}", archetype_word(a))));
    }
    entries.push(entry("H".into(), "human", "human agent"));
    entries.push(entry("FN:<type>".into(), "function: <type>", "functional type"));

    let mut out = String::from("digraph legend {\n  node [shape=plaintext, fontname=\"Helvetica\"];\n");
    for (i, (badge, meaning)) in entries.iter().enumerate() {
        let _ = writeln!(out, "  {} [label={}];", q(&format!("badge{i}")), q(&format!("{badge}  {meaning}")));
    }
    let shapes = [
        ("solid", "agent"),
        ("dashed", "calling agent (no sub-agents)"),
        ("bold", "global agent or reference to one"),
    ];
    for (style, meaning) in shapes {
        let _ = writeln!(out, "  {} [shape=box, style={}, label={}];", q(&format!("border_{style}")), q(style), q(meaning));
    }
    out.push_str("  \"multi\" [shape=box, label=\"name [m..M]  multi-instance agent\"];\n");
    out.push_str("  \"a\" [shape=point]; \"b\" [shape=point]; \"c\" [shape=point]; \"d\" [shape=point];\n");
    out.push_str("  \"a\" -> \"b\" [label=\"continuous connection\"];\n");
    out.push_str("  \"c\" -> \"d\" [style=dashed, label=\"discontinuous connection\"];\n");
    out.push_str("  \"params\" [label=\"att / rel / con / sec = attention, reliability, conformity, security\"];\n");
    out.push_str("}\n");
    out
}
