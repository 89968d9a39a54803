//! In-memory AMN meta model: agents with interfaces, nature and behavior,
//! arranged in a containment forest and linked by directed channels.
//!
//! The types here are deliberately permissive: a parsed model may violate
//! meta-model invariants (duplicate names, several social self-concepts,
//! out-of-range channel parameters) so that the validator can report them
//! with precise locations. The construction operations in [`ops`] are the
//! checked way to build models programmatically.

mod expand;
mod expr;
mod ops;
mod span;

use std::fmt;

pub use expand::{ExpandError, ExpandedAgent};
pub use expr::{BinOp, EvalError, Expr, UnOp};
pub use ops::{compatible, global_cycle, referenced_globals, ResolveError, StructureError};
pub use span::{AgentLoc, ElementId, NatureField, Position, Scope, SourceSpan, SpanIndex};

/// Defines a fieldless enum whose variants map one-to-one onto DSL keywords.
macro_rules! keyword_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $kw:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn keyword(self) -> &'static str {
                match self {
                    $($name::$variant => $kw),+
                }
            }

            pub fn from_keyword(s: &str) -> Option<Self> {
                match s {
                    $($kw => Some($name::$variant),)+
                    _ => None,
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.keyword())
            }
        }
    };
}

keyword_enum!(
    /// Social self-concept: how an agent resolves conflicts inside its group.
    SocialConcept {
        SelfInterested => "self_interested",
        Helpful => "helpful",
        Cooperative => "cooperative",
    }
);

keyword_enum!(
    /// Ethical self-concept.
    EthicalConcept {
        NonEthical => "non_ethical",
        Implicit => "implicit",
        Explicit => "explicit",
        Full => "full",
    }
);

keyword_enum!(
    /// The nine autonomy types.
    AutonomyType {
        Interpretation => "interpretation",
        KnowHow => "know_how",
        Plan => "plan",
        Goal => "goal",
        Reasoning => "reasoning",
        Monitoring => "monitoring",
        Skill => "skill",
        Resource => "resource",
        Condition => "condition",
    }
);

keyword_enum!(
    /// Information-processing archetype of an agent.
    Archetype {
        Reflex => "reflex",
        InternalState => "internal_state",
        GoalBased => "goal_based",
        UtilityBased => "utility_based",
    }
);

keyword_enum!(
    /// Quantitative indicator: the scope of an event object's content.
    Quant {
        Single => "single",
        Selection => "selection",
        All => "all",
    }
);

keyword_enum!(
    ReactionKind {
        Acceptance => "acceptance",
        Refusal => "refusal",
        Veto => "veto",
    }
);

keyword_enum!(
    /// When a machine notifies the human about what it did.
    NotificationMode {
        OwnDiscretion => "discretion",
        OnRequest => "on_request",
        Always => "always",
    }
);

keyword_enum!(
    PrimitiveType {
        Number => "number",
        Text => "string",
        Bool => "bool",
    }
);

/// Functional-type tag that marks an agent as a human.
pub const HUMAN_TAG: &str = "human";

/// Suggested vocabulary for `functional` tags. Free strings are accepted.
pub const FUNCTIONAL_TYPES: &[&str] = &[
    HUMAN_TAG,
    "filter",
    "transformer",
    "enricher",
    "aggregator",
    "splitter",
    "pattern_detector",
    "supplier",
];

/// Dotted path from a root agent down to a nested agent.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AgentPath(Vec<String>);

impl AgentPath {
    pub fn root() -> Self {
        AgentPath(Vec::new())
    }

    /// Splits on `.`; the empty string is the root (empty) path.
    pub fn parse(s: &str) -> Self {
        if s.is_empty() {
            return AgentPath::root();
        }
        AgentPath(s.split('.').map(str::to_owned).collect())
    }

    pub fn from_segments<I, S>(segments: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        AgentPath(segments.into_iter().map(Into::into).collect())
    }

    pub fn segments(&self) -> &[String] {
        &self.0
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn child(&self, name: &str) -> Self {
        let mut segments = self.0.clone();
        segments.push(name.to_owned());
        AgentPath(segments)
    }

    pub fn join(&self, other: &AgentPath) -> Self {
        let mut segments = self.0.clone();
        segments.extend(other.0.iter().cloned());
        AgentPath(segments)
    }

    pub fn parent(&self) -> Option<AgentPath> {
        if self.0.is_empty() {
            None
        } else {
            Some(AgentPath(self.0[..self.0.len() - 1].to_vec()))
        }
    }

    pub fn last(&self) -> Option<&str> {
        self.0.last().map(String::as_str)
    }

    /// True when `self` equals `prefix` or lies below it.
    pub fn starts_with(&self, prefix: &AgentPath) -> bool {
        self.0.starts_with(&prefix.0)
    }
}

impl fmt::Display for AgentPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.join("."))
    }
}

/// Sensory channel of an interface. Generic interfaces carry a parameter
/// such as `"email"` or `"edi"`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Modality {
    Visual,
    Auditory,
    Olfactory,
    Gustatory,
    Tactile,
    Generic(String),
}

impl Modality {
    pub const BASE_KEYWORDS: &'static [&'static str] =
        &["visual", "auditory", "olfactory", "gustatory", "tactile"];

    pub fn from_base_keyword(s: &str) -> Option<Self> {
        Some(match s {
            "visual" => Modality::Visual,
            "auditory" => Modality::Auditory,
            "olfactory" => Modality::Olfactory,
            "gustatory" => Modality::Gustatory,
            "tactile" => Modality::Tactile,
            _ => return None,
        })
    }

    pub fn base_keyword(&self) -> &'static str {
        match self {
            Modality::Visual => "visual",
            Modality::Auditory => "auditory",
            Modality::Olfactory => "olfactory",
            Modality::Gustatory => "gustatory",
            Modality::Tactile => "tactile",
            Modality::Generic(_) => "generic",
        }
    }

    pub fn generic(param: impl Into<String>) -> Self {
        Modality::Generic(param.into())
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Modality::Generic(p) => write!(f, "generic({})", crate::dsl::quote(p)),
            other => f.write_str(other.base_keyword()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Direction {
    Sensor,
    Actuator,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Sensor => "sensor",
            Direction::Actuator => "actuator",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Interface {
    pub name: String,
    pub modality: Modality,
}

impl Interface {
    pub fn new(name: impl Into<String>, modality: Modality) -> Self {
        Interface {
            name: name.into(),
            modality,
        }
    }
}

/// A sibling's sensor that this agent uses as well. Ownership stays with
/// the sibling so the containment relation remains a forest.
#[derive(Clone, Debug, PartialEq)]
pub struct SharedSensor {
    pub agent: String,
    pub sensor: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AgentKind {
    Standard,
    /// Participates in the network but may not contain sub-agents.
    Calling,
    /// Stands for the named global definition.
    GlobalRef(String),
}

/// Instance cardinality. `max: None` is unbounded (`*`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Instancing {
    Single,
    Multi { min: u32, max: Option<u32> },
}

impl Instancing {
    pub fn min_instances(&self) -> u32 {
        match self {
            Instancing::Single => 1,
            Instancing::Multi { min, .. } => *min,
        }
    }

    pub fn max_instances(&self) -> Option<u32> {
        match self {
            Instancing::Single => Some(1),
            Instancing::Multi { max, .. } => *max,
        }
    }

    pub fn is_multi(&self) -> bool {
        matches!(self, Instancing::Multi { .. })
    }
}

impl fmt::Display for Instancing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Instancing::Single => Ok(()),
            Instancing::Multi { min, max: Some(max) } => write!(f, "[{min}..{max}]"),
            Instancing::Multi { min, max: None } => write!(f, "[{min}..*]"),
        }
    }
}

/// Nature clauses as written. Each field holds every declared value so the
/// validator can report duplicates; well-formed agents have at most one.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Nature {
    pub social: Vec<SocialConcept>,
    pub ethical: Vec<EthicalConcept>,
    pub autonomy_type: Vec<AutonomyType>,
    pub functional_type: Vec<String>,
    pub archetype: Vec<Archetype>,
}

impl Nature {
    pub fn social(&self) -> Option<SocialConcept> {
        self.social.first().copied()
    }

    pub fn ethical(&self) -> Option<EthicalConcept> {
        self.ethical.first().copied()
    }

    pub fn autonomy_type(&self) -> Option<AutonomyType> {
        self.autonomy_type.first().copied()
    }

    pub fn functional_type(&self) -> Option<&str> {
        self.functional_type.first().map(String::as_str)
    }

    pub fn archetype(&self) -> Option<Archetype> {
        self.archetype.first().copied()
    }

    pub fn is_human(&self) -> bool {
        self.functional_type.iter().any(|t| t == HUMAN_TAG)
    }

    pub fn is_empty(&self) -> bool {
        self.social.is_empty()
            && self.ethical.is_empty()
            && self.autonomy_type.is_empty()
            && self.functional_type.is_empty()
            && self.archetype.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Literal {
    Number(f64),
    Text(String),
    Bool(bool),
}

impl Literal {
    pub fn as_number(&self) -> Option<f64> {
        match self {
            Literal::Number(n) => Some(*n),
            _ => None,
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Number(n) => write!(f, "{n}"),
            Literal::Text(s) => f.write_str(&crate::dsl::quote(s)),
            Literal::Bool(b) => write!(f, "{b}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Goal {
    pub name: String,
    /// Lower is more important.
    pub priority: i64,
    pub target: Expr,
}

#[derive(Clone, Debug, PartialEq)]
pub struct UtilityTerm {
    pub metric: String,
    pub weight: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct UtilityFunction {
    pub terms: Vec<UtilityTerm>,
}

impl UtilityFunction {
    /// Weighted sum; metrics the lookup cannot supply count as zero.
    pub fn evaluate(&self, lookup: impl Fn(&str) -> Option<f64>) -> f64 {
        self.terms
            .iter()
            .map(|t| t.weight * lookup(&t.metric).unwrap_or(0.0))
            .sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateDecl {
    pub name: String,
    pub value: Literal,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Behavior {
    pub goals: Vec<Goal>,
    pub utility: Option<UtilityFunction>,
    pub rules: Vec<Rule>,
    pub states: Vec<StateDecl>,
}

impl Behavior {
    pub fn state(&self, name: &str) -> Option<&Literal> {
        self.states.iter().find(|s| s.name == name).map(|s| &s.value)
    }

    pub fn is_empty(&self) -> bool {
        self.goals.is_empty()
            && self.utility.is_none()
            && self.rules.is_empty()
            && self.states.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum InstructionKind {
    Instantiate,
    Suspend,
    Abort,
    Custom(String),
}

impl InstructionKind {
    pub fn from_keyword(s: &str) -> Self {
        match s {
            "instantiate" => InstructionKind::Instantiate,
            "suspend" => InstructionKind::Suspend,
            "abort" => InstructionKind::Abort,
            other => InstructionKind::Custom(other.to_owned()),
        }
    }

    pub fn keyword(&self) -> &str {
        match self {
            InstructionKind::Instantiate => "instantiate",
            InstructionKind::Suspend => "suspend",
            InstructionKind::Abort => "abort",
            InstructionKind::Custom(s) => s,
        }
    }

    /// The instruction a human sends to ask for a notification.
    pub fn request() -> Self {
        InstructionKind::Custom("request".to_owned())
    }
}

/// What an event object is. Kinds that take an argument hold `None` when
/// the argument was omitted, which the validator reports.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Specialization {
    Generic(String),
    Reaction(Option<ReactionKind>),
    Task,
    ActionCandidates,
    Instruction(Option<InstructionKind>),
    Notification(Option<NotificationMode>),
    Metric,
}

impl fmt::Display for Specialization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Specialization::Generic(tag) => write!(f, "generic({})", crate::dsl::quote(tag)),
            Specialization::Reaction(Some(k)) => write!(f, "reaction({k})"),
            Specialization::Reaction(None) => f.write_str("reaction"),
            Specialization::Task => f.write_str("task"),
            Specialization::ActionCandidates => f.write_str("candidates"),
            Specialization::Instruction(Some(k)) => write!(f, "instruction({})", k.keyword()),
            Specialization::Instruction(None) => f.write_str("instruction"),
            Specialization::Notification(Some(m)) => write!(f, "notification({m})"),
            Specialization::Notification(None) => f.write_str("notification"),
            Specialization::Metric => f.write_str("metric"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EventObjectSpec {
    pub specialization: Specialization,
    pub quant: Option<Quant>,
    /// Explicit media annotation; `None` inherits the emitting actuator's modality.
    pub media: Option<Modality>,
    pub payload_schema: Vec<(String, PrimitiveType)>,
}

impl EventObjectSpec {
    pub fn new(specialization: Specialization, quant: Quant) -> Self {
        EventObjectSpec {
            specialization,
            quant: Some(quant),
            media: None,
            payload_schema: Vec::new(),
        }
    }
}

impl fmt::Display for EventObjectSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.specialization)?;
        if let Some(q) = self.quant {
            write!(f, "/{q}")?;
        }
        if let Some(m) = &self.media {
            write!(f, " @{m}")?;
        }
        if !self.payload_schema.is_empty() {
            f.write_str(" {")?;
            for (i, (name, ty)) in self.payload_schema.iter().enumerate() {
                if i > 0 {
                    f.write_str(",")?;
                }
                write!(f, " {name}: {ty}")?;
            }
            f.write_str(" }")?;
        }
        Ok(())
    }
}

/// Trigger specialization of a rule. Omitted arguments match any value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SpecPattern {
    /// Any event object (not the start stimulus).
    Any,
    /// The stimulus every agent receives once when a simulation begins.
    Start,
    Generic(Option<String>),
    Reaction(Option<ReactionKind>),
    Task,
    ActionCandidates,
    Instruction(Option<InstructionKind>),
    Notification(Option<NotificationMode>),
    Metric,
}

impl SpecPattern {
    pub fn matches(&self, spec: &Specialization) -> bool {
        fn arg<T: PartialEq>(want: &Option<T>, got: &Option<T>) -> bool {
            want.is_none() || want == got
        }
        match (self, spec) {
            (SpecPattern::Any, _) => true,
            (SpecPattern::Generic(want), Specialization::Generic(tag)) => {
                want.as_ref().is_none_or(|w| w == tag)
            }
            (SpecPattern::Reaction(want), Specialization::Reaction(got)) => arg(want, got),
            (SpecPattern::Task, Specialization::Task) => true,
            (SpecPattern::ActionCandidates, Specialization::ActionCandidates) => true,
            (SpecPattern::Instruction(want), Specialization::Instruction(got)) => arg(want, got),
            (SpecPattern::Notification(want), Specialization::Notification(got)) => {
                arg(want, got)
            }
            (SpecPattern::Metric, Specialization::Metric) => true,
            _ => false,
        }
    }
}

impl fmt::Display for SpecPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpecPattern::Any => f.write_str("any"),
            SpecPattern::Start => f.write_str("start"),
            SpecPattern::Generic(Some(tag)) => write!(f, "generic({})", crate::dsl::quote(tag)),
            SpecPattern::Generic(None) => f.write_str("generic"),
            SpecPattern::Reaction(Some(k)) => write!(f, "reaction({k})"),
            SpecPattern::Reaction(None) => f.write_str("reaction"),
            SpecPattern::Task => f.write_str("task"),
            SpecPattern::ActionCandidates => f.write_str("candidates"),
            SpecPattern::Instruction(Some(k)) => write!(f, "instruction({})", k.keyword()),
            SpecPattern::Instruction(None) => f.write_str("instruction"),
            SpecPattern::Notification(Some(m)) => write!(f, "notification({m})"),
            SpecPattern::Notification(None) => f.write_str("notification"),
            SpecPattern::Metric => f.write_str("metric"),
        }
    }
}

/// Matches incoming event objects by specialization, sender and arrival sensor.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EventPattern {
    pub spec: SpecPattern,
    /// Sender agent; matches the agent itself and anything nested in it.
    pub from: Option<AgentPath>,
    /// Sensor the object must arrive on.
    pub at: Option<String>,
}

impl EventPattern {
    pub fn on(spec: SpecPattern) -> Self {
        EventPattern {
            spec,
            from: None,
            at: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Rule {
    pub name: String,
    pub trigger: EventPattern,
    pub guard: Option<Expr>,
    pub actions: Vec<Action>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SelectStrategy {
    UtilityArgmax,
    First,
    /// Pick the candidate with this id.
    Named(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ItemTemplate {
    pub id: String,
    pub fields: Vec<(String, Expr)>,
}

/// Payload of an emitted object.
#[derive(Clone, Debug, PartialEq)]
pub enum PayloadTemplate {
    /// The candidate chosen by the last `select` of this firing.
    Selected,
    /// The payload of the object that triggered the rule.
    Trigger,
    Items(Vec<ItemTemplate>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum Action {
    Emit {
        actuator: String,
        object: EventObjectSpec,
        payload: Option<PayloadTemplate>,
    },
    SetState {
        name: String,
        value: Expr,
    },
    Select(SelectStrategy),
    VetoWindow {
        duration: u32,
        on_expiry: Vec<Action>,
    },
    Commit,
    AbortPending,
    /// With the given probability, run `actions` instead of the rest of the firing.
    Delegate {
        probability: f64,
        actions: Vec<Action>,
    },
}

impl Action {
    /// Visits this action and every nested one in order.
    pub fn visit<'a>(&'a self, f: &mut dyn FnMut(&'a Action)) {
        f(self);
        match self {
            Action::VetoWindow { on_expiry: nested, .. } | Action::Delegate { actions: nested, .. } => {
                for a in nested {
                    a.visit(f);
                }
            }
            _ => {}
        }
    }
}

impl Rule {
    pub fn visit_actions<'a>(&'a self, f: &mut dyn FnMut(&'a Action)) {
        for a in &self.actions {
            a.visit(f);
        }
    }

    pub fn any_action(&self, pred: impl Fn(&Action) -> bool) -> bool {
        let mut found = false;
        self.visit_actions(&mut |a| found |= pred(a));
        found
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ConnectionStyle {
    Continuous,
    Discontinuous,
}

/// Optional channel parameters, stored as fractions in `[0, 1]`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ChannelParams {
    pub attention: Option<f64>,
    pub reliability: Option<f64>,
    pub conformity: Option<f64>,
    pub security: Option<f64>,
}

impl ChannelParams {
    pub fn is_empty(&self) -> bool {
        self.entries().next().is_none()
    }

    /// Present parameters in canonical order, with their keywords.
    pub fn entries(&self) -> impl Iterator<Item = (&'static str, f64)> {
        [
            ("attention", self.attention),
            ("reliability", self.reliability),
            ("conformity", self.conformity),
            ("security", self.security),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.map(|v| (k, v)))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Endpoint {
    pub agent: AgentPath,
    pub interface: String,
}

impl Endpoint {
    pub fn new(agent: &str, interface: &str) -> Self {
        Endpoint {
            agent: AgentPath::parse(agent),
            interface: interface.to_owned(),
        }
    }
}

impl fmt::Display for Endpoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.agent, self.interface)
    }
}

/// Directed actuator-to-sensor channel.
#[derive(Clone, Debug, PartialEq)]
pub struct Connection {
    pub from: Endpoint,
    pub to: Endpoint,
    pub style: ConnectionStyle,
    pub params: ChannelParams,
    pub carries: Vec<EventObjectSpec>,
}

impl Connection {
    pub fn sort_key(&self) -> (&AgentPath, &str, &AgentPath, &str) {
        (
            &self.from.agent,
            &self.from.interface,
            &self.to.agent,
            &self.to.interface,
        )
    }

    pub fn carries_specialization(&self, pred: impl Fn(&Specialization) -> bool) -> bool {
        self.carries.iter().any(|o| pred(&o.specialization))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AgentDef {
    pub name: String,
    pub kind: AgentKind,
    pub instancing: Instancing,
    pub sensors: Vec<Interface>,
    pub actuators: Vec<Interface>,
    pub shares: Vec<SharedSensor>,
    pub nature: Nature,
    pub behavior: Behavior,
    pub children: Vec<AgentDef>,
}

impl AgentDef {
    pub fn new(name: impl Into<String>) -> Self {
        AgentDef {
            name: name.into(),
            kind: AgentKind::Standard,
            instancing: Instancing::Single,
            sensors: Vec::new(),
            actuators: Vec::new(),
            shares: Vec::new(),
            nature: Nature::default(),
            behavior: Behavior::default(),
            children: Vec::new(),
        }
    }

    pub fn calling(name: impl Into<String>) -> Self {
        AgentDef {
            kind: AgentKind::Calling,
            ..AgentDef::new(name)
        }
    }

    pub fn global_ref(name: impl Into<String>, global: impl Into<String>) -> Self {
        AgentDef {
            kind: AgentKind::GlobalRef(global.into()),
            ..AgentDef::new(name)
        }
    }

    pub fn with_sensor(mut self, name: &str, modality: Modality) -> Self {
        self.sensors.push(Interface::new(name, modality));
        self
    }

    pub fn with_actuator(mut self, name: &str, modality: Modality) -> Self {
        self.actuators.push(Interface::new(name, modality));
        self
    }

    pub fn with_child(mut self, child: AgentDef) -> Self {
        self.children.push(child);
        self
    }

    pub fn sensor(&self, name: &str) -> Option<&Interface> {
        self.sensors.iter().find(|i| i.name == name)
    }

    pub fn actuator(&self, name: &str) -> Option<&Interface> {
        self.actuators.iter().find(|i| i.name == name)
    }

    pub fn interface(&self, direction: Direction, name: &str) -> Option<&Interface> {
        match direction {
            Direction::Sensor => self.sensor(name),
            Direction::Actuator => self.actuator(name),
        }
    }

    pub fn child(&self, name: &str) -> Option<&AgentDef> {
        self.children.iter().find(|c| c.name == name)
    }

    pub fn is_human(&self) -> bool {
        self.nature.is_human()
    }

    pub fn global_target(&self) -> Option<&str> {
        match &self.kind {
            AgentKind::GlobalRef(g) => Some(g),
            _ => None,
        }
    }
}

/// Root document.
///
/// Equality is structural: source spans are ignored and connections are
/// compared in canonical order, since their order carries no meaning.
#[derive(Clone, Debug, Default)]
pub struct Model {
    pub agents: Vec<AgentDef>,
    pub globals: Vec<AgentDef>,
    pub connections: Vec<Connection>,
    pub spans: SpanIndex,
}

impl PartialEq for Model {
    fn eq(&self, other: &Self) -> bool {
        self.agents == other.agents
            && self.globals == other.globals
            && self.sorted_connections() == other.sorted_connections()
    }
}

impl Model {
    pub fn new() -> Self {
        Model::default()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty() && self.globals.is_empty() && self.connections.is_empty()
    }

    /// Connections in canonical order (stable on ties).
    pub fn sorted_connections(&self) -> Vec<&Connection> {
        let mut conns: Vec<&Connection> = self.connections.iter().collect();
        conns.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
        conns
    }

    /// Indices of `connections` in canonical order.
    pub fn canonical_connection_order(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.connections.len()).collect();
        idx.sort_by(|&a, &b| {
            self.connections[a]
                .sort_key()
                .cmp(&self.connections[b].sort_key())
        });
        idx
    }

    pub fn span(&self, id: &ElementId) -> Option<&SourceSpan> {
        self.spans.get(id)
    }

    /// Every agent definition written in the model (roots and globals,
    /// recursively, without following global references), pre-order.
    pub fn walk(&self) -> Vec<WalkedAgent<'_>> {
        fn go<'a>(
            agents: &'a [AgentDef],
            scope: Scope,
            prefix: &AgentPath,
            indices: &mut Vec<usize>,
            parent: Option<&'a AgentDef>,
            out: &mut Vec<WalkedAgent<'a>>,
        ) {
            for (i, a) in agents.iter().enumerate() {
                indices.push(i);
                let path = prefix.child(&a.name);
                out.push(WalkedAgent {
                    def: a,
                    loc: AgentLoc {
                        scope,
                        indices: indices.clone(),
                    },
                    path: path.clone(),
                    parent,
                });
                go(&a.children, scope, &path, indices, Some(a), out);
                indices.pop();
            }
        }
        let mut out = Vec::new();
        go(
            &self.agents,
            Scope::Root,
            &AgentPath::root(),
            &mut Vec::new(),
            None,
            &mut out,
        );
        go(
            &self.globals,
            Scope::Global,
            &AgentPath::root(),
            &mut Vec::new(),
            None,
            &mut out,
        );
        out
    }

    pub fn agent_at(&self, loc: &AgentLoc) -> Option<&AgentDef> {
        let list = match loc.scope {
            Scope::Root => &self.agents,
            Scope::Global => &self.globals,
        };
        let (first, rest) = loc.indices.split_first()?;
        let mut agent = list.get(*first)?;
        for &i in rest {
            agent = agent.children.get(i)?;
        }
        Some(agent)
    }
}

/// One agent definition found by [`Model::walk`].
#[derive(Clone, Debug)]
pub struct WalkedAgent<'a> {
    pub def: &'a AgentDef,
    pub loc: AgentLoc,
    /// Path within its scope (root forest or global definitions).
    pub path: AgentPath,
    pub parent: Option<&'a AgentDef>,
}
