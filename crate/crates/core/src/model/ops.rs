use std::collections::{BTreeMap, BTreeSet};

use super::{
    AgentDef, AgentKind, AgentLoc, AgentPath, ChannelParams, Connection, ConnectionStyle, Direction,
    Endpoint, EventObjectSpec, Modality, Model, Scope,
};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum StructureError {
    #[error("calling agent `{0}` cannot contain sub-agents")]
    ParentIsCalling(String),
    #[error("agent `{0}` references a global definition and has no body of its own")]
    ParentIsReference(String),
    #[error("name `{0}` is already used in this scope")]
    DuplicateName(String),
    #[error("adding this agent would make global `{0}` contain itself")]
    CycleWouldForm(String),
    #[error("global definition `{0}` does not exist")]
    UnresolvedGlobal(String),
    #[error("no agent at `{0}`")]
    UnresolvedParent(String),
    #[error("endpoint `{0}` does not resolve to an interface")]
    UnresolvedEndpoint(String),
    #[error("`{0}` is a {1}, expected a {2}")]
    WrongDirection(String, Direction, Direction),
    #[error("modality {0} is not compatible with {1}")]
    IncompatibleModality(Modality, Modality),
    #[error("channel parameter {0} = {1} is outside [0, 1]")]
    ParamOutOfRange(&'static str, f64),
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ResolveError {
    #[error("no agent at `{0}`")]
    NotFound(String),
    #[error("global `{0}` is defined more than once")]
    AmbiguousGlobal(String),
}

/// True iff both modalities have the same base and, for generic ones, the
/// same parameter (exact, case-sensitive).
pub fn compatible(a: &Modality, b: &Modality) -> bool {
    a == b
}

impl Model {
    /// Finds the definition behind `path`, walking down from the root agents
    /// and following global references. Returns the location of the
    /// effective definition (the global itself for references).
    pub fn locate(&self, path: &AgentPath) -> Result<AgentLoc, ResolveError> {
        let not_found = || ResolveError::NotFound(path.to_string());
        let (first, rest) = path.segments().split_first().ok_or_else(not_found)?;
        let i = self
            .agents
            .iter()
            .position(|a| &a.name == first)
            .ok_or_else(not_found)?;
        let mut loc = self.follow(AgentLoc::root(i), 0)?;
        for seg in rest {
            let def = self.agent_at(&loc).ok_or_else(not_found)?;
            let ci = def
                .children
                .iter()
                .position(|c| &c.name == seg)
                .ok_or_else(not_found)?;
            loc = self.follow(loc.child(ci), 0)?;
        }
        Ok(loc)
    }

    fn follow(&self, loc: AgentLoc, hops: usize) -> Result<AgentLoc, ResolveError> {
        let def = self
            .agent_at(&loc)
            .ok_or_else(|| ResolveError::NotFound(String::new()))?;
        let AgentKind::GlobalRef(g) = &def.kind else {
            return Ok(loc);
        };
        let mut hits = self.globals.iter().enumerate().filter(|(_, d)| &d.name == g);
        let Some((gi, _)) = hits.next() else {
            return Err(ResolveError::NotFound(g.clone()));
        };
        if hits.next().is_some() {
            return Err(ResolveError::AmbiguousGlobal(g.clone()));
        }
        if hops > self.globals.len() {
            return Err(ResolveError::NotFound(g.clone()));
        }
        self.follow(AgentLoc::global(gi), hops + 1)
    }

    /// The agent definition at `path`, with global references followed.
    pub fn resolve(&self, path: &AgentPath) -> Result<&AgentDef, ResolveError> {
        let loc = self.locate(path)?;
        self.agent_at(&loc)
            .ok_or_else(|| ResolveError::NotFound(path.to_string()))
    }

    fn agent_at_mut(&mut self, loc: &AgentLoc) -> Option<&mut AgentDef> {
        let list = match loc.scope {
            Scope::Root => &mut self.agents,
            Scope::Global => &mut self.globals,
        };
        let (first, rest) = loc.indices.split_first()?;
        let mut agent = list.get_mut(*first)?;
        for &i in rest {
            agent = agent.children.get_mut(i)?;
        }
        Some(agent)
    }

    /// Locates a written (not followed) parent for structural edits. A path
    /// whose first segment names no root but a global edits inside that global.
    fn edit_target(&self, path: &AgentPath) -> Result<AgentLoc, StructureError> {
        let missing = || StructureError::UnresolvedParent(path.to_string());
        let (first, rest) = path.segments().split_first().ok_or_else(missing)?;
        let mut loc = if let Some(i) = self.agents.iter().position(|a| &a.name == first) {
            AgentLoc::root(i)
        } else if let Some(i) = self.globals.iter().position(|a| &a.name == first) {
            AgentLoc::global(i)
        } else {
            return Err(missing());
        };
        for seg in rest {
            let def = self.agent_at(&loc).ok_or_else(missing)?;
            if let AgentKind::GlobalRef(_) = def.kind {
                return Err(StructureError::ParentIsReference(def.name.clone()));
            }
            let ci = def
                .children
                .iter()
                .position(|c| &c.name == seg)
                .ok_or_else(missing)?;
            loc = loc.child(ci);
        }
        Ok(loc)
    }

    /// Adds `child` under the agent at `parent` (the empty path adds a root).
    pub fn compose(&self, parent: &AgentPath, child: AgentDef) -> Result<Model, StructureError> {
        check_subtree(&child)?;
        for g in referenced_globals(&child) {
            if !self.globals.iter().any(|d| d.name == g) {
                return Err(StructureError::UnresolvedGlobal(g));
            }
        }
        let mut out = self.clone();
        if parent.is_root() {
            if out.agents.iter().any(|a| a.name == child.name) {
                return Err(StructureError::DuplicateName(child.name));
            }
            out.agents.push(child);
            return Ok(out);
        }
        let loc = self.edit_target(parent)?;
        let target = out.agent_at_mut(&loc).expect("located above");
        match &target.kind {
            AgentKind::Calling => return Err(StructureError::ParentIsCalling(target.name.clone())),
            AgentKind::GlobalRef(_) => {
                return Err(StructureError::ParentIsReference(target.name.clone()))
            }
            AgentKind::Standard => {}
        }
        if target.children.iter().any(|c| c.name == child.name) {
            return Err(StructureError::DuplicateName(child.name));
        }
        target.children.push(child);
        if let Some(g) = global_cycle(&out).into_iter().next() {
            return Err(StructureError::CycleWouldForm(g));
        }
        Ok(out)
    }

    /// Inverse of [`Model::compose`]: removes the child `name` of `parent`.
    pub fn decompose(
        &self,
        parent: &AgentPath,
        name: &str,
    ) -> Result<(Model, AgentDef), StructureError> {
        let mut out = self.clone();
        let list = if parent.is_root() {
            &mut out.agents
        } else {
            let loc = self.edit_target(parent)?;
            &mut out.agent_at_mut(&loc).expect("located above").children
        };
        let i = list
            .iter()
            .position(|c| c.name == name)
            .ok_or_else(|| StructureError::UnresolvedParent(parent.child(name).to_string()))?;
        let removed = list.remove(i);
        Ok((out, removed))
    }

    /// Adds a global definition.
    pub fn add_global(&self, def: AgentDef) -> Result<Model, StructureError> {
        check_subtree(&def)?;
        if self.globals.iter().any(|g| g.name == def.name) {
            return Err(StructureError::DuplicateName(def.name));
        }
        let mut out = self.clone();
        out.globals.push(def);
        if let Some(g) = global_cycle(&out).into_iter().next() {
            return Err(StructureError::CycleWouldForm(g));
        }
        for g in out.globals.iter().flat_map(referenced_globals) {
            if !out.globals.iter().any(|d| d.name == g) {
                return Err(StructureError::UnresolvedGlobal(g));
            }
        }
        Ok(out)
    }

    /// Adds a channel from an actuator to a sensor.
    pub fn connect(
        &self,
        from: Endpoint,
        to: Endpoint,
        style: ConnectionStyle,
        params: ChannelParams,
        carries: Vec<EventObjectSpec>,
    ) -> Result<Model, StructureError> {
        let src = self.endpoint_modality(&from, Direction::Actuator)?;
        let dst = self.endpoint_modality(&to, Direction::Sensor)?;
        if !compatible(&src, &dst) {
            return Err(StructureError::IncompatibleModality(src, dst));
        }
        for (name, v) in params.entries() {
            if !(0.0..=1.0).contains(&v) {
                return Err(StructureError::ParamOutOfRange(name, v));
            }
        }
        for obj in &carries {
            if let Some(m) = &obj.media {
                if !compatible(m, &src) {
                    return Err(StructureError::IncompatibleModality(m.clone(), src));
                }
            }
        }
        let mut out = self.clone();
        out.connections.push(Connection {
            from,
            to,
            style,
            params,
            carries,
        });
        Ok(out)
    }

    fn endpoint_modality(
        &self,
        ep: &Endpoint,
        want: Direction,
    ) -> Result<Modality, StructureError> {
        let unresolved = || StructureError::UnresolvedEndpoint(ep.to_string());
        let def = self.resolve(&ep.agent).map_err(|_| unresolved())?;
        if let Some(i) = def.interface(want, &ep.interface) {
            return Ok(i.modality.clone());
        }
        let other = match want {
            Direction::Sensor => Direction::Actuator,
            Direction::Actuator => Direction::Sensor,
        };
        if def.interface(other, &ep.interface).is_some() {
            return Err(StructureError::WrongDirection(ep.to_string(), other, want));
        }
        Err(unresolved())
    }
}

/// Checks that a detached subtree is well-formed on its own.
fn check_subtree(def: &AgentDef) -> Result<(), StructureError> {
    if !def.children.is_empty() {
        match def.kind {
            AgentKind::Calling => return Err(StructureError::ParentIsCalling(def.name.clone())),
            AgentKind::GlobalRef(_) => {
                return Err(StructureError::ParentIsReference(def.name.clone()))
            }
            AgentKind::Standard => {}
        }
    }
    let mut seen = BTreeSet::new();
    for c in &def.children {
        if !seen.insert(&c.name) {
            return Err(StructureError::DuplicateName(c.name.clone()));
        }
        check_subtree(c)?;
    }
    Ok(())
}

/// Names of globals referenced anywhere in the subtree.
pub fn referenced_globals(def: &AgentDef) -> Vec<String> {
    let mut out = Vec::new();
    fn go(d: &AgentDef, out: &mut Vec<String>) {
        if let AgentKind::GlobalRef(g) = &d.kind {
            out.push(g.clone());
        }
        for c in &d.children {
            go(c, out);
        }
    }
    go(def, &mut out);
    out
}

/// Globals that take part in a reference cycle (a global whose expansion
/// would contain itself), sorted by name.
pub fn global_cycle(model: &Model) -> Vec<String> {
    let edges: BTreeMap<&str, Vec<String>> = model
        .globals
        .iter()
        .map(|g| (g.name.as_str(), referenced_globals(g)))
        .collect();
    let mut cyclic = BTreeSet::new();
    for &start in edges.keys() {
        // Depth-first reachability from `start` back to itself.
        let mut stack: Vec<&str> = edges[start].iter().map(String::as_str).collect();
        let mut seen = BTreeSet::new();
        while let Some(n) = stack.pop() {
            if n == start {
                cyclic.insert(start.to_owned());
                break;
            }
            if !seen.insert(n) {
                continue;
            }
            if let Some(next) = edges.get(n) {
                stack.extend(next.iter().map(String::as_str));
            }
        }
    }
    cyclic.into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{EventObjectSpec, Quant, Specialization};

    fn email() -> Modality {
        Modality::generic("email")
    }

    fn base() -> Model {
        let producer = AgentDef::new("Producer").with_actuator("mail", email());
        let family = AgentDef::new("Family").with_sensor("inbox", email());
        Model::new()
            .compose(&AgentPath::root(), producer)
            .unwrap()
            .compose(&AgentPath::root(), family)
            .unwrap()
    }

    #[test]
    fn compose_into_parent() {
        let m = base()
            .compose(&AgentPath::parse("Producer"), AgentDef::new("Analyzer"))
            .unwrap();
        assert_eq!(m.resolve(&AgentPath::parse("Producer")).unwrap().children.len(), 1);
    }

    #[test]
    fn compose_into_empty_model() {
        let m = Model::new()
            .compose(&AgentPath::root(), AgentDef::new("Solo"))
            .unwrap();
        assert_eq!(m.agents.len(), 1);
    }

    #[test]
    fn calling_parent_rejected() {
        let m = Model::new()
            .compose(&AgentPath::root(), AgentDef::calling("CallingAgentX"))
            .unwrap();
        let err = m
            .compose(&AgentPath::parse("CallingAgentX"), AgentDef::new("Child"))
            .unwrap_err();
        assert_eq!(err, StructureError::ParentIsCalling("CallingAgentX".into()));
    }

    #[test]
    fn duplicate_rejected() {
        let err = base()
            .compose(&AgentPath::root(), AgentDef::new("Family"))
            .unwrap_err();
        assert_eq!(err, StructureError::DuplicateName("Family".into()));
    }

    #[test]
    fn global_cycle_rejected() {
        let m = Model::new().add_global(AgentDef::new("G")).unwrap();
        let err = m
            .compose(&AgentPath::parse("G"), AgentDef::global_ref("Inner", "G"))
            .unwrap_err();
        assert_eq!(err, StructureError::CycleWouldForm("G".into()));
    }

    #[test]
    fn compose_then_decompose_restores() {
        let m = base();
        let child = AgentDef::new("Analyzer").with_sensor("s", Modality::Visual);
        let (back, removed) = m
            .compose(&AgentPath::parse("Producer"), child.clone())
            .unwrap()
            .decompose(&AgentPath::parse("Producer"), "Analyzer")
            .unwrap();
        assert_eq!(back, m);
        assert_eq!(removed, child);
    }

    #[test]
    fn connect_checks_modalities() {
        let m = base()
            .connect(
                Endpoint::new("Producer", "mail"),
                Endpoint::new("Family", "inbox"),
                ConnectionStyle::Continuous,
                ChannelParams::default(),
                vec![EventObjectSpec::new(Specialization::Task, Quant::Single)],
            )
            .unwrap();
        assert_eq!(m.connections.len(), 1);

        let m = Model::new()
            .compose(
                &AgentPath::root(),
                AgentDef::new("A")
                    .with_actuator("eye", Modality::Visual)
                    .with_sensor("ear", Modality::Auditory)
                    .with_sensor("see", Modality::Visual),
            )
            .unwrap();
        let ok = m.connect(
            Endpoint::new("A", "eye"),
            Endpoint::new("A", "see"),
            ConnectionStyle::Continuous,
            ChannelParams::default(),
            vec![],
        );
        assert!(ok.is_ok());
        let err = m
            .connect(
                Endpoint::new("A", "eye"),
                Endpoint::new("A", "ear"),
                ConnectionStyle::Continuous,
                ChannelParams::default(),
                vec![],
            )
            .unwrap_err();
        assert!(matches!(err, StructureError::IncompatibleModality(..)));
        let err = m
            .connect(
                Endpoint::new("A", "see"),
                Endpoint::new("A", "see"),
                ConnectionStyle::Continuous,
                ChannelParams::default(),
                vec![],
            )
            .unwrap_err();
        assert!(matches!(err, StructureError::WrongDirection(..)));
        let err = m
            .connect(
                Endpoint::new("A", "eye"),
                Endpoint::new("A", "see"),
                ConnectionStyle::Continuous,
                ChannelParams {
                    reliability: Some(1.3),
                    ..Default::default()
                },
                vec![],
            )
            .unwrap_err();
        assert_eq!(err, StructureError::ParamOutOfRange("reliability", 1.3));
    }

    #[test]
    fn compatibility() {
        assert!(compatible(&Modality::Tactile, &Modality::Tactile));
        assert!(!compatible(&Modality::generic("email"), &Modality::generic("edi")));
        assert!(compatible(&email(), &email()));
        assert!(!compatible(&Modality::generic("Email"), &email()));
    }

    #[test]
    fn resolve_paths() {
        assert_eq!(
            base().resolve(&AgentPath::root()),
            Err(ResolveError::NotFound(String::new()))
        );
        let g = AgentDef::new("G").with_sensor("s", Modality::Visual);
        let m = Model::new()
            .add_global(g.clone())
            .unwrap()
            .compose(&AgentPath::root(), AgentDef::global_ref("ref_to_G", "G"))
            .unwrap();
        assert_eq!(m.resolve(&AgentPath::parse("ref_to_G")).unwrap(), &g);
        assert_eq!(
            m.locate(&AgentPath::parse("ref_to_G")).unwrap(),
            AgentLoc::global(0)
        );
    }

    #[test]
    fn ambiguous_global() {
        let mut m = Model::new();
        m.globals.push(AgentDef::new("G"));
        m.globals.push(AgentDef::new("G"));
        m.agents.push(AgentDef::global_ref("r", "G"));
        assert_eq!(
            m.resolve(&AgentPath::parse("r")),
            Err(ResolveError::AmbiguousGlobal("G".into()))
        );
    }
}
