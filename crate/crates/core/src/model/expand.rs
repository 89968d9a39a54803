use super::{AgentDef, AgentKind, AgentLoc, AgentPath, Instancing, Model};

const MAX_DEPTH: usize = 64;

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ExpandError {
    #[error("global `{0}` contains itself")]
    Cycle(String),
    #[error("global `{0}` is not defined")]
    Unresolved(String),
    #[error("agent nesting deeper than {MAX_DEPTH} levels")]
    TooDeep,
}

/// One agent of the root forest with global references replaced by the
/// definitions they stand for.
#[derive(Clone, Debug)]
pub struct ExpandedAgent<'a> {
    /// Local name (the reference's name when `via_ref`).
    pub name: &'a str,
    pub path: AgentPath,
    /// Effective definition: the global for references.
    pub def: &'a AgentDef,
    pub loc: AgentLoc,
    pub instancing: Instancing,
    pub via_ref: bool,
    pub children: Vec<ExpandedAgent<'a>>,
}

impl<'a> ExpandedAgent<'a> {
    /// Pre-order traversal including `self`.
    pub fn preorder(&self) -> Vec<&ExpandedAgent<'a>> {
        let mut out = vec![self];
        for c in &self.children {
            out.extend(c.preorder());
        }
        out
    }
}

impl Model {
    /// Expands the root forest. A reference's own cardinality overrides the
    /// global's when it is multi-instance.
    pub fn expand(&self) -> Result<Vec<ExpandedAgent<'_>>, ExpandError> {
        self.agents
            .iter()
            .enumerate()
            .map(|(i, a)| self.expand_one(a, AgentLoc::root(i), &AgentPath::root(), &mut Vec::new()))
            .collect()
    }

    fn expand_one<'a>(
        &'a self,
        written: &'a AgentDef,
        loc: AgentLoc,
        prefix: &AgentPath,
        active: &mut Vec<&'a str>,
    ) -> Result<ExpandedAgent<'a>, ExpandError> {
        if prefix.len() >= MAX_DEPTH {
            return Err(ExpandError::TooDeep);
        }
        let path = prefix.child(&written.name);
        let (def, loc, via_ref, pushed) = match &written.kind {
            AgentKind::GlobalRef(g) => {
                if active.contains(&g.as_str()) {
                    return Err(ExpandError::Cycle(g.clone()));
                }
                let gi = self
                    .globals
                    .iter()
                    .position(|d| &d.name == g)
                    .ok_or_else(|| ExpandError::Unresolved(g.clone()))?;
                active.push(g);
                (&self.globals[gi], AgentLoc::global(gi), true, true)
            }
            _ => (written, loc, false, false),
        };
        let instancing = if via_ref && !written.instancing.is_multi() {
            def.instancing
        } else {
            written.instancing
        };
        let mut children = Vec::with_capacity(def.children.len());
        for (i, c) in def.children.iter().enumerate() {
            children.push(self.expand_one(c, loc.child(i), &path, active)?);
        }
        if pushed {
            active.pop();
        }
        Ok(ExpandedAgent {
            name: &written.name,
            path,
            def,
            loc,
            instancing,
            via_ref,
            children,
        })
    }
}
