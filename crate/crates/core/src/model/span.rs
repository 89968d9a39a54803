use std::collections::BTreeMap;
use std::fmt;

use super::Direction;

/// 1-based line and column.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Position {
    pub line: u32,
    pub col: u32,
}

impl Position {
    pub fn new(line: u32, col: u32) -> Self {
        Position { line, col }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SourceSpan {
    pub file: String,
    pub start: Position,
    pub end: Position,
}

impl SourceSpan {
    pub fn new(file: impl Into<String>, start: Position, end: Position) -> Self {
        SourceSpan {
            file: file.into(),
            start,
            end,
        }
    }

    /// Span for elements that were not read from a file.
    pub fn synthetic() -> Self {
        SourceSpan::new("", Position::new(1, 1), Position::new(1, 1))
    }

    pub fn to(&self, other: &SourceSpan) -> SourceSpan {
        SourceSpan::new(self.file.clone(), self.start, other.end)
    }
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.start.line, self.start.col)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scope {
    Root,
    Global,
}

/// Position of an agent definition in the written model: index into the
/// root list (or the globals list), then child indices downwards.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AgentLoc {
    pub scope: Scope,
    pub indices: Vec<usize>,
}

impl AgentLoc {
    pub fn root(i: usize) -> Self {
        AgentLoc {
            scope: Scope::Root,
            indices: vec![i],
        }
    }

    pub fn global(i: usize) -> Self {
        AgentLoc {
            scope: Scope::Global,
            indices: vec![i],
        }
    }

    pub fn child(&self, i: usize) -> Self {
        let mut indices = self.indices.clone();
        indices.push(i);
        AgentLoc {
            scope: self.scope,
            indices,
        }
    }

    pub fn parent(&self) -> Option<AgentLoc> {
        if self.indices.len() <= 1 {
            return None;
        }
        Some(AgentLoc {
            scope: self.scope,
            indices: self.indices[..self.indices.len() - 1].to_vec(),
        })
    }

    pub fn depth(&self) -> usize {
        self.indices.len()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NatureField {
    Social,
    Ethical,
    AutonomyType,
    Archetype,
    Functional,
}

/// Stable identity of a model element, used to key source spans.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ElementId {
    Agent(AgentLoc),
    /// The `[m..M]` cardinality of an agent.
    Cardinality(AgentLoc),
    Interface(AgentLoc, Direction, usize),
    Share(AgentLoc, usize),
    Nature(AgentLoc, NatureField, usize),
    Goal(AgentLoc, usize),
    Utility(AgentLoc),
    UtilityTerm(AgentLoc, usize),
    Rule(AgentLoc, usize),
    Guard(AgentLoc, usize),
    /// Action inside a rule; the path indexes nested action lists.
    Action(AgentLoc, usize, Vec<usize>),
    State(AgentLoc, usize),
    Connection(usize),
    ConnectionParam(usize, &'static str),
    Carried(usize, usize),
}

/// Source location of every parsed element.
pub type SpanIndex = BTreeMap<ElementId, SourceSpan>;
