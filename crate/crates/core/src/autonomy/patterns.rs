use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::model::*;

/// Interaction pattern between the humans and machines of a model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Pattern {
    /// One human, one machine.
    A,
    /// One human, several independent machines.
    B,
    /// One human, one group of cooperating machines.
    C,
    /// A group of humans, one machine.
    D,
    /// A group of humans, several independent machines.
    E,
    /// A group of humans, a group of machines.
    F,
    /// Several independent humans, one machine.
    G,
    /// Several independent humans, one group of machines.
    H,
    /// Any other arrangement.
    #[serde(rename = "composite")]
    Composite,
}

impl Pattern {
    pub fn as_str(self) -> &'static str {
        match self {
            Pattern::A => "A",
            Pattern::B => "B",
            Pattern::C => "C",
            Pattern::D => "D",
            Pattern::E => "E",
            Pattern::F => "F",
            Pattern::G => "G",
            Pattern::H => "H",
            Pattern::Composite => "composite",
        }
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum PatternError {
    #[error("the model has no human agent")]
    NoHuman,
    #[error("no machine agent is connected to a human")]
    NoMachine,
    #[error("global references could not be expanded: {0}")]
    Expand(#[from] ExpandError),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PatternReport {
    pub pattern: Pattern,
    /// Participating humans, grouped by coordination.
    pub human_groups: Vec<Vec<String>>,
    pub machine_groups: Vec<Vec<String>>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Shape {
    Single,
    Group,
    Independent,
    Mixed,
}

fn shape(groups: &[Vec<String>]) -> Shape {
    let members: usize = groups.iter().map(Vec::len).sum();
    if members == 1 {
        Shape::Single
    } else if groups.len() == 1 {
        Shape::Group
    } else if groups.len() == members {
        Shape::Independent
    } else {
        Shape::Mixed
    }
}

/// Classifies the arrangement of humans and the machines they are directly
/// connected to. Participants on the same side are grouped when they share
/// an enclosing agent or are connected to each other.
pub fn classify_pattern(model: &Model) -> Result<PatternReport, PatternError> {
    let roots = model.expand()?;
    let mut human_of: BTreeMap<AgentPath, bool> = BTreeMap::new();
    for root in &roots {
        for a in root.preorder() {
            human_of.insert(a.path.clone(), a.def.is_human());
        }
    }
    if !human_of.values().any(|&h| h) {
        return Err(PatternError::NoHuman);
    }

    let is_human = |p: &AgentPath| human_of.get(p).copied();
    let mut humans: BTreeSet<&AgentPath> = BTreeSet::new();
    let mut machines: BTreeSet<&AgentPath> = BTreeSet::new();
    for c in &model.connections {
        let (a, b) = (&c.from.agent, &c.to.agent);
        match (is_human(a), is_human(b)) {
            (Some(true), Some(false)) => {
                humans.insert(a);
                machines.insert(b);
            }
            (Some(false), Some(true)) => {
                machines.insert(a);
                humans.insert(b);
            }
            _ => {}
        }
    }
    if machines.is_empty() {
        return Err(PatternError::NoMachine);
    }

    let human_groups = group(&humans, model);
    let machine_groups = group(&machines, model);
    let pattern = match (shape(&human_groups), shape(&machine_groups)) {
        (Shape::Single, Shape::Single) => Pattern::A,
        (Shape::Single, Shape::Independent) => Pattern::B,
        (Shape::Single, Shape::Group) => Pattern::C,
        (Shape::Group, Shape::Single) => Pattern::D,
        (Shape::Group, Shape::Independent) => Pattern::E,
        (Shape::Group, Shape::Group) => Pattern::F,
        (Shape::Independent, Shape::Single) => Pattern::G,
        (Shape::Independent, Shape::Group) => Pattern::H,
        _ => Pattern::Composite,
    };
    Ok(PatternReport {
        pattern,
        human_groups,
        machine_groups,
    })
}

fn group(members: &BTreeSet<&AgentPath>, model: &Model) -> Vec<Vec<String>> {
    let list: Vec<&AgentPath> = members.iter().copied().collect();
    let mut parent: Vec<usize> = (0..list.len()).collect();
    fn find(parent: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while parent[r] != r {
            r = parent[r];
        }
        parent[i] = r;
        r
    }
    let index: BTreeMap<&AgentPath, usize> = list.iter().enumerate().map(|(i, p)| (*p, i)).collect();
    let mut union = |a: usize, b: usize| {
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        if ra != rb {
            parent[ra.max(rb)] = ra.min(rb);
        }
    };
    for i in 0..list.len() {
        for j in i + 1..list.len() {
            // Same root agent means a shared enclosing coordinator.
            if list[i].segments().first() == list[j].segments().first() {
                union(i, j);
            }
        }
    }
    for c in &model.connections {
        if let (Some(&a), Some(&b)) = (index.get(&c.from.agent), index.get(&c.to.agent)) {
            union(a, b);
        }
    }
    let mut groups: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    for (i, p) in list.iter().enumerate() {
        let r = find(&mut parent, i);
        groups.entry(r).or_default().push(p.to_string());
    }
    groups.into_values().collect()
}
