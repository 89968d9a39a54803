//! Autonomy levels and interaction patterns.

mod levels;
mod patterns;
mod profile;
mod scaffold;

pub use levels::{classify_level, level_row, Constraint, LevelMatch, LevelRow, LEVEL_ROWS};
pub use patterns::{classify_pattern, Pattern, PatternError, PatternReport};
pub use profile::{
    extract_features, CandidateFlow, ClassifyError, DecisionAuthority, Executor,
    InteractionProfile, Monitoring, Notification, TaskTransfer, Veto,
};
pub use scaffold::{
    scaffold_level, scaffold_parties, scaffold_source, SCAFFOLD_HUMAN, SCAFFOLD_MACHINE,
    SCAFFOLD_ROOT,
};

use serde::Serialize;

use crate::model::{AgentPath, Model};

/// Levels and pattern for one human-machine pair.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassificationReport {
    /// Pattern of the whole model, absent when it has none.
    pub pattern: Option<Pattern>,
    pub levels: Vec<u8>,
    pub profile: InteractionProfile,
    pub approximate: bool,
}

pub fn classify(
    model: &Model,
    human: &AgentPath,
    machine: &AgentPath,
) -> Result<ClassificationReport, ClassifyError> {
    let profile = extract_features(model, human, machine)?;
    let m = classify_level(&profile);
    Ok(ClassificationReport {
        pattern: classify_pattern(model).ok().map(|r| r.pattern),
        levels: m.levels,
        profile,
        approximate: m.approximate,
    })
}
