use super::profile::*;

/// One required feature value of a level row.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Constraint {
    Authority(DecisionAuthority),
    Executor(Executor),
    Monitoring(Monitoring),
    /// Monitoring partial or full.
    Monitored,
    Veto(Veto),
    Notification(Notification),
    Candidates(CandidateFlow),
    Transfer(TaskTransfer),
    Delegation(bool),
}

impl Constraint {
    pub fn holds(self, p: &InteractionProfile) -> bool {
        match self {
            Constraint::Authority(v) => p.decision_authority == v,
            Constraint::Executor(v) => p.executor == v,
            Constraint::Monitoring(v) => p.monitoring == v,
            Constraint::Monitored => p.monitoring != Monitoring::None,
            Constraint::Veto(v) => p.veto == v,
            Constraint::Notification(v) => p.notification == v,
            Constraint::Candidates(v) => p.candidate_flow == v,
            Constraint::Transfer(v) => p.task_transfer == v,
            Constraint::Delegation(v) => p.random_delegation == v,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct LevelRow {
    pub level: u8,
    pub summary: &'static str,
    pub requires: &'static [Constraint],
}

impl LevelRow {
    pub fn matches(&self, p: &InteractionProfile) -> bool {
        self.requires.iter().all(|c| c.holds(p))
    }

    pub fn satisfied(&self, p: &InteractionProfile) -> usize {
        self.requires.iter().filter(|c| c.holds(p)).count()
    }
}

use Constraint as C;

pub const LEVEL_ROWS: [LevelRow; 20] = [
    LevelRow {
        level: 1,
        summary: "machine decides and acts alone; human is not involved",
        requires: &[
            C::Authority(DecisionAuthority::Machine),
            C::Executor(Executor::Machine),
            C::Monitoring(Monitoring::None),
            C::Veto(Veto::None),
            C::Notification(Notification::None),
            C::Candidates(CandidateFlow::None),
            C::Transfer(TaskTransfer::None),
            C::Delegation(false),
        ],
    },
    LevelRow {
        level: 2,
        summary: "machine acts alone; human sees part of its state",
        requires: &[
            C::Authority(DecisionAuthority::Machine),
            C::Executor(Executor::Machine),
            C::Monitoring(Monitoring::Partial),
            C::Delegation(false),
        ],
    },
    LevelRow {
        level: 3,
        summary: "machine acts alone; human sees all of its state",
        requires: &[
            C::Authority(DecisionAuthority::Machine),
            C::Executor(Executor::Machine),
            C::Monitoring(Monitoring::Full),
            C::Delegation(false),
        ],
    },
    LevelRow {
        level: 4,
        summary: "machine hands decisions to the human at random",
        requires: &[C::Authority(DecisionAuthority::Machine), C::Delegation(true)],
    },
    LevelRow {
        level: 5,
        summary: "machine acts; human may veto at any time",
        requires: &[
            C::Authority(DecisionAuthority::Machine),
            C::Executor(Executor::Machine),
            C::Veto(Veto::Unlimited),
        ],
    },
    LevelRow {
        level: 6,
        summary: "machine acts after a limited veto window",
        requires: &[C::Authority(DecisionAuthority::Machine), C::Veto(Veto::TimeLimited)],
    },
    LevelRow {
        level: 7,
        summary: "machine acts once the human approves",
        requires: &[C::Authority(DecisionAuthority::Machine), C::Veto(Veto::ApprovalRequired)],
    },
    LevelRow {
        level: 8,
        summary: "machine proposes one candidate; human decides",
        requires: &[
            C::Candidates(CandidateFlow::MachineOffersSingle),
            C::Authority(DecisionAuthority::Human),
        ],
    },
    LevelRow {
        level: 9,
        summary: "machine proposes a selection; human decides",
        requires: &[
            C::Candidates(CandidateFlow::MachineOffersSelection),
            C::Authority(DecisionAuthority::Human),
        ],
    },
    LevelRow {
        level: 10,
        summary: "machine proposes every candidate; human decides",
        requires: &[
            C::Candidates(CandidateFlow::MachineOffersAll),
            C::Authority(DecisionAuthority::Human),
        ],
    },
    LevelRow {
        level: 11,
        summary: "human and machine define candidates jointly; human decides",
        requires: &[
            C::Candidates(CandidateFlow::JointDefinition),
            C::Authority(DecisionAuthority::Human),
        ],
    },
    LevelRow {
        level: 12,
        summary: "human supplies candidates; machine decides and acts",
        requires: &[
            C::Candidates(CandidateFlow::HumanSupplies),
            C::Authority(DecisionAuthority::Machine),
            C::Executor(Executor::Machine),
        ],
    },
    LevelRow {
        level: 13,
        summary: "machine acts and informs the human at its discretion",
        requires: &[
            C::Notification(Notification::Discretion),
            C::Executor(Executor::Machine),
        ],
    },
    LevelRow {
        level: 14,
        summary: "machine acts and informs the human on request",
        requires: &[
            C::Notification(Notification::OnRequest),
            C::Executor(Executor::Machine),
        ],
    },
    LevelRow {
        level: 15,
        summary: "machine acts and always informs the human",
        requires: &[C::Notification(Notification::Always), C::Executor(Executor::Machine)],
    },
    LevelRow {
        level: 16,
        summary: "human decides and hands over a task in progress",
        requires: &[
            C::Authority(DecisionAuthority::Human),
            C::Transfer(TaskTransfer::HandoverMidTask),
        ],
    },
    LevelRow {
        level: 17,
        summary: "human decides and assigns tasks the machine carries out",
        requires: &[
            C::Authority(DecisionAuthority::Human),
            C::Transfer(TaskTransfer::HumanToMachine),
            C::Executor(Executor::Machine),
        ],
    },
    LevelRow {
        level: 18,
        summary: "human decides and assigns tasks while monitoring the machine",
        requires: &[
            C::Authority(DecisionAuthority::Human),
            C::Transfer(TaskTransfer::HumanToMachine),
            C::Monitored,
        ],
    },
    LevelRow {
        level: 19,
        summary: "human gates each step; machine chooses within it",
        requires: &[
            C::Authority(DecisionAuthority::Shared),
            C::Transfer(TaskTransfer::HumanToMachine),
        ],
    },
    LevelRow {
        level: 20,
        summary: "human decides and acts alone",
        requires: &[
            C::Authority(DecisionAuthority::Human),
            C::Executor(Executor::Human),
            C::Veto(Veto::None),
            C::Candidates(CandidateFlow::None),
            C::Notification(Notification::None),
            C::Transfer(TaskTransfer::None),
            C::Monitoring(Monitoring::None),
            C::Delegation(false),
        ],
    },
];

pub fn level_row(level: u8) -> Option<&'static LevelRow> {
    LEVEL_ROWS.iter().find(|r| r.level == level)
}

/// Levels consistent with a profile, ascending.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LevelMatch {
    pub levels: Vec<u8>,
    /// No row matched exactly; `levels` are the closest rows.
    pub approximate: bool,
}

pub fn classify_level(p: &InteractionProfile) -> LevelMatch {
    let exact: Vec<u8> = LEVEL_ROWS
        .iter()
        .filter(|r| r.matches(p))
        .map(|r| r.level)
        .collect();
    if !exact.is_empty() {
        return LevelMatch {
            levels: exact,
            approximate: false,
        };
    }
    let best = LEVEL_ROWS.iter().map(|r| r.satisfied(p)).max().unwrap_or(0);
    LevelMatch {
        levels: LEVEL_ROWS
            .iter()
            .filter(|r| r.satisfied(p) == best)
            .map(|r| r.level)
            .collect(),
        approximate: true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_are_in_level_order() {
        for (i, r) in LEVEL_ROWS.iter().enumerate() {
            assert_eq!(r.level as usize, i + 1);
        }
    }

    #[test]
    fn every_profile_gets_a_level() {
        let all = InteractionProfile::enumerate();
        assert_eq!(all.len(), 20736);
        assert!(all.iter().all(|p| !classify_level(p).levels.is_empty()));
    }
}
