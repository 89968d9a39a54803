use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;

use crate::model::*;

macro_rules! profile_enum {
    ($(#[$meta:meta])* $name:ident { $($variant:ident => $kw:literal),+ $(,)? }) => {
        $(#[$meta])*
        #[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
        pub enum $name {
            $(#[serde(rename = $kw)] $variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $kw),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }
    };
}

profile_enum!(DecisionAuthority {
    Machine => "machine",
    Human => "human",
    Shared => "shared",
});

profile_enum!(Veto {
    None => "none",
    Unlimited => "unlimited",
    TimeLimited => "time_limited",
    ApprovalRequired => "approval_required",
});

profile_enum!(CandidateFlow {
    None => "none",
    MachineOffersSingle => "machine_offers_single",
    MachineOffersSelection => "machine_offers_selection",
    MachineOffersAll => "machine_offers_all",
    HumanSupplies => "human_supplies",
    JointDefinition => "joint_definition",
});

profile_enum!(Notification {
    None => "none",
    Discretion => "discretion",
    OnRequest => "on_request",
    Always => "always",
});

profile_enum!(TaskTransfer {
    None => "none",
    HumanToMachine => "human_to_machine",
    MachineToHuman => "machine_to_human",
    HandoverMidTask => "handover_mid_task",
});

profile_enum!(Monitoring {
    None => "none",
    Partial => "partial",
    Full => "full",
});

profile_enum!(Executor {
    Machine => "machine",
    Human => "human",
    Mixed => "mixed",
});

/// Features of one human-machine relationship.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct InteractionProfile {
    pub decision_authority: DecisionAuthority,
    pub veto: Veto,
    pub candidate_flow: CandidateFlow,
    pub notification: Notification,
    pub task_transfer: TaskTransfer,
    pub monitoring: Monitoring,
    pub executor: Executor,
    pub random_delegation: bool,
}

impl InteractionProfile {
    /// Every combination of field values (20 736 profiles).
    pub fn enumerate() -> Vec<InteractionProfile> {
        let mut out = Vec::new();
        for &decision_authority in DecisionAuthority::ALL {
            for &veto in Veto::ALL {
                for &candidate_flow in CandidateFlow::ALL {
                    for &notification in Notification::ALL {
                        for &task_transfer in TaskTransfer::ALL {
                            for &monitoring in Monitoring::ALL {
                                for &executor in Executor::ALL {
                                    for random_delegation in [false, true] {
                                        out.push(InteractionProfile {
                                            decision_authority,
                                            veto,
                                            candidate_flow,
                                            notification,
                                            task_transfer,
                                            monitoring,
                                            executor,
                                            random_delegation,
                                        });
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ClassifyError {
    #[error("no agent at `{0}`")]
    Unresolved(String),
    #[error("`{0}` and `{1}` are nested in one another; pick two separate agents")]
    Nested(String, String),
    #[error("no channel links `{0}` and `{1}` and they share no coordinating agent")]
    NoRelationship(String, String),
    #[error("global references could not be expanded: {0}")]
    Expand(#[from] ExpandError),
}

/// Which side of the relationship an agent path belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Side {
    Human,
    Machine,
    Neither,
}

pub(crate) struct Sides<'p> {
    human: &'p AgentPath,
    machine: &'p AgentPath,
}

impl Sides<'_> {
    /// An agent's own subtree plus those of its ancestors that are not also
    /// ancestors of the other party.
    pub(crate) fn of(&self, p: &AgentPath) -> Side {
        let own = |me: &AgentPath, other: &AgentPath| {
            p.starts_with(me) || (me.starts_with(p) && !other.starts_with(p))
        };
        if own(self.human, self.machine) {
            Side::Human
        } else if own(self.machine, self.human) {
            Side::Machine
        } else {
            Side::Neither
        }
    }
}

/// Derives the interaction profile of `human` and `machine` from channels
/// between their sides and the rules of the agents on each side.
pub fn extract_features(
    model: &Model,
    human: &AgentPath,
    machine: &AgentPath,
) -> Result<InteractionProfile, ClassifyError> {
    for p in [human, machine] {
        model
            .resolve(p)
            .map_err(|_| ClassifyError::Unresolved(p.to_string()))?;
    }
    if human.starts_with(machine) || machine.starts_with(human) {
        return Err(ClassifyError::Nested(human.to_string(), machine.to_string()));
    }
    let sides = Sides { human, machine };

    let roots = model.expand()?;
    let mut h_rules: Vec<&Rule> = Vec::new();
    let mut m_rules: Vec<&Rule> = Vec::new();
    let mut m_agents: Vec<(&AgentPath, &AgentDef)> = Vec::new();
    for root in &roots {
        for a in root.preorder() {
            match sides.of(&a.path) {
                Side::Human => h_rules.extend(&a.def.behavior.rules),
                Side::Machine => {
                    m_rules.extend(&a.def.behavior.rules);
                    m_agents.push((&a.path, a.def));
                }
                Side::Neither => {}
            }
        }
    }

    let h2m: Vec<&Connection> = model
        .connections
        .iter()
        .filter(|c| sides.of(&c.from.agent) == Side::Human && sides.of(&c.to.agent) == Side::Machine)
        .collect();
    let m2h: Vec<&Connection> = model
        .connections
        .iter()
        .filter(|c| sides.of(&c.from.agent) == Side::Machine && sides.of(&c.to.agent) == Side::Human)
        .collect();

    let has_common_ancestor = human.segments().first() == machine.segments().first();
    if h2m.is_empty() && m2h.is_empty() && !has_common_ancestor {
        return Err(ClassifyError::NoRelationship(human.to_string(), machine.to_string()));
    }

    let carries = |conns: &[&Connection], pred: &dyn Fn(&Specialization) -> bool| {
        conns.iter().any(|c| c.carries_specialization(pred))
    };
    let any_action = |rules: &[&Rule], pred: &dyn Fn(&Action) -> bool| {
        rules.iter().any(|r| r.any_action(pred))
    };
    let is_task = |s: &Specialization| *s == Specialization::Task;
    let is_instruction = |s: &Specialization| matches!(s, Specialization::Instruction(_));
    let is_candidates = |s: &Specialization| *s == Specialization::ActionCandidates;
    let is_select = |a: &Action| matches!(a, Action::Select(_));

    let m_selects = any_action(&m_rules, &is_select);
    let h_selects = any_action(&h_rules, &is_select);
    let h_gates = carries(&h2m, &is_instruction);
    let h2m_task = carries(&h2m, &is_task);
    let m2h_task = carries(&m2h, &is_task);
    let h_has_rules = !h_rules.is_empty();
    let m_has_rules = !m_rules.is_empty();

    let decision_authority = if m_selects && h_gates {
        DecisionAuthority::Shared
    } else if m_selects {
        DecisionAuthority::Machine
    } else if h_selects || h_gates || h2m_task {
        DecisionAuthority::Human
    } else if m_has_rules {
        DecisionAuthority::Machine
    } else {
        DecisionAuthority::Human
    };

    let veto = if carries(&h2m, &|s| *s == Specialization::Reaction(Some(ReactionKind::Veto))) {
        if any_action(&m_rules, &|a| matches!(a, Action::VetoWindow { .. })) {
            Veto::TimeLimited
        } else {
            Veto::Unlimited
        }
    } else if carries(&h2m, &|s| *s == Specialization::Reaction(Some(ReactionKind::Acceptance))) {
        Veto::ApprovalRequired
    } else {
        Veto::None
    };

    let h_offers = carries(&h2m, &is_candidates);
    let m_offer_scope = m2h
        .iter()
        .flat_map(|c| &c.carries)
        .filter(|o| o.specialization == Specialization::ActionCandidates)
        .map(|o| o.quant.unwrap_or(Quant::Single))
        .max();
    let candidate_flow = match (h_offers, m_offer_scope) {
        (true, Some(_)) => CandidateFlow::JointDefinition,
        (true, None) => CandidateFlow::HumanSupplies,
        (false, Some(Quant::Single)) => CandidateFlow::MachineOffersSingle,
        (false, Some(Quant::Selection)) => CandidateFlow::MachineOffersSelection,
        (false, Some(Quant::All)) => CandidateFlow::MachineOffersAll,
        (false, None) => CandidateFlow::None,
    };

    let notification = m2h
        .iter()
        .flat_map(|c| &c.carries)
        .filter_map(|o| match o.specialization {
            Specialization::Notification(Some(m)) => Some(match m {
                NotificationMode::OwnDiscretion => Notification::Discretion,
                NotificationMode::OnRequest => Notification::OnRequest,
                NotificationMode::Always => Notification::Always,
            }),
            _ => None,
        })
        .max()
        .unwrap_or(Notification::None);

    let task_transfer = if h2m_task && h_has_rules {
        TaskTransfer::HandoverMidTask
    } else if h2m_task || h_gates {
        TaskTransfer::HumanToMachine
    } else if m2h_task {
        TaskTransfer::MachineToHuman
    } else {
        TaskTransfer::None
    };

    let monitoring = monitoring(model, &sides, &m_agents);

    let m_acts = m_has_rules || h2m_task || h_gates;
    let h_acts = h_has_rules || m2h_task;
    let executor = match (m_acts, h_acts) {
        (true, true) => Executor::Mixed,
        (true, false) => Executor::Machine,
        _ => Executor::Human,
    };

    let random_delegation = any_action(&m_rules, &|a| matches!(a, Action::Delegate { .. }));

    Ok(InteractionProfile {
        decision_authority,
        veto,
        candidate_flow,
        notification,
        task_transfer,
        monitoring,
        executor,
        random_delegation,
    })
}

/// Compares the machine actuators that produce metrics with those whose
/// metrics reach the human.
fn monitoring(model: &Model, sides: &Sides, m_agents: &[(&AgentPath, &AgentDef)]) -> Monitoring {
    let mut producing: BTreeSet<(AgentPath, String)> = BTreeSet::new();
    let mut observed: BTreeSet<(AgentPath, String)> = BTreeSet::new();
    for c in &model.connections {
        if sides.of(&c.from.agent) != Side::Machine
            || !c.carries_specialization(|s| *s == Specialization::Metric)
        {
            continue;
        }
        let key = (c.from.agent.clone(), c.from.interface.clone());
        producing.insert(key.clone());
        if sides.of(&c.to.agent) == Side::Human {
            observed.insert(key);
        }
    }
    for (path, def) in m_agents {
        for r in &def.behavior.rules {
            r.visit_actions(&mut |a| {
                if let Action::Emit {
                    actuator, object, ..
                } = a
                {
                    if object.specialization == Specialization::Metric {
                        producing.insert(((*path).clone(), actuator.clone()));
                    }
                }
            });
        }
    }
    if observed.is_empty() {
        Monitoring::None
    } else if observed == producing {
        Monitoring::Full
    } else {
        Monitoring::Partial
    }
}
