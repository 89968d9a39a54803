use std::collections::BTreeSet;

use amn_core::autonomy::*;
use amn_core::dsl::parse;
use amn_core::model::{AgentPath, Model};
use amn_core::validator::validate;
use amn_testkit::{corpus_files, workspace_root};

fn load(rel: &str) -> Model {
    let text = std::fs::read_to_string(workspace_root().join(rel)).unwrap();
    let (m, d) = parse(&text, rel);
    assert!(d.is_empty(), "{d:?}");
    m
}

fn path(s: &str) -> AgentPath {
    AgentPath::parse(s)
}

/// The level table written out again by hand, one list of checks per level.
fn checks(p: &InteractionProfile) -> Vec<(u8, Vec<bool>)> {
    use CandidateFlow as F;
    use DecisionAuthority as D;
    use Executor as X;
    use Monitoring as Mo;
    use Notification as N;
    use TaskTransfer as T;
    let m_decides = p.decision_authority == D::Machine;
    let h_decides = p.decision_authority == D::Human;
    let m_runs = p.executor == X::Machine;
    let no_delegation = !p.random_delegation;
    vec![
        (1, vec![m_decides, m_runs, p.monitoring == Mo::None, p.veto == Veto::None, p.notification == N::None, p.candidate_flow == F::None, p.task_transfer == T::None, no_delegation]),
        (2, vec![m_decides, m_runs, p.monitoring == Mo::Partial, no_delegation]),
        (3, vec![m_decides, m_runs, p.monitoring == Mo::Full, no_delegation]),
        (4, vec![m_decides, p.random_delegation]),
        (5, vec![m_decides, m_runs, p.veto == Veto::Unlimited]),
        (6, vec![m_decides, p.veto == Veto::TimeLimited]),
        (7, vec![m_decides, p.veto == Veto::ApprovalRequired]),
        (8, vec![p.candidate_flow == F::MachineOffersSingle, h_decides]),
        (9, vec![p.candidate_flow == F::MachineOffersSelection, h_decides]),
        (10, vec![p.candidate_flow == F::MachineOffersAll, h_decides]),
        (11, vec![p.candidate_flow == F::JointDefinition, h_decides]),
        (12, vec![p.candidate_flow == F::HumanSupplies, m_decides, m_runs]),
        (13, vec![p.notification == N::Discretion, m_runs]),
        (14, vec![p.notification == N::OnRequest, m_runs]),
        (15, vec![p.notification == N::Always, m_runs]),
        (16, vec![h_decides, p.task_transfer == T::HandoverMidTask]),
        (17, vec![h_decides, p.task_transfer == T::HumanToMachine, m_runs]),
        (18, vec![h_decides, p.task_transfer == T::HumanToMachine, p.monitoring != Mo::None]),
        (19, vec![p.decision_authority == D::Shared, p.task_transfer == T::HumanToMachine]),
        (20, vec![h_decides, p.executor == X::Human, p.veto == Veto::None, p.candidate_flow == F::None, p.notification == N::None, p.task_transfer == T::None, p.monitoring == Mo::None, no_delegation]),
    ]
}

fn expected_levels(p: &InteractionProfile) -> (Vec<u8>, bool) {
    let rows = checks(p);
    let exact: Vec<u8> = rows.iter().filter(|(_, c)| c.iter().all(|&b| b)).map(|(l, _)| *l).collect();
    if !exact.is_empty() {
        return (exact, false);
    }
    let score = |c: &Vec<bool>| c.iter().filter(|&&b| b).count();
    let best = rows.iter().map(|(_, c)| score(c)).max().unwrap();
    (rows.iter().filter(|(_, c)| score(c) == best).map(|(l, _)| *l).collect(), true)
}

#[test]
fn level_table_matches_hand_transcription_everywhere() {
    let all = InteractionProfile::enumerate();
    assert_eq!(all.len(), 3 * 4 * 6 * 4 * 4 * 3 * 3 * 2);
    let mut approximate = 0;
    for p in &all {
        let got = classify_level(p);
        let (levels, approx) = expected_levels(p);
        assert_eq!((got.levels.clone(), got.approximate), (levels, approx), "{p:?}");
        assert!(!got.levels.is_empty());
        assert!(got.levels.windows(2).all(|w| w[0] < w[1]));
        approximate += usize::from(got.approximate);
    }
    assert!(approximate > 0 && approximate < all.len());
}

#[test]
fn machine_absent_profile_is_level_20() {
    let p = InteractionProfile {
        decision_authority: DecisionAuthority::Human,
        veto: Veto::None,
        candidate_flow: CandidateFlow::None,
        notification: Notification::None,
        task_transfer: TaskTransfer::None,
        monitoring: Monitoring::None,
        executor: Executor::Human,
        random_delegation: false,
    };
    assert_eq!(classify_level(&p).levels, [20]);
}

#[test]
fn helpful_scenario_profile() {
    let m = load("corpus/scenario/scenario_helpful.amn");
    let r = classify(&m, &path("Family"), &path("Producer")).unwrap();
    assert_eq!(r.profile.decision_authority, DecisionAuthority::Machine);
    assert_eq!(r.profile.veto, Veto::TimeLimited);
    assert_eq!(r.profile.candidate_flow, CandidateFlow::MachineOffersSingle);
    assert_eq!(r.profile.notification, Notification::Always);
    assert!(r.levels.contains(&6), "{:?}", r.levels);
    assert!(!r.approximate);
}

#[test]
fn self_interested_scenario_profile() {
    let m = load("corpus/scenario/scenario_selfinterested.amn");
    let r = classify(&m, &path("Family"), &path("Producer")).unwrap();
    assert_eq!(r.profile.decision_authority, DecisionAuthority::Machine);
    assert_eq!(r.profile.veto, Veto::None);
    assert_eq!(r.profile.notification, Notification::None);
    assert_eq!(r.profile.executor, Executor::Machine);
    assert!(r.levels.contains(&1), "{:?}", r.levels);
}

#[test]
fn human_instructing_a_passive_machine() {
    let text = "agent Operator {\n  actuator console: tactile\n  functional \"human\"\n}\n\nagent Press {\n  sensor panel: tactile\n}\n\nOperator.console -> Press.panel carries instruction(advance)/single\n";
    let (m, d) = parse(text, "op.amn");
    assert!(d.is_empty());
    assert_eq!(validate(&m), vec![]);
    let p = extract_features(&m, &path("Operator"), &path("Press")).unwrap();
    assert_eq!(p.decision_authority, DecisionAuthority::Human);
    assert_eq!(p.executor, Executor::Machine);
    assert_eq!(p.task_transfer, TaskTransfer::HumanToMachine);
}

#[test]
fn unrelated_agents_have_no_profile() {
    let text = "agent Person {\n  functional \"human\"\n}\n\nagent Robot {}\n";
    let m = parse(text, "x.amn").0;
    assert!(matches!(
        extract_features(&m, &path("Person"), &path("Robot")),
        Err(ClassifyError::NoRelationship(..))
    ));
    assert!(matches!(
        extract_features(&m, &path("Person"), &path("Ghost")),
        Err(ClassifyError::Unresolved(_))
    ));
}

#[test]
fn every_scaffold_validates_and_classifies_to_its_level() {
    let (h, m) = scaffold_parties();
    for level in 1..=20u8 {
        let model = scaffold_level(level).unwrap();
        assert_eq!(validate(&model), vec![], "level {level}");
        let r = classify(&model, &h, &m).unwrap();
        assert!(r.levels.contains(&level), "level {level}: {:?}", r.levels);
        assert!(!r.approximate, "level {level}");
        assert_eq!(r, classify(&model, &h, &m).unwrap());
    }
    assert!(scaffold_level(0).is_none());
    assert!(scaffold_level(21).is_none());
}

#[test]
fn veto_scaffold_shape() {
    use amn_core::model::{Action, SelectStrategy, Specialization, ReactionKind, NotificationMode, Quant};
    let model = scaffold_level(6).unwrap();
    let (h, m) = scaffold_parties();
    let machine = model.resolve(&m).unwrap();
    let rules = &machine.behavior.rules;
    assert!(rules.iter().any(|r| r.any_action(|a| matches!(a, Action::Select(SelectStrategy::First | SelectStrategy::UtilityArgmax)))
        && r.any_action(|a| matches!(a, Action::VetoWindow { .. }))));
    let to_machine = model.connections.iter().find(|c| c.from.agent == h && c.to.agent == m).unwrap();
    assert!(to_machine.carries.iter().any(|o| o.specialization == Specialization::Reaction(Some(ReactionKind::Veto))));
    let to_human = model.connections.iter().find(|c| c.from.agent == m && c.to.agent == h).unwrap();
    assert!(to_human.carries.iter().any(|o| o.specialization == Specialization::Notification(Some(NotificationMode::Always))));
    assert!(to_human.carries.iter().any(|o| o.specialization == Specialization::ActionCandidates && o.quant == Some(Quant::Single)));
    for c in &model.connections {
        let modality = &model.resolve(&c.from.agent).unwrap().actuator(&c.from.interface).unwrap().modality;
        assert_eq!(modality, &amn_core::model::Modality::generic("bus"));
    }
}

#[test]
fn machine_absent_scaffold() {
    let model = scaffold_level(20).unwrap();
    let (h, m) = scaffold_parties();
    assert!(model.resolve(&m).is_ok());
    assert!(model.connections.iter().all(|c| c.from.agent != m && c.to.agent != m));
    assert!(model.resolve(&h).unwrap().is_human());
    assert_eq!(classify(&model, &h, &m).unwrap().levels, [20]);
}

#[test]
fn pattern_fixtures_classify_to_their_pattern() {
    let files = corpus_files("patterns");
    assert_eq!(files.len(), 9);
    let mut seen = BTreeSet::new();
    for f in files {
        let name = f.file_name().unwrap().to_string_lossy().into_owned();
        let expected = name.trim_start_matches("pattern_").split('_').next().unwrap().to_owned();
        let m = load(&format!("corpus/patterns/{name}"));
        assert_eq!(validate(&m), vec![], "{name}");
        let r = classify_pattern(&m).unwrap();
        let got = r.pattern.as_str().to_lowercase();
        assert_eq!(got, expected, "{name}");
        seen.insert(got);
    }
    assert_eq!(seen.len(), 9);
}

#[test]
fn pattern_needs_a_connected_machine_and_a_human() {
    let no_link = "agent Person {\n  functional \"human\"\n}\n\nagent Robot {}\n";
    assert_eq!(classify_pattern(&parse(no_link, "x").0), Err(PatternError::NoMachine));
    let no_human = "agent Robot {}\n";
    assert_eq!(classify_pattern(&parse(no_human, "x").0), Err(PatternError::NoHuman));
}

#[test]
fn two_independent_humans_feeding_one_queue() {
    let text = "agent Ann {\n  actuator out: generic(\"bus\")\n  functional \"human\"\n}\n\nagent Ben {\n  actuator out: generic(\"bus\")\n  functional \"human\"\n}\n\nagent Queue {\n  sensor tasks: generic(\"bus\")\n  rule take: on task then {\n    set queued = queued + 1\n  }\n  state queued = 0\n}\n\nAnn.out -> Queue.tasks carries task/single\nBen.out -> Queue.tasks carries task/single\n";
    let m = parse(text, "g.amn").0;
    assert_eq!(validate(&m), vec![]);
    let r = classify_pattern(&m).unwrap();
    assert_eq!(r.pattern, Pattern::G);
    assert_eq!(r.human_groups, [vec!["Ann".to_owned()], vec!["Ben".to_owned()]]);
}
