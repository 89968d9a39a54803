use std::collections::BTreeSet;

use amn_core::dsl::parse;
use amn_core::model::*;
use amn_core::Model;
use amn_testkit::gen::{self, GenConfig};
use amn_testkit::workspace_root;
use proptest::prelude::*;

fn scenario() -> Model {
    let path = workspace_root().join("corpus/scenario/scenario_helpful.amn");
    parse(&std::fs::read_to_string(path).unwrap(), "s.amn").0
}

/// Rebuilds `m` through the construction operations only.
fn rebuild(m: &Model) -> Result<Model, StructureError> {
    let mut out = Model::new();
    for g in &m.globals {
        out = out.add_global(g.clone())?;
    }
    for a in &m.agents {
        out = out.compose(&AgentPath::root(), a.clone())?;
    }
    for c in &m.connections {
        out = out.connect(c.from.clone(), c.to.clone(), c.style, c.params, c.carries.clone())?;
    }
    Ok(out)
}

fn assert_forest(m: &Model) {
    fn dfs(d: &AgentDef, seen: &mut Vec<*const AgentDef>) {
        let p = d as *const AgentDef;
        assert!(!seen.contains(&p), "agent `{}` is its own ancestor", d.name);
        seen.push(p);
        let mut names = BTreeSet::new();
        for c in &d.children {
            assert!(names.insert(&c.name), "duplicate child `{}`", c.name);
            dfs(c, seen);
        }
        seen.pop();
    }
    for a in m.agents.iter().chain(&m.globals) {
        dfs(a, &mut Vec::new());
    }
    // Global references must not lead back to themselves either.
    assert!(global_cycle(m).is_empty());
}

#[test]
fn compose_analyzer_into_producer() {
    let mut m = scenario();
    let producer = m.agents.iter_mut().find(|a| a.name == "Producer").unwrap();
    let analyzer = producer.children.remove(0);
    producer.children.clear();
    let out = m.compose(&AgentPath::parse("Producer"), analyzer).unwrap();
    assert_eq!(out.resolve(&AgentPath::parse("Producer")).unwrap().children.len(), 1);
}

#[test]
fn resolve_scenario_decision_maker() {
    let m = scenario();
    let dm = m.resolve(&AgentPath::parse("Producer.DecisionMaker")).unwrap();
    assert_eq!(dm.name, "DecisionMaker");
    assert!(dm.behavior.rules.iter().any(|r| r.name == "choose"));
    assert!(matches!(m.resolve(&AgentPath::parse("")), Err(ResolveError::NotFound(_))));
}

#[test]
fn email_channel_connects() {
    let m = Model::new()
        .compose(&AgentPath::root(), AgentDef::new("Producer").with_actuator("mail", Modality::generic("email")))
        .unwrap()
        .compose(&AgentPath::root(), AgentDef::new("Family").with_sensor("inbox", Modality::generic("email")))
        .unwrap();
    let out = m.connect(
        Endpoint::new("Producer", "mail"),
        Endpoint::new("Family", "inbox"),
        ConnectionStyle::Continuous,
        ChannelParams::default(),
        vec![],
    );
    assert_eq!(out.unwrap().connections.len(), 1);
}

#[test]
fn generated_models_rebuild_through_construction() {
    for seed in 0..200 {
        let m = gen::model(seed, &GenConfig::rich());
        let built = rebuild(&m).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
        assert_eq!(built, m, "seed {seed}");
        assert_forest(&built);
        for c in &built.connections {
            let from = built.resolve(&c.from.agent).unwrap().actuator(&c.from.interface).unwrap();
            let to = built.resolve(&c.to.agent).unwrap().sensor(&c.to.interface).unwrap();
            assert!(compatible(&from.modality, &to.modality), "seed {seed}");
            for (_, v) in c.params.entries() {
                assert!((0.0..=1.0).contains(&v));
            }
        }
    }
}

#[test]
fn compose_then_decompose_restores() {
    for seed in 0..100 {
        let m = gen::model(seed, &GenConfig::rich());
        for a in m.walk() {
            if a.loc.scope != Scope::Root || a.def.global_target().is_some() {
                continue;
            }
            let extra = AgentDef::new("Extra");
            let Ok(bigger) = m.compose(&a.path, extra.clone()) else {
                assert!(matches!(a.def.kind, AgentKind::Calling) || a.def.child("Extra").is_some());
                continue;
            };
            let (back, removed) = bigger.decompose(&a.path, "Extra").unwrap();
            assert_eq!(removed, extra);
            assert_eq!(back, m, "seed {seed} at {}", a.path);
        }
    }
}

#[test]
fn resolve_is_deterministic() {
    for seed in 0..50 {
        let m = gen::model(seed, &GenConfig::rich());
        for p in gen::agent_paths(&m) {
            assert_eq!(m.locate(&p), m.locate(&p));
            assert_eq!(m.resolve(&p).unwrap(), m.resolve(&p).unwrap());
        }
    }
}

proptest! {
    #[test]
    fn connect_enforces_parameter_range(v in -2.0f64..3.0) {
        let m = Model::new()
            .compose(&AgentPath::root(), AgentDef::new("A").with_actuator("a", Modality::Tactile))
            .unwrap()
            .compose(&AgentPath::root(), AgentDef::new("B").with_sensor("s", Modality::Tactile))
            .unwrap();
        for field in 0..4 {
            let mut params = ChannelParams::default();
            *[&mut params.attention, &mut params.reliability, &mut params.conformity, &mut params.security][field] = Some(v);
            let r = m.connect(Endpoint::new("A", "a"), Endpoint::new("B", "s"), ConnectionStyle::Continuous, params, vec![]);
            prop_assert_eq!(r.is_ok(), (0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn compatible_is_exact_match(a in "[a-zA-Z]{0,3}", b in "[a-zA-Z]{0,3}") {
        prop_assert_eq!(compatible(&Modality::generic(a.clone()), &Modality::generic(b.clone())), a == b);
        prop_assert!(!compatible(&Modality::generic(a), &Modality::Visual));
    }
}
