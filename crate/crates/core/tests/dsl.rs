use amn_core::dsl::{fmt, parse, print};
use amn_core::model::{AgentPath, Direction, ElementId, Modality};
use amn_core::Model;
use amn_testkit::{corpus_files, workspace_root};

fn read(rel: &str) -> String {
    std::fs::read_to_string(workspace_root().join(rel)).unwrap()
}

#[test]
fn empty_input_is_an_empty_model() {
    let (m, d) = parse("", "empty.amn");
    assert!(m.is_empty());
    assert!(d.is_empty());
    assert_eq!(print(&Model::new()), "");
}

#[test]
fn scenario_producer_has_two_children() {
    let (m, d) = parse(&read("corpus/scenario/scenario_helpful.amn"), "s.amn");
    assert!(d.is_empty(), "{d:?}");
    let producer = m.resolve(&AgentPath::parse("Producer")).unwrap();
    let names: Vec<&str> = producer.children.iter().map(|c| c.name.as_str()).collect();
    assert_eq!(names, ["Analyzer", "DecisionMaker"]);
}

#[test]
fn agent_with_self_loop_connection() {
    let text = "agent A { sensor s: visual actuator a: visual }\nA.a -> A.s\n";
    let (m, d) = parse(text, "a.amn");
    assert!(d.is_empty(), "{d:?}");
    assert_eq!(m.agents.len(), 1);
    assert_eq!(m.connections.len(), 1);
    let a = &m.agents[0];
    assert_eq!(a.sensor("s").unwrap().modality, Modality::Visual);
    assert_eq!(a.actuator("a").unwrap().modality, Modality::Visual);
    assert_eq!(m.connections[0].from.to_string(), "A.a");
    assert_eq!(m.connections[0].to.to_string(), "A.s");
}

#[test]
fn every_element_has_a_span() {
    let (m, _) = parse(&read("corpus/scenario/scenario_helpful.amn"), "s.amn");
    let mut ids = Vec::new();
    for a in m.walk() {
        ids.push(ElementId::Agent(a.loc.clone()));
        for i in 0..a.def.sensors.len() {
            ids.push(ElementId::Interface(a.loc.clone(), Direction::Sensor, i));
        }
        for i in 0..a.def.actuators.len() {
            ids.push(ElementId::Interface(a.loc.clone(), Direction::Actuator, i));
        }
        for i in 0..a.def.behavior.rules.len() {
            ids.push(ElementId::Rule(a.loc.clone(), i));
        }
        for i in 0..a.def.behavior.states.len() {
            ids.push(ElementId::State(a.loc.clone(), i));
        }
    }
    for (i, c) in m.connections.iter().enumerate() {
        ids.push(ElementId::Connection(i));
        for j in 0..c.carries.len() {
            ids.push(ElementId::Carried(i, j));
        }
    }
    assert!(ids.len() > 20);
    for id in ids {
        let span = m.span(&id).unwrap_or_else(|| panic!("no span for {id:?}"));
        assert!(span.start <= span.end, "{id:?}");
        assert!(span.start.line >= 1 && span.start.col >= 1, "{id:?}");
        assert_eq!(span.file, "s.amn");
    }
}

#[test]
fn recovers_from_several_statement_errors() {
    let text = "agent A {\n  sensor : visual\n}\n\nagent B {\n  social\n}\n\nagent C {\n  actuator out: smell\n}\n";
    let (m, d) = parse(text, "bad.amn");
    assert!(d.len() >= 2, "{d:?}");
    assert!(d.iter().all(|x| x.code.starts_with("AMN-SYN-") && !x.message.is_empty()));
    assert!(d.iter().all(|x| x.span.start.line >= 1));
    assert_eq!(m.agents.len(), 3);
}

#[test]
fn diagnostics_are_deterministic() {
    let text = "agent A { sensor : visual }\nagent { }\nX.y => Z.w\n";
    assert_eq!(parse(text, "f.amn").1, parse(text, "f.amn").1);
}

#[test]
fn fmt_puts_clauses_in_canonical_order() {
    let shuffled = "agent M {\n  rule r: on task then { set done = true }\n  agent Child {}\n  state done = false\n  social helpful\n  actuator out: tactile\n  sensor in: tactile\n}\n";
    let out = fmt(shuffled, "m.amn").unwrap();
    let expected = "agent M {\n  sensor in: tactile\n  actuator out: tactile\n  social helpful\n  rule r: on task then {\n    set done = true\n  }\n  state done = false\n  agent Child {}\n}\n";
    assert_eq!(out, expected);
    assert_eq!(out, print(&parse(shuffled, "m.amn").0));
}

#[test]
fn fmt_refuses_syntax_errors() {
    let text = "agent A {\n  sensor s visual\n}\n";
    let diags = fmt(text, "a.amn").unwrap_err();
    assert!(diags.iter().any(|d| d.is_error()));
}

#[test]
fn scenario_fixtures_are_canonical() {
    for f in corpus_files("scenario") {
        let text = std::fs::read_to_string(&f).unwrap();
        assert_eq!(fmt(&text, "s.amn").unwrap(), text, "{}", f.display());
    }
}

#[test]
fn fmt_is_idempotent_on_the_corpus() {
    for sub in ["scenario", "patterns", "mutations"] {
        for f in corpus_files(sub) {
            let text = std::fs::read_to_string(&f).unwrap();
            let once = fmt(&text, "c.amn").unwrap_or_else(|d| panic!("{}: {d:?}", f.display()));
            assert_eq!(fmt(&once, "c.amn").unwrap(), once, "{}", f.display());
            assert_eq!(parse(&once, "c.amn").0, parse(&text, "c.amn").0, "{}", f.display());
        }
    }
}

#[test]
fn connection_arrows_keep_their_style() {
    let text = "agent A {\n  actuator a: auditory\n}\n\nagent B {\n  sensor s: auditory\n}\n\nA.a --> B.s\n";
    assert_eq!(fmt(text, "x.amn").unwrap(), text);
}
