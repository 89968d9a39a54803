use std::collections::BTreeSet;

use amn_core::dsl::parse;
use amn_core::validator::{validate, CATALOGUE};
use amn_core::{Diagnostic, Model, Severity};
use amn_testkit::gen::{self, GenConfig};
use amn_testkit::corpus_files;
use proptest::prelude::*;

fn load(text: &str) -> Model {
    let (m, d) = parse(text, "t.amn");
    assert!(d.is_empty(), "{d:?}");
    m
}

fn codes(d: &[Diagnostic]) -> Vec<&'static str> {
    d.iter().map(|x| x.code).collect()
}

#[test]
fn scenario_fixtures_conform() {
    for f in corpus_files("scenario") {
        let m = load(&std::fs::read_to_string(&f).unwrap());
        assert_eq!(validate(&m), vec![], "{}", f.display());
    }
}

#[test]
fn calling_agent_with_child() {
    let d = validate(&load("calling agent Courier {\n  agent Helper {}\n}\n"));
    assert_eq!(codes(&d), ["AMN-DR1-02"]);
    assert_eq!(d[0].severity, Severity::Error);
    assert_eq!(d[0].span.start.line, 1);
}

#[test]
fn reliability_above_range() {
    let text = "agent A {\n  actuator a: visual\n}\n\nagent B {\n  sensor s: visual\n}\n\nA.a -> B.s { reliability = 130% } carries task/single\n";
    let d = validate(&load(text));
    assert_eq!(codes(&d), ["AMN-DR8-01"]);
    assert_eq!(d[0].severity, Severity::Error);
}

#[test]
fn every_catalogue_code_has_a_failing_fixture() {
    let files = corpus_files("mutations");
    let mut covered = BTreeSet::new();
    for f in &files {
        let name = f.file_name().unwrap().to_string_lossy().into_owned();
        let expected = name.split('_').next().unwrap();
        let (m, syn) = parse(&std::fs::read_to_string(f).unwrap(), &name);
        assert!(syn.is_empty(), "{name}: {syn:?}");
        let d = validate(&m);
        let hit = d.iter().find(|x| x.code == expected);
        let hit = hit.unwrap_or_else(|| panic!("{name} gave {:?}", codes(&d)));
        let (_, severity, _) = CATALOGUE.iter().find(|c| c.0 == expected).unwrap();
        assert_eq!(hit.severity, *severity, "{name}");
        assert_eq!(hit.span.file, name);
        covered.insert(expected.to_owned());
    }
    let all: BTreeSet<String> = CATALOGUE.iter().map(|c| c.0.to_owned()).collect();
    assert_eq!(covered, all);
    assert!(all.len() >= 20);
}

#[test]
fn diagnostics_are_sorted_and_deterministic() {
    for f in corpus_files("mutations") {
        let m = load(&std::fs::read_to_string(&f).unwrap());
        let d = validate(&m);
        assert_eq!(d, validate(&m.clone()));
        let keys: Vec<_> = d.iter().map(|x| x.sort_key()).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted, "{}", f.display());
    }
}

#[test]
fn generated_models_conform() {
    for seed in 0..300 {
        let m = gen::model(seed, &GenConfig::rich());
        let errors: Vec<_> = validate(&m).into_iter().filter(|d| d.is_error()).collect();
        assert!(errors.is_empty(), "seed {seed}: {errors:?}");
    }
}

#[test]
fn merging_fragments_keeps_their_findings() {
    let left = "agent Plant {\n  agent Line: Cell\n  agent Spare [3..1] {}\n}\n";
    let right = "global agent Cell {\n  sensor eye: visual\n}\n\nagent Team {\n  social helpful\n  social cooperative\n}\n";
    let l = codes(&validate(&load(left)));
    let r = codes(&validate(&load(right)));
    let both: BTreeSet<_> = codes(&validate(&load(&format!("{left}\n{right}")))).into_iter().collect();
    assert!(l.contains(&"AMN-DR1-03"));
    let resolved = ["AMN-DR1-03"];
    for c in l.iter().chain(&r).filter(|c| !resolved.contains(c)) {
        assert!(both.contains(c), "{c} lost in merge");
    }
    assert!(!both.contains("AMN-DR1-03"));
}

const TOKENS: &[&str] = &[
    "agent", "calling", "global", "sensor", "actuator", "social", "helpful", "rule", "on",
    "then", "emit", "state", "goal", "utility", "{", "}", "[", "]", "..", "*", ":", "=", "->",
    "-->", ".", ",", "(", ")", "/", "%", "A", "B", "x", "visual", "generic", "\"bus\"", "1",
    "task", "single", "carries", "\n", "veto_window", "set", "select", "if", "true",
];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]
    #[test]
    fn never_crashes_on_token_soup(idx in prop::collection::vec(0..TOKENS.len(), 0..60)) {
        let text: Vec<&str> = idx.iter().map(|&i| TOKENS[i]).collect();
        let (m, _) = parse(&text.join(" "), "soup.amn");
        let d = validate(&m);
        prop_assert!(d.iter().all(|x| CATALOGUE.iter().any(|c| c.0 == x.code)));
    }
}
