use std::collections::{BTreeMap, BTreeSet};

use amn_core::autonomy::{scaffold_level, scaffold_parties};
use amn_core::dsl::parse;
use amn_core::model::Model;
use amn_core::simulator::*;
use amn_testkit::gen::{self, GenConfig};
use amn_testkit::{corpus_files, workspace_root};

fn load(rel: &str) -> Model {
    let text = std::fs::read_to_string(workspace_root().join(rel)).unwrap();
    let (m, d) = parse(&text, rel);
    assert!(d.is_empty(), "{d:?}");
    m
}

fn text_model(text: &str) -> Model {
    let (m, d) = parse(text, "t.amn");
    assert!(d.is_empty(), "{d:?}");
    m
}

fn helpful() -> Model {
    load("corpus/scenario/scenario_helpful.amn")
}

fn of_kind(t: &Trace, kind: TraceKind) -> Vec<&TraceEvent> {
    t.events.iter().filter(|e| e.kind == kind).collect()
}

/// Task objects emitted towards the supplier.
fn supplier_tasks(t: &Trace) -> Vec<&TraceEvent> {
    t.events
        .iter()
        .filter(|e| e.kind == TraceKind::Emitted && e.spec() == Some("task/single"))
        .filter(|e| e.detail["to"] == "Supplier")
        .collect()
}

fn family_notifications(t: &Trace) -> Vec<&TraceEvent> {
    t.events
        .iter()
        .filter(|e| e.kind == TraceKind::Emitted && e.detail["to"] == "Family")
        .filter(|e| e.spec().is_some_and(|s| s.starts_with("notification")))
        .collect()
}

const POOL: &str = "agent Pool {\n  agent Worker [2..5] {}\n  agent Solo {}\n}\n";

#[test]
fn instantiate_expands_to_minimum() {
    let w = World::instantiate(&text_model(POOL), 0, RunConfig::default()).unwrap();
    let ids: Vec<&str> = w.instances.iter().map(|i| i.id.as_str()).collect();
    assert_eq!(ids.iter().filter(|i| i.starts_with("Pool.Worker")).count(), 2);
    assert_eq!(ids.iter().filter(|i| i.starts_with("Pool.Solo")).count(), 1);
    assert_eq!(w.tick, 0);
    let indices: Vec<u32> = w.instances.iter().filter(|i| i.def.name == "Worker").map(|i| i.instance_index).collect();
    assert_eq!(indices, [0, 1]);
}

#[test]
fn instantiate_respects_bounds() {
    let m = text_model(POOL);
    let cfg = |n| RunConfig {
        instance_counts: BTreeMap::from([("Pool.Worker".to_owned(), n)]),
        ..RunConfig::default()
    };
    let w = World::instantiate(&m, 0, cfg(5)).unwrap();
    assert_eq!(w.instances.iter().filter(|i| i.def.name == "Worker").count(), 5);
    assert!(matches!(
        World::instantiate(&m, 0, cfg(7)),
        Err(SimError::CardinalityExceeded { requested: 7, max: 5, .. })
    ));
    assert!(matches!(
        World::instantiate(&m, 0, cfg(1)),
        Err(SimError::CardinalityBelowMinimum { requested: 1, min: 2, .. })
    ));
}

#[test]
fn states_start_from_declarations() {
    let w = World::instantiate(&helpful(), 0, RunConfig::default()).unwrap();
    let dm = w.instances.iter().find(|i| i.id == "Producer.DecisionMaker").unwrap();
    assert_eq!(dm.states["awaiting_reorder"], amn_core::model::Literal::Bool(false));
}

#[test]
fn invalid_models_are_refused() {
    let m = text_model("calling agent C {\n  agent D {}\n}\n");
    assert!(matches!(World::instantiate(&m, 0, RunConfig::default()), Err(SimError::ValidationRequired(_))));
    assert!(matches!(run(&m, 0, 5, &[], RunConfig::default()), Err(SimError::ValidationRequired(_))));
}

#[test]
fn unknown_injection_target_is_refused() {
    let inj = [Injection::new(0, "Nobody", InjectedAction::Veto)];
    assert!(matches!(run(&helpful(), 0, 5, &inj, RunConfig::default()), Err(SimError::UnknownAgent(_))));
}

#[test]
fn empty_model_is_quiescent_at_once() {
    let t = run(&Model::new(), 7, 10, &[], RunConfig::default()).unwrap();
    assert!(t.events.is_empty());
    assert!(t.quiescent);
    assert_eq!(t.end_tick, 0);
}

#[test]
fn helpful_scenario_commits_after_the_window() {
    let t = run(&helpful(), 42, 30, &[], RunConfig::default()).unwrap();
    let opened = of_kind(&t, TraceKind::WindowOpened);
    assert_eq!(opened.len(), 1);
    let open_tick = opened[0].tick;
    let tasks = supplier_tasks(&t);
    assert_eq!(tasks.len(), 1);
    assert_eq!(tasks[0].tick, open_tick + 14);
    assert_eq!(of_kind(&t, TraceKind::WindowCommitted).len(), 1);
    assert!(!family_notifications(&t).is_empty());
    // The analyzer offered everything and the helpful decision maker took
    // the option best for the family.
    let chosen = of_kind(&t, TraceKind::CandidateSelected);
    assert_eq!(chosen.len(), 1);
    assert_eq!(chosen[0].object, "oak");
    assert!(t.quiescent);
}

#[test]
fn veto_anywhere_inside_the_window_cancels_the_order() {
    let open_tick = {
        let t = run(&helpful(), 42, 30, &[], RunConfig::default()).unwrap();
        of_kind(&t, TraceKind::WindowOpened)[0].tick
    };
    for at in open_tick + 1..=open_tick + 14 {
        let inj = [Injection::new(at, "Family", InjectedAction::Veto)];
        let t = run(&helpful(), 42, 30, &inj, RunConfig::default()).unwrap();
        assert!(supplier_tasks(&t).is_empty(), "veto at {at}");
        assert_eq!(of_kind(&t, TraceKind::WindowVetoed).len(), 1, "veto at {at}");
        assert!(of_kind(&t, TraceKind::WindowCommitted).is_empty(), "veto at {at}");
        let changed = of_kind(&t, TraceKind::StateChanged);
        assert!(changed.iter().any(|e| e.object == "awaiting_reorder" && e.detail["to"] == true), "veto at {at}");
    }
    // Too late: the order has already gone out.
    let inj = [Injection::new(open_tick + 15, "Family", InjectedAction::Veto)];
    let t = run(&helpful(), 42, 30, &inj, RunConfig::default()).unwrap();
    assert_eq!(supplier_tasks(&t).len(), 1);
}

#[test]
fn veto_at_fixed_tick_excludes_supplier_tasks() {
    let inj = [Injection::new(5, "Family", InjectedAction::Veto)];
    let t = run(&helpful(), 42, 30, &inj, RunConfig::default()).unwrap();
    assert!(supplier_tasks(&t).is_empty());
}

#[test]
fn self_interested_scenario_orders_at_once_and_stays_silent() {
    let t = run(&load("corpus/scenario/scenario_selfinterested.amn"), 42, 30, &[], RunConfig::default()).unwrap();
    let refusal = t
        .events
        .iter()
        .find(|e| e.kind == TraceKind::Emitted && e.spec() == Some("reaction(refusal)/single"))
        .unwrap();
    let tasks = supplier_tasks(&t);
    assert_eq!(tasks.len(), 1);
    assert!(tasks[0].tick <= refusal.tick + 3);
    assert!(family_notifications(&t).is_empty());
    assert!(t.events.iter().all(|e| e.detail["to"] != "Family" && e.subject != "Family"));
    assert_eq!(of_kind(&t, TraceKind::CandidateSelected)[0].object, "pine");
}

#[test]
fn reruns_are_byte_identical() {
    let m = helpful();
    let inj = [Injection::new(6, "Family", InjectedAction::Veto)];
    let a = run(&m, 42, 30, &inj, RunConfig::default()).unwrap();
    let b = run(&m, 42, 30, &inj, RunConfig::default()).unwrap();
    assert_eq!(events_to_jsonl(&a.events), events_to_jsonl(&b.events));
    for seed in 0..100 {
        let m = gen::model(seed, &GenConfig::small());
        let inj = gen::injections(&m, seed, 8);
        let cfg = gen::run_config(&m, seed);
        let a = run(&m, seed, 8, &inj, cfg.clone()).unwrap();
        let b = run(&m, seed, 8, &inj, cfg).unwrap();
        assert_eq!(events_to_jsonl(&a.events), events_to_jsonl(&b.events), "seed {seed}");
    }
}

#[test]
fn trace_lines_round_trip_with_fixed_field_order() {
    let t = run(&helpful(), 42, 30, &[], RunConfig::default()).unwrap();
    let text = events_to_jsonl(&t.events);
    assert!(text.lines().all(|l| l.starts_with("{\"tick\":") && l.contains("\"seq\":")));
    let keys = ["tick", "seq", "kind", "subject", "object", "detail"].map(|k| format!("\"{k}\":"));
    for l in text.lines() {
        let pos: Vec<usize> = keys.iter().map(|k| l.find(k.as_str()).unwrap()).collect();
        assert!(pos.windows(2).all(|w| w[0] < w[1]), "{l}");
    }
    assert_eq!(events_from_jsonl(&text).unwrap(), t.events);
    let order: Vec<(u64, u64)> = t.events.iter().map(|e| (e.tick, e.seq)).collect();
    let mut sorted = order.clone();
    sorted.sort();
    assert_eq!(order, sorted);
}

fn random_runs(count: u64) -> impl Iterator<Item = (Model, Trace)> {
    (0..count).map(|seed| {
        let cfg = if seed % 2 == 0 { GenConfig::small() } else { GenConfig::rich() };
        let m = gen::model(seed, &cfg);
        let inj = gen::injections(&m, seed, 12);
        let t = run(&m, seed, 12, &inj, gen::run_config(&m, seed)).unwrap();
        (m, t)
    })
}

#[test]
fn channels_conserve_objects() {
    for (i, (_, t)) in random_runs(200).enumerate() {
        for (c, b) in channel_balance(&t).iter().enumerate() {
            assert!(b.balanced(), "run {i} channel {c}: {b:?}");
        }
    }
    let t = run(&helpful(), 42, 30, &[], RunConfig::default()).unwrap();
    assert!(channel_balance(&t).iter().all(ChannelBalance::balanced));
}

#[test]
fn deliveries_never_exceed_capacity() {
    for seed in 0..200 {
        let m = gen::model(seed, &GenConfig::small());
        let inj = gen::injections(&m, seed, 12);
        let cfg = gen::run_config(&m, seed);
        let world = World::instantiate(&m, seed, cfg.clone()).unwrap();
        let caps: Vec<Option<usize>> = world.channels.iter().map(|c| c.capacity_per_tick).collect();
        for (c, ch) in world.channels.iter().enumerate() {
            if let Some(a) = ch.connection.params.attention {
                let expected = ((a * f64::from(cfg.attention_base)).ceil() as usize).max(1);
                assert_eq!(caps[c], Some(expected));
            }
        }
        let t = run(&m, seed, 12, &inj, cfg).unwrap();
        let mut per: BTreeMap<(u64, usize), usize> = BTreeMap::new();
        for e in of_kind(&t, TraceKind::Delivered) {
            *per.entry((e.tick, e.channel().unwrap())).or_default() += 1;
        }
        for ((tick, c), n) in per {
            if let Some(cap) = caps[c] {
                assert!(n <= cap, "seed {seed} tick {tick} channel {c}: {n} > {cap}");
            }
        }
    }
}

const BURST: &str = "agent Source {\n  actuator out: generic(\"bus\")\n  rule burst: on start then {\n    emit out task/single\n    emit out task/single\n    emit out task/single\n  }\n}\n\nagent Sink {\n  sensor in: generic(\"bus\")\n}\n\nSource.out -> Sink.in { attention = 50% } carries task/single\n";

#[test]
fn half_attention_drops_the_third_arrival() {
    let cfg = RunConfig {
        overflow: Overflow::DropNewest,
        ..RunConfig::default()
    };
    let t = run(&text_model(BURST), 0, 10, &[], cfg).unwrap();
    let delivered = of_kind(&t, TraceKind::Delivered);
    let dropped = of_kind(&t, TraceKind::Dropped);
    assert_eq!(delivered.len(), 2);
    assert_eq!(dropped.len(), 1);
    assert!(delivered.iter().chain(&dropped).all(|e| e.tick == 1));
}

#[test]
fn queued_overflow_arrives_later() {
    let t = run(&text_model(BURST), 0, 10, &[], RunConfig::default()).unwrap();
    let ticks: Vec<u64> = of_kind(&t, TraceKind::Delivered).iter().map(|e| e.tick).collect();
    assert_eq!(ticks, [1, 1, 2]);
    assert!(of_kind(&t, TraceKind::Dropped).is_empty());
}

#[test]
fn unreliable_channels_are_not_considered() {
    let text = "agent Source {\n  actuator out: generic(\"bus\")\n  rule go: on start then {\n    emit out task/single\n  }\n}\n\nagent Sink {\n  sensor in: generic(\"bus\")\n  rule take: on task then {\n    set got = true\n  }\n  state got = false\n}\n\nSource.out -> Sink.in { reliability = 30% } carries task/single\n";
    let t = run(&text_model(text), 0, 10, &[], RunConfig::default()).unwrap();
    let d = of_kind(&t, TraceKind::Delivered);
    assert_eq!(d.len(), 1);
    assert_eq!(d[0].detail["considered"], false);
    assert!(of_kind(&t, TraceKind::StateChanged).is_empty());
    let lenient = RunConfig { reliability_threshold: 0.3, ..RunConfig::default() };
    let t = run(&text_model(text), 0, 10, &[], lenient).unwrap();
    assert_eq!(of_kind(&t, TraceKind::StateChanged).len(), 1);
}

#[test]
fn stochastic_reliability_follows_the_seed() {
    let text = "agent Source {\n  actuator out: generic(\"bus\")\n  rule go: on start then {\n    emit out task/single\n  }\n}\n\nagent Sink {\n  sensor in: generic(\"bus\")\n}\n\nSource.out -> Sink.in { reliability = 50% } carries task/single\n";
    let m = text_model(text);
    let cfg = RunConfig { stochastic_reliability: true, ..RunConfig::default() };
    let mut considered = 0;
    for seed in 0..200 {
        let t = run(&m, seed, 5, &[], cfg.clone()).unwrap();
        let again = run(&m, seed, 5, &[], cfg.clone()).unwrap();
        assert_eq!(t, again);
        considered += usize::from(of_kind(&t, TraceKind::Delivered)[0].detail["considered"] == true);
    }
    assert!((60..=140).contains(&considered), "{considered}");
}

#[test]
fn vetoed_windows_never_commit() {
    let mut vetoes = 0;
    for (i, (_, t)) in random_runs(300).enumerate() {
        let vetoed: BTreeSet<(&str, &str)> = of_kind(&t, TraceKind::WindowVetoed).iter().map(|e| (e.subject.as_str(), e.object.as_str())).collect();
        vetoes += vetoed.len();
        for e in of_kind(&t, TraceKind::WindowCommitted) {
            assert!(!vetoed.contains(&(e.subject.as_str(), e.object.as_str())), "run {i}: {e:?}");
        }
        let mut resolved = BTreeSet::new();
        for e in t.events.iter().filter(|e| matches!(e.kind, TraceKind::WindowVetoed | TraceKind::WindowCommitted)) {
            assert!(resolved.insert((e.subject.clone(), e.object.clone())), "run {i}: resolved twice {e:?}");
        }
    }
    assert!(vetoes > 0);
}

#[test]
fn level_six_commits_when_the_window_ends() {
    let m = scaffold_level(6).unwrap();
    let t = run(&m, 1, 40, &[], RunConfig::default()).unwrap();
    let opened = of_kind(&t, TraceKind::WindowOpened);
    let committed = of_kind(&t, TraceKind::WindowCommitted);
    assert_eq!((opened.len(), committed.len()), (1, 1));
    let duration = opened[0].detail["duration"].as_u64().unwrap();
    assert_eq!(duration, 14);
    assert_eq!(committed[0].tick, opened[0].tick + duration);
    assert!(!of_kind(&t, TraceKind::CandidateSelected).is_empty());

    let (human, _) = scaffold_parties();
    let inj = [Injection::new(opened[0].tick + 3, &human.to_string(), InjectedAction::Veto)];
    let t = run(&m, 1, 40, &inj, RunConfig::default()).unwrap();
    assert!(of_kind(&t, TraceKind::WindowCommitted).is_empty());
    assert_eq!(of_kind(&t, TraceKind::WindowVetoed).len(), 1);
}

const OBEY: &str = "agent Boss {\n  actuator say: auditory\n  functional \"human\"\n}\n\nagent Hand {\n  sensor ear: auditory\n  rule obey: on instruction(suspend) if count < LIMIT then {\n    set count = count + 1\n  }\n  state count = 0\n}\n\nBoss.say -> Hand.ear { conformity = DECLARED% } carries instruction(suspend)/single\n";

fn obey_run(limit: u32, declared: u32) -> (Model, Trace) {
    let m = text_model(&OBEY.replace("LIMIT", &limit.to_string()).replace("DECLARED", &declared.to_string()));
    let inj: Vec<Injection> = (0..10)
        .map(|t| Injection::new(t, "Boss", InjectedAction::Instruct(amn_core::model::InstructionKind::Suspend)))
        .collect();
    let t = run(&m, 0, 20, &inj, RunConfig::default()).unwrap();
    (m, t)
}

#[test]
fn perfect_conformity_is_not_flagged() {
    let (m, t) = obey_run(100, 100);
    let r = check_trace(&t.events, &m).unwrap();
    assert_eq!(r.channels.len(), 1);
    assert_eq!(r.channels[0].measured, Some(1.0));
    assert_eq!(r.channels[0].instructions, 10);
    assert!(!r.channels[0].flagged);
    assert!(r.conforming);
}

#[test]
fn half_conformity_against_ninety_is_flagged() {
    let (m, t) = obey_run(5, 90);
    let r = check_trace(&t.events, &m).unwrap();
    assert_eq!(r.channels[0].measured, Some(0.5));
    assert_eq!(r.channels[0].instructions, 10);
    assert!(r.channels[0].flagged);
    assert!(!r.conforming);
    let (m, t) = obey_run(5, 60);
    assert!(!check_trace(&t.events, &m).unwrap().channels[0].flagged);
}

#[test]
fn helpful_scenario_notifies_as_declared() {
    let m = helpful();
    let t = run(&m, 42, 30, &[], RunConfig::default()).unwrap();
    let r = check_trace(&t.events, &m).unwrap();
    let dm: Vec<_> = r.notifications.iter().filter(|n| n.agent == "Producer.DecisionMaker").collect();
    assert_eq!(dm.len(), 1);
    assert_eq!(dm[0].mode, "always");
    assert!(dm[0].ok && dm[0].basis == 1);
    assert!(r.conforming);
}

#[test]
fn traces_from_another_model_are_rejected() {
    let t = run(&helpful(), 42, 30, &[], RunConfig::default()).unwrap();
    assert!(check_trace(&t.events, &text_model(BURST)).is_err());
}

#[test]
fn every_scaffold_runs_clean() {
    for level in 1..=20 {
        let m = scaffold_level(level).unwrap();
        let t = run(&m, 3, 40, &[], RunConfig::default()).unwrap();
        assert!(channel_balance(&t).iter().all(ChannelBalance::balanced), "level {level}");
        assert!(check_trace(&t.events, &m).is_ok(), "level {level}");
    }
}

#[test]
fn corpus_models_balance() {
    for sub in ["scenario", "patterns"] {
        for f in corpus_files(sub) {
            let m = load(&format!("corpus/{sub}/{}", f.file_name().unwrap().to_string_lossy()));
            let t = run(&m, 42, 30, &[], RunConfig::default()).unwrap();
            assert!(channel_balance(&t).iter().all(ChannelBalance::balanced), "{}", f.display());
        }
    }
}

#[test]
fn schedules_parse_into_injections() {
    let inj = parse_schedule("# veto late\ntick=5 Family veto\n\ntick=0 Boss instruct suspend\ntick=2 Producer.Analyzer emit options candidates/all\n").unwrap();
    assert_eq!(inj.len(), 3);
    assert_eq!(inj[0], Injection::new(5, "Family", InjectedAction::Veto));
    assert!(matches!(inj[2].action, InjectedAction::Act(_)));
    assert_eq!(parse_schedule("tick=x A veto").unwrap_err().line, 1);
    assert!(parse_schedule("tick=1 A dance").is_err());
}
