//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero when any criterion fails.

use std::collections::BTreeSet;
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::{Command, Output, Stdio};
use std::time::{Duration, Instant};

use amn_core::autonomy::{classify_pattern, scaffold_level};
use amn_core::dsl;
use amn_core::model::Model;
use amn_core::render::{to_dot, RenderOptions};
use amn_core::simulator::{self, channel_balance, events_to_jsonl, Injection, InjectedAction, RunConfig, TraceEvent, TraceKind};
use amn_core::validator::{validate, CATALOGUE};
use amn_testkit::gen::{self, GenConfig};
use amn_testkit::{corpus_files, reference, workspace_root};
use serde_json::Value;

const HELPFUL: &str = "corpus/scenario/scenario_helpful.amn";
const SELFISH: &str = "corpus/scenario/scenario_selfinterested.amn";
const WINDOW: u64 = 14;

type Verdict = Result<String, String>;

fn amn(args: &[&str], stdin: Option<&str>) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_amn"))
        .args(args)
        .current_dir(workspace_root())
        .env("AMN_NO_COLOR", "1")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("amn binary runs");
    let mut pipe = child.stdin.take().unwrap();
    pipe.write_all(stdin.unwrap_or_default().as_bytes()).unwrap();
    drop(pipe);
    child.wait_with_output().unwrap()
}

fn ok_stdout(args: &[&str], stdin: Option<&str>) -> Result<String, String> {
    let o = amn(args, stdin);
    if o.status.code() != Some(0) {
        return Err(format!(
            "`amn {}` exited {:?}: {}",
            args.join(" "),
            o.status.code(),
            String::from_utf8_lossy(&o.stderr)
        ));
    }
    Ok(String::from_utf8(o.stdout).unwrap())
}

fn levels_of(json: &str) -> Result<Vec<u64>, String> {
    let v: Value = serde_json::from_str(json).map_err(|e| e.to_string())?;
    Ok(v["levels"]
        .as_array()
        .ok_or("no levels in classification")?
        .iter()
        .filter_map(Value::as_u64)
        .collect())
}

fn trace_of(text: &str) -> Result<Vec<TraceEvent>, String> {
    simulator::events_from_jsonl(text).map_err(|e| e.to_string())
}

fn emitted_to<'a>(t: &'a [TraceEvent], to: &str, spec_prefix: &'a str) -> impl Iterator<Item = &'a TraceEvent> + 'a {
    let to = to.to_owned();
    t.iter().filter(move |e| {
        e.kind == TraceKind::Emitted
            && e.detail["to"] == to.as_str()
            && e.spec().is_some_and(|s| s.starts_with(spec_prefix))
    })
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit: Duration, started: Instant) -> Result<Duration, String> {
    let took = started.elapsed();
    check(took < limit, || format!("took {took:?}, limit {limit:?}"))?;
    Ok(took)
}

fn load(path: &std::path::Path) -> Model {
    let (m, d) = dsl::parse(&std::fs::read_to_string(path).unwrap(), &path.display().to_string());
    assert!(d.is_empty(), "{}: {d:?}", path.display());
    m
}

fn scenario_helpful() -> Verdict {
    let started = Instant::now();
    let v = amn(&["validate", HELPFUL], None);
    check(v.status.code() == Some(0) && v.stdout.is_empty(), || {
        format!("validate reported: {}", String::from_utf8_lossy(&v.stdout))
    })?;
    let levels = levels_of(&ok_stdout(&["classify", HELPFUL, "--human", "Family", "--machine", "Producer"], None)?)?;
    check(levels.contains(&6), || format!("levels {levels:?} lack 6"))?;

    let trace = trace_of(&ok_stdout(&["simulate", HELPFUL, "--ticks", "30", "--seed", "42"], None)?)?;
    let opened: Vec<_> = trace.iter().filter(|e| e.kind == TraceKind::WindowOpened).collect();
    check(opened.len() == 1, || format!("{} windows opened", opened.len()))?;
    let open_tick = opened[0].tick;
    let tasks: Vec<_> = emitted_to(&trace, "Supplier", "task").collect();
    check(tasks.len() == 1, || format!("{} supplier tasks", tasks.len()))?;
    check(tasks[0].tick == open_tick + WINDOW, || {
        format!("task at tick {}, window opened at {open_tick}", tasks[0].tick)
    })?;
    let notes = emitted_to(&trace, "Family", "notification").count();
    check(notes >= 1, || "no notification to the family".into())?;

    let dir = tempfile::tempdir().unwrap();
    let schedule = dir.path().join("veto.txt");
    for at in open_tick + 1..=open_tick + WINDOW {
        std::fs::write(&schedule, format!("tick={at} Family veto\n")).unwrap();
        let t = trace_of(&ok_stdout(
            &["simulate", HELPFUL, "--ticks", "30", "--seed", "42", "--inject", schedule.to_str().unwrap()],
            None,
        )?)?;
        let leaked = emitted_to(&t, "Supplier", "task").count();
        check(leaked == 0, || format!("veto at tick {at} still sent {leaked} task(s)"))?;
    }
    let took = within(Duration::from_secs(1), started)?;
    Ok(format!(
        "levels {levels:?}; window opens at {open_tick}, order at {}; {notes} notification(s); vetoes at {}..={} all cancel; {took:.0?}",
        tasks[0].tick,
        open_tick + 1,
        open_tick + WINDOW
    ))
}

fn scenario_self_interested() -> Verdict {
    let started = Instant::now();
    let levels = levels_of(&ok_stdout(&["classify", SELFISH, "--human", "Family", "--machine", "Producer"], None)?)?;
    check(levels.contains(&1), || format!("levels {levels:?} lack 1"))?;
    let trace = trace_of(&ok_stdout(&["simulate", SELFISH, "--ticks", "30", "--seed", "42"], None)?)?;
    let notes = trace
        .iter()
        .filter(|e| e.spec().is_some_and(|s| s.starts_with("notification")))
        .filter(|e| e.detail["to"] == "Family" || e.subject == "Family")
        .count();
    check(notes == 0, || format!("{notes} notification events reach the family"))?;
    let refusal = trace
        .iter()
        .find(|e| e.kind == TraceKind::Emitted && e.spec() == Some("reaction(refusal)/single"))
        .ok_or("no supplier refusal in the trace")?;
    let task = emitted_to(&trace, "Supplier", "task").next().ok_or("no supplier task")?;
    let lag = task.tick - refusal.tick;
    check(lag <= 3, || format!("task {lag} ticks after the refusal"))?;
    let took = within(Duration::from_secs(1), started)?;
    Ok(format!("levels {levels:?}; 0 notifications; task {lag} tick(s) after refusal; {took:.0?}"))
}

fn level_round_trip() -> Verdict {
    let mut passed = 0;
    let mut failed = Vec::new();
    for level in 1..=20u64 {
        let result = (|| {
            let text = ok_stdout(&["scaffold", "--level", &level.to_string()], None)?;
            let v = amn(&["validate", "-"], Some(&text));
            check(v.status.code() == Some(0) && v.stdout.is_empty(), || {
                format!("validate: {}", String::from_utf8_lossy(&v.stdout))
            })?;
            let levels = levels_of(&ok_stdout(
                &["classify", "-", "--human", "System.Human", "--machine", "System.Machine"],
                Some(&text),
            )?)?;
            check(levels.contains(&level), || format!("classified as {levels:?}"))
        })();
        match result {
            Ok(()) => passed += 1,
            Err(e) => failed.push(format!("level {level}: {e}")),
        }
    }
    check(failed.is_empty(), || failed.join("; "))?;
    Ok(format!("{passed}/20 levels"))
}

fn pattern_suite() -> Verdict {
    let files = corpus_files("patterns");
    let mut seen = BTreeSet::new();
    let mut failed = Vec::new();
    for f in &files {
        let name = f.file_name().unwrap().to_string_lossy().into_owned();
        let expected = name.trim_start_matches("pattern_").split('_').next().unwrap().to_owned();
        let m = load(f);
        match classify_pattern(&m) {
            Ok(r) if r.pattern.as_str().eq_ignore_ascii_case(&expected) => {
                seen.insert(expected);
            }
            other => failed.push(format!("{name}: {other:?}")),
        }
    }
    check(failed.is_empty(), || failed.join("; "))?;
    let wanted: BTreeSet<String> = ["a", "b", "c", "d", "e", "f", "g", "h", "composite"].map(String::from).into();
    check(seen == wanted, || format!("patterns covered: {seen:?}"))?;
    Ok(format!("{}/9 fixtures", seen.len()))
}

fn mutation_corpus() -> Verdict {
    let mut covered = BTreeSet::new();
    let mut failed = Vec::new();
    let files = corpus_files("mutations");
    for f in &files {
        let name = f.file_name().unwrap().to_string_lossy().into_owned();
        let expected = name.split('_').next().unwrap().to_owned();
        let text = std::fs::read_to_string(f).unwrap();
        let codes = catch_unwind(|| {
            let (m, _) = dsl::parse(&text, &name);
            validate(&m).iter().map(|d| d.code).collect::<Vec<_>>()
        });
        match codes {
            Ok(codes) if codes.contains(&expected.as_str()) => {
                covered.insert(expected);
            }
            Ok(codes) => failed.push(format!("{name} gave {codes:?}")),
            Err(_) => failed.push(format!("{name} crashed the validator")),
        }
    }
    check(failed.is_empty(), || failed.join("; "))?;
    let catalogue: BTreeSet<String> = CATALOGUE.iter().map(|c| c.0.to_owned()).collect();
    check(catalogue.len() >= 20, || format!("only {} codes published", catalogue.len()))?;
    let missing: Vec<_> = catalogue.difference(&covered).collect();
    check(missing.is_empty(), || format!("codes without a fixture: {missing:?}"))?;
    Ok(format!("{} fixtures cover {}/{} codes", files.len(), covered.len(), catalogue.len()))
}

fn dsl_round_trip() -> Verdict {
    let started = Instant::now();
    let mut failures = Vec::new();
    for seed in 0..1000 {
        let m = gen::model(seed, &GenConfig::rich());
        let text = dsl::print(&m);
        let (back, diags) = dsl::parse(&text, "gen.amn");
        let once = dsl::fmt(&text, "gen.amn");
        let twice = once.as_ref().ok().map(|o| dsl::fmt(o, "gen.amn"));
        let idempotent = matches!((&once, &twice), (Ok(a), Some(Ok(b))) if a == b);
        if !diags.is_empty() || back != m || !idempotent {
            failures.push(seed);
        }
    }
    check(failures.is_empty(), || format!("{} failing seeds, first {}", failures.len(), failures[0]))?;
    let took = within(Duration::from_secs(30), started)?;
    Ok(format!("1000/1000 models; {took:.1?}"))
}

fn oracle_equivalence() -> Verdict {
    const TICKS: u64 = 5;
    let cfg = GenConfig::small();
    let mut divergent = Vec::new();
    for seed in 0..200 {
        let m = gen::model(seed, &cfg);
        let rules = m.walk().iter().map(|a| a.def.behavior.rules.len()).max().unwrap_or(0);
        check(m.walk().len() <= 3 && rules <= 2, || format!("seed {seed} exceeds the size bound"))?;
        let inj = gen::injections(&m, seed, TICKS);
        let rc = gen::run_config(&m, seed);
        let got = simulator::run(&m, seed, TICKS, &inj, rc.clone()).map_err(|e| e.to_string())?;
        let again = simulator::run(&m, seed, TICKS, &inj, rc.clone()).map_err(|e| e.to_string())?;
        let want = reference::run(&m, seed, TICKS, &inj, rc);
        let same = got.events == want.events && got.end_tick == want.end_tick && got.quiescent == want.quiescent;
        let rerun = events_to_jsonl(&got.events) == events_to_jsonl(&again.events);
        if !same || !rerun {
            divergent.push(seed);
        }
    }
    check(divergent.is_empty(), || format!("divergent seeds: {divergent:?}"))?;
    Ok("200/200 traces match the reference; reruns identical".into())
}

/// Models the corpus simulates: the scenarios, pattern fixtures and scaffolds.
fn corpus_models() -> Vec<(String, Model)> {
    let mut out = Vec::new();
    for sub in ["scenario", "patterns"] {
        for f in corpus_files(sub) {
            out.push((f.file_name().unwrap().to_string_lossy().into_owned(), load(&f)));
        }
    }
    for level in 1..=20 {
        out.push((format!("scaffold level {level}"), scaffold_level(level).unwrap()));
    }
    out
}

fn conservation() -> Verdict {
    let mut runs = Vec::new();
    for (name, m) in corpus_models() {
        runs.push((name.clone(), m.clone(), Vec::new()));
        if name.starts_with("scenario_helpful") {
            for at in [3, 9, 16] {
                runs.push((format!("{name} veto@{at}"), m.clone(), vec![Injection::new(at, "Family", InjectedAction::Veto)]));
            }
        }
    }
    let mut channels = 0;
    for (name, m, inj) in &runs {
        for overflow in [simulator::Overflow::Queue, simulator::Overflow::DropNewest] {
            let cfg = RunConfig { overflow, ..RunConfig::default() };
            let t = simulator::run(m, 42, 30, inj, cfg).map_err(|e| format!("{name}: {e}"))?;
            for (c, b) in channel_balance(&t).iter().enumerate() {
                check(b.balanced(), || format!("{name} channel {c}: {b:?}"))?;
                channels += 1;
            }
        }
    }
    Ok(format!("{} runs, {channels} channel balances exact", runs.len() * 2))
}

fn render_determinism() -> Verdict {
    let mut count = 0;
    for (name, m) in corpus_models() {
        let opts = RenderOptions::default();
        let first = to_dot(&m, &opts).map_err(|e| format!("{name}: {e}"))?;
        for _ in 0..2 {
            check(to_dot(&m, &opts).as_ref() == Ok(&first), || format!("{name}: output changed"))?;
        }
        graphviz_rust::parse(&first).map_err(|e| format!("{name}: {e}"))?;
        count += 1;
    }
    Ok(format!("{count} models render identically and parse as DOT"))
}

fn main() {
    let criteria: [(&str, fn() -> Verdict); 9] = [
        ("scenario, helpful producer", scenario_helpful),
        ("scenario, self-interested producer", scenario_self_interested),
        ("autonomy level round trip", level_round_trip),
        ("interaction pattern suite", pattern_suite),
        ("validator mutation corpus", mutation_corpus),
        ("DSL round trip", dsl_round_trip),
        ("simulator determinism and oracle equivalence", oracle_equivalence),
        ("channel conservation", conservation),
        ("render determinism", render_determinism),
    ];
    // Criteria report their own failures; keep panics quiet.
    std::panic::set_hook(Box::new(|_| {}));
    let mut failures = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let verdict = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into());
            Err(msg)
        });
        match verdict {
            Ok(detail) => println!("criterion {}: PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failures += 1;
                println!("criterion {}: FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {}/{} criteria passed", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
