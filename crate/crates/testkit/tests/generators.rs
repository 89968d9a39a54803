use amn_core::validator;
use amn_testkit::gen::{self, GenConfig};

fn errors(m: &amn_core::Model) -> Vec<String> {
    validator::validate(m)
        .into_iter()
        .filter(|d| d.is_error())
        .map(|d| format!("{} {}", d.code, d.message))
        .collect()
}

#[test]
fn rich_models_validate() {
    let cfg = GenConfig::rich();
    for seed in 0..300 {
        let m = gen::model(seed, &cfg);
        assert_eq!(errors(&m), Vec::<String>::new(), "seed {seed}:\n{}", amn_core::dsl::print(&m));
    }
}

#[test]
fn small_models_stay_small_and_validate() {
    let cfg = GenConfig::small();
    for seed in 0..300 {
        let m = gen::model(seed, &cfg);
        assert_eq!(errors(&m), Vec::<String>::new(), "seed {seed}");
        let defs = m.walk().len();
        assert!(defs <= 3, "seed {seed}: {defs} agents");
        for w in m.walk() {
            assert!(w.def.behavior.rules.len() <= 2);
        }
    }
}

#[test]
fn generation_is_deterministic() {
    let cfg = GenConfig::rich();
    for seed in 0..20 {
        assert_eq!(gen::model(seed, &cfg), gen::model(seed, &cfg));
    }
}

#[test]
fn generated_runs_are_accepted() {
    let cfg = GenConfig::small();
    for seed in 0..100 {
        let m = gen::model(seed, &cfg);
        let inj = gen::injections(&m, seed, 5);
        let rc = gen::run_config(&m, seed);
        amn_core::simulator::run(&m, seed, 5, &inj, rc).unwrap_or_else(|e| panic!("seed {seed}: {e}"));
    }
}
