use amn_core::dsl;
use amn_testkit::gen::{self, GenConfig};
use proptest::prelude::*;

fn check(seed: u64) -> Result<(), String> {
    let m = gen::model(seed, &GenConfig::rich());
    let text = dsl::print(&m);
    let (back, diags) = dsl::parse(&text, "gen.amn");
    if !diags.is_empty() {
        return Err(format!("seed {seed}: {diags:?}\n{text}"));
    }
    if back != m {
        return Err(format!("seed {seed}: reparsed model differs\n{text}"));
    }
    let once = dsl::fmt(&text, "gen.amn").map_err(|d| format!("{d:?}"))?;
    let twice = dsl::fmt(&once, "gen.amn").map_err(|d| format!("{d:?}"))?;
    if once != text || twice != once {
        return Err(format!("seed {seed}: fmt is not idempotent"));
    }
    Ok(())
}

#[test]
fn thousand_generated_models_round_trip() {
    let failures: Vec<String> = (0..1000).filter_map(|s| check(s).err()).collect();
    assert!(failures.is_empty(), "{} failures, first:\n{}", failures.len(), failures[0]);
}

proptest! {
    #[test]
    fn any_seed_round_trips(seed in any::<u64>()) {
        prop_assert_eq!(check(seed), Ok(()));
    }
}
