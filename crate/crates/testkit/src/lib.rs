//! Test support for amn-core: seeded random model generators and a naive
//! reference interpreter used as an oracle for the simulator.

pub mod gen;
pub mod reference;

use std::path::PathBuf;

/// Root of the workspace, for reading the fixture corpus.
pub fn workspace_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .canonicalize()
        .expect("workspace root exists")
}

/// Every `.amn` file under `corpus/<sub>`, sorted by name.
pub fn corpus_files(sub: &str) -> Vec<PathBuf> {
    let dir = workspace_root().join("corpus").join(sub);
    let mut out: Vec<PathBuf> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("cannot read {}: {e}", dir.display()))
        .map(|e| e.expect("directory entry").path())
        .filter(|p| p.extension().is_some_and(|x| x == "amn"))
        .collect();
    out.sort();
    out
}
