#![allow(dead_code)]

use std::path::{Path, PathBuf};

use specrag::openapi::{parse_spec, SpecDocument};

pub fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn fixture_doc(name: &str) -> SpecDocument {
    let bytes = std::fs::read(fixture(name)).expect("fixture exists");
    let stem = name.trim_end_matches(".json");
    parse_spec(&bytes, stem).expect("fixture parses")
}

/// Where the RestBench files are looked up: `$SPECRAG_RESTBENCH_DIR`, else
/// `data/restbench` at the workspace root.
pub fn restbench_dir() -> PathBuf {
    match std::env::var_os("SPECRAG_RESTBENCH_DIR") {
        Some(d) => PathBuf::from(d),
        None => workspace_root().join("data/restbench"),
    }
}

/// A RestBench file by name, either directly in the data directory or in
/// its `specs/` or `datasets/` subdirectory.
pub fn restbench_file(name: &str) -> Result<PathBuf, String> {
    let dir = restbench_dir();
    for sub in ["", "specs", "datasets"] {
        let p = dir.join(sub).join(name);
        if p.is_file() {
            return Ok(p);
        }
    }
    Err(format!("RestBench file {name} not found under {}", dir.display()))
}

pub fn restbench_spec(api: &str) -> Result<SpecDocument, String> {
    let path = restbench_file(&format!("{api}_oas.json"))?;
    let bytes = std::fs::read(&path).map_err(|e| e.to_string())?;
    parse_spec(&bytes, api).map_err(|e| e.to_string())
}

pub fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .ancestors()
        .nth(2)
        .expect("crate sits two levels below the workspace")
        .to_path_buf()
}
