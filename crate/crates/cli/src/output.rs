//! All-or-nothing artifact writes and run manifests.

use crate::error::{io_err, CliResult};
use serde_json::{json, Value};
use std::io::Write;
use std::path::{Path, PathBuf};

pub struct Artifact {
    pub path: PathBuf,
    pub bytes: Vec<u8>,
}

/// Stage every artifact in a temporary file next to its target, then move
/// them into place. A failure before the first rename leaves nothing behind.
pub fn persist_all(artifacts: Vec<Artifact>) -> CliResult<()> {
    let mut staged = Vec::with_capacity(artifacts.len());
    for a in artifacts {
        let dir = match a.path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        };
        let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| io_err(dir.display(), e))?;
        tmp.write_all(&a.bytes).and_then(|_| tmp.flush()).map_err(|e| io_err(a.path.display(), e))?;
        staged.push((tmp, a.path));
    }
    for (tmp, path) in staged {
        tmp.persist(&path).map_err(|e| io_err(path.display(), e.error))?;
    }
    Ok(())
}

/// `results.csv` -> `results.manifest.json`.
pub fn manifest_path(out: &Path) -> PathBuf {
    out.with_extension("manifest.json")
}

/// Everything needed to rerun a report, with keys sorted.
pub fn manifest(command: &str, config: &Value, seed: Option<u64>, wall_time_s: f64, extra: &Value) -> Vec<u8> {
    let m = json!({
        "command": command,
        "config": config,
        "library_version": roughlab::VERSION,
        "seed": seed,
        "wall_time_s": wall_time_s,
        "diagnostics": extra,
    });
    let mut out = serde_json::to_vec_pretty(&m).expect("manifest serializes");
    out.push(b'\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_keys_are_sorted() {
        let text = String::from_utf8(manifest("x y", &json!({"z": 1, "a": 2}), Some(7), 0.5, &Value::Null)).unwrap();
        let keys = ["command", "config", "diagnostics", "library_version", "seed", "wall_time_s"];
        let pos: Vec<usize> = keys.iter().map(|k| text.find(&format!("\"{k}\"")).unwrap()).collect();
        assert!(pos.windows(2).all(|w| w[0] < w[1]), "{text}");
        assert!(text.find("\"a\"").unwrap() < text.find("\"z\"").unwrap());
    }

    #[test]
    fn persist_writes_every_artifact() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.csv");
        let b = dir.path().join("a.manifest.json");
        persist_all(vec![Artifact { path: a.clone(), bytes: b"x\n".to_vec() }, Artifact { path: b.clone(), bytes: b"{}".to_vec() }])
            .unwrap();
        assert_eq!(std::fs::read(&a).unwrap(), b"x\n");
        assert_eq!(std::fs::read(&b).unwrap(), b"{}");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 2);
    }
}
