use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::RunConfig;
use crate::error::{Error, Result};
use crate::flowfields::io::write_json;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Provenance of one output directory. Holds no timestamps, so two runs
/// with the same configuration and seed produce the same manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    pub stages: Vec<String>,
    /// Relative path (with `/` separators) to SHA-256.
    pub files: BTreeMap<String, String>,
}

fn collect(root: &Path, dir: &Path, files: &mut BTreeMap<String, String>) -> Result<()> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_dir() {
            collect(root, &path, files)?;
            continue;
        }
        let rel = path.strip_prefix(root).expect("inside root");
        let rel: Vec<String> = rel
            .components()
            .map(|c| c.as_os_str().to_string_lossy().into())
            .collect();
        let rel = rel.join("/");
        if rel == MANIFEST_FILE {
            continue;
        }
        let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
        files.insert(rel, hex::encode(Sha256::digest(&bytes)));
    }
    Ok(())
}

/// Hashes every file under `out` and writes `manifest.json`.
pub fn write_manifest(out: &Path, config: &RunConfig, stages: &[&str]) -> Result<Manifest> {
    let mut files = BTreeMap::new();
    collect(out, out, &mut files)?;
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: config.hash(),
        seed: config.seed,
        stages: stages.iter().map(|s| s.to_string()).collect(),
        files,
    };
    write_json(&out.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hashes_nested_files_and_skips_itself() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::create_dir(dir.path().join("a")).unwrap();
        std::fs::write(dir.path().join("a/x.txt"), "abc").unwrap();
        let m = write_manifest(dir.path(), &RunConfig::default(), &["one"]).unwrap();
        assert_eq!(
            m.files["a/x.txt"],
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        let again = write_manifest(dir.path(), &RunConfig::default(), &["one"]).unwrap();
        assert_eq!(m, again);
        assert_eq!(m.files.len(), 1);
    }
}
