//! Run manifests: the config hash plus a checksum line per artifact.
//!
//! Every subcommand writes `<command>.manifest` into the reports directory.
//! Lines are `config <sha256>` followed by `<name> <sha256> <bytes>` per
//! artifact, sorted by name, so identical runs produce identical manifests.

use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::config::hex_digest;
use crate::formats::write_atomic;
use crate::Result;

/// One artifact written by a command.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArtifactRecord {
    /// Name relative to the run; never an absolute path.
    pub name: String,
    pub sha256: String,
    pub bytes: u64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hex_digest(&hasher.finalize())
}

/// Collects artifacts as a command writes them.
#[derive(Debug, Default)]
pub struct ManifestBuilder {
    records: Vec<ArtifactRecord>,
}

impl ManifestBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Write an artifact atomically and record its checksum.
    pub fn write(&mut self, path: &Path, bytes: &[u8]) -> Result<()> {
        write_atomic(path, bytes)?;
        self.records.push(ArtifactRecord {
            name: file_name(path),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    /// Render and write `<command>.manifest` under `reports_dir`.
    pub fn finish(mut self, reports_dir: &Path, command: &str, config_hash: &str) -> Result<PathBuf> {
        self.records.sort_by(|a, b| a.name.cmp(&b.name));
        let mut text = format!("config {config_hash}\n");
        for r in &self.records {
            text.push_str(&format!("{} {} {}\n", r.name, r.sha256, r.bytes));
        }
        let path = reports_dir.join(format!("{command}.manifest"));
        write_atomic(&path, text.as_bytes())?;
        Ok(path)
    }
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

/// Re-hash every artifact named in a manifest and compare.
pub fn verify_manifest(manifest_path: &Path, search_dirs: &[&Path]) -> Result<Vec<String>> {
    let text = std::fs::read_to_string(manifest_path)
        .map_err(|e| crate::error::ToolsError::io(manifest_path, e))?;
    let mut mismatches = Vec::new();
    for line in text.lines().skip(1) {
        let mut words = line.split_whitespace();
        let (Some(name), Some(expected), Some(size)) =
            (words.next(), words.next(), words.next())
        else {
            mismatches.push(format!("malformed manifest line: {line}"));
            continue;
        };
        let mut found = false;
        for dir in search_dirs {
            let candidate = dir.join(name);
            if candidate.is_file() {
                let bytes = std::fs::read(&candidate)
                    .map_err(|e| crate::error::ToolsError::io(&candidate, e))?;
                if sha256_hex(&bytes) != expected || bytes.len().to_string() != size {
                    mismatches.push(format!("checksum mismatch for {name}"));
                }
                found = true;
                break;
            }
        }
        if !found {
            mismatches.push(format!("artifact {name} not found"));
        }
    }
    Ok(mismatches)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_lists_sorted_checksums() {
        let dir = tempfile::tempdir().unwrap();
        let mut b = ManifestBuilder::new();
        b.write(&dir.path().join("zeta.bin"), b"zzz").unwrap();
        b.write(&dir.path().join("alpha.bin"), b"aaa").unwrap();
        let path = b.finish(dir.path(), "demo", "cfg123").unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "config cfg123");
        assert!(lines[1].starts_with("alpha.bin "));
        assert!(lines[2].starts_with("zeta.bin "));
        assert!(lines[1].ends_with(" 3"));

        let mismatches = verify_manifest(&path, &[dir.path()]).unwrap();
        assert!(mismatches.is_empty(), "{mismatches:?}");

        std::fs::write(dir.path().join("alpha.bin"), b"tampered").unwrap();
        let mismatches = verify_manifest(&path, &[dir.path()]).unwrap();
        assert_eq!(mismatches.len(), 1);
        assert!(mismatches[0].contains("alpha.bin"));
    }
}
