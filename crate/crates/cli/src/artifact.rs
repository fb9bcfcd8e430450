use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::{Deserialize, Serialize};

use genflow::fnv1a64;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn hex(h: u64) -> String {
    format!("{h:016x}")
}

/// Comment block heading every CSV we write.
pub fn csv_comment(config_hash: u64) -> String {
    format!("genflow {VERSION} config={}", hex(config_hash))
}

pub fn write_file(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}

pub fn read_file(path: &Path) -> anyhow::Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("reading {}", path.display()))
}

pub fn read_text(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileHash {
    pub file: String,
    pub fnv1a64: String,
}

impl FileHash {
    pub fn of(root: &Path, path: &Path) -> anyhow::Result<Self> {
        let rel = path.strip_prefix(root).unwrap_or(path);
        Ok(Self {
            file: rel.to_string_lossy().replace('\\', "/"),
            fnv1a64: hex(fnv1a64(&read_file(path)?)),
        })
    }
}

/// Hash of a list of file hashes, order-sensitive.
pub fn combined_hash(files: &[FileHash]) -> String {
    let mut text = String::new();
    for f in files {
        text.push_str(&f.file);
        text.push(' ');
        text.push_str(&f.fnv1a64);
        text.push('\n');
    }
    hex(fnv1a64(text.as_bytes()))
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> anyhow::Result<Vec<u8>> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s.into_bytes())
}

/// Resolves `rel` against each base in turn, returning the first that exists.
pub fn resolve(rel: &str, bases: &[&Path]) -> anyhow::Result<PathBuf> {
    let p = Path::new(rel);
    if p.is_absolute() {
        anyhow::ensure!(p.exists(), "{} does not exist", p.display());
        return Ok(p.to_path_buf());
    }
    let tried: Vec<PathBuf> = bases.iter().map(|b| b.join(p)).collect();
    tried.iter().find(|c| c.exists()).cloned().with_context(|| {
        let list: Vec<String> = tried.iter().map(|t| t.display().to_string()).collect();
        format!("`{rel}` not found (tried {})", list.join(", "))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resolve_tries_bases_in_order() {
        let tmp = tempfile::tempdir().unwrap();
        let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
        write_file(&b.join("c.json"), b"{}").unwrap();
        assert_eq!(resolve("c.json", &[&a, &b]).unwrap(), b.join("c.json"));
        write_file(&a.join("c.json"), b"{}").unwrap();
        assert_eq!(resolve("c.json", &[&a, &b]).unwrap(), a.join("c.json"));
        let err = resolve("missing.json", &[&a, &b]).unwrap_err().to_string();
        assert!(err.contains("missing.json") && err.contains("tried"));
    }

    #[test]
    fn combined_hash_is_order_sensitive() {
        let f = |name: &str, h: &str| FileHash {
            file: name.into(),
            fnv1a64: h.into(),
        };
        let x = [f("a", "01"), f("b", "02")];
        let y = [f("b", "02"), f("a", "01")];
        assert_ne!(combined_hash(&x), combined_hash(&y));
        assert_eq!(
            csv_comment(0xab),
            format!("genflow {VERSION} config=00000000000000ab")
        );
    }
}
