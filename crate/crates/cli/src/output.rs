use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::de::DeserializeOwned;
use tempfile::NamedTempFile;

/// Writes `bytes` to `path` through a temporary file in the same directory,
/// so readers never see a partial file. `None` writes to stdout.
pub fn write_output(path: Option<&Path>, bytes: &[u8]) -> anyhow::Result<()> {
    let Some(path) = path else {
        let mut out = io::stdout().lock();
        out.write_all(bytes)?;
        return Ok(out.flush()?);
    };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let mut tmp = NamedTempFile::new_in(&dir).with_context(|| format!("cannot write in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

pub fn jsonl_bytes<T: serde::Serialize>(items: &[T]) -> Vec<u8> {
    let mut buf = Vec::new();
    lemurkit::io::write_jsonl(&mut buf, items).expect("writing to memory");
    buf
}

pub fn open(path: &Path) -> anyhow::Result<BufReader<File>> {
    let file = File::open(path).with_context(|| format!("cannot read {}", path.display()))?;
    Ok(BufReader::new(file))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    serde_json::from_reader(open(path)?).with_context(|| format!("invalid JSON in {}", path.display()))
}

/// Every line must parse; the first bad line aborts with its number.
pub fn read_jsonl_strict<T: DeserializeOwned, R: BufRead>(reader: R, name: &Path) -> anyhow::Result<Vec<T>> {
    lemurkit::io::read_jsonl(reader)
        .map(|(line, item)| {
            item.with_context(|| format!("cannot read {}", name.display()))?
                .with_context(|| format!("{}:{line}", name.display()))
        })
        .collect()
}

/// Fails before any work starts if an input is missing.
pub fn require_files<'a>(paths: impl IntoIterator<Item = &'a Path>) -> anyhow::Result<()> {
    for p in paths {
        if !p.is_file() {
            anyhow::bail!("input file {} does not exist", p.display());
        }
    }
    Ok(())
}
