//! Line-delimited JSON helpers shared by the file formats.

use std::io::{self, BufRead, Write};

use serde::de::DeserializeOwned;
use serde::Serialize;

/// One record per line; blank lines are skipped. Each item carries its
/// 1-based line number.
pub fn read_jsonl<T, R>(reader: R) -> impl Iterator<Item = (usize, io::Result<Result<T, serde_json::Error>>)>
where
    T: DeserializeOwned,
    R: BufRead,
{
    reader
        .lines()
        .enumerate()
        .filter(|(_, line)| line.as_ref().map_or(true, |l| !l.trim().is_empty()))
        .map(|(i, line)| (i + 1, line.map(|l| serde_json::from_str(&l))))
}

pub fn write_jsonl<T: Serialize, W: Write>(mut writer: W, items: &[T]) -> io::Result<()> {
    for item in items {
        serde_json::to_writer(&mut writer, item)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}
