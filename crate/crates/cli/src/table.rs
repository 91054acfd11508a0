//! CSV tables with serde rows.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use vsr_core::evolution::write_atomic;

use crate::Result;

pub fn to_csv_bytes<T: Serialize>(rows: &[T]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| e.into_error().into())
}

/// Writes the table atomically. An empty table still gets its header.
pub fn write_csv<T: Serialize + Default>(path: &Path, rows: &[T]) -> Result<()> {
    let bytes = if rows.is_empty() { header_only::<T>()? } else { to_csv_bytes(rows)? };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    write_atomic(path, &bytes)?;
    Ok(())
}

fn header_only<T: Serialize + Default>() -> Result<Vec<u8>> {
    let full = to_csv_bytes(&[T::default()])?;
    let end = full.iter().position(|&b| b == b'\n').map_or(full.len(), |i| i + 1);
    Ok(full[..end].to_vec())
}

pub fn from_csv_bytes<T: DeserializeOwned>(bytes: &[u8]) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_reader(bytes);
    r.deserialize().map(|row| row.map_err(Into::into)).collect()
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    from_csv_bytes(&fs::read(path)?)
}
