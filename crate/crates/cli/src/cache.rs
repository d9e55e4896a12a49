//! On-disk cache of divisor tables.
//!
//! Each table lives in `d{k}_{limit}.dklb` next to a `.sha256` sidecar in
//! `sha256sum` format. Readers hold a shared lock on `<dir>/.lock`, writers
//! an exclusive one. A table whose checksum or contents do not verify is
//! reported as corrupt and only replaced when the caller asks for a rebuild.

use std::fs::{self, File, OpenOptions};
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use divlab::{sieve_dk, DivisorTable, Error, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug)]
pub struct CachedTable {
    pub table: DivisorTable,
    pub info: TableInfo,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TableInfo {
    pub k: u32,
    pub limit: u64,
    pub path: PathBuf,
    pub file_bytes: u64,
    pub sha256: String,
    /// Built during this call rather than loaded.
    pub built: bool,
}

pub fn table_path(dir: &Path, k: u32, limit: u64) -> PathBuf {
    dir.join(format!("d{k}_{limit}.dklb"))
}

pub fn checksum_path(table: &Path) -> PathBuf {
    let mut name = table.file_name().unwrap_or_default().to_os_string();
    name.push(".sha256");
    table.with_file_name(name)
}

struct HashingReader<R> {
    inner: R,
    hasher: Sha256,
    bytes: u64,
}

impl<R: Read> Read for HashingReader<R> {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        let n = self.inner.read(buf)?;
        self.hasher.update(&buf[..n]);
        self.bytes += n as u64;
        Ok(n)
    }
}

struct HashingWriter<W> {
    inner: W,
    hasher: Sha256,
    bytes: u64,
}

impl<W: Write> Write for HashingWriter<W> {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.hasher.update(&buf[..n]);
        self.bytes += n as u64;
        Ok(n)
    }

    fn flush(&mut self) -> io::Result<()> {
        self.inner.flush()
    }
}

fn corrupt(path: &Path, reason: impl Into<String>) -> Error {
    Error::Corrupt {
        path: path.to_path_buf(),
        reason: reason.into(),
    }
}

/// Load and verify a cached table.
pub fn load_table(path: &Path, k: u32, limit: u64) -> Result<CachedTable> {
    let sidecar = checksum_path(path);
    let expected = match fs::read_to_string(&sidecar) {
        Ok(text) => text
            .split_whitespace()
            .next()
            .unwrap_or_default()
            .to_string(),
        Err(e) if e.kind() == io::ErrorKind::NotFound => {
            return Err(corrupt(path, "checksum file is missing"))
        }
        Err(e) => return Err(e.into()),
    };
    let mut reader = HashingReader {
        inner: BufReader::new(File::open(path)?),
        hasher: Sha256::new(),
        bytes: 0,
    };
    let table = DivisorTable::read_dklb(&mut reader).map_err(|e| match e {
        Error::Io(io) => corrupt(path, io.to_string()),
        other => corrupt(path, other.to_string()),
    })?;
    let actual = hex::encode(reader.hasher.finalize());
    if actual != expected {
        return Err(corrupt(
            path,
            format!("checksum {actual} does not match {expected}"),
        ));
    }
    if table.k() != k || table.limit() != limit {
        return Err(corrupt(
            path,
            format!(
                "holds d_{} up to {}, expected d_{k} up to {limit}",
                table.k(),
                table.limit()
            ),
        ));
    }
    Ok(CachedTable {
        info: TableInfo {
            k,
            limit,
            path: path.to_path_buf(),
            file_bytes: reader.bytes,
            sha256: actual,
            built: false,
        },
        table,
    })
}

fn build_table(path: &Path, k: u32, limit: u64) -> Result<CachedTable> {
    let table = sieve_dk(k, limit)?;
    let tmp = path.with_extension("dklb.tmp");
    let mut writer = HashingWriter {
        inner: BufWriter::new(File::create(&tmp)?),
        hasher: Sha256::new(),
        bytes: 0,
    };
    table.write_dklb(&mut writer)?;
    writer.flush()?;
    let digest = hex::encode(writer.hasher.finalize());
    let bytes = writer.bytes;
    writer
        .inner
        .into_inner()
        .map_err(|e| e.into_error())?
        .sync_all()?;
    fs::rename(&tmp, path)?;
    let name = path.file_name().unwrap_or_default().to_string_lossy();
    fs::write(checksum_path(path), format!("{digest}  {name}\n"))?;
    Ok(CachedTable {
        info: TableInfo {
            k,
            limit,
            path: path.to_path_buf(),
            file_bytes: bytes,
            sha256: digest,
            built: true,
        },
        table,
    })
}

/// Load the `(k, limit)` table from `dir`, building it when absent.
///
/// A corrupt table is an error unless `rebuild` is set, in which case it
/// is rebuilt in place.
pub fn cache_table(k: u32, limit: u64, dir: &Path, rebuild: bool) -> Result<CachedTable> {
    fs::create_dir_all(dir)?;
    let lock = OpenOptions::new()
        .create(true)
        .truncate(false)
        .read(true)
        .write(true)
        .open(dir.join(".lock"))?;
    let path = table_path(dir, k, limit);

    lock.lock_shared()?;
    let first = path.exists().then(|| load_table(&path, k, limit));
    lock.unlock()?;
    match first {
        Some(Ok(t)) => return Ok(t),
        Some(Err(e @ Error::Corrupt { .. })) if !rebuild => return Err(e),
        Some(Err(e)) if !matches!(e, Error::Corrupt { .. }) => return Err(e),
        _ => {}
    }

    lock.lock()?;
    // Another process may have finished the build while we waited.
    let result = match path.exists() && !rebuild {
        true => match load_table(&path, k, limit) {
            Ok(t) => Ok(t),
            Err(_) => build_table(&path, k, limit),
        },
        false => build_table(&path, k, limit),
    };
    lock.unlock()?;
    result
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sidecar_name() {
        assert_eq!(
            checksum_path(Path::new("/tmp/c/d2_100.dklb")),
            PathBuf::from("/tmp/c/d2_100.dklb.sha256")
        );
    }
}
