//! CSV ingestion and atomic output files.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use specmerge::spectra::TimeSeries;

/// Reads one series per column; the header row holds the ids.
///
/// Lines starting with `#` are skipped, so files written by `simulate` can
/// be read back directly.
pub fn ingest_csv(path: &Path, fs: f64) -> Result<Vec<TimeSeries>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let ids: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if ids.is_empty() || ids.iter().all(String::is_empty) {
        bail!("{}: no header row", path.display());
    }
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); ids.len()];
    for (r, record) in reader.records().enumerate() {
        let record = record.with_context(|| format!("{}: row {} is ragged or unreadable", path.display(), r + 2))?;
        for (c, cell) in record.iter().enumerate() {
            if cell.is_empty() {
                bail!("{}: missing value in column `{}`, data row {}", path.display(), ids[c], r + 1);
            }
            let v: f64 = cell
                .parse()
                .with_context(|| format!("{}: `{cell}` in column `{}` is not a number", path.display(), ids[c]))?;
            columns[c].push(v);
        }
    }
    if columns[0].is_empty() {
        bail!("{}: header but no data", path.display());
    }
    ids.into_iter().zip(columns).map(|(id, values)| TimeSeries::new(id, values, fs).map_err(Into::into)).collect()
}

/// Reads a column of labels, by header name, in row order.
pub fn read_column(path: &Path, name: &str) -> Result<Vec<String>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let idx = reader
        .headers()?
        .iter()
        .position(|h| h == name)
        .with_context(|| format!("{}: no `{name}` column", path.display()))?;
    reader.records().map(|r| Ok(r?.get(idx).unwrap_or_default().to_string())).collect()
}

/// Output files collected in memory and written only once every result is
/// ready, so a failing run leaves nothing behind.
pub struct Outputs {
    dir: PathBuf,
    force: bool,
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl Outputs {
    pub fn new(dir: &Path, force: bool) -> Self {
        Outputs { dir: dir.to_path_buf(), force, files: Vec::new() }
    }

    /// Refuses to continue if any of `names` exists and `--force` is off.
    pub fn check_free(&self, names: &[&str]) -> Result<()> {
        if self.force {
            return Ok(());
        }
        for name in names {
            let p = self.dir.join(name);
            if p.exists() {
                bail!("{} exists; pass --force to overwrite", p.display());
            }
        }
        Ok(())
    }

    /// CSV with a `# seed: N` first line, then the header and rows.
    pub fn csv<R: AsRef<[String]>>(&mut self, name: &str, seed: u64, header: &[&str], rows: &[R]) -> Result<()> {
        let mut buf = format!("# seed: {seed}\n").into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(header)?;
            for row in rows {
                w.write_record(row.as_ref())?;
            }
            w.flush()?;
        }
        self.files.push((self.dir.join(name), buf));
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut buf = serde_json::to_vec_pretty(value)?;
        buf.push(b'\n');
        self.files.push((self.dir.join(name), buf));
        Ok(())
    }

    /// Writes every file through a temporary sibling and a rename.
    pub fn commit(self) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(&self.dir).with_context(|| format!("creating {}", self.dir.display()))?;
        let mut written = Vec::new();
        for (path, bytes) in self.files {
            write_atomic(&path, &bytes)?;
            written.push(path);
        }
        Ok(written)
    }
}

pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path.file_name().context("output path has no file name")?.to_string_lossy();
    let tmp = path.with_file_name(format!(".{name}.tmp-{}", std::process::id()));
    let mut f = fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
    f.write_all(bytes)?;
    f.sync_all()?;
    drop(f);
    fs::rename(&tmp, path).with_context(|| format!("renaming into {}", path.display()))?;
    Ok(())
}

/// Shortest round-trip decimal form.
pub fn num(v: f64) -> String {
    format!("{v}")
}
