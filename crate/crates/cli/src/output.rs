//! Versioned CSV output, metadata sidecars and the output-directory lock.
//!
//! Every CSV starts with a header comment line
//! `# twostage-csv/<major>.<minor> kind=<kind> config_hash=<hex> seed=<n>`
//! followed by an ordinary comma-separated table with a header row.

use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::config::Resolved;
use crate::error::{input, CliResult};

pub const CSV_MAJOR: u32 = 1;
pub const CSV_MINOR: u32 = 0;
const CSV_TAG: &str = "# twostage-csv/";
const LOCK_NAME: &str = ".twostage.lock";

/// Output directory held for the lifetime of one command.
#[derive(Debug)]
pub struct OutDir {
    path: PathBuf,
    lock: PathBuf,
}

impl OutDir {
    pub fn open(path: &Path) -> CliResult<OutDir> {
        fs::create_dir_all(path)?;
        let lock = path.join(LOCK_NAME);
        match OpenOptions::new().write(true).create_new(true).open(&lock) {
            Ok(mut f) => {
                writeln!(f, "{}", std::process::id())?;
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                return Err(input(format!(
                    "output directory {} is in use by another run (remove {} if it is stale)",
                    path.display(),
                    lock.display()
                )));
            }
            Err(e) => return Err(e.into()),
        }
        Ok(OutDir { path: path.to_path_buf(), lock })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

impl Drop for OutDir {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.lock);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub kind: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(kind: &str, header: &[&str]) -> Table {
        Table { kind: kind.to_string(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

pub fn num(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v}")
    }
}

pub fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

pub fn version_line(kind: &str, run: &Resolved) -> String {
    format!("{CSV_TAG}{CSV_MAJOR}.{CSV_MINOR} kind={kind} config_hash={} seed={}", run.hash, run.seed)
}

/// Writes `<name>.csv` and `<name>.csv.meta`; returns the CSV path.
pub fn write_table(out: &OutDir, name: &str, table: &Table, run: &Resolved) -> CliResult<PathBuf> {
    let path = out.path().join(format!("{name}.csv"));
    let mut buf = Vec::new();
    writeln!(buf, "{}", version_line(&table.kind, run))?;
    {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(&mut buf);
        w.write_record(&table.header)?;
        for row in &table.rows {
            w.write_record(row)?;
        }
        w.flush()?;
    }
    File::create(&path)?.write_all(&buf)?;
    write_meta(&path, &table.kind, table.rows.len(), run)?;
    Ok(path)
}

fn write_meta(csv_path: &Path, kind: &str, rows: usize, run: &Resolved) -> CliResult<()> {
    let mut meta = String::new();
    meta.push_str(&format!("format = twostage-meta/{CSV_MAJOR}\n"));
    meta.push_str(&format!("kind = {kind}\ncommand = {}\n", run.command));
    meta.push_str(&format!("config_hash = {}\nseed = {}\nrows = {rows}\n", run.hash, run.seed));
    for (k, v) in &run.entries {
        meta.push_str(&format!("param.{k} = {v}\n"));
    }
    let mut p = csv_path.as_os_str().to_owned();
    p.push(".meta");
    fs::write(PathBuf::from(p), meta)?;
    Ok(())
}

/// Parsed `# twostage-csv/...` line.
#[derive(Debug, Clone, PartialEq)]
pub struct VersionHeader {
    pub major: u32,
    pub minor: u32,
    pub kind: Option<String>,
}

/// Checks the optional version line at the top of a CSV text. Files without
/// one are accepted as plain CSV; a version line with a different major
/// version is rejected.
pub fn check_version(text: &str) -> CliResult<Option<VersionHeader>> {
    let first = text.lines().next().unwrap_or("");
    let Some(rest) = first.strip_prefix(CSV_TAG) else {
        return Ok(None);
    };
    let mut parts = rest.split_whitespace();
    let version = parts.next().unwrap_or("");
    let (major, minor) = version.split_once('.').unwrap_or((version, "0"));
    let bad = || input(format!("line 1: malformed version tag `{first}`"));
    let major: u32 = major.parse().map_err(|_| bad())?;
    let minor: u32 = minor.parse().map_err(|_| bad())?;
    if major != CSV_MAJOR {
        return Err(input(format!(
            "line 1: unsupported schema version {major}.{minor} (this build reads {CSV_MAJOR}.x)"
        )));
    }
    let kind = parts.find_map(|p| p.strip_prefix("kind=").map(str::to_string));
    Ok(Some(VersionHeader { major, minor, kind }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn version_lines() {
        assert_eq!(check_version("a,b\n1,2").unwrap(), None);
        let v = check_version("# twostage-csv/1.3 kind=applicants seed=1\na\n").unwrap().unwrap();
        assert_eq!((v.major, v.minor, v.kind.as_deref()), (1, 3, Some("applicants")));
        assert!(check_version("# twostage-csv/2.0 kind=x\n").is_err());
        assert!(check_version("# twostage-csv/x\n").is_err());
    }

    #[test]
    fn numbers() {
        assert_eq!(num(0.5), "0.5");
        assert_eq!(num(f64::NAN), "");
        assert_eq!(opt_num(None), "");
    }

    #[test]
    fn lock_is_exclusive() {
        let dir = tempfile::tempdir().unwrap();
        let a = OutDir::open(dir.path()).unwrap();
        assert!(OutDir::open(dir.path()).is_err());
        drop(a);
        assert!(OutDir::open(dir.path()).is_ok());
    }
}
