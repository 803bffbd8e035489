//! CSV tables with shortest round-trip numbers and atomic writes.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Shortest decimal string that parses back to the same `f64`.
pub fn fmt_num(x: f64) -> String {
    format!("{x:?}")
}

/// Time label of step `t`, rounded to the nanosecond so that `3·0.1` prints
/// as `0.3`.
pub fn fmt_time(t: usize, dt: f64) -> String {
    fmt_num((t as f64 * dt * 1e9).round() / 1e9)
}

fn io_err(path: &Path, e: impl ToString) -> Error {
    Error::Io {
        path: path.display().to_string(),
        reason: e.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: Vec<String>) -> Self {
        Table {
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let fail = |e: csv::Error| Error::Io {
            path: "<csv>".into(),
            reason: e.to_string(),
        };
        w.write_record(&self.header).map_err(fail)?;
        for row in &self.rows {
            w.write_record(row).map_err(fail)?;
        }
        w.into_inner().map_err(|e| Error::Io {
            path: "<csv>".into(),
            reason: e.to_string(),
        })
    }

    /// Writes to a temporary sibling and renames it into place.
    pub fn write_atomic(&self, path: &Path) -> Result<()> {
        let bytes = self.to_bytes()?;
        let name = path
            .file_name()
            .ok_or_else(|| io_err(path, "not a file path"))?;
        let tmp = path.with_file_name(format!(
            ".{}.tmp{}",
            name.to_string_lossy(),
            std::process::id()
        ));
        fs::write(&tmp, bytes).map_err(|e| io_err(&tmp, e))?;
        fs::rename(&tmp, path).map_err(|e| {
            let _ = fs::remove_file(&tmp);
            io_err(path, e)
        })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path).map_err(|e| io_err(path, e))?;
        let header = r
            .headers()
            .map_err(|e| io_err(path, e))?
            .iter()
            .map(str::to_string)
            .collect();
        let rows = r
            .records()
            .map(|rec| {
                rec.map(|rec| rec.iter().map(str::to_string).collect())
                    .map_err(|e| io_err(path, e))
            })
            .collect::<Result<Vec<Vec<String>>>>()?;
        Ok(Table { header, rows })
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.header.iter().position(|h| h == name)
    }
}

pub fn parse_num(cell: &str, path: &Path) -> Result<f64> {
    cell.parse()
        .map_err(|_| io_err(path, format!("not a number: `{cell}`")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip() {
        for &x in &[
            0.0,
            1.0,
            0.1,
            -2.5,
            1e-300,
            6.02e23,
            1000.0,
            0.30000000000000004,
            f64::MIN_POSITIVE,
        ] {
            let s = fmt_num(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            assert_eq!(fmt_num(s.parse().unwrap()), s);
            assert!(!s.contains(','));
        }
        assert_eq!(fmt_time(3, 0.1), "0.3");
        assert_eq!(fmt_time(0, 0.1), "0.0");
        assert_eq!(fmt_time(100, 0.1), "10.0");
    }

    #[test]
    fn write_then_read() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let mut t = Table::new(vec!["time_s".into(), "1000.0".into()]);
        t.push(vec!["0.0".into(), fmt_num(0.01)]);
        t.write_atomic(&path).unwrap();
        let back = Table::read(&path).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.to_bytes().unwrap(), fs::read(&path).unwrap());
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
        assert!(matches!(
            Table::read(&dir.path().join("none.csv")),
            Err(Error::Io { .. })
        ));
    }
}
