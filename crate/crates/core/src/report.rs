//! Report records: one `key=value` summary plus optional CSV tables per check.
//! Output contains no timestamps, so identical inputs give identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self { name: name.into(), columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.columns.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub check: String,
    pub fields: Vec<(String, String)>,
    pub tables: Vec<Table>,
    /// Hard invariants that failed; nonempty means exit status 1.
    pub failures: Vec<String>,
}

/// Fixed float format used in every report.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.12e}")
    }
}

impl Report {
    pub fn new(check: &str) -> Self {
        Self { check: check.into(), ..Default::default() }
    }

    pub fn field(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.fields.push((key.into(), value.to_string()));
        self
    }

    pub fn float(&mut self, key: &str, value: f64) -> &mut Self {
        self.field(key, num(value))
    }

    /// Records a hard invariant; a false `ok` is a failure.
    pub fn invariant(&mut self, name: &str, ok: bool) -> &mut Self {
        self.field(name, ok);
        if !ok {
            self.failures.push(name.into());
        }
        self
    }

    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.fields.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        writeln!(s, "check={}", self.check).ok();
        for (k, v) in &self.fields {
            writeln!(s, "{k}={v}").ok();
        }
        writeln!(s, "hard_pass={}", self.passed()).ok();
        if !self.failures.is_empty() {
            writeln!(s, "failures={}", self.failures.join(";")).ok();
        }
        s
    }

    /// Writes `<check>.txt` and `<check>_<table>.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        fs::write(dir.join(format!("{}.txt", self.check)), self.summary())?;
        for t in &self.tables {
            fs::write(dir.join(format!("{}_{}.csv", self.check, t.name)), t.to_csv())?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_records_failures() {
        let mut r = Report::new("demo");
        r.float("x", 0.5).invariant("ok_one", true).invariant("bad_one", false);
        let s = r.summary();
        assert!(s.contains("x=5.000000000000e-1"));
        assert!(s.contains("hard_pass=false"));
        assert!(s.contains("failures=bad_one"));
        assert_eq!(r.get("ok_one"), Some("true"));
    }

    #[test]
    fn files_written() {
        let dir = tempfile::tempdir().unwrap();
        let mut r = Report::new("demo");
        let mut t = Table::new("series", &["t", "v"]);
        t.push(vec![num(0.0), num(1.0)]);
        r.tables.push(t);
        r.write(dir.path()).unwrap();
        let csv = fs::read_to_string(dir.path().join("demo_series.csv")).unwrap();
        assert_eq!(csv, "t,v\n0.000000000000e0,1.000000000000e0\n");
        assert_eq!(num(f64::INFINITY), "inf");
    }
}
