//! Deterministic CSV and JSON artifacts.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Shortest round-trip text for `x`; integers print without a fraction and
/// negative zero prints as `0`.
pub fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    let s = format!("{x:?}");
    match s.strip_suffix(".0") {
        Some(t) => t.to_string(),
        None => s,
    }
}

/// JSON number for finite values, a string otherwise.
pub fn json_f64(x: f64) -> Value {
    if x.is_finite() {
        serde_json::Number::from_f64(if x == 0.0 { 0.0 } else { x })
            .map(Value::Number)
            .unwrap_or(Value::Null)
    } else {
        Value::String(fmt_f64(x))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    /// File stem, written as `<name>.csv`.
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Table {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Header line, column line, then data rows. Only the header carries the
    /// tool version.
    pub fn to_csv(&self) -> String {
        let mut out = format!("# rotlab {VERSION}\n");
        out.push_str(&self.columns.join(","));
        out.push('\n');
        out.push_str(&self.data_rows());
        out
    }

    pub fn data_rows(&self) -> String {
        let mut out = String::new();
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Summary record of one experiment. Keys serialize in sorted order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Record(pub Map<String, Value>);

impl Record {
    pub fn new(operation: &str, tag: &str) -> Self {
        let mut r = Record::default();
        r.set("operation", operation);
        r.set("tag", tag);
        r
    }

    pub fn set(&mut self, key: &str, value: impl Into<Value>) {
        self.0.insert(key.to_string(), value.into());
    }

    pub fn num(&mut self, key: &str, x: f64) {
        self.0.insert(key.to_string(), json_f64(x));
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&Value::Object(self.0.clone()))
            .expect("records always serialize");
        s.push('\n');
        s
    }
}

/// Writes `contents` to `path` through a sibling temporary file and a rename,
/// so readers never observe a partial file.
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir)?;
    let file_name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp: PathBuf = dir.join(format!(".{file_name}.{}.tmp", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_formatting_round_trips() {
        assert_eq!(fmt_f64(1.0), "1");
        assert_eq!(fmt_f64(-0.0), "0");
        assert_eq!(fmt_f64(0.1), "0.1");
        assert_eq!(fmt_f64(1e-20), "1e-20");
        assert_eq!(fmt_f64(f64::NEG_INFINITY), "-inf");
        for x in [std::f64::consts::PI, 1.0 / 3.0, 6.02e23, -2.5e-300] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn csv_header_carries_version() {
        let mut t = Table::new("x", &["a", "b"]);
        t.push(vec!["1".into(), "2".into()]);
        assert_eq!(t.to_csv(), format!("# rotlab {VERSION}\na,b\n1,2\n"));
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        write_atomic(&p, "one").unwrap();
        write_atomic(&p, "two").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }

    #[test]
    fn record_keys_sorted() {
        let mut r = Record::new("fkdet", "t");
        r.num("delta", 1.0);
        let s = r.to_json();
        let a = s.find("delta").unwrap();
        let b = s.find("operation").unwrap();
        let c = s.find("tag").unwrap();
        assert!(a < b && b < c);
    }
}
