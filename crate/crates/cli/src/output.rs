//! Deterministic number formatting and atomic file output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serializer;
use serde_json::value::RawValue;

/// Scientific notation with 17 significant digits; empty for non-finite values.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        String::new()
    }
}

/// Serializes a float as a JSON number with 17 significant digits, or `null`.
pub fn json_num<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    if x.is_finite() {
        let raw = RawValue::from_string(num(*x)).map_err(serde::ser::Error::custom)?;
        serde::Serialize::serialize(&raw, s)
    } else {
        s.serialize_none()
    }
}

pub fn json_num_opt<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match x {
        Some(v) => json_num(v, s),
        None => s.serialize_none(),
    }
}

/// In-memory CSV table.
pub struct Table {
    pub name: &'static str,
    text: String,
    rows: usize,
}

impl Table {
    pub fn new(name: &'static str, header: &[&str]) -> Self {
        let mut text = header.join(",");
        text.push('\n');
        Table { name, text, rows: 0 }
    }

    pub fn row(&mut self, cells: &[String]) {
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
        self.rows += 1;
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn text(&self) -> &str {
        &self.text
    }
}

/// Writes `contents` to `dir/name` through a temporary file and a rename.
pub fn write_atomic(dir: &Path, name: &str, contents: &[u8]) -> std::io::Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let target = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp"));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, &target)?;
    Ok(target)
}
