//! Artifact rendering and atomic file output.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

/// A rendered command result.
pub enum Artifact {
    Csv(Table),
    Json(String),
}

/// `#`-prefixed metadata lines, a header row, then data rows.
pub struct Table {
    pub meta: Vec<(String, String)>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { meta: Vec::new(), header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.meta.push((key.to_string(), value.to_string()));
        self
    }

    /// Appends a row of floats in shortest round-trip form.
    pub fn push_floats(&mut self, row: &[f64]) {
        self.rows.push(row.iter().map(|v| fmt_float(*v)).collect());
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.meta {
            out.push_str(&format!("# {k}: {v}\n"));
        }
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row).expect("in-memory write");
        }
        out.push_str(std::str::from_utf8(&w.into_inner().expect("in-memory flush")).expect("utf-8 cells"));
        out
    }
}

/// Shortest round-trip decimal; exponent form for very small or large magnitudes.
pub fn fmt_float(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || !v.is_finite() || (1e-5..1e16).contains(&a) {
        v.to_string()
    } else {
        format!("{v:e}")
    }
}

pub fn json<T: Serialize>(value: &T) -> Artifact {
    let mut s = serde_json::to_string_pretty(value).expect("report types serialize");
    s.push('\n');
    Artifact::Json(s)
}

impl Artifact {
    pub fn render(&self) -> String {
        match self {
            Artifact::Csv(t) => t.render(),
            Artifact::Json(s) => s.clone(),
        }
    }
}

/// Writes to `path` through a temporary file in the same directory, or to
/// stdout when no path is given.
pub fn emit(artifact: &Artifact, path: Option<&Path>) -> std::io::Result<()> {
    let text = artifact.render();
    match path {
        None => {
            let mut stdout = std::io::stdout().lock();
            match stdout.write_all(text.as_bytes()).and_then(|_| stdout.flush()) {
                // A closed downstream pipe (e.g. `| head`) is not an error.
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
                r => r,
            }
        }
        Some(p) => {
            let dir = p.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
            let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
            tmp.write_all(text.as_bytes())?;
            tmp.as_file().sync_all()?;
            tmp.persist(p).map_err(|e| e.error)?;
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut t = Table::new(&["u", "p"]);
        t.meta("command", "density");
        t.push_floats(&[0.1, 1.0 / 3.0]);
        assert_eq!(t.render(), "# command: density\nu,p\n0.1,0.3333333333333333\n");
    }

    #[test]
    fn cells_with_commas_are_quoted() {
        let mut t = Table::new(&["state", "g"]);
        t.rows.push(vec!["coherent:1,0.5".into(), "2".into()]);
        assert_eq!(t.render(), "state,g\n\"coherent:1,0.5\",2\n");
    }

    #[test]
    fn floats_round_trip() {
        for v in [0.0, 1.0, -2.5, 1e-7, 4.3383525937845983e-32, 1.0 / 3.0, 6.02e23, 1e-5] {
            assert_eq!(fmt_float(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt_float(4.3383525937845983e-32), "4.3383525937845983e-32");
        assert_eq!(fmt_float(0.25), "0.25");
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        std::fs::write(&path, "old").unwrap();
        let mut t = Table::new(&["x"]);
        t.push_floats(&[2.0]);
        emit(&Artifact::Csv(t), Some(&path)).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "x\n2\n");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
