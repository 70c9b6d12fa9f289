//! Report, table and plot-data emission.
//!
//! `--out path.json` writes the report there and puts tables and plot data
//! next to it as `path_<name>.csv` / `path_<name>.dat`. Any other `--out`
//! is a directory receiving `<command>.json`, `<command>_<name>.csv` and
//! `<command>_<name>.dat`. Without `--out` the report goes to stdout.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliError;

pub struct Table {
    pub name: &'static str,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &'static str, header: &[&'static str]) -> Table {
        Table {
            name,
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push<I: IntoIterator<Item = String>>(&mut self, row: I) {
        self.rows.push(row.into_iter().collect());
    }
}

/// Two whitespace-separated columns, ready for any plotting tool.
pub struct Plot {
    pub name: &'static str,
    pub columns: (&'static str, &'static str),
    pub points: Vec<(f64, f64)>,
}

pub struct Artifacts {
    pub report: serde_json::Value,
    pub tables: Vec<Table>,
    pub plots: Vec<Plot>,
}

impl Artifacts {
    pub fn new<T: Serialize>(report: &T) -> Result<Artifacts, CliError> {
        Ok(Artifacts {
            report: serde_json::to_value(report)?,
            tables: Vec::new(),
            plots: Vec::new(),
        })
    }
}

fn layout(out: &Path, command: &str) -> (PathBuf, PathBuf, String) {
    if out.extension().is_some_and(|e| e == "json") {
        let dir = out.parent().map(Path::to_path_buf).unwrap_or_default();
        let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        (out.to_path_buf(), dir, stem)
    } else {
        (out.join(format!("{command}.json")), out.to_path_buf(), command.to_string())
    }
}

/// Writes every artifact and returns the paths written.
pub fn emit(artifacts: &Artifacts, out: Option<&Path>, command: &str, seed: u64) -> Result<Vec<PathBuf>, CliError> {
    let mut report = artifacts.report.clone();
    if let Some(obj) = report.as_object_mut() {
        obj.insert("seed".into(), seed.into());
    }
    let text = serde_json::to_string_pretty(&report)? + "\n";
    let Some(out) = out else {
        print!("{text}");
        return Ok(Vec::new());
    };
    let (report_path, dir, stem) = layout(out, command);
    if !dir.as_os_str().is_empty() {
        fs::create_dir_all(&dir)?;
    }
    fs::write(&report_path, text)?;
    let mut written = vec![report_path];

    for table in &artifacts.tables {
        let path = dir.join(format!("{stem}_{}.csv", table.name));
        let mut file = fs::File::create(&path)?;
        writeln!(file, "# seed: {seed}")?;
        let mut w = csv::Writer::from_writer(file);
        w.write_record(&table.header)?;
        for row in &table.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        written.push(path);
    }
    for plot in &artifacts.plots {
        let path = dir.join(format!("{stem}_{}.dat", plot.name));
        let mut file = fs::File::create(&path)?;
        writeln!(file, "# seed: {seed}")?;
        writeln!(file, "# {} {}", plot.columns.0, plot.columns.1)?;
        for (a, b) in &plot.points {
            writeln!(file, "{a:e} {b:e}")?;
        }
        written.push(path);
    }
    Ok(written)
}
