// Copyright 2026 Spinorbit Contributors
// SPDX-License-Identifier: Apache-2.0

//! File helpers. I/O failures keep the offending path in the message.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use spinorbit::{Error, Result};

fn with_path(path: &Path, e: io::Error) -> Error {
    Error::Io(io::Error::new(e.kind(), format!("{}: {e}", path.display())))
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| with_path(path, e))
}

pub fn open(path: &Path) -> Result<fs::File> {
    fs::File::open(path).map_err(|e| with_path(path, e))
}

/// Writes `contents` to `dir/name`, creating `dir` if needed.
pub fn write(dir: &Path, name: &str, contents: &[u8]) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| with_path(dir, e))?;
    let path = dir.join(name);
    fs::write(&path, contents).map_err(|e| with_path(&path, e))?;
    Ok(path)
}

/// Renders rows as CSV.
pub fn csv_bytes<I, R>(header: &[&str], rows: I) -> Result<Vec<u8>>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.into_inner().map_err(|e| Error::Data(e.to_string()))
}

/// Gnuplot script plotting columns `x:y` of a CSV with a header row.
pub fn gnuplot(csv_name: &str, xlabel: &str, ylabel: &str, columns: &[(usize, &str)]) -> String {
    let mut s = String::new();
    s.push_str("# Generated by spinorbit. Run: gnuplot -p <this file>\n");
    s.push_str("set datafile separator ','\n");
    s.push_str("set key autotitle columnhead\n");
    s.push_str(&format!("set xlabel '{xlabel}'\n"));
    s.push_str(&format!("set ylabel '{ylabel}'\n"));
    s.push_str("set grid\n");
    let plots: Vec<String> = columns
        .iter()
        .map(|(col, title)| format!("'{csv_name}' using 1:{col} with linespoints title '{title}'"))
        .collect();
    s.push_str(&format!("plot {}\n", plots.join(", \\\n     ")));
    s
}

/// File stem of a path, for naming outputs after inputs.
pub fn stem(path: &Path) -> String {
    path.file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("output")
        .to_owned()
}
