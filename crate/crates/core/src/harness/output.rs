//! CSV tables and the `meta.txt` sidecar.
//!
//! Result files have the header `axis,value,trials` followed by the scheme's
//! columns from [`schema`]. `axis` and `value` are empty for a single point.
//! Floats use Rust's shortest round-trip formatting, so parsing a cell gives
//! back the exact value.

use std::fs;
use std::path::{Path, PathBuf};

use super::config::{ExperimentConfig, Scheme};
use super::experiment::{schema, ResultRow};
use crate::error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

pub fn float(v: f64) -> String {
    format!("{v:?}")
}

pub fn header(scheme: Scheme) -> Vec<&'static str> {
    let mut h = vec!["axis", "value", "trials"];
    h.extend_from_slice(schema(scheme));
    h
}

pub fn csv_bytes(scheme: Scheme, rows: &[ResultRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header(scheme)).map_err(csv_err)?;
    for r in rows {
        let mut rec = vec![
            r.axis.clone().unwrap_or_default(),
            r.value.map(float).unwrap_or_default(),
            r.trials.to_string(),
        ];
        rec.extend(r.fields.iter().map(|&v| float(v)));
        w.write_record(&rec).map_err(csv_err)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.to_string()))
}

pub fn emit_csv(scheme: Scheme, rows: &[ResultRow], path: &Path) -> Result<()> {
    fs::write(path, csv_bytes(scheme, rows)?)?;
    Ok(())
}

/// Parse a result table written by [`emit_csv`], checking its header.
pub fn read_csv(scheme: Scheme, path: &Path) -> Result<Vec<ResultRow>> {
    let bad = |message: String| Error::Config { line: 0, message };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let found: Vec<String> = r.headers().map_err(csv_err)?.iter().map(String::from).collect();
    if found != header(scheme) {
        return Err(bad(format!(
            "{}: header does not match the {scheme} schema",
            path.display()
        )));
    }
    let parse = |s: &str| s.parse::<f64>().map_err(|_| bad(format!("bad number `{s}`")));
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let axis = Some(rec[0].to_string()).filter(|s| !s.is_empty());
        let value = if rec[1].is_empty() { None } else { Some(parse(&rec[1])?) };
        let trials = rec[2]
            .parse()
            .map_err(|_| bad(format!("bad trial count `{}`", &rec[2])))?;
        let fields = rec.iter().skip(3).map(parse).collect::<Result<_>>()?;
        rows.push(ResultRow {
            axis,
            value,
            trials,
            fields,
        });
    }
    Ok(rows)
}

/// Sidecar text: tool version, command, seed and the effective config.
pub fn meta_text(command: &str, config: &ExperimentConfig) -> String {
    format!(
        "tool = sideinfo {VERSION}\ncommand = {command}\nscheme = {}\nseed = {}\n\n# effective configuration\n{}",
        config.scheme(),
        config.seed,
        config.render()
    )
}

/// Write `<scheme>.csv` and `meta.txt` into `dir`, creating it if needed.
pub fn write_run(dir: &Path, command: &str, config: &ExperimentConfig, rows: &[ResultRow]) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let path = dir.join(format!("{}.csv", config.scheme()));
    emit_csv(config.scheme(), rows, &path)?;
    fs::write(dir.join("meta.txt"), meta_text(command, config))?;
    Ok(path)
}
