//! Report rows and their on-disk form: `metrics.csv`, `manifest.txt` and
//! optional `samples/*.pgm`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{ExpError, Result};

pub const CSV_HEADER: [&str; 11] = [
    "experiment",
    "seed",
    "dataset",
    "init",
    "architecture",
    "n",
    "g",
    "condition",
    "split",
    "metric",
    "value",
];

/// One metric value with the condition that produced it. Empty strings and
/// `None` mean "not applicable" and are written as empty CSV fields.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Row {
    pub experiment: String,
    pub seed: u64,
    pub dataset: String,
    pub init: String,
    pub architecture: String,
    pub n: Option<usize>,
    pub g: Option<usize>,
    pub condition: String,
    pub split: String,
    pub metric: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleImage {
    pub name: String,
    pub side: usize,
    pub pixels: Vec<f64>,
}

#[derive(Clone, Debug, Default)]
pub struct Report {
    pub experiment: String,
    pub seed: u64,
    pub threads: usize,
    /// The effective configuration as TOML.
    pub config: String,
    pub rows: Vec<Row>,
    pub timings: Vec<(String, f64)>,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub samples: Vec<SampleImage>,
}

impl Report {
    pub fn rows_where<'a>(&'a self, metric: &'a str) -> impl Iterator<Item = &'a Row> + 'a {
        self.rows.iter().filter(move |r| r.metric == metric)
    }

    pub fn metrics_csv(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER).expect("in-memory write");
        for r in &self.rows {
            w.write_record([
                r.experiment.clone(),
                r.seed.to_string(),
                r.dataset.clone(),
                r.init.clone(),
                r.architecture.clone(),
                r.n.map(|v| v.to_string()).unwrap_or_default(),
                r.g.map(|v| v.to_string()).unwrap_or_default(),
                r.condition.clone(),
                r.split.clone(),
                r.metric.clone(),
                r.value.to_string(),
            ])
            .expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }

    pub fn manifest(&self) -> String {
        let mut top = toml::Table::new();
        top.insert("experiment".into(), self.experiment.clone().into());
        top.insert("seed".into(), toml::Value::Integer(self.seed as i64));
        top.insert("threads".into(), toml::Value::Integer(self.threads as i64));
        top.insert("started_unix".into(), self.started_unix.into());
        top.insert("finished_unix".into(), self.finished_unix.into());
        top.insert("elapsed_seconds".into(), (self.finished_unix - self.started_unix).into());
        top.insert("rows".into(), toml::Value::Integer(self.rows.len() as i64));
        top.insert("samples".into(), toml::Value::Integer(self.samples.len() as i64));
        let mut timings = toml::Table::new();
        for (k, v) in &self.timings {
            timings.insert(k.clone(), (*v).into());
        }
        top.insert("timings".into(), timings.into());
        let config: toml::Table = toml::from_str(&self.config).unwrap_or_default();
        top.insert("config".into(), config.into());
        toml::to_string(&top).expect("manifest serializes")
    }
}

/// `round(v * 255)` with halves rounded up, clamped to a byte.
pub fn pixel_byte(v: f64) -> u8 {
    (v * 255.0 + 0.5).floor().clamp(0.0, 255.0) as u8
}

/// Binary PGM (P5, maxval 255).
pub fn pgm_bytes(side: usize, pixels: &[f64]) -> Vec<u8> {
    let mut out = format!("P5\n{side} {side}\n255\n").into_bytes();
    out.extend(pixels.iter().map(|&v| pixel_byte(v)));
    out
}

fn write(path: PathBuf, bytes: &[u8]) -> Result<PathBuf> {
    fs::write(&path, bytes).map_err(|source| ExpError::Output { path: path.clone(), source })?;
    Ok(path)
}

/// Writes the report files into `out_dir`, creating it if needed, and
/// returns the paths written.
pub fn emit_report(report: &Report, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|source| ExpError::Output {
        path: out_dir.to_path_buf(),
        source,
    })?;
    let mut written = vec![
        write(out_dir.join("metrics.csv"), &report.metrics_csv())?,
        write(out_dir.join("manifest.txt"), report.manifest().as_bytes())?,
    ];
    if !report.samples.is_empty() {
        let dir = out_dir.join("samples");
        fs::create_dir_all(&dir).map_err(|source| ExpError::Output { path: dir.clone(), source })?;
        for s in &report.samples {
            written.push(write(dir.join(format!("{}.pgm", s.name)), &pgm_bytes(s.side, &s.pixels))?);
        }
    }
    Ok(written)
}
