//! Record serialization.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::sweep::MetricsRecord;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl OutputFormat {
    /// Chooses by extension; anything other than `.json` is CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => OutputFormat::Json,
            _ => OutputFormat::Csv,
        }
    }
}

/// CSV with header `sweep_value,metric,mean,stderr,trials,seconds`.
pub fn write_csv<W: Write>(out: W, records: &[MetricsRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["sweep_value", "metric", "mean", "stderr", "trials", "seconds"])?;
    for r in records {
        w.write_record([
            r.sweep_value.clone(),
            r.metric.name().to_string(),
            format!("{:e}", r.mean),
            format!("{:e}", r.stderr),
            r.trials.to_string(),
            format!("{:.3}", r.seconds),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit(records: &[MetricsRecord], format: OutputFormat, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    match format {
        OutputFormat::Csv => write_csv(&mut out, records)?,
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut out, records)?;
            out.write_all(b"\n")?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_json(path: impl AsRef<Path>) -> Result<Vec<MetricsRecord>> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}
