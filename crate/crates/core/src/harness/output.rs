//! Result files.
//!
//! `summary.csv`, `records.csv` and `manifest.json` depend only on the
//! experiment spec and are byte-identical across runs. Wall-clock times go
//! to the separate `timings.csv`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{ExperimentResult, ExperimentSpec};

pub const SUMMARY_FILE: &str = "summary.csv";
pub const RECORDS_FILE: &str = "records.csv";
pub const TIMINGS_FILE: &str = "timings.csv";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Everything needed to regenerate a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub master_seed: u64,
    pub spec: ExperimentSpec,
}

impl Manifest {
    pub fn new(spec: &ExperimentSpec) -> Self {
        Manifest {
            version: concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION")).to_string(),
            master_seed: spec.master_seed,
            spec: spec.clone(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            what: path.display().to_string(),
            message: e.to_string(),
        })
    }
}

fn csv_bytes<F>(header: &[&str], fill: F) -> Result<Vec<u8>>
where
    F: FnOnce(&mut csv::Writer<Vec<u8>>) -> csv::Result<()>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    let wrap = |e: csv::Error| Error::Parse {
        what: "csv output".into(),
        message: e.to_string(),
    };
    w.write_record(header).map_err(wrap)?;
    fill(&mut w).map_err(wrap)?;
    w.into_inner().map_err(|e| Error::Parse {
        what: "csv output".into(),
        message: e.to_string(),
    })
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

pub fn summary_csv(result: &ExperimentResult) -> Result<Vec<u8>> {
    csv_bytes(&["power_db", "scheme", "mean_rate", "stderr", "n"], |w| {
        for row in &result.summary {
            w.write_record([
                row.power_db.to_string(),
                row.scheme.to_string(),
                row.mean_rate.to_string(),
                row.stderr.to_string(),
                row.n.to_string(),
            ])?;
        }
        Ok(())
    })
}

pub fn records_csv(result: &ExperimentResult) -> Result<Vec<u8>> {
    let header = [
        "realization",
        "seed",
        "power_db",
        "scheme",
        "sum_rate",
        "weighted_rate",
        "gap",
        "iterations",
        "converged",
    ];
    csv_bytes(&header, |w| {
        for rec in &result.records {
            w.write_record([
                rec.realization.to_string(),
                rec.seed.to_string(),
                rec.power_db.to_string(),
                rec.scheme.to_string(),
                rec.sum_rate.to_string(),
                rec.weighted_rate.to_string(),
                opt(rec.gap),
                rec.iterations.to_string(),
                rec.converged.to_string(),
            ])?;
        }
        Ok(())
    })
}

fn timings_csv(result: &ExperimentResult) -> Result<Vec<u8>> {
    csv_bytes(&["realization", "power_db", "scheme", "wall_time_s"], |w| {
        for rec in &result.records {
            w.write_record([
                rec.realization.to_string(),
                rec.power_db.to_string(),
                rec.scheme.to_string(),
                rec.wall_time_s.to_string(),
            ])?;
        }
        Ok(())
    })
}

/// Writes all result files into `dir`, creating it if needed. Every file is
/// first written under a temporary name and renamed into place once all of
/// them have been written.
pub fn emit_results(result: &ExperimentResult, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    let mut manifest =
        serde_json::to_vec_pretty(&Manifest::new(&result.spec)).map_err(|e| Error::Parse {
            what: "manifest".into(),
            message: e.to_string(),
        })?;
    manifest.push(b'\n');
    let files = [
        (SUMMARY_FILE, summary_csv(result)?),
        (RECORDS_FILE, records_csv(result)?),
        (TIMINGS_FILE, timings_csv(result)?),
        (MANIFEST_FILE, manifest),
    ];

    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut staged = Vec::with_capacity(files.len());
    for (name, bytes) in &files {
        let tmp = dir.join(format!(".{name}.tmp"));
        if let Err(e) = fs::write(&tmp, bytes) {
            for (t, _) in &staged {
                let _ = fs::remove_file(t);
            }
            return Err(Error::io(&tmp, e));
        }
        staged.push((tmp, dir.join(name)));
    }
    let mut written = Vec::with_capacity(staged.len());
    for (tmp, dest) in staged {
        fs::rename(&tmp, &dest).map_err(|e| Error::io(&dest, e))?;
        written.push(dest);
    }
    Ok(written)
}
