//! Result files: sweep-record CSV, time-series CSV and JSON sidecars, all
//! written through a temporary file and an atomic rename.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dtwa::Diagnostics;
use crate::error::ExperimentError;
use crate::experiments::{FitResult, RunConfig, SweepRecord, Trace};

/// Writes `path` via a sibling temporary file, so readers never observe a
/// partial file and failures leave nothing behind.
pub fn write_atomic<F>(path: &Path, fill: F) -> Result<(), ExperimentError>
where
    F: FnOnce(&mut dyn Write) -> Result<(), ExperimentError>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut buf = std::io::BufWriter::new(tmp.as_file_mut());
        fill(&mut buf)?;
        buf.flush()?;
    }
    tmp.persist(path).map_err(|e| ExperimentError::Io(e.error))?;
    Ok(())
}

/// Field order: `n, jr, alpha, method, manifold, omega_opt, t_opt, xi2_min,
/// xi2_a_min, fq_max, t_fq, xi2_stderr, fq_stderr, seed, xi2_at_boundary,
/// fq_at_boundary, omega_at_boundary`. Absent optionals are empty fields.
pub fn write_records(path: &Path, records: &[SweepRecord]) -> Result<(), ExperimentError> {
    write_atomic(path, |w| {
        let mut csv = csv::Writer::from_writer(w);
        for r in records {
            csv.serialize(r)?;
        }
        csv.flush()?;
        Ok(())
    })
}

pub fn read_records(path: &Path) -> Result<Vec<SweepRecord>, ExperimentError> {
    let mut rdr = csv::Reader::from_path(path)?;
    rdr.deserialize().map(|r| r.map_err(ExperimentError::from)).collect()
}

/// Columns `t, xi2, [xi2_a], fq, spin_length, [xi2_stderr, fq_stderr]`;
/// the bracketed ones appear for antisymmetric and dTWA runs respectively.
pub fn write_trace(path: &Path, trace: &Trace) -> Result<(), ExperimentError> {
    let anti = trace.results.first().is_some_and(|r| r.xi2_a.is_some());
    write_atomic(path, |w| {
        let mut csv = csv::Writer::from_writer(w);
        let mut header = vec!["t", "xi2"];
        if anti {
            header.push("xi2_a");
        }
        header.extend(["fq", "spin_length"]);
        if trace.stderr.is_some() {
            header.extend(["xi2_stderr", "fq_stderr"]);
        }
        csv.write_record(&header)?;
        for (k, (t, r)) in trace.times.iter().zip(&trace.results).enumerate() {
            let mut row = vec![t.to_string(), r.xi2.to_string()];
            if let Some(a) = r.xi2_a {
                row.push(a.to_string());
            }
            row.push(r.fq.to_string());
            row.push(r.spin_length.to_string());
            if let Some(se) = &trace.stderr {
                row.push(se[k][0].to_string());
                row.push(se[k][1].to_string());
            }
            csv.write_record(&row)?;
        }
        csv.flush()?;
        Ok(())
    })
}

/// JSON sidecar describing how an output was produced.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMetadata {
    pub code_version: String,
    pub command: String,
    /// Fully resolved configuration, overrides applied.
    pub config: RunConfig,
    pub seed: Option<u64>,
    pub wall_seconds: f64,
    pub threads: usize,
    #[serde(default)]
    pub warnings: Vec<String>,
    /// Numerical-quality failure that aborted the run, if any.
    #[serde(default)]
    pub failure: Option<String>,
    #[serde(default)]
    pub diagnostics: Option<Diagnostics>,
    #[serde(default)]
    pub fits: Option<FitSummary>,
}

impl RunMetadata {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        Self {
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            seed: (config.method == crate::experiments::Method::Dtwa).then_some(config.dtwa.seed),
            config: config.clone(),
            wall_seconds: 0.0,
            threads: rayon::current_num_threads(),
            warnings: Vec::new(),
            failure: None,
            diagnostics: None,
            fits: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub xi2: FitResult,
    pub fq: FitResult,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ExperimentError> {
    write_atomic(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        w.write_all(b"\n")?;
        Ok(())
    })
}
