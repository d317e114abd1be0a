//! Run artifacts: config snapshots, line-delimited optimization traces,
//! process-matrix text files and population time series. A run directory
//! plus its recorded seed is sufficient to replay every artifact
//! bit-exactly.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::bayesopt::{OptimizationTrace, TraceRecord};
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::tomography::{chi_from_text, chi_to_text, ProcessMatrix};

/// Paths inside one run directory.
#[derive(Clone, Debug)]
pub struct RunArtifacts {
    pub dir: PathBuf,
}

impl RunArtifacts {
    pub fn create(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(RunArtifacts { dir: dir.to_path_buf() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Record the full configuration snapshot (including the master seed).
    pub fn write_config(&self, cfg: &RunConfig) -> Result<()> {
        fs::write(self.path("config.toml"), cfg.to_toml()?)?;
        Ok(())
    }

    pub fn read_config(&self) -> Result<RunConfig> {
        RunConfig::load(&self.path("config.toml"))
    }

    pub fn write_trace(&self, name: &str, trace: &OptimizationTrace) -> Result<()> {
        let mut f = fs::File::create(self.path(name))?;
        for r in &trace.records {
            let line = serde_json::to_string(r)?;
            writeln!(f, "{line}")?;
        }
        Ok(())
    }

    pub fn read_trace(&self, name: &str) -> Result<OptimizationTrace> {
        let text = fs::read_to_string(self.path(name))?;
        let mut records = Vec::new();
        for line in text.lines() {
            if line.trim().is_empty() {
                continue;
            }
            let r: TraceRecord = serde_json::from_str(line)?;
            records.push(r);
        }
        Ok(OptimizationTrace { records })
    }

    pub fn write_chi(&self, name: &str, chi: &ProcessMatrix) -> Result<()> {
        fs::write(self.path(name), chi_to_text(chi)?)?;
        Ok(())
    }

    pub fn read_chi(&self, name: &str) -> Result<ProcessMatrix> {
        let text = fs::read_to_string(self.path(name))?;
        chi_from_text(&text)
    }

    /// Population time series: `time_us, P(+++…), P(−−−…)` per line, with a
    /// stroboscopic marker column (1 at integer multiples of the period).
    pub fn write_populations(
        &self,
        name: &str,
        times: &[f64],
        p_plus: &[f64],
        p_minus: &[f64],
        period: f64,
    ) -> Result<()> {
        if times.len() != p_plus.len() || times.len() != p_minus.len() {
            return Err(Error::InvalidArg("population series lengths differ".into()));
        }
        let mut f = fs::File::create(self.path(name))?;
        writeln!(f, "time_us,p_plus,p_minus,stroboscopic")?;
        for ((t, pp), pm) in times.iter().zip(p_plus).zip(p_minus) {
            let k = t / period;
            let strobe = if (k - k.round()).abs() < 1e-6 { 1 } else { 0 };
            writeln!(f, "{:.9},{:.9},{:.9},{}", t * 1e6, pp, pm, strobe)?;
        }
        Ok(())
    }

    /// Summary report as pretty JSON.
    pub fn write_report(&self, name: &str, report: &serde_json::Value) -> Result<()> {
        fs::write(self.path(name), serde_json::to_string_pretty(report)?)?;
        Ok(())
    }

    pub fn read_report(&self, name: &str) -> Result<serde_json::Value> {
        let text = fs::read_to_string(self.path(name))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Byte-compare an artifact against another run's file.
    pub fn identical(&self, other: &RunArtifacts, name: &str) -> Result<bool> {
        let a = fs::read(self.path(name))?;
        let b = fs::read(other.path(name))?;
        Ok(a == b)
    }
}
