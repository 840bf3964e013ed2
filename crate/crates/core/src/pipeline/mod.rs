//! Trace cleaning, discretization and downsampling pipeline.
//!
//! Transforms raw trace datasets (low-fidelity simulator output, the
//! high-fidelity CSV format, or physical recordings) into cleaned,
//! discretized, averaged series ready for Markov-model construction.

mod clean;
mod discretize;
mod external;
mod stats;

pub use clean::{average_trials, clean_campaign, clean_trial, downsample_lf};
pub use discretize::{
    discretize_ewd, write_bins_json, write_discrete_csv, BinEdges, DiscreteSample,
    DiscreteSeries, DiscretizeOutcome,
};
pub use external::{
    downsample_physical, ingest_hf, AvailabilityReport, HfIngest, PhysicalIngest,
};
pub use stats::{zone_time_stats, ZoneTimeStats};

use serde::{Deserialize, Serialize};

/// Where a cleaned series came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Source {
    Lf,
    Hf,
    Phys,
}

/// One cleaned sample.
///
/// Boolean flags carry any-trial semantics after averaging; the raw
/// frequencies are retained alongside.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleanSample {
    pub t: usize,
    /// Per-state occupancy probabilities in `STATE_ORDER`; absent for
    /// position-only sources (HF, physical).
    pub p_state: Option<[f64; 6]>,
    pub red_occupied: bool,
    pub amber_critical: bool,
    pub amber_single: bool,
    pub density_violation: bool,
    pub red_freq: f64,
    pub amber_critical_freq: f64,
    pub amber_single_freq: f64,
    pub density_freq: f64,
}

impl CleanSample {
    pub(crate) fn from_flags(
        t: usize,
        p_state: Option<[f64; 6]>,
        red: bool,
        amber_critical: bool,
        amber_single: bool,
        density: bool,
    ) -> Self {
        CleanSample {
            t,
            p_state,
            red_occupied: red,
            amber_critical,
            amber_single,
            density_violation: density,
            red_freq: red as u8 as f64,
            amber_critical_freq: amber_critical as u8 as f64,
            amber_single_freq: amber_single as u8 as f64,
            density_freq: density as u8 as f64,
        }
    }
}

/// A cleaned per-sample series for one trial (or a trial average).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleanSeries {
    pub source: Source,
    pub samples: Vec<CleanSample>,
}

impl CleanSeries {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Reads a series written by [`write_clean_csv`].
pub fn read_clean_csv(path: &std::path::Path) -> crate::Result<CleanSeries> {
    use crate::Error;
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::schema(path, "empty clean series file"))?;
    if !header.starts_with("t,p_searching") {
        return Err(Error::schema(path, "unrecognized clean series header"));
    }
    let mut source = Source::Lf;
    let mut samples = Vec::new();
    for (i, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 16 {
            return Err(Error::schema(path, format!("row {i}: expected 16 fields")));
        }
        let bad = |what: &str| Error::schema(path, format!("row {i}: bad {what}"));
        let t: usize = fields[0].parse().map_err(|_| bad("timestep"))?;
        let p_state = if fields[1].is_empty() {
            None
        } else {
            let mut p = [0.0; 6];
            for (slot, field) in p.iter_mut().zip(&fields[1..7]) {
                *slot = field.parse().map_err(|_| bad("probability"))?;
            }
            Some(p)
        };
        let flag = |idx: usize| -> crate::Result<bool> {
            fields[idx].parse().map_err(|_| bad("flag"))
        };
        let freq = |idx: usize| -> crate::Result<f64> {
            fields[idx].parse().map_err(|_| bad("frequency"))
        };
        source = match fields[15] {
            "LF" => Source::Lf,
            "HF" => Source::Hf,
            "PHYS" => Source::Phys,
            other => return Err(Error::schema(path, format!("unknown source {other}"))),
        };
        samples.push(CleanSample {
            t,
            p_state,
            red_occupied: flag(7)?,
            amber_critical: flag(8)?,
            amber_single: flag(9)?,
            density_violation: flag(10)?,
            red_freq: freq(11)?,
            amber_critical_freq: freq(12)?,
            amber_single_freq: freq(13)?,
            density_freq: freq(14)?,
        });
    }
    if samples.is_empty() {
        return Err(Error::EmptyInput(format!(
            "no samples in {}",
            path.display()
        )));
    }
    Ok(CleanSeries { source, samples })
}

/// Writes a cleaned series in the documented `clean.csv` layout.
pub fn write_clean_csv(path: &std::path::Path, series: &CleanSeries) -> crate::Result<()> {
    let mut out = String::from(
        "t,p_searching,p_pickup,p_dropoff,p_avoid_s,p_avoid_p,p_avoid_d,\
         red_occupied,amber_critical,amber_single,density_violation,\
         red_freq,amber_critical_freq,amber_single_freq,density_freq,source\n",
    );
    let source = match series.source {
        Source::Lf => "LF",
        Source::Hf => "HF",
        Source::Phys => "PHYS",
    };
    for s in &series.samples {
        let probs = match &s.p_state {
            Some(p) => p
                .iter()
                .map(|v| format!("{v:.9}"))
                .collect::<Vec<_>>()
                .join(","),
            None => ",,,,,".to_string(),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{:.6},{:.6},{:.6},{:.6},{}\n",
            s.t,
            probs,
            s.red_occupied,
            s.amber_critical,
            s.amber_single,
            s.density_violation,
            s.red_freq,
            s.amber_critical_freq,
            s.amber_single_freq,
            s.density_freq,
            source
        ));
    }
    std::fs::write(path, out).map_err(|e| crate::Error::io(path, e))
}
