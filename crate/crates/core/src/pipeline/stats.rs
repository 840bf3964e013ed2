//! Zone occupancy statistics over position-derived series.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

use super::CleanSeries;

/// Mean seconds per trial with each zone condition active. Samples are
/// taken at 1 Hz, so sample counts are seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZoneTimeStats {
    pub red_s: f64,
    pub amber_critical_s: f64,
    pub amber_single_s: f64,
}

/// Averages zone occupancy times over trials.
pub fn zone_time_stats(series_list: &[CleanSeries]) -> Result<ZoneTimeStats> {
    if series_list.is_empty() {
        return Err(Error::EmptyInput("no series for zone statistics".into()));
    }
    let n = series_list.len() as f64;
    let mut red = 0usize;
    let mut crit = 0usize;
    let mut single = 0usize;
    for series in series_list {
        for s in &series.samples {
            red += s.red_occupied as usize;
            crit += s.amber_critical as usize;
            single += s.amber_single as usize;
        }
    }
    Ok(ZoneTimeStats {
        red_s: red as f64 / n,
        amber_critical_s: crit as f64 / n,
        amber_single_s: single as f64 / n,
    })
}
