//! Equal-width discretization of per-state probability channels.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

use super::CleanSeries;

/// Bin edges of one channel: `n_bins + 1` ascending values spanning the
/// observed range. Persisted so models are reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinEdges {
    pub channel: String,
    pub edges: Vec<f64>,
}

impl BinEdges {
    pub fn n_bins(&self) -> usize {
        self.edges.len() - 1
    }

    /// Level of a value under these edges: 1-based, right-open intervals
    /// except the last bin which is closed.
    pub fn level_of(&self, value: f64) -> usize {
        let n = self.n_bins();
        let lo = self.edges[0];
        let hi = self.edges[n];
        if hi <= lo {
            return 1;
        }
        let width = (hi - lo) / n as f64;
        let idx = ((value - lo) / width).floor() as isize;
        (idx.clamp(0, n as isize - 1) + 1) as usize
    }
}

/// One discretized sample: levels per behavioural-state channel plus the
/// flags carried over from the cleaned series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteSample {
    pub t: usize,
    pub levels: Option<[usize; 6]>,
    pub red_occupied: bool,
    pub amber_critical: bool,
    pub amber_single: bool,
    pub density_violation: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteSeries {
    pub samples: Vec<DiscreteSample>,
    pub bins: Vec<BinEdges>,
    /// The probability value behind each level, kept for reward
    /// structures.
    pub probabilities: Vec<Option<[f64; 6]>>,
}

impl DiscreteSeries {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Discretization result plus warnings about degenerate channels.
#[derive(Debug, Clone)]
pub struct DiscretizeOutcome {
    pub series: DiscreteSeries,
    pub warnings: Vec<String>,
}

pub const CHANNEL_NAMES: [&str; 6] = [
    "p_searching",
    "p_pickup",
    "p_dropoff",
    "p_avoid_s",
    "p_avoid_p",
    "p_avoid_d",
];

/// Equal-width discretization over the observed [min, max] of each
/// probability channel.
pub fn discretize_ewd(series: &CleanSeries, n_bins: usize) -> Result<DiscretizeOutcome> {
    if series.is_empty() {
        return Err(Error::EmptyInput("cannot discretize an empty series".into()));
    }
    if n_bins == 0 {
        return Err(Error::InvalidConfig("n_bins must be positive".into()));
    }
    let mut warnings = Vec::new();
    let has_probs = series.samples.iter().any(|s| s.p_state.is_some());
    let mut bins = Vec::with_capacity(6);
    for (c, name) in CHANNEL_NAMES.iter().enumerate() {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for s in &series.samples {
            if let Some(p) = &s.p_state {
                lo = lo.min(p[c]);
                hi = hi.max(p[c]);
            }
        }
        if !has_probs {
            lo = 0.0;
            hi = 0.0;
        }
        if hi <= lo {
            warnings.push(format!(
                "channel {name} is constant at {lo}; all samples assigned L1"
            ));
            hi = lo;
        }
        let width = if hi > lo { (hi - lo) / n_bins as f64 } else { 0.0 };
        let edges = (0..=n_bins).map(|i| lo + width * i as f64).collect();
        bins.push(BinEdges {
            channel: name.to_string(),
            edges,
        });
    }

    let samples = series
        .samples
        .iter()
        .map(|s| DiscreteSample {
            t: s.t,
            levels: s.p_state.map(|p| {
                let mut levels = [1usize; 6];
                for c in 0..6 {
                    levels[c] = bins[c].level_of(p[c]);
                }
                levels
            }),
            red_occupied: s.red_occupied,
            amber_critical: s.amber_critical,
            amber_single: s.amber_single,
            density_violation: s.density_violation,
        })
        .collect();
    Ok(DiscretizeOutcome {
        series: DiscreteSeries {
            samples,
            bins,
            probabilities: series.samples.iter().map(|s| s.p_state).collect(),
        },
        warnings,
    })
}

/// Writes the documented `discrete.csv` layout.
pub fn write_discrete_csv(path: &Path, series: &DiscreteSeries) -> Result<()> {
    let mut out = String::from(
        "t,l_searching,l_pickup,l_dropoff,l_avoid_s,l_avoid_p,l_avoid_d,\
         red_occupied,amber_critical,amber_single,density_violation\n",
    );
    for s in &series.samples {
        let levels = match &s.levels {
            Some(l) => l.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(","),
            None => ",,,,,".to_string(),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            s.t, levels, s.red_occupied, s.amber_critical, s.amber_single, s.density_violation
        ));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Persists bin edges as JSON.
pub fn write_bins_json(path: &Path, series: &DiscreteSeries) -> Result<()> {
    let text = serde_json::to_string_pretty(&series.bins)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::{CleanSample, Source};
    use proptest::prelude::*;

    fn series_from_channel(values: &[f64]) -> CleanSeries {
        CleanSeries {
            source: Source::Lf,
            samples: values
                .iter()
                .enumerate()
                .map(|(t, v)| CleanSample::from_flags(
                    t,
                    Some([*v, 0.0, 0.0, 0.0, 0.0, 0.0]),
                    false,
                    false,
                    false,
                    false,
                ))
                .collect(),
        }
    }

    #[test]
    fn unit_span_value_043_lands_in_l3() {
        let series = series_from_channel(&[0.0, 0.43, 1.0]);
        let out = discretize_ewd(&series, 5).unwrap();
        assert_eq!(out.series.samples[1].levels.unwrap()[0], 3);
    }

    #[test]
    fn extremes_map_to_l1_and_l5() {
        let series = series_from_channel(&[0.2, 0.35, 0.9]);
        let out = discretize_ewd(&series, 5).unwrap();
        assert_eq!(out.series.samples[0].levels.unwrap()[0], 1);
        assert_eq!(out.series.samples[2].levels.unwrap()[0], 5);
    }

    #[test]
    fn constant_channel_is_all_l1_with_warning() {
        let series = series_from_channel(&[0.4, 0.4, 0.4]);
        let out = discretize_ewd(&series, 5).unwrap();
        assert!(out.warnings.iter().any(|w| w.contains("p_searching")));
        for s in &out.series.samples {
            assert_eq!(s.levels.unwrap()[0], 1);
        }
    }

    #[test]
    fn empty_series_is_an_error() {
        let series = CleanSeries {
            source: Source::Lf,
            samples: vec![],
        };
        assert!(discretize_ewd(&series, 5).is_err());
    }

    proptest! {
        /// Every value falls inside the bin its level names, and levels
        /// are monotone in the value.
        #[test]
        fn bin_membership_and_monotonicity(
            mut values in proptest::collection::vec(0.0..1.0f64, 2..40)
        ) {
            let series = series_from_channel(&values);
            let out = discretize_ewd(&series, 5).unwrap();
            let edges = &out.series.bins[0];
            for (s, v) in out.series.samples.iter().zip(&values) {
                let level = s.levels.unwrap()[0];
                prop_assert!((1..=5).contains(&level));
                let lo = edges.edges[level - 1];
                let hi = edges.edges[level];
                if level == 5 {
                    prop_assert!(*v >= lo - 1e-12 && *v <= hi + 1e-12);
                } else {
                    prop_assert!(*v >= lo - 1e-12 && *v < hi + 1e-12);
                }
            }
            values.sort_by(f64::total_cmp);
            let mut last = 0;
            for v in &values {
                let level = edges.level_of(*v);
                prop_assert!(level >= last);
                last = level;
            }
        }
    }
}
