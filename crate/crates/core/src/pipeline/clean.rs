//! Cleaning of low-fidelity trial datasets: zone flags, state
//! probabilities, the density requirement and trial averaging.

use std::path::Path;

use crate::scenario::{Point, ScenarioConfig, ZoneMap};
use crate::{Error, Result};

use super::{CleanSample, CleanSeries, Source};

/// Total displacement below this over the trailing window counts as
/// stationary. The requirement fixes the 10 s window; the motion epsilon
/// is ours.
const STATIONARY_EPSILON_M: f64 = 0.01;
const STATIONARY_WINDOW_S: f64 = 10.0;
/// Fraction of robots stationary outside the deposit zone that violates
/// the density requirement.
const DENSITY_FRACTION: f64 = 0.10;

struct RawTrial {
    counts: Vec<[usize; 6]>,
    positions: Vec<Vec<Point>>,
    speeds: Vec<Vec<f64>>,
    in_deposit: Vec<Vec<bool>>,
}

fn parse_usize(path: &Path, field: &str) -> Result<usize> {
    field
        .parse()
        .map_err(|_| Error::schema(path, format!("bad integer {field:?}")))
}

fn parse_f64(path: &Path, field: &str) -> Result<f64> {
    field
        .parse()
        .map_err(|_| Error::schema(path, format!("bad number {field:?}")))
}

fn read_counts(path: &Path) -> Result<Vec<[usize; 6]>> {
    let mut reader = csv::Reader::from_path(path).map_err(Error::from)?;
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        if record.len() != 7 {
            return Err(Error::schema(path, "expected 7 columns in counts.csv"));
        }
        let t = parse_usize(path, &record[0])?;
        if t != rows.len() {
            return Err(Error::schema(path, format!("missing timestep {}", rows.len())));
        }
        let mut row = [0usize; 6];
        for (i, slot) in row.iter_mut().enumerate() {
            *slot = parse_usize(path, &record[i + 1])?;
        }
        rows.push(row);
    }
    Ok(rows)
}

fn read_per_robot<T, F>(path: &Path, n_cols: usize, mut parse: F) -> Result<Vec<Vec<T>>>
where
    F: FnMut(&Path, &csv::StringRecord) -> Result<T>,
{
    let mut reader = csv::Reader::from_path(path).map_err(Error::from)?;
    let mut rows: Vec<Vec<T>> = Vec::new();
    for record in reader.records() {
        let record = record?;
        if record.len() != n_cols {
            return Err(Error::schema(
                path,
                format!("expected {n_cols} columns, got {}", record.len()),
            ));
        }
        let t = parse_usize(path, &record[0])?;
        let value = parse(path, &record)?;
        if t == rows.len() {
            rows.push(Vec::new());
        } else if t + 1 != rows.len() {
            return Err(Error::schema(path, format!("missing timestep before {t}")));
        }
        rows.last_mut().unwrap().push(value);
    }
    Ok(rows)
}

fn read_raw_trial(dir: &Path) -> Result<RawTrial> {
    let counts = read_counts(&dir.join("counts.csv"))?;
    let positions = read_per_robot(&dir.join("positions.csv"), 4, |p, r| {
        Ok(Point::new(parse_f64(p, &r[2])?, parse_f64(p, &r[3])?))
    })?;
    let kin = read_per_robot(&dir.join("kinematics.csv"), 4, |p, r| {
        let speed = parse_f64(p, &r[2])?;
        let in_dep = match &r[3] {
            "true" => true,
            "false" => false,
            other => return Err(Error::schema(p, format!("bad boolean {other:?}"))),
        };
        Ok((speed, in_dep))
    })?;
    if positions.len() != counts.len() || kin.len() != counts.len() {
        return Err(Error::schema(dir, "dataset lengths disagree"));
    }
    let speeds = kin
        .iter()
        .map(|row| row.iter().map(|(s, _)| *s).collect())
        .collect();
    let in_deposit = kin
        .iter()
        .map(|row| row.iter().map(|(_, d)| *d).collect())
        .collect();
    Ok(RawTrial {
        counts,
        positions,
        speeds,
        in_deposit,
    })
}

/// Cross-checks counts.csv against states.csv for one trial.
fn verify_counts_consistent(dir: &Path, counts: &[[usize; 6]]) -> Result<()> {
    let states = crate::macromodel::read_state_trace(&dir.join("states.csv"))?;
    for (t, expected) in counts.iter().enumerate() {
        let mut recomputed = [0usize; 6];
        for robot in &states {
            let s = *robot.get(t).ok_or_else(|| {
                Error::schema(dir, format!("states.csv truncated at timestep {t}"))
            })?;
            recomputed[s.index()] += 1;
        }
        if recomputed != *expected {
            return Err(Error::schema(
                dir,
                format!("counts.csv disagrees with states.csv at timestep {t}"),
            ));
        }
    }
    Ok(())
}

/// Cleans one trial directory into a per-timestep series.
///
/// Zone flags come from positions (red counts toward amber as well); state
/// probabilities are counts over swarm size; the density flag is true when
/// at least 10% of the robots have been stationary for the trailing 10 s
/// while outside the deposit zone.
pub fn clean_trial(dir: &Path, zones: &ZoneMap, config: &ScenarioConfig) -> Result<CleanSeries> {
    let raw = read_raw_trial(dir)?;
    verify_counts_consistent(dir, &raw.counts)?;
    let n = config.n_robots;
    let dt = config.dt();
    let window_steps = (STATIONARY_WINDOW_S / dt).round() as usize;

    let n_steps = raw.counts.len();
    let mut samples = Vec::with_capacity(n_steps);
    // Rolling displacement sums per robot over the trailing window.
    let mut rolling: Vec<f64> = vec![0.0; n];
    for t in 0..n_steps {
        if raw.positions[t].len() != n || raw.speeds[t].len() != n {
            return Err(Error::schema(dir, format!("robot row count wrong at t={t}")));
        }
        let counts = raw.counts[t];
        if counts.iter().sum::<usize>() != n {
            return Err(Error::schema(dir, format!("counts do not sum to {n} at t={t}")));
        }
        let mut p = [0.0f64; 6];
        for (i, c) in counts.iter().enumerate() {
            p[i] = *c as f64 / n as f64;
        }

        let mut red = false;
        let mut amber_count = 0usize;
        for pos in &raw.positions[t] {
            zones.classify_point(*pos)?;
            if zones.in_red(*pos) {
                red = true;
            }
            if zones.in_amber(*pos) {
                amber_count += 1;
            }
        }

        let mut stationary_outside = 0usize;
        for i in 0..n {
            rolling[i] += raw.speeds[t][i] * dt;
            if t >= window_steps {
                rolling[i] -= raw.speeds[t - window_steps][i] * dt;
            }
            let window_complete = t + 1 > window_steps;
            if window_complete && rolling[i] < STATIONARY_EPSILON_M && !raw.in_deposit[t][i] {
                stationary_outside += 1;
            }
        }
        let density = stationary_outside as f64 / n as f64 >= DENSITY_FRACTION;

        samples.push(CleanSample::from_flags(
            t,
            Some(p),
            red,
            amber_count >= 2,
            amber_count >= 1,
            density,
        ));
    }
    Ok(CleanSeries {
        source: Source::Lf,
        samples,
    })
}

/// Cleans every `trial_*` directory of a campaign.
pub fn clean_campaign(
    campaign: &Path,
    zones: &ZoneMap,
    config: &ScenarioConfig,
) -> Result<Vec<CleanSeries>> {
    let mut dirs: Vec<_> = std::fs::read_dir(campaign)
        .map_err(|e| Error::io(campaign, e))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| {
            p.is_dir()
                && p.file_name()
                    .and_then(|s| s.to_str())
                    .is_some_and(|s| s.starts_with("trial_"))
        })
        .collect();
    dirs.sort();
    if dirs.is_empty() {
        return Err(Error::EmptyInput(format!(
            "no trial directories under {}",
            campaign.display()
        )));
    }
    dirs.iter()
        .map(|d| clean_trial(d, zones, config))
        .collect()
}

const LF_SAMPLE_PERIOD: usize = 50;

/// Keeps every 50th sample of a low-fidelity series.
///
/// Probabilities are taken at the sampled instant; unsafe flags are OR-ed
/// over the window so sampling cannot mask a violation. A trailing
/// partial window folds into the last sample.
pub fn downsample_lf(series: &CleanSeries) -> CleanSeries {
    let n = series.len();
    let n_windows = (n / LF_SAMPLE_PERIOD).max(1);
    let mut samples = Vec::with_capacity(n_windows);
    for w in 0..n_windows {
        let start = w * LF_SAMPLE_PERIOD;
        let end = if w + 1 == n_windows {
            n
        } else {
            start + LF_SAMPLE_PERIOD
        };
        let window = &series.samples[start..end.min(n)];
        let at = &window[0];
        let mut s = CleanSample {
            t: w,
            p_state: at.p_state,
            red_occupied: false,
            amber_critical: false,
            amber_single: false,
            density_violation: false,
            red_freq: 0.0,
            amber_critical_freq: 0.0,
            amber_single_freq: 0.0,
            density_freq: 0.0,
        };
        for x in window {
            s.red_occupied |= x.red_occupied;
            s.amber_critical |= x.amber_critical;
            s.amber_single |= x.amber_single;
            s.density_violation |= x.density_violation;
            s.red_freq = s.red_freq.max(x.red_freq);
            s.amber_critical_freq = s.amber_critical_freq.max(x.amber_critical_freq);
            s.amber_single_freq = s.amber_single_freq.max(x.amber_single_freq);
            s.density_freq = s.density_freq.max(x.density_freq);
        }
        samples.push(s);
    }
    CleanSeries {
        source: series.source,
        samples,
    }
}

/// Averages equally long cleaned series sample-by-sample.
///
/// Probabilities are averaged arithmetically; flag frequencies become
/// means and the boolean labels keep any-trial semantics (frequency > 0).
pub fn average_trials(series_list: &[CleanSeries]) -> Result<CleanSeries> {
    let first = series_list
        .first()
        .ok_or_else(|| Error::EmptyInput("no series to average".into()))?;
    let len = first.len();
    for s in series_list {
        if s.len() != len {
            return Err(Error::InvalidConfig(format!(
                "series length mismatch: {} vs {len}",
                s.len()
            )));
        }
    }
    let m = series_list.len() as f64;
    let mut samples = Vec::with_capacity(len);
    for t in 0..len {
        let mut p_sum = [0.0f64; 6];
        let mut have_p = true;
        let mut red = 0.0;
        let mut amber_crit = 0.0;
        let mut amber_single = 0.0;
        let mut density = 0.0;
        for s in series_list {
            let sample = &s.samples[t];
            match &sample.p_state {
                Some(p) => {
                    for i in 0..6 {
                        p_sum[i] += p[i];
                    }
                }
                None => have_p = false,
            }
            red += sample.red_freq;
            amber_crit += sample.amber_critical_freq;
            amber_single += sample.amber_single_freq;
            density += sample.density_freq;
        }
        let p_state = have_p.then(|| {
            let mut p = p_sum;
            for v in &mut p {
                *v /= m;
            }
            p
        });
        samples.push(CleanSample {
            t,
            p_state,
            red_occupied: red > 0.0,
            amber_critical: amber_crit > 0.0,
            amber_single: amber_single > 0.0,
            density_violation: density > 0.0,
            red_freq: red / m,
            amber_critical_freq: amber_crit / m,
            amber_single_freq: amber_single / m,
            density_freq: density / m,
        });
    }
    Ok(CleanSeries {
        source: first.source,
        samples,
    })
}
