use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{median, ProbeMeasurement};
use crate::error::{Error, Result};
use crate::units::rate_key;

/// Reference a rate group's median is compared against.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Baseline {
    /// Mean of the medians of every group accepted so far.
    #[default]
    RunningMean,
    /// Median of the lowest-rate group only.
    LowestGroup,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapOptions {
    pub threshold_db: f64,
    pub baseline: Baseline,
}

impl Default for CapOptions {
    fn default() -> Self {
        Self { threshold_db: 2.0, baseline: Baseline::RunningMean }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupMedian {
    pub symbol_rate: f64,
    /// Absent when every reading of the group failed.
    pub median_gsnr_db: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapResult {
    pub cap_gbaud: f64,
    /// Ascending by symbol rate.
    pub group_medians: Vec<GroupMedian>,
    pub penalized_rates: Vec<f64>,
    pub threshold_db: f64,
}

impl CapResult {
    pub fn is_penalized(&self, symbol_rate: f64) -> bool {
        rate_key(symbol_rate) > rate_key(self.cap_gbaud)
    }
}

/// Highest symbol rate whose GSNR estimate does not drop more than
/// `threshold_db` below the baseline, using the running-mean baseline.
pub fn detect_cap(measurements: &[ProbeMeasurement], threshold_db: f64) -> Result<CapResult> {
    detect_cap_with(measurements, &CapOptions { threshold_db, ..CapOptions::default() })
}

pub fn detect_cap_with(measurements: &[ProbeMeasurement], options: &CapOptions) -> Result<CapResult> {
    let threshold = options.threshold_db;
    if !(threshold >= 0.0 && threshold.is_finite()) {
        return Err(Error::Engine(format!("cap threshold {threshold} dB must be non-negative")));
    }
    if measurements.is_empty() {
        return Err(Error::Engine("no measurements to detect a cap from".into()));
    }
    let mut groups: BTreeMap<i64, (f64, Vec<f64>)> = BTreeMap::new();
    for m in measurements {
        let entry = groups.entry(rate_key(m.symbol_rate)).or_insert((m.symbol_rate, Vec::new()));
        if let Some(g) = m.gsnr_db {
            entry.1.push(g);
        }
    }
    let group_medians: Vec<GroupMedian> = groups
        .into_values()
        .map(|(symbol_rate, mut values)| GroupMedian { symbol_rate, median_gsnr_db: median(&mut values) })
        .collect();
    let lowest = group_medians[0].median_gsnr_db.ok_or_else(|| {
        Error::Engine(format!("every reading at the lowest symbol rate ({} GBd) failed", group_medians[0].symbol_rate))
    })?;

    let mut accepted: Vec<f64> = Vec::new();
    let mut penalized_rates = Vec::new();
    let mut cap = group_medians[0].symbol_rate;
    for group in &group_medians {
        let accepted_median = match group.median_gsnr_db {
            Some(med) if penalized_rates.is_empty() => {
                let baseline = match options.baseline {
                    Baseline::RunningMean if !accepted.is_empty() => {
                        accepted.iter().sum::<f64>() / accepted.len() as f64
                    }
                    _ => lowest,
                };
                (med >= baseline - threshold).then_some(med)
            }
            _ => None,
        };
        match accepted_median {
            Some(med) => {
                accepted.push(med);
                cap = group.symbol_rate;
            }
            None => penalized_rates.push(group.symbol_rate),
        }
    }
    Ok(CapResult { cap_gbaud: cap, group_medians, penalized_rates, threshold_db: threshold })
}
