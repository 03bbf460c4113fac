//! The probing pipeline: sweep every configuration over the link, turn BER
//! readings into GSNR, find the symbol-rate cap, average the unpenalized
//! estimates and derive per-configuration margins.

mod cap;
mod pipeline;
mod source;

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::{gsnr_from_gosnr, q_from_ber, required_gsnr, CurveSet, Inversion, Modulation, PltConfig};
use crate::error::{Error, Result};
use crate::link::{PowerMode, ProbeStimulus};
use crate::units::rate_key;

pub use cap::{detect_cap, detect_cap_with, Baseline, CapOptions, CapResult, GroupMedian};
pub use pipeline::{run_probing, ProbingOptions, ProbingReport, RegimeOptions, RegimeReport};
pub use source::{sweep, Draw, FileSource, MeasurementSource, SimulatedSource};

/// Per-reading annotation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Flag {
    /// Q was outside the curve image on the high side; GOSNR is the upper range bound.
    Extrapolated,
    /// The reading could not be mapped to a GOSNR.
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeMeasurement {
    pub config_id: String,
    /// GBd.
    pub symbol_rate: f64,
    pub mode: PowerMode,
    pub repeat: u32,
    pub ber: f64,
    /// Absent for an error-free reading.
    pub q_db: Option<f64>,
    pub gosnr_db: Option<f64>,
    pub gsnr_db: Option<f64>,
    pub flags: BTreeSet<Flag>,
}

impl ProbeMeasurement {
    pub fn is_failed(&self) -> bool {
        self.flags.contains(&Flag::Failed)
    }

    /// Maps one BER reading through the configuration's curve.
    pub fn from_reading(config: &PltConfig, curves: &CurveSet, mode: PowerMode, repeat: u32, ber: f64) -> Result<Self> {
        let curve = curves.get(&config.id)?;
        let mut flags = BTreeSet::new();
        let mut m = Self {
            config_id: config.id.clone(),
            symbol_rate: config.symbol_rate,
            mode,
            repeat,
            ber,
            q_db: None,
            gosnr_db: None,
            gsnr_db: None,
            flags: BTreeSet::new(),
        };
        let inversion = if ber == 0.0 {
            Inversion::ClampedHigh(curve.valid_range[1])
        } else {
            match q_from_ber(ber) {
                Ok(q) => {
                    m.q_db = Some(q);
                    curve.invert(q)
                }
                Err(_) => Inversion::ClampedLow(curve.valid_range[0]),
            }
        };
        match inversion {
            Inversion::Exact(x) => m.gosnr_db = Some(x),
            Inversion::ClampedHigh(x) => {
                flags.insert(Flag::Extrapolated);
                m.gosnr_db = Some(x);
            }
            Inversion::ClampedLow(_) => {
                flags.insert(Flag::Failed);
            }
        }
        if let Some(g) = m.gosnr_db {
            m.gsnr_db = Some(gsnr_from_gosnr(g, config.symbol_rate)?);
        }
        m.flags = flags;
        Ok(m)
    }
}

/// Configuration used to equalize the channel power: highest symbol rate,
/// then highest line rate, then smallest id.
pub fn equalization_config(catalog: &[PltConfig]) -> Result<&PltConfig> {
    catalog
        .iter()
        .min_by(|a, b| {
            b.symbol_rate.total_cmp(&a.symbol_rate).then(b.line_rate.cmp(&a.line_rate)).then(a.id.cmp(&b.id))
        })
        .ok_or_else(|| Error::Catalog("catalog is empty".into()))
}

/// Measures every configuration `repeats` times. Output order is catalog
/// order, then repeat index, regardless of execution order.
pub fn run_sweep(
    source: &dyn MeasurementSource,
    catalog: &[PltConfig],
    curves: &CurveSet,
    mode: PowerMode,
    repeats: u32,
) -> Result<Vec<ProbeMeasurement>> {
    run_tagged_sweep(source, catalog, curves, mode, repeats, sweep::PROBE)
}

pub(crate) fn run_tagged_sweep(
    source: &dyn MeasurementSource,
    catalog: &[PltConfig],
    curves: &CurveSet,
    mode: PowerMode,
    repeats: u32,
    tag: u16,
) -> Result<Vec<ProbeMeasurement>> {
    if repeats == 0 {
        return Err(Error::Engine("repeats must be at least 1".into()));
    }
    curves.ensure_covers(catalog)?;
    let jobs: Vec<(usize, u32)> = (0..catalog.len()).flat_map(|i| (0..repeats).map(move |r| (i, r))).collect();
    jobs.into_par_iter()
        .map(|(i, repeat)| {
            let config = &catalog[i];
            let stimulus = ProbeStimulus::new(config.clone(), mode);
            let draw = Draw { sweep: tag, config_index: i as u32, repeat };
            let ber = source.measure(&stimulus, draw)?;
            ProbeMeasurement::from_reading(config, curves, mode, repeat, ber)
        })
        .collect()
}

/// How accepted estimates are combined into the link GSNR.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Averaging {
    #[default]
    Mean,
    Median,
}

pub(crate) fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 { values[n / 2] } else { 0.5 * (values[n / 2 - 1] + values[n / 2]) })
}

/// Link GSNR estimate: mean (dB) of every usable reading below the cap.
pub fn estimate_link_gsnr(measurements: &[ProbeMeasurement], cap: &CapResult) -> Result<f64> {
    estimate_link_gsnr_with(measurements, cap, Averaging::Mean)
}

pub fn estimate_link_gsnr_with(
    measurements: &[ProbeMeasurement],
    cap: &CapResult,
    averaging: Averaging,
) -> Result<f64> {
    let mut accepted: Vec<f64> =
        measurements.iter().filter(|m| !cap.is_penalized(m.symbol_rate)).filter_map(|m| m.gsnr_db).collect();
    if accepted.is_empty() {
        return Err(Error::Engine("no accepted measurements to average".into()));
    }
    Ok(match averaging {
        Averaging::Mean => accepted.iter().sum::<f64>() / accepted.len() as f64,
        Averaging::Median => median(&mut accepted).unwrap_or(f64::NAN),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginEntry {
    pub config_id: String,
    pub line_rate: u32,
    pub modulation: Modulation,
    pub symbol_rate: f64,
    pub estimated_gsnr_db: f64,
    pub required_gsnr_db: f64,
    pub extra_system_margin_db: f64,
    pub implementation_margin_db: f64,
    pub predicted_pass: bool,
    pub excluded_by_cap: bool,
}

/// Per-config GSNR estimate: the link estimate, unless the config's own
/// symbol-rate group sits more than [`NEAR_THRESHOLD_DB`] below it, in which
/// case the group median is used instead.
pub fn rate_estimate(link_gsnr_db: f64, cap: &CapResult, symbol_rate: f64) -> f64 {
    cap.group_medians
        .iter()
        .find(|g| rate_key(g.symbol_rate) == rate_key(symbol_rate))
        .and_then(|g| g.median_gsnr_db)
        .filter(|median| link_gsnr_db - median > NEAR_THRESHOLD_DB)
        .unwrap_or(link_gsnr_db)
}

/// One margin entry per configuration, in catalog order.
pub fn compute_margins(
    link_gsnr_db: f64,
    catalog: &[PltConfig],
    curves: &CurveSet,
    cap: &CapResult,
    extra_system_margin_db: f64,
) -> Result<Vec<MarginEntry>> {
    if !link_gsnr_db.is_finite() || !extra_system_margin_db.is_finite() {
        return Err(Error::Engine("link GSNR and system margin must be finite".into()));
    }
    catalog
        .iter()
        .map(|config| {
            let required = required_gsnr(curves.get(&config.id)?, config)?;
            let estimated = rate_estimate(link_gsnr_db, cap, config.symbol_rate);
            let margin = estimated - required - extra_system_margin_db;
            let excluded = rate_key(config.symbol_rate) > rate_key(cap.cap_gbaud);
            Ok(MarginEntry {
                config_id: config.id.clone(),
                line_rate: config.line_rate,
                modulation: config.modulation,
                symbol_rate: config.symbol_rate,
                estimated_gsnr_db: estimated,
                required_gsnr_db: required,
                extra_system_margin_db,
                implementation_margin_db: margin,
                predicted_pass: margin > 0.0 && !excluded,
                excluded_by_cap: excluded,
            })
        })
        .collect()
}

/// Highest line rate among passing entries; ties go to the larger margin,
/// then the lower symbol rate.
pub fn select_best(margins: &[MarginEntry]) -> Option<String> {
    margins
        .iter()
        .filter(|m| m.predicted_pass)
        .max_by(|a, b| {
            a.line_rate
                .cmp(&b.line_rate)
                .then(a.implementation_margin_db.total_cmp(&b.implementation_margin_db))
                .then(b.symbol_rate.total_cmp(&a.symbol_rate))
        })
        .map(|m| m.config_id.clone())
}

/// Margins closer to zero than this are reported as near-threshold.
pub const NEAR_THRESHOLD_DB: f64 = 0.2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationEntry {
    pub config_id: String,
    pub actual_pass: bool,
    pub predicted_pass: bool,
    pub implementation_margin_db: f64,
    pub near_threshold: bool,
}

impl VerificationEntry {
    pub fn agrees(&self) -> bool {
        self.actual_pass == self.predicted_pass
    }
}

/// Re-measures every configuration not excluded by the cap once and checks
/// whether it clears its FEC threshold.
pub fn verify(
    source: &dyn MeasurementSource,
    catalog: &[PltConfig],
    curves: &CurveSet,
    margins: &[MarginEntry],
    mode: PowerMode,
) -> Result<Vec<VerificationEntry>> {
    curves.ensure_covers(catalog)?;
    let targets: Vec<(usize, &PltConfig, &MarginEntry)> = catalog
        .iter()
        .enumerate()
        .filter_map(|(i, c)| margins.iter().find(|m| m.config_id == c.id).map(|m| (i, c, m)))
        .filter(|(_, _, m)| !m.excluded_by_cap)
        .collect();
    targets
        .into_par_iter()
        .map(|(i, config, margin)| {
            let curve = curves.get(&config.id)?;
            let stimulus = ProbeStimulus::new(config.clone(), mode);
            let draw = Draw { sweep: sweep::VERIFY, config_index: i as u32, repeat: 0 };
            let ber = source.measure(&stimulus, draw)?;
            let actual_pass = match q_from_ber(ber) {
                Ok(q) => q >= curve.threshold_q_db()?,
                Err(_) => ber == 0.0,
            };
            Ok(VerificationEntry {
                config_id: config.id.clone(),
                actual_pass,
                predicted_pass: margin.predicted_pass,
                implementation_margin_db: margin.implementation_margin_db,
                near_threshold: margin.implementation_margin_db.abs() < NEAR_THRESHOLD_DB,
            })
        })
        .collect()
}
