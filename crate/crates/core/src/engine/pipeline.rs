use serde::{Deserialize, Serialize};

use super::cap::{detect_cap_with, CapOptions, CapResult};
use super::{
    compute_margins, equalization_config, estimate_link_gsnr_with, run_sweep, select_best, verify, Averaging,
    MarginEntry, MeasurementSource, ProbeMeasurement, VerificationEntry,
};
use crate::catalog::{CurveSet, PltConfig};
use crate::error::Result;
use crate::link::{launch_power, PowerMode, ProbeStimulus};
use crate::regime::{build_regime_input, classify, PowerAdjustment, RegimeInput, RegimeVerdict, DEFAULT_TOLERANCE_DB};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeOptions {
    /// dBm; defaults to the equalization configuration's launch power in the
    /// probing mode.
    pub reference_power: Option<f64>,
    pub tolerance_db: f64,
}

impl Default for RegimeOptions {
    fn default() -> Self {
        Self { reference_power: None, tolerance_db: DEFAULT_TOLERANCE_DB }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbingOptions {
    pub mode: PowerMode,
    pub repeats: u32,
    pub cap: CapOptions,
    pub averaging: Averaging,
    pub extra_system_margin_db: f64,
    pub verify: bool,
    pub regime: Option<RegimeOptions>,
}

impl ProbingOptions {
    pub fn new(mode: PowerMode) -> Self {
        Self {
            mode,
            repeats: 1,
            cap: CapOptions::default(),
            averaging: Averaging::Mean,
            extra_system_margin_db: 0.0,
            verify: true,
            regime: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub input: RegimeInput,
    pub verdict: RegimeVerdict,
    pub suggested_adjustment: PowerAdjustment,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbingReport {
    pub link: String,
    pub mode: PowerMode,
    pub repeats: u32,
    pub measurements: Vec<ProbeMeasurement>,
    pub cap: CapResult,
    pub link_gsnr_db: f64,
    pub margins: Vec<MarginEntry>,
    pub selected_config: Option<String>,
    pub verification: Option<Vec<VerificationEntry>>,
    pub regime: Option<RegimeReport>,
}

/// Full probing run: sweep, cap, average, margins, selection, and optionally
/// verification and regime detection.
pub fn run_probing(
    source: &dyn MeasurementSource,
    catalog: &[PltConfig],
    curves: &CurveSet,
    options: &ProbingOptions,
) -> Result<ProbingReport> {
    let anchor = equalization_config(catalog)?;
    let measurements = run_sweep(source, catalog, curves, options.mode, options.repeats)?;
    let cap = detect_cap_with(&measurements, &options.cap)?;
    let link_gsnr_db = estimate_link_gsnr_with(&measurements, &cap, options.averaging)?;
    let margins = compute_margins(link_gsnr_db, catalog, curves, &cap, options.extra_system_margin_db)?;
    let selected_config = select_best(&margins);
    let verification =
        if options.verify { Some(verify(source, catalog, curves, &margins, options.mode)?) } else { None };
    let regime = match options.regime {
        Some(r) => {
            let reference =
                r.reference_power.unwrap_or_else(|| launch_power(&ProbeStimulus::new(anchor.clone(), options.mode)));
            let input = build_regime_input(source, catalog, curves, reference, options.repeats)?;
            let verdict = classify(&input, r.tolerance_db)?;
            Some(RegimeReport { input, suggested_adjustment: verdict.suggested_adjustment(), verdict })
        }
        None => None,
    };
    Ok(ProbingReport {
        link: source.link_name().to_string(),
        mode: options.mode,
        repeats: options.repeats,
        measurements,
        cap,
        link_gsnr_db,
        margins,
        selected_config,
        verification,
        regime,
    })
}
