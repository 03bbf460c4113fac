//! Extended channel probing for optical lightpaths.
//!
//! A sweep of characterized probe transceiver configurations is launched into
//! a channel slot, each BER reading is converted to a GSNR estimate, the
//! filtering-induced symbol-rate cap is detected, the unpenalized estimates are
//! averaged, and GSNR implementation margins are computed for a pool of
//! candidate configurations. Comparing a constant-PSD sweep with a
//! constant-power sweep classifies the channel's operation regime.
//!
//! The [`link`] module contains a closed-form GN-model line simulator that
//! acts both as a measurement source and as the ground-truth oracle.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod engine;
pub mod error;
pub mod io;
pub mod link;
pub mod regime;
pub mod units;

pub use catalog::{
    ber_from_q, default_catalog, default_curves, fit_b2b, gosnr_from_gsnr, gsnr_from_gosnr, q_from_ber, B2BCurve,
    CurveSet, Modulation, PltConfig, DEFAULT_FEC_THRESHOLD_BER,
};
pub use engine::{
    compute_margins, detect_cap, detect_cap_with, equalization_config, estimate_link_gsnr, run_probing, run_sweep,
    select_best, verify, Averaging, CapOptions, CapResult, FileSource, Flag, MarginEntry, MeasurementSource,
    ProbeMeasurement, ProbingOptions, ProbingReport, SimulatedSource, VerificationEntry,
};
pub use error::{Error, Result};
pub use link::{
    fixture, fixtures, ground_truth_gsnr, Amplifier, Dcm, Element, FilterElement, LinkSpec, NoiseModel, PowerMode,
    ProbeStimulus, Span,
};
pub use regime::{build_regime_input, classify, Regime, RegimeInput, RegimeVerdict};
