//! Synthetic back-to-back characterization used to populate default curves.
//!
//! Q-over-OSNR samples are generated from textbook M-QAM error rates with a
//! transceiver-limited SNR ceiling, then fitted like lab measurements would be.

use statrs::function::erf::erfc;

use super::conversion::{gosnr_from_gsnr, q_from_ber};
use super::curve::{fit_b2b, B2BCurve};
use super::{CurveSet, Modulation, PltConfig, DEFAULT_FEC_THRESHOLD_BER};
use crate::error::Result;
use crate::units::db_to_lin;

/// Upper end of the characterized range, expressed as GSNR in dB.
const TOP_GSNR_DB: f64 = 32.0;
const SAMPLES: usize = 25;

fn implementation_snr_db(symbol_rate: f64) -> f64 {
    36.0 - 0.05 * symbol_rate
}

fn bottom_gsnr_db(modulation: Modulation) -> f64 {
    match modulation {
        Modulation::Qpsk => -1.0,
        Modulation::Qam8 => 2.0,
        Modulation::Qam16 => 4.5,
        Modulation::Qam32 => 7.5,
        Modulation::Qam64 => 10.5,
    }
}

/// Gray-coded M-QAM bit error ratio at a given SNR (linear).
fn qam_ber(modulation: Modulation, snr: f64) -> f64 {
    let m = f64::from(modulation.order());
    let bits = f64::from(modulation.bits_per_symbol());
    (2.0 / bits) * (1.0 - 1.0 / m.sqrt()) * erfc((1.5 * snr / (m - 1.0)).sqrt())
}

/// `(osnr_db, q_db)` samples spanning the configuration's useful range.
pub fn synthetic_b2b_samples(config: &PltConfig) -> Result<Vec<(f64, f64)>> {
    let impl_snr = db_to_lin(implementation_snr_db(config.symbol_rate));
    let lo = bottom_gsnr_db(config.modulation);
    let step = (TOP_GSNR_DB - lo) / (SAMPLES - 1) as f64;
    let mut samples = Vec::with_capacity(SAMPLES);
    for i in 0..SAMPLES {
        let gsnr = lo + step * i as f64;
        let snr = 1.0 / (1.0 / db_to_lin(gsnr) + 1.0 / impl_snr);
        let ber = qam_ber(config.modulation, snr);
        if ber <= 0.0 {
            continue;
        }
        let osnr = gosnr_from_gsnr(gsnr, config.symbol_rate)?;
        samples.push((osnr, q_from_ber(ber)?));
    }
    Ok(samples)
}

/// Characterizes every configuration in `catalog` with the synthetic model.
pub fn default_curves(catalog: &[PltConfig]) -> Result<CurveSet> {
    catalog
        .iter()
        .map(|config| {
            let samples = synthetic_b2b_samples(config)?;
            fit_b2b(&config.id, &samples, DEFAULT_FEC_THRESHOLD_BER)
        })
        .collect::<Result<Vec<B2BCurve>>>()
        .map(|curves| curves.into_iter().collect())
}
