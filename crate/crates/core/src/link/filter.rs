use std::f64::consts::PI;

use super::{FilterElement, LinkSpec};
use crate::catalog::PltConfig;
use crate::error::Result;
use crate::units::lin_to_db;

/// Stop-band floor of a filter cascade (−40 dB).
const CASCADE_FLOOR: f64 = 1e-4;
/// Simpson intervals per spectral segment (even).
const INTERVALS: usize = 512;

/// Raised-cosine power spectrum (unit height) of a root-raised-cosine signal
/// at offset `f` GHz.
pub fn signal_spectrum(f: f64, symbol_rate: f64, rolloff: f64) -> f64 {
    let a = f.abs();
    let f1 = (1.0 - rolloff) * symbol_rate / 2.0;
    let f2 = (1.0 + rolloff) * symbol_rate / 2.0;
    if a <= f1 {
        1.0
    } else if a <= f2 && rolloff > 0.0 {
        0.5 * (1.0 + (PI / (rolloff * symbol_rate) * (a - f1)).cos())
    } else {
        0.0
    }
}

fn cascade_transmission(cascade: &[FilterElement], f: f64) -> f64 {
    cascade.iter().map(|filter| filter.power_transmission(f)).product::<f64>().max(CASCADE_FLOOR)
}

fn simpson(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let h = (b - a) / INTERVALS as f64;
    let mut sum = f(a) + f(b);
    for i in 1..INTERVALS {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + h * i as f64);
    }
    sum * h / 3.0
}

/// SNR penalty (dB) of the link's filter cascade for a configuration.
///
/// The receiver equalizer restores the filtered spectrum and enhances the
/// noise by the spectrum-weighted mean of `1/|H(f)|²`, so the penalty is
/// `10·log10(∫S/|H|² df / ∫S df)` with a −40 dB stop-band floor on `|H|²`.
pub fn filter_penalty(link: &LinkSpec, config: &PltConfig) -> Result<f64> {
    config.validate()?;
    let cascade = link.filter_cascade();
    if cascade.is_empty() {
        return Ok(0.0);
    }
    let rs = config.symbol_rate;
    let rolloff = config.rolloff();
    let f1 = (1.0 - rolloff) * rs / 2.0;
    let f2 = (1.0 + rolloff) * rs / 2.0;
    let integrate = |g: &dyn Fn(f64) -> f64| simpson(-f2, -f1, g) + simpson(-f1, f1, g) + simpson(f1, f2, g);
    let power = integrate(&|f| signal_spectrum(f, rs, rolloff));
    let enhanced = integrate(&|f| signal_spectrum(f, rs, rolloff) / cascade_transmission(&cascade, f));
    Ok(lin_to_db(enhanced / power).max(0.0))
}
