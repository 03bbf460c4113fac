use std::f64::consts::{FRAC_2_SQRT_PI, SQRT_2};

use statrs::function::erf::{erfc, erfc_inv};

use crate::error::{Error, Result};
use crate::units::REF_BANDWIDTH_GHZ;

/// Q-factor in dB for a BER under the Gaussian noise assumption:
/// `20·log10(√2 · erfc⁻¹(2·ber))`.
pub fn q_from_ber(ber: f64) -> Result<f64> {
    if !(ber > 0.0 && ber < 0.5) {
        return Err(Error::Domain(format!("BER {ber} outside (0, 0.5)")));
    }
    let q_lin = SQRT_2 * refined_erfc_inv(2.0 * ber);
    Ok(20.0 * q_lin.log10())
}

/// Inverse of [`q_from_ber`].
pub fn ber_from_q(q_db: f64) -> f64 {
    let arg = 10f64.powf(q_db / 20.0) / SQRT_2;
    0.5 * erfc(arg)
}

/// `erfc⁻¹` polished with Newton steps on `erfc` so that the pair
/// round-trips to a few ulps.
fn refined_erfc_inv(t: f64) -> f64 {
    let mut y = erfc_inv(t);
    for _ in 0..2 {
        let slope = -FRAC_2_SQRT_PI * (-y * y).exp();
        if slope == 0.0 {
            break;
        }
        let step = (erfc(y) - t) / slope;
        if !step.is_finite() {
            break;
        }
        y -= step;
    }
    y
}

/// Normalizes an OSNR-like quantity referenced to 12.5 GHz to the signal's
/// symbol-rate bandwidth.
pub fn gsnr_from_gosnr(gosnr_db: f64, symbol_rate: f64) -> Result<f64> {
    check_rate(symbol_rate)?;
    Ok(gosnr_db + 10.0 * (REF_BANDWIDTH_GHZ / symbol_rate).log10())
}

/// Inverse of [`gsnr_from_gosnr`].
pub fn gosnr_from_gsnr(gsnr_db: f64, symbol_rate: f64) -> Result<f64> {
    check_rate(symbol_rate)?;
    Ok(gsnr_db + 10.0 * (symbol_rate / REF_BANDWIDTH_GHZ).log10())
}

fn check_rate(symbol_rate: f64) -> Result<()> {
    if symbol_rate > 0.0 && symbol_rate.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("symbol rate {symbol_rate} GBd must be positive")))
    }
}
