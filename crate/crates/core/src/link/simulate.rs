use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::physics::ground_truth_gsnr;
use super::{LinkSpec, NoiseModel, ProbeStimulus};
use crate::catalog::{ber_from_q, gosnr_from_gsnr, B2BCurve};
use crate::error::{Error, Result};

/// Synthetic receiver BER for one probe reading.
///
/// The true GSNR is mapped through the configuration's back-to-back curve
/// (extended linearly outside the characterized range), perturbed in Q by the noise model
/// and converted to BER. The random stream is derived from `(noise.seed,
/// draw)` only, so readings do not depend on evaluation order.
pub fn simulate_measurement(
    link: &LinkSpec,
    stimulus: &ProbeStimulus,
    curve: &B2BCurve,
    noise: &NoiseModel,
    draw: u64,
) -> Result<f64> {
    if curve.config_id != stimulus.config.id {
        return Err(Error::Catalog(format!(
            "curve `{}` does not match probe `{}`",
            curve.config_id, stimulus.config.id
        )));
    }
    let gsnr = ground_truth_gsnr(link, stimulus)?;
    let gosnr = gosnr_from_gsnr(gsnr, stimulus.config.symbol_rate)?;
    let (q_true, _) = curve.q_from_osnr_extended(gosnr);
    Ok(ber_from_q(q_true + readout_noise(noise, draw)?))
}

fn readout_noise(noise: &NoiseModel, draw: u64) -> Result<f64> {
    let sigma = noise.ber_readout_sigma_db;
    if !(sigma >= 0.0) {
        return Err(Error::Domain(format!("noise sigma {sigma} dB must be non-negative")));
    }
    if sigma == 0.0 {
        return Ok(0.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    rng.set_stream(draw);
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::Domain(e.to_string()))?;
    Ok(normal.sample(&mut rng))
}
