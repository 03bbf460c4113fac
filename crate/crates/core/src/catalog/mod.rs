//! Probe transceiver configurations, their back-to-back characterization and
//! the BER / Q / OSNR / GSNR conversions.

mod characterization;
mod conversion;
mod curve;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use characterization::{default_curves, synthetic_b2b_samples};
pub use conversion::{ber_from_q, gosnr_from_gsnr, gsnr_from_gosnr, q_from_ber};
pub use curve::{fit_b2b, B2BCurve, Inversion};

/// Pre-FEC BER threshold used when a curve is characterized without an
/// explicit one (soft-decision FEC).
pub const DEFAULT_FEC_THRESHOLD_BER: f64 = 2.0e-2;

/// Occupied bandwidth / symbol rate used when none is given.
pub const DEFAULT_BANDWIDTH_FACTOR: f64 = 1.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Modulation {
    #[serde(rename = "QPSK")]
    Qpsk,
    #[serde(rename = "8QAM")]
    Qam8,
    #[serde(rename = "16QAM")]
    Qam16,
    #[serde(rename = "32QAM")]
    Qam32,
    #[serde(rename = "64QAM")]
    Qam64,
}

impl Modulation {
    pub fn bits_per_symbol(self) -> u32 {
        match self {
            Modulation::Qpsk => 2,
            Modulation::Qam8 => 3,
            Modulation::Qam16 => 4,
            Modulation::Qam32 => 5,
            Modulation::Qam64 => 6,
        }
    }

    /// Constellation size.
    pub fn order(self) -> u32 {
        1 << self.bits_per_symbol()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Modulation::Qpsk => "QPSK",
            Modulation::Qam8 => "8QAM",
            Modulation::Qam16 => "16QAM",
            Modulation::Qam32 => "32QAM",
            Modulation::Qam64 => "64QAM",
        }
    }
}

impl fmt::Display for Modulation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DP-{}", self.as_str())
    }
}

/// One probe / transceiver configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PltConfig {
    pub id: String,
    /// Line rate, Gbit/s.
    pub line_rate: u32,
    pub modulation: Modulation,
    /// Symbol rate, GBd.
    pub symbol_rate: f64,
    /// Occupied optical bandwidth, GHz.
    pub occupied_bandwidth: f64,
}

impl PltConfig {
    /// Configuration with the default 10 % roll-off.
    pub fn new(id: impl Into<String>, line_rate: u32, modulation: Modulation, symbol_rate: f64) -> Self {
        Self {
            id: id.into(),
            line_rate,
            modulation,
            symbol_rate,
            occupied_bandwidth: symbol_rate * DEFAULT_BANDWIDTH_FACTOR,
        }
    }

    pub fn with_occupied_bandwidth(mut self, occupied_bandwidth: f64) -> Self {
        self.occupied_bandwidth = occupied_bandwidth;
        self
    }

    /// Spectral roll-off implied by the occupied bandwidth.
    pub fn rolloff(&self) -> f64 {
        self.occupied_bandwidth / self.symbol_rate - 1.0
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |reason: String| Err(Error::Catalog(format!("config `{}`: {reason}", self.id)));
        if self.id.is_empty() {
            return Err(Error::Catalog("config with empty id".into()));
        }
        if !(self.symbol_rate > 0.0) || !self.symbol_rate.is_finite() {
            return fail(format!("symbol rate {} must be positive", self.symbol_rate));
        }
        if !(self.occupied_bandwidth >= self.symbol_rate) || !self.occupied_bandwidth.is_finite() {
            return fail(format!(
                "occupied bandwidth {} below symbol rate {}",
                self.occupied_bandwidth, self.symbol_rate
            ));
        }
        let ceiling = 2.0 * f64::from(self.modulation.bits_per_symbol()) * self.symbol_rate;
        if f64::from(self.line_rate) > ceiling {
            return fail(format!(
                "line rate {} Gb/s exceeds dual-polarization capacity {ceiling:.1} Gb/s",
                self.line_rate
            ));
        }
        Ok(())
    }
}

/// Checks every config and id uniqueness.
pub fn validate_catalog(catalog: &[PltConfig]) -> Result<()> {
    let mut seen = std::collections::BTreeSet::new();
    for config in catalog {
        config.validate()?;
        if !seen.insert(config.id.as_str()) {
            return Err(Error::Catalog(format!("duplicate config id `{}`", config.id)));
        }
    }
    Ok(())
}

/// The eleven probe configurations used for extended probing.
pub fn default_catalog() -> Vec<PltConfig> {
    use Modulation::*;
    [
        (100, Qpsk, 31.5),
        (200, Qam16, 34.7),
        (300, Qam64, 34.7),
        (300, Qam32, 41.7),
        (200, Qam8, 46.3),
        (400, Qam64, 46.3),
        (300, Qam16, 52.1),
        (400, Qam32, 55.6),
        (200, Qpsk, 69.4),
        (300, Qam8, 69.4),
        (400, Qam16, 69.4),
    ]
    .into_iter()
    .map(|(rate, modulation, baud)| {
        PltConfig::new(format!("{rate}G-{}-{baud:.1}", modulation.as_str()), rate, modulation, baud)
    })
    .collect()
}

/// Back-to-back curves keyed by config id.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CurveSet(BTreeMap<String, B2BCurve>);

impl CurveSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, curve: B2BCurve) {
        self.0.insert(curve.config_id.clone(), curve);
    }

    pub fn get(&self, config_id: &str) -> Result<&B2BCurve> {
        self.0.get(config_id).ok_or_else(|| Error::Catalog(format!("no back-to-back curve for `{config_id}`")))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Curves with the id they are stored under.
    pub fn iter_keyed(&self) -> impl Iterator<Item = (&str, &B2BCurve)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn iter(&self) -> impl Iterator<Item = &B2BCurve> {
        self.0.values()
    }

    /// Fails with a catalog error naming the first config without a curve.
    pub fn ensure_covers(&self, catalog: &[PltConfig]) -> Result<()> {
        catalog.iter().try_for_each(|c| self.get(&c.id).map(|_| ()))
    }
}

impl FromIterator<B2BCurve> for CurveSet {
    fn from_iter<I: IntoIterator<Item = B2BCurve>>(iter: I) -> Self {
        let mut set = CurveSet::new();
        for curve in iter {
            set.insert(curve);
        }
        set
    }
}

/// GSNR a configuration needs at its FEC threshold, dB.
pub fn required_gsnr(curve: &B2BCurve, config: &PltConfig) -> Result<f64> {
    if curve.config_id != config.id {
        return Err(Error::Catalog(format!("curve `{}` does not belong to config `{}`", curve.config_id, config.id)));
    }
    gsnr_from_gosnr(curve.required_gosnr_db, config.symbol_rate)
}
