use std::collections::BTreeMap;
use std::io::Read;

use serde::Deserialize;

use crate::catalog::CurveSet;
use crate::error::{Error, Result};
use crate::link::{simulate_measurement, LinkSpec, NoiseModel, ProbeStimulus};

/// Identifies one reading within a probing session. Sources that model noise
/// derive their random stream from it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Draw {
    pub sweep: u16,
    pub config_index: u32,
    pub repeat: u32,
}

impl Draw {
    pub fn stream(&self) -> u64 {
        (u64::from(self.sweep) << 48) | (u64::from(self.config_index) << 32) | u64::from(self.repeat)
    }
}

/// Sweep tags used by the pipeline.
pub mod sweep {
    pub const PROBE: u16 = 0;
    pub const VERIFY: u16 = 1;
    pub const REGIME_PSD: u16 = 2;
    pub const REGIME_POWER: u16 = 3;
}

/// Anything that can return a BER reading for a probe stimulus.
pub trait MeasurementSource: Sync {
    fn measure(&self, stimulus: &ProbeStimulus, draw: Draw) -> Result<f64>;

    /// Name of the measured link.
    fn link_name(&self) -> &str;
}

/// Readings synthesized by the line simulator.
#[derive(Debug, Clone)]
pub struct SimulatedSource {
    pub link: LinkSpec,
    pub curves: CurveSet,
    pub noise: NoiseModel,
}

impl SimulatedSource {
    pub fn new(link: LinkSpec, curves: CurveSet, noise: NoiseModel) -> Self {
        Self { link, curves, noise }
    }
}

impl MeasurementSource for SimulatedSource {
    fn measure(&self, stimulus: &ProbeStimulus, draw: Draw) -> Result<f64> {
        let curve = self.curves.get(&stimulus.config.id)?;
        simulate_measurement(&self.link, stimulus, curve, &self.noise, draw.stream())
    }

    fn link_name(&self) -> &str {
        &self.link.name
    }
}

#[derive(Debug, Deserialize)]
struct Row {
    config_id: String,
    mode: String,
    ber: f64,
}

/// Field readings ingested from CSV (`config_id,mode,ber`). Repeat `r` of a
/// configuration returns its `r`-th reading, cycling when there are fewer.
#[derive(Debug, Clone, Default)]
pub struct FileSource {
    name: String,
    readings: BTreeMap<(String, String), Vec<f64>>,
}

impl FileSource {
    pub fn from_reader(name: impl Into<String>, reader: impl Read) -> Result<Self> {
        let mut readings: BTreeMap<(String, String), Vec<f64>> = BTreeMap::new();
        let mut csv = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = csv.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["config_id", "mode", "ber"] {
            return Err(Error::Schema {
                pointer: "/0".into(),
                reason: format!(
                    "expected header `config_id,mode,ber`, found `{}`",
                    headers.iter().collect::<Vec<_>>().join(",")
                ),
            });
        }
        for (i, row) in csv.deserialize::<Row>().enumerate() {
            let row = row.map_err(|e| Error::Schema { pointer: format!("/{}", i + 1), reason: e.to_string() })?;
            let mode = row.mode.to_ascii_lowercase();
            if mode != "psd" && mode != "power" {
                return Err(Error::Schema {
                    pointer: format!("/{}/mode", i + 1),
                    reason: format!("unknown mode `{}` (expected psd or power)", row.mode),
                });
            }
            readings.entry((row.config_id, mode)).or_default().push(row.ber);
        }
        Ok(Self { name: name.into(), readings })
    }

    pub fn len(&self) -> usize {
        self.readings.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.readings.is_empty()
    }
}

impl MeasurementSource for FileSource {
    fn measure(&self, stimulus: &ProbeStimulus, draw: Draw) -> Result<f64> {
        let key = (stimulus.config.id.clone(), stimulus.mode.label().to_string());
        let rows = self.readings.get(&key).filter(|r| !r.is_empty()).ok_or_else(|| Error::Source {
            config_id: stimulus.config.id.clone(),
            mode: stimulus.mode.label().into(),
            reason: "no readings in measurement file".into(),
        })?;
        Ok(rows[draw.repeat as usize % rows.len()])
    }

    fn link_name(&self) -> &str {
        &self.name
    }
}
