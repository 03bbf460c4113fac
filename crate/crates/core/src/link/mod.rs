//! Closed-form lightpath simulator.
//!
//! A [`LinkSpec`] is an ordered list of fiber spans, amplifiers and filters.
//! Propagation accumulates EDFA ASE and per-span GN-model nonlinear
//! interference incoherently; filter cascades add an equalization penalty.
//! The simulator provides synthetic BER readings and the ground-truth GSNR
//! the probing pipeline is checked against.

mod filter;
mod fixtures;
mod physics;
mod simulate;

use serde::{Deserialize, Serialize};

use crate::catalog::PltConfig;
use crate::error::{Error, Result};

pub use filter::{filter_penalty, signal_spectrum};
pub use fixtures::{fixture, fixtures, FIXTURE_NAMES};
pub use physics::{ase_noise_power, ground_truth_gsnr, launch_power, legacy_psd, nli_noise_power, NoiseBandwidth};
pub use simulate::simulate_measurement;

fn default_attenuation() -> f64 {
    0.2
}
fn default_dispersion() -> f64 {
    16.7
}
fn default_gamma() -> f64 {
    1.3
}
fn default_order() -> u32 {
    3
}
fn default_ratio() -> f64 {
    1.0
}
fn default_max_output() -> f64 {
    20.0
}
fn default_center_frequency() -> f64 {
    193.4
}
fn default_dm_factor() -> f64 {
    1.8
}

/// Dispersion compensation module placed at the end of a span.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Dcm {
    #[default]
    None,
    Dcf {
        /// dB.
        insertion_loss: f64,
        dispersion_compensation_ratio: f64,
    },
    /// Grating-based compensator; also filters the channel.
    Dcg {
        insertion_loss: f64,
        /// GHz.
        bandwidth_3db: f64,
        #[serde(default = "default_order")]
        order: u32,
        #[serde(default = "default_ratio")]
        dispersion_compensation_ratio: f64,
    },
}

impl Dcm {
    pub fn insertion_loss(&self) -> f64 {
        match self {
            Dcm::None => 0.0,
            Dcm::Dcf { insertion_loss, .. } | Dcm::Dcg { insertion_loss, .. } => *insertion_loss,
        }
    }

    pub fn compensation_ratio(&self) -> Option<f64> {
        match self {
            Dcm::None => None,
            Dcm::Dcf { dispersion_compensation_ratio, .. } | Dcm::Dcg { dispersion_compensation_ratio, .. } => {
                Some(*dispersion_compensation_ratio)
            }
        }
    }

    /// Filter response of the module, if it has one.
    pub fn filter(&self) -> Option<FilterElement> {
        match self {
            Dcm::Dcg { bandwidth_3db, order, .. } => {
                Some(FilterElement { bandwidth_3db: *bandwidth_3db, order: *order, center_offset: 0.0 })
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Span {
    /// km.
    pub length: f64,
    /// dB/km.
    #[serde(default = "default_attenuation")]
    pub attenuation: f64,
    /// ps/(nm·km).
    #[serde(default = "default_dispersion")]
    pub dispersion: f64,
    /// Nonlinear coefficient, 1/(W·km).
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default)]
    pub dcm: Dcm,
}

impl Span {
    /// SSMF span without compensation.
    pub fn ssmf(length: f64) -> Self {
        Self {
            length,
            attenuation: default_attenuation(),
            dispersion: default_dispersion(),
            gamma: default_gamma(),
            dcm: Dcm::None,
        }
    }

    pub fn with_dcm(mut self, dcm: Dcm) -> Self {
        self.dcm = dcm;
        self
    }

    /// Fiber plus DCM loss, dB.
    pub fn loss(&self) -> f64 {
        self.attenuation * self.length + self.dcm.insertion_loss()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Amplifier {
    /// dB.
    pub noise_figure: f64,
    /// dB.
    pub gain: f64,
    /// dBm.
    #[serde(default = "default_max_output")]
    pub max_total_output_power: f64,
}

impl Amplifier {
    pub fn new(noise_figure: f64, gain: f64) -> Self {
        Self { noise_figure, gain, max_total_output_power: default_max_output() }
    }
}

/// Super-Gaussian band-pass filter, `|H(f)|² = exp(−ln2·(2(f−f0)/B)^(2n))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterElement {
    /// GHz.
    pub bandwidth_3db: f64,
    #[serde(default = "default_order")]
    pub order: u32,
    /// GHz.
    #[serde(default)]
    pub center_offset: f64,
}

impl FilterElement {
    pub fn new(bandwidth_3db: f64) -> Self {
        Self { bandwidth_3db, order: default_order(), center_offset: 0.0 }
    }

    /// Power transmission at baseband offset `f` (GHz) from the channel center.
    pub fn power_transmission(&self, f: f64) -> f64 {
        let u = 2.0 * (f - self.center_offset) / self.bandwidth_3db;
        (-std::f64::consts::LN_2 * u.abs().powi(2 * self.order as i32)).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type")]
pub enum Element {
    #[serde(rename = "span")]
    Span(Span),
    #[serde(rename = "amp")]
    Amp(Amplifier),
    #[serde(rename = "filter")]
    Filter(FilterElement),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    pub name: String,
    pub elements: Vec<Element>,
    /// Traverse the elements forward, then back in mirrored order.
    #[serde(default)]
    pub loopback: bool,
    /// THz.
    #[serde(default = "default_center_frequency")]
    pub center_frequency: f64,
    /// NLI multiplier for spans with dispersion compensation.
    #[serde(default = "default_dm_factor")]
    pub dm_nli_factor: f64,
    /// Planned per-channel PSD, mW/GHz.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub design_psd: Option<f64>,
}

impl LinkSpec {
    pub fn new(name: impl Into<String>, elements: Vec<Element>) -> Self {
        Self {
            name: name.into(),
            elements,
            loopback: false,
            center_frequency: default_center_frequency(),
            dm_nli_factor: default_dm_factor(),
            design_psd: None,
        }
    }

    pub fn looped(mut self) -> Self {
        self.loopback = true;
        self
    }

    /// Elements in traversal order. With loopback the forward list is followed
    /// by its amplifier-terminated sections in reverse order, so every span
    /// keeps its own amplifier on the way back.
    pub fn path(&self) -> Vec<&Element> {
        let mut path: Vec<&Element> = self.elements.iter().collect();
        if self.loopback {
            let mut sections: Vec<Vec<&Element>> = vec![Vec::new()];
            for element in &self.elements {
                sections.last_mut().expect("non-empty").push(element);
                if matches!(element, Element::Amp(_)) {
                    sections.push(Vec::new());
                }
            }
            for section in sections.into_iter().rev() {
                path.extend(section);
            }
        }
        path
    }

    pub fn spans(&self) -> impl Iterator<Item = &Span> {
        self.path().into_iter().filter_map(|e| match e {
            Element::Span(s) => Some(s),
            _ => None,
        })
    }

    /// Total fiber length along the traversal, km.
    pub fn total_length(&self) -> f64 {
        self.spans().map(|s| s.length).sum()
    }

    pub fn span_count(&self) -> usize {
        self.spans().count()
    }

    /// Filter responses along the traversal, including DCG modules.
    pub fn filter_cascade(&self) -> Vec<FilterElement> {
        self.path()
            .into_iter()
            .filter_map(|e| match e {
                Element::Filter(f) => Some(f.clone()),
                Element::Span(s) => s.dcm.filter(),
                Element::Amp(_) => None,
            })
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let invalid = |pointer: String, reason: &str| Err(Error::InvalidLink { pointer, reason: reason.to_string() });
        if self.elements.is_empty() {
            return invalid("/elements".into(), "link has no elements");
        }
        if !(self.center_frequency > 0.0) {
            return invalid("/center_frequency".into(), "must be positive");
        }
        if !(self.dm_nli_factor >= 1.0) {
            return invalid("/dm_nli_factor".into(), "must be at least 1");
        }
        if let Some(psd) = self.design_psd {
            if !(psd > 0.0 && psd.is_finite()) {
                return invalid("/design_psd".into(), "must be positive");
            }
        }
        let mut open_span: Option<usize> = None;
        let mut amps = 0;
        for (i, element) in self.elements.iter().enumerate() {
            let at = |field: &str| format!("/elements/{i}/{field}");
            match element {
                Element::Span(span) => {
                    if let Some(prev) = open_span {
                        return invalid(
                            format!("/elements/{i}"),
                            &format!("span at /elements/{prev} has no amplifier before the next span"),
                        );
                    }
                    open_span = Some(i);
                    if !(span.length > 0.0) {
                        return invalid(at("length"), "span length must be positive");
                    }
                    if !(span.attenuation > 0.0) {
                        return invalid(at("attenuation"), "attenuation must be positive");
                    }
                    if !(span.gamma >= 0.0) {
                        return invalid(at("gamma"), "gamma must be non-negative");
                    }
                    if !span.dispersion.is_finite() {
                        return invalid(at("dispersion"), "dispersion must be finite");
                    }
                    if let Some(ratio) = span.dcm.compensation_ratio() {
                        if !(0.0..=1.2).contains(&ratio) {
                            return invalid(
                                at("dcm/dispersion_compensation_ratio"),
                                "compensation ratio must lie in [0, 1.2]",
                            );
                        }
                        if !(span.dcm.insertion_loss() >= 0.0) {
                            return invalid(at("dcm/insertion_loss"), "insertion loss must be non-negative");
                        }
                    }
                    if let Some(f) = span.dcm.filter() {
                        if !(f.bandwidth_3db > 0.0) {
                            return invalid(at("dcm/bandwidth_3db"), "bandwidth must be positive");
                        }
                        if f.order < 1 {
                            return invalid(at("dcm/order"), "order must be at least 1");
                        }
                    }
                }
                Element::Amp(amp) => {
                    amps += 1;
                    open_span = None;
                    if !(amp.noise_figure >= 3.0) {
                        return invalid(at("noise_figure"), "noise figure must be at least 3 dB");
                    }
                    if !(amp.gain > 0.0) {
                        return invalid(at("gain"), "gain must be positive");
                    }
                    if !amp.max_total_output_power.is_finite() {
                        return invalid(at("max_total_output_power"), "must be finite");
                    }
                }
                Element::Filter(f) => {
                    if !(f.bandwidth_3db > 0.0) {
                        return invalid(at("bandwidth_3db"), "bandwidth must be positive");
                    }
                    if f.order < 1 {
                        return invalid(at("order"), "order must be at least 1");
                    }
                    if !f.center_offset.is_finite() {
                        return invalid(at("center_offset"), "must be finite");
                    }
                }
            }
        }
        if let Some(i) = open_span {
            return invalid(format!("/elements/{i}"), "last span is not followed by an amplifier");
        }
        if amps == 0 {
            return invalid("/elements".into(), "link has no amplifier");
        }
        Ok(())
    }
}

/// Launch condition of a probe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum PowerMode {
    /// mW/GHz.
    ConstantPsd { psd: f64 },
    /// dBm.
    ConstantPower { power: f64 },
}

impl PowerMode {
    /// Short label used in measurement files.
    pub fn label(&self) -> &'static str {
        match self {
            PowerMode::ConstantPsd { .. } => "psd",
            PowerMode::ConstantPower { .. } => "power",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeStimulus {
    pub config: PltConfig,
    pub mode: PowerMode,
}

impl ProbeStimulus {
    pub fn new(config: PltConfig, mode: PowerMode) -> Self {
        Self { config, mode }
    }

    pub fn validate(&self) -> Result<()> {
        self.config.validate()?;
        match self.mode {
            PowerMode::ConstantPsd { psd } if !(psd > 0.0 && psd.is_finite()) => {
                Err(Error::Domain(format!("PSD {psd} mW/GHz must be positive")))
            }
            PowerMode::ConstantPower { power } if !power.is_finite() => {
                Err(Error::Domain(format!("power {power} dBm must be finite")))
            }
            _ => Ok(()),
        }
    }
}

/// Gaussian perturbation applied to the true Q (dB) of each reading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub ber_readout_sigma_db: f64,
    pub seed: u64,
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        Self { ber_readout_sigma_db: 0.0, seed: 0 }
    }

    pub fn new(sigma_db: f64, seed: u64) -> Self {
        Self { ber_readout_sigma_db: sigma_db, seed }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_link() -> LinkSpec {
        LinkSpec::new(
            "t",
            vec![
                Element::Filter(FilterElement::new(80.0)),
                Element::Span(Span::ssmf(50.0)),
                Element::Amp(Amplifier::new(5.0, 10.0)),
                Element::Span(Span::ssmf(60.0)),
                Element::Filter(FilterElement::new(80.0)),
                Element::Amp(Amplifier::new(5.0, 12.0)),
            ],
        )
    }

    #[test]
    fn loopback_mirrors_sections() {
        let link = small_link().looped();
        link.validate().unwrap();
        assert_eq!(link.span_count(), 4);
        assert_eq!(link.total_length(), 220.0);
        let kinds: String = link
            .path()
            .iter()
            .map(|e| match e {
                Element::Span(_) => 'S',
                Element::Amp(_) => 'A',
                Element::Filter(_) => 'F',
            })
            .collect();
        assert_eq!(kinds, "FSASFASFAFSA");
        assert_eq!(link.filter_cascade().len(), 4);
    }

    #[test]
    fn validation_reports_pointer() {
        let mut link = small_link();
        link.elements.remove(2);
        let err = link.validate().unwrap_err();
        assert!(matches!(err, Error::InvalidLink { ref pointer, .. } if pointer == "/elements/2"));

        let mut link = small_link();
        if let Element::Span(s) = &mut link.elements[1] {
            s.length = -1.0;
        }
        let err = link.validate().unwrap_err();
        assert!(matches!(err, Error::InvalidLink { ref pointer, .. } if pointer == "/elements/1/length"));

        let link = LinkSpec::new("x", vec![Element::Filter(FilterElement::new(50.0))]);
        assert!(link.validate().is_err());
        let link = LinkSpec::new("x", vec![Element::Span(Span::ssmf(10.0))]);
        assert!(link.validate().is_err());

        let mut link = small_link();
        if let Element::Amp(a) = &mut link.elements[2] {
            a.noise_figure = 2.0;
        }
        assert!(link.validate().is_err());
    }

    #[test]
    fn json_shape() {
        let json = r#"{
            "name": "demo",
            "loopback": true,
            "elements": [
                {"type": "span", "length": 80.0,
                 "dcm": {"kind": "dcg", "insertion_loss": 3.0, "bandwidth_3db": 60.0}},
                {"type": "amp", "noise_figure": 5.5, "gain": 19.0},
                {"type": "filter", "bandwidth_3db": 80.0}
            ]
        }"#;
        let link: LinkSpec = serde_json::from_str(json).unwrap();
        link.validate().unwrap();
        assert_eq!(link.center_frequency, 193.4);
        let Element::Span(span) = &link.elements[0] else { panic!() };
        assert_eq!(span.attenuation, 0.2);
        assert_eq!(span.dcm.filter().unwrap().order, 3);
        assert_eq!(span.dcm.compensation_ratio(), Some(1.0));
        let Element::Filter(f) = &link.elements[2] else { panic!() };
        assert!((f.power_transmission(40.0) - 0.5).abs() < 1e-12);
    }
}
