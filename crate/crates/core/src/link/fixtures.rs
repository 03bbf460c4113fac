//! Representative models of the looped test links: five DCM-free long-haul
//! loops and eight regional loops on a dispersion-managed legacy network.
//!
//! Lengths and span counts are the looped (back and forth) totals. Plant
//! parameters such as noise figures and DCM losses are typical values, not
//! field data.

use super::{Amplifier, Dcm, Element, FilterElement, LinkSpec, Span};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Compensation {
    None,
    Dcf,
    /// DCG on the first `n` spans of each direction, DCF on the rest.
    Mixed(usize),
}

struct LoopDef {
    name: &'static str,
    looped_km: f64,
    looped_spans: usize,
    compensation: Compensation,
    regional: bool,
}

const LOOPS: [LoopDef; 13] = [
    LoopDef { name: "LH_SAL", looped_km: 1016.0, looped_spans: 14, compensation: Compensation::None, regional: false },
    LoopDef {
        name: "LH_KRUIO",
        looped_km: 1792.0,
        looped_spans: 24,
        compensation: Compensation::None,
        regional: false,
    },
    LoopDef { name: "LH_WAR", looped_km: 2943.0, looped_spans: 36, compensation: Compensation::None, regional: false },
    LoopDef { name: "LH_POZ", looped_km: 3751.0, looped_spans: 48, compensation: Compensation::None, regional: false },
    LoopDef { name: "LH_FRA", looped_km: 5738.0, looped_spans: 74, compensation: Compensation::None, regional: false },
    LoopDef { name: "R_SOL", looped_km: 3.0, looped_spans: 2, compensation: Compensation::None, regional: true },
    LoopDef { name: "R_TM", looped_km: 70.0, looped_spans: 4, compensation: Compensation::Dcf, regional: true },
    LoopDef { name: "R_RAP", looped_km: 144.0, looped_spans: 4, compensation: Compensation::Dcf, regional: true },
    LoopDef { name: "R_PAI", looped_km: 241.0, looped_spans: 6, compensation: Compensation::Dcf, regional: true },
    LoopDef { name: "R_VIL", looped_km: 382.0, looped_spans: 8, compensation: Compensation::Dcf, regional: true },
    LoopDef { name: "R_TSIR", looped_km: 675.0, looped_spans: 12, compensation: Compensation::Dcf, regional: true },
    LoopDef { name: "R_PYS", looped_km: 485.0, looped_spans: 8, compensation: Compensation::Mixed(3), regional: true },
    LoopDef { name: "R_ILM", looped_km: 822.0, looped_spans: 12, compensation: Compensation::Mixed(3), regional: true },
];

pub const FIXTURE_NAMES: [&str; 13] = [
    "LH_SAL", "LH_KRUIO", "LH_WAR", "LH_POZ", "LH_FRA", "R_SOL", "R_TM", "R_RAP", "R_PAI", "R_VIL", "R_TSIR", "R_PYS",
    "R_ILM",
];

const LH_NOISE_FIGURE: f64 = 5.0;
const REGIONAL_NOISE_FIGURE: f64 = 5.5;
const REGIONAL_ATTENUATION: f64 = 0.22;
const CHANNEL_FILTER_GHZ: f64 = 80.0;
const DCG_BANDWIDTH_GHZ: f64 = 60.0;
const DCG_LOSS_DB: f64 = 3.0;
const COMPENSATION_RATIO: f64 = 0.9;
/// Planned PSDs, mW/GHz. Both sit several dB below the nonlinear optimum.
const LH_DESIGN_PSD: f64 = 0.008;
const REGIONAL_DESIGN_PSD: f64 = 0.006;
/// Channel filters per direction on regional loops (mux, demux and ROADMs).
const FILTERS_PER_DIRECTION: usize = 6;

fn dcf(span_km: f64, dispersion: f64) -> Dcm {
    // −100 ps/(nm·km) fiber at 0.5 dB/km plus 1 dB of connectors.
    let dcf_km = dispersion * span_km * COMPENSATION_RATIO / 100.0;
    Dcm::Dcf { insertion_loss: 0.5 * dcf_km + 1.0, dispersion_compensation_ratio: COMPENSATION_RATIO }
}

fn dcg() -> Dcm {
    Dcm::Dcg {
        insertion_loss: DCG_LOSS_DB,
        bandwidth_3db: DCG_BANDWIDTH_GHZ,
        order: 3,
        dispersion_compensation_ratio: COMPENSATION_RATIO,
    }
}

fn build(def: &LoopDef) -> LinkSpec {
    let spans = def.looped_spans / 2;
    let span_km = def.looped_km / def.looped_spans as f64;
    let nf = if def.regional { REGIONAL_NOISE_FIGURE } else { LH_NOISE_FIGURE };
    let channel_filter = || Element::Filter(FilterElement::new(CHANNEL_FILTER_GHZ));

    let mut elements = Vec::new();
    if def.regional {
        elements.extend((0..2).map(|_| channel_filter()));
    }
    for i in 0..spans {
        let mut span = Span::ssmf(span_km);
        if def.regional {
            span.attenuation = REGIONAL_ATTENUATION;
        }
        span.dcm = match def.compensation {
            Compensation::None => Dcm::None,
            Compensation::Dcf => dcf(span_km, span.dispersion),
            Compensation::Mixed(n) if i < n => dcg(),
            Compensation::Mixed(_) => dcf(span_km, span.dispersion),
        };
        let gain = span.loss();
        elements.push(Element::Span(span));
        elements.push(Element::Amp(Amplifier::new(nf, gain)));
    }
    if def.regional {
        elements.extend((2..FILTERS_PER_DIRECTION).map(|_| channel_filter()));
    }
    let mut link = LinkSpec::new(def.name, elements).looped();
    link.design_psd = Some(if def.regional { REGIONAL_DESIGN_PSD } else { LH_DESIGN_PSD });
    link
}

/// All thirteen test loops.
pub fn fixtures() -> Vec<LinkSpec> {
    LOOPS.iter().map(build).collect()
}

/// A single loop by name.
pub fn fixture(name: &str) -> Option<LinkSpec> {
    LOOPS.iter().find(|d| d.name == name).map(build)
}
