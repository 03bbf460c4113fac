use std::f64::consts::PI;

use super::filter::filter_penalty;
use super::{Element, LinkSpec, PowerMode, ProbeStimulus, Span};
use crate::error::{Error, Result};
use crate::units::{db_to_lin, dbm_to_mw, lin_to_db, mw_to_dbm, PLANCK, REF_BANDWIDTH_GHZ, SPEED_OF_LIGHT};

/// Probe launch power, dBm.
pub fn launch_power(stimulus: &ProbeStimulus) -> f64 {
    match stimulus.mode {
        PowerMode::ConstantPower { power } => power,
        PowerMode::ConstantPsd { psd } => mw_to_dbm(psd * stimulus.config.occupied_bandwidth),
    }
}

/// PSD (mW/GHz) of a legacy channel: its launch power spread over the OOK
/// signal bandwidth.
pub fn legacy_psd(channel_power_dbm: f64, ook_bandwidth_ghz: f64) -> Result<f64> {
    if !(ook_bandwidth_ghz > 0.0) {
        return Err(Error::Domain(format!("OOK bandwidth {ook_bandwidth_ghz} GHz must be positive")));
    }
    Ok(dbm_to_mw(channel_power_dbm) / ook_bandwidth_ghz)
}

/// Bandwidth ASE is integrated over.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseBandwidth {
    /// 12.5 GHz OSNR reference.
    Reference,
    /// GHz.
    Signal(f64),
}

impl NoiseBandwidth {
    fn ghz(self) -> f64 {
        match self {
            NoiseBandwidth::Reference => REF_BANDWIDTH_GHZ,
            NoiseBandwidth::Signal(b) => b,
        }
    }
}

/// Powers at the receiver, mW.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Received {
    pub signal: f64,
    pub ase: f64,
    pub nli: f64,
}

/// β2 in s²/m from D in ps/(nm·km) at `freq_thz`.
fn beta2(dispersion: f64, freq_thz: f64) -> f64 {
    let lambda = SPEED_OF_LIGHT / (freq_thz * 1e12);
    let d_si = dispersion * 1e-6;
    -d_si * lambda * lambda / (2.0 * PI * SPEED_OF_LIGHT)
}

/// asinh(x)/x, continuous at 0.
fn asinhc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.asinh() / x
    }
}

/// NLI efficiency of one span, (W/Hz)⁻², such that `G_NLI = η·G³` for a
/// flat signal of bandwidth `bw_hz` with PSD `G` in W/Hz.
pub(crate) fn span_nli_efficiency(span: &Span, bw_hz: f64, freq_thz: f64, dm_factor: f64) -> f64 {
    if span.gamma == 0.0 {
        return 0.0;
    }
    let alpha = span.attenuation / (10.0 * std::f64::consts::LOG10_E) / 1e3; // 1/m, power
    let length = span.length * 1e3;
    let l_eff = -(-alpha * length).exp_m1() / alpha;
    let l_eff_asym = 1.0 / alpha;
    let gamma = span.gamma * 1e-3; // 1/(W·m)
    let (residual, factor) = match span.dcm.compensation_ratio() {
        Some(ratio) => ((1.0 - ratio).abs(), dm_factor),
        None => (1.0, 1.0),
    };
    let b2 = beta2(span.dispersion, freq_thz).abs() * residual;
    let x = PI * PI / 2.0 * b2 * l_eff_asym * bw_hz * bw_hz;
    // asinh(x)/(π|β2|L_a) rewritten as asinhc(x)·(π/2)·B² so β2 → 0 stays finite.
    factor * (8.0 / 27.0) * gamma * gamma * l_eff * l_eff * (PI / 2.0) * bw_hz * bw_hz * asinhc(x)
}

/// Propagates a flat signal of `launch_mw` over `bw_ghz` through the link.
pub(crate) fn propagate(link: &LinkSpec, launch_mw: f64, bw_ghz: f64) -> Result<Received> {
    link.validate()?;
    let hv = PLANCK * link.center_frequency * 1e12; // J
    let bw_hz = bw_ghz * 1e9;
    let (mut signal, mut ase, mut nli) = (launch_mw, 0.0, 0.0);
    for (index, element) in link.path().into_iter().enumerate() {
        match element {
            Element::Span(span) => {
                let psd_w_per_hz = signal * 1e-3 / bw_hz;
                let eta = span_nli_efficiency(span, bw_hz, link.center_frequency, link.dm_nli_factor);
                nli += eta * psd_w_per_hz.powi(3) * bw_hz * 1e3;
                let t = db_to_lin(-span.loss());
                signal *= t;
                ase *= t;
                nli *= t;
                if let Some(f) = span.dcm.filter() {
                    let h = f.power_transmission(0.0);
                    ase *= h;
                    nli *= h;
                }
            }
            Element::Amp(amp) => {
                let g = db_to_lin(amp.gain);
                signal *= g;
                ase *= g;
                nli *= g;
                ase += hv * db_to_lin(amp.noise_figure) * g * bw_hz * 1e3;
                let total = signal + ase + nli;
                if total > dbm_to_mw(amp.max_total_output_power) {
                    return Err(Error::PowerBudget {
                        element: index,
                        power_dbm: mw_to_dbm(total),
                        limit_dbm: amp.max_total_output_power,
                    });
                }
            }
            Element::Filter(f) => {
                let h = f.power_transmission(0.0);
                ase *= h;
                nli *= h;
            }
        }
    }
    Ok(Received { signal, ase, nli })
}

/// Accumulated ASE power at the receiver, mW.
pub fn ase_noise_power(link: &LinkSpec, bandwidth: NoiseBandwidth) -> Result<f64> {
    Ok(propagate(link, 0.0, bandwidth.ghz())?.ase)
}

/// Accumulated nonlinear interference power in the probe bandwidth, mW.
pub fn nli_noise_power(link: &LinkSpec, stimulus: &ProbeStimulus) -> Result<f64> {
    stimulus.validate()?;
    let launch = dbm_to_mw(launch_power(stimulus));
    Ok(propagate(link, launch, stimulus.config.occupied_bandwidth)?.nli)
}

/// True GSNR of the probe at the receiver, dB.
pub fn ground_truth_gsnr(link: &LinkSpec, stimulus: &ProbeStimulus) -> Result<f64> {
    stimulus.validate()?;
    let launch = dbm_to_mw(launch_power(stimulus));
    let rx = propagate(link, launch, stimulus.config.occupied_bandwidth)?;
    Ok(lin_to_db(rx.signal / (rx.ase + rx.nli)) - filter_penalty(link, &stimulus.config)?)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;
    use crate::catalog::{default_catalog, PltConfig};
    use crate::link::{fixture, Amplifier, Dcm, FilterElement};

    fn block(length: f64, gamma: f64, nf: f64) -> Vec<Element> {
        let mut span = Span::ssmf(length);
        span.gamma = gamma;
        let gain = span.loss();
        vec![Element::Span(span), Element::Amp(Amplifier::new(nf, gain))]
    }

    fn chain(n: usize, length: f64, gamma: f64) -> LinkSpec {
        LinkSpec::new("chain", (0..n).flat_map(|_| block(length, gamma, 5.0)).collect())
    }

    fn psd_stimulus(config: &PltConfig, psd: f64) -> ProbeStimulus {
        ProbeStimulus::new(config.clone(), PowerMode::ConstantPsd { psd })
    }

    #[test]
    fn launch_power_examples() {
        let catalog = default_catalog();
        let c = &catalog[1];
        let fixed = ProbeStimulus::new(c.clone(), PowerMode::ConstantPower { power: 0.0 });
        assert_eq!(launch_power(&fixed), 0.0);

        let psd = 1.0 / (69.4 * 1.1);
        let p = launch_power(&psd_stimulus(c, psd));
        assert!((p - 10.0 * (34.7f64 / 69.4).log10()).abs() < 1e-12);

        let wide = PltConfig::new("w", 100, crate::catalog::Modulation::Qpsk, 40.0).with_occupied_bandwidth(50.0);
        assert!((launch_power(&psd_stimulus(&wide, 0.01)) - 10.0 * 0.5f64.log10()).abs() < 1e-12);
    }

    #[test]
    fn legacy_psd_examples() {
        assert!((legacy_psd(0.0, 50.0).unwrap() - 0.02).abs() < 1e-15);
        assert!((legacy_psd(10.0 * 2f64.log10(), 50.0).unwrap() - 0.04).abs() < 1e-12);
        assert!((legacy_psd(0.0, 25.0).unwrap() - 0.04).abs() < 1e-15);
        assert!(matches!(legacy_psd(0.0, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn single_amplifier_ase() {
        // 100 km at 0.2 dB/km = 20 dB, compensated by a 20 dB, NF 5 dB amplifier.
        let link = chain(1, 100.0, 1.3);
        let ase = ase_noise_power(&link, NoiseBandwidth::Reference).unwrap();
        let h = 6.626_070_15e-34;
        let nu = 193.4e12;
        let expect_w = h * nu * 10f64.powf(0.5) * 100.0 * 12.5e9;
        assert!(((ase - expect_w * 1e3) / ase).abs() < 1e-12);
        assert!((ase - 5.07e-4).abs() < 0.01e-4);
        assert!((10.0 * ase.log10() + 32.95).abs() < 0.01);

        let doubled = ase_noise_power(&chain(2, 100.0, 1.3), NoiseBandwidth::Reference).unwrap();
        assert!((doubled / ase - 2.0).abs() < 1e-12);
        let wide = ase_noise_power(&link, NoiseBandwidth::Signal(25.0)).unwrap();
        assert!((wide / ase - 2.0).abs() < 1e-12);
    }

    #[test]
    fn ase_sees_downstream_loss() {
        let mut elements = block(100.0, 1.3, 5.0);
        elements.push(Element::Filter(FilterElement { bandwidth_3db: 50.0, order: 1, center_offset: 25.0 }));
        let link = LinkSpec::new("offset", elements);
        let base = ase_noise_power(&chain(1, 100.0, 1.3), NoiseBandwidth::Reference).unwrap();
        let filtered = ase_noise_power(&link, NoiseBandwidth::Reference).unwrap();
        assert!((filtered / base - 0.5).abs() < 1e-12);
    }

    #[test]
    fn nli_examples() {
        let catalog = default_catalog();
        let c = &catalog[0];
        let zero = nli_noise_power(&chain(3, 80.0, 0.0), &psd_stimulus(c, 0.02)).unwrap();
        assert_eq!(zero, 0.0);

        let link = chain(3, 80.0, 1.3);
        let a = nli_noise_power(&link, &psd_stimulus(c, 0.01)).unwrap();
        let b = nli_noise_power(&link, &psd_stimulus(c, 0.01 * 10f64.powf(0.1))).unwrap();
        assert!((10.0 * (b / a).log10() - 3.0).abs() < 1e-9);

        let single = nli_noise_power(&chain(3, 80.0, 1.3), &psd_stimulus(c, 0.01)).unwrap();
        let double = nli_noise_power(&chain(6, 80.0, 1.3), &psd_stimulus(c, 0.01)).unwrap();
        assert!((double / single - 2.0).abs() < 1e-12);
    }

    #[test]
    fn dispersion_management_raises_nli() {
        let catalog = default_catalog();
        let stim = psd_stimulus(&catalog[0], 0.01);
        let plain = nli_noise_power(&chain(1, 80.0, 1.3), &stim).unwrap();
        let mut elements = block(80.0, 1.3, 5.0);
        if let Element::Span(s) = &mut elements[0] {
            s.dcm = Dcm::Dcf { insertion_loss: 0.0, dispersion_compensation_ratio: 0.9 };
        }
        let managed = nli_noise_power(&LinkSpec::new("dm", elements), &stim).unwrap();
        assert!(managed > 1.8 * plain, "{managed} vs {plain}");
    }

    /// Independent span-by-span evaluation of the ASE/NLI budget.
    fn stepwise_gsnr(link: &LinkSpec, config: &PltConfig, psd_mw_per_ghz: f64) -> f64 {
        let h = 6.626_070_15e-34;
        let c = 299_792_458.0;
        let nu = link.center_frequency * 1e12;
        let lambda = c / nu;
        let bw = config.occupied_bandwidth * 1e9;
        let mut p_sig = psd_mw_per_ghz * config.occupied_bandwidth * 1e-3; // W
        let mut p_ase = 0.0;
        let mut p_nli = 0.0;
        for e in link.path() {
            match e {
                Element::Span(s) => {
                    let alpha_np = s.attenuation * 10f64.ln() / 10.0 / 1000.0;
                    let len = s.length * 1000.0;
                    let leff = (1.0 - (-alpha_np * len).exp()) / alpha_np;
                    let b2 = s.dispersion * 1e-6 * lambda * lambda / (2.0 * std::f64::consts::PI * c);
                    let (b2r, k) = match s.dcm.compensation_ratio() {
                        Some(r) => (b2 * (1.0 - r).abs(), link.dm_nli_factor),
                        None => (b2, 1.0),
                    };
                    let g = p_sig / bw;
                    let pi = std::f64::consts::PI;
                    let arg = pi * pi / 2.0 * b2r * (1.0 / alpha_np) * bw * bw;
                    let g_nli = k * 8.0 / 27.0 * (s.gamma * 1e-3).powi(2) * g.powi(3) * leff * leff * arg.asinh()
                        / (pi * b2r / alpha_np);
                    p_nli += g_nli * bw;
                    let t = 10f64.powf(-(s.attenuation * s.length + s.dcm.insertion_loss()) / 10.0);
                    p_sig *= t;
                    p_ase *= t;
                    p_nli *= t;
                }
                Element::Amp(a) => {
                    let g = 10f64.powf(a.gain / 10.0);
                    p_sig *= g;
                    p_ase = p_ase * g + h * nu * 10f64.powf(a.noise_figure / 10.0) * g * bw;
                    p_nli *= g;
                }
                Element::Filter(_) => {}
            }
        }
        10.0 * (p_sig / (p_ase + p_nli)).log10()
    }

    #[test]
    fn r_vil_matches_stepwise_evaluation() {
        let link = fixture("R_VIL").unwrap();
        let catalog = default_catalog();
        let config = &catalog[1];
        let psd = link.design_psd.unwrap();
        let penalty = super::super::filter_penalty(&link, config).unwrap();
        let expect = stepwise_gsnr(&link, config, psd) - penalty;
        let got = ground_truth_gsnr(&link, &psd_stimulus(config, psd)).unwrap();
        assert!((got - expect).abs() < 1e-9, "{got} vs {expect}");
        // Frozen regression value.
        assert!((got - R_VIL_GSNR_DB).abs() < 1e-6, "{got}");
    }

    const R_VIL_GSNR_DB: f64 = 17.002_112_528_548_37;

    #[test]
    fn equal_psd_symmetry() {
        let link = chain(5, 90.0, 0.0);
        let catalog = default_catalog();
        let reference = ground_truth_gsnr(&link, &psd_stimulus(&catalog[0], 0.02)).unwrap();
        for c in &catalog {
            let g = ground_truth_gsnr(&link, &psd_stimulus(c, 0.02)).unwrap();
            assert!((g - reference).abs() < 1e-9, "{}: {g} vs {reference}", c.id);
        }
    }

    #[test]
    fn duplicated_link_loses_3db() {
        let catalog = default_catalog();
        let stim = psd_stimulus(&catalog[4], 0.02);
        let once = ground_truth_gsnr(&chain(4, 80.0, 0.0), &stim).unwrap();
        let twice = ground_truth_gsnr(&chain(8, 80.0, 0.0), &stim).unwrap();
        assert!((once - twice - 10.0 * 2f64.log10()).abs() < 1e-9);
    }

    #[test]
    fn gsnr_has_an_interior_optimum() {
        let link = fixture("LH_WAR").unwrap();
        let catalog = default_catalog();
        let c = &catalog[1];
        let psd_db: Vec<f64> = (0..=40).map(|i| -30.0 + 0.5 * f64::from(i)).collect();
        let g: Vec<f64> =
            psd_db.iter().map(|p| ground_truth_gsnr(&link, &psd_stimulus(c, 10f64.powf(p / 10.0))).unwrap()).collect();
        let best = (0..g.len()).max_by(|&a, &b| g[a].total_cmp(&g[b])).unwrap();
        assert!(best > 2 && best < g.len() - 3, "optimum at the grid edge");
        for i in 0..best - 1 {
            let gain = g[i + 2] - g[i];
            assert!(gain > 0.0 && gain < 1.0, "below optimum: {gain}");
        }
        for i in best + 1..g.len() {
            assert!(g[i] < g[i - 1]);
        }
        for w in g.windows(3) {
            assert!(w[0] + w[2] < 2.0 * w[1], "not concave");
        }
    }

    #[test]
    fn power_budget_is_enforced() {
        let catalog = default_catalog();
        let stim = ProbeStimulus::new(catalog[0].clone(), PowerMode::ConstantPower { power: 21.0 });
        let err = ground_truth_gsnr(&chain(2, 80.0, 1.3), &stim).unwrap_err();
        assert!(matches!(err, Error::PowerBudget { element: 1, limit_dbm, .. } if limit_dbm == 20.0));
    }

    #[test]
    fn invalid_links_are_rejected() {
        let link = LinkSpec::new("empty", vec![]);
        assert!(matches!(ase_noise_power(&link, NoiseBandwidth::Reference), Err(Error::InvalidLink { .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn nli_cubic_law(
            n in 1usize..6,
            length in 20.0f64..120.0,
            gamma in 0.5f64..2.0,
            psd_db in -30.0f64..-12.0,
            step in -3.0f64..3.0,
            idx in 0usize..11,
        ) {
            let link = chain(n, length, gamma);
            let catalog = default_catalog();
            let c = &catalog[idx];
            let a = nli_noise_power(&link, &psd_stimulus(c, 10f64.powf(psd_db / 10.0))).unwrap();
            let b = nli_noise_power(&link, &psd_stimulus(c, 10f64.powf((psd_db + step) / 10.0))).unwrap();
            prop_assert!((10.0 * (b / a).log10() - 3.0 * step).abs() < 1e-9);
        }

        #[test]
        fn ase_additivity(
            k in 1usize..10,
            length in 1.0f64..150.0,
            nf in 3.0f64..8.0,
            attenuation in 0.15f64..0.3,
        ) {
            let mut span = Span::ssmf(length);
            span.attenuation = attenuation;
            let gain = span.loss();
            let blk = [Element::Span(span), Element::Amp(Amplifier::new(nf, gain))];
            let one = LinkSpec::new("one", blk.to_vec());
            let many = LinkSpec::new("many", blk.iter().cycle().take(2 * k).cloned().collect());
            let a = ase_noise_power(&one, NoiseBandwidth::Reference).unwrap();
            let b = ase_noise_power(&many, NoiseBandwidth::Reference).unwrap();
            prop_assert!((b / (k as f64 * a) - 1.0).abs() < 1e-12);
        }
    }
}
