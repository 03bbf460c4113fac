//! Operating-regime detection.
//!
//! Two sweeps share an anchor at the equalization configuration: one holds
//! the anchor's PSD for every probe, the other holds its total power. Narrow
//! probes therefore get less power in the first sweep and more PSD in the
//! second. If narrow probes do better at constant PSD the channel is above
//! its optimum power; if they do better at constant power it is below.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::catalog::{CurveSet, PltConfig};
use crate::engine::{equalization_config, run_tagged_sweep, sweep, MeasurementSource, ProbeMeasurement};
use crate::error::{Error, Result};
use crate::link::PowerMode;
use crate::units::{dbm_to_mw, rate_key};

pub const DEFAULT_TOLERANCE_DB: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub symbol_rate: f64,
    pub gsnr_db: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeInput {
    pub psd_sweep: Vec<RatePoint>,
    pub power_sweep: Vec<RatePoint>,
    /// GBd.
    pub reference_rate: f64,
    /// dBm.
    pub reference_power: f64,
}

impl RegimeInput {
    fn validate(&self) -> Result<()> {
        let rates = |s: &[RatePoint]| s.iter().map(|p| rate_key(p.symbol_rate)).collect::<Vec<_>>();
        let mut a = rates(&self.psd_sweep);
        let mut b = rates(&self.power_sweep);
        a.sort_unstable();
        b.sort_unstable();
        if a != b {
            return Err(Error::Regime("PSD and power sweeps cover different symbol rates".into()));
        }
        if a.is_empty() {
            return Err(Error::Regime("no symbol rate has usable readings in both sweeps".into()));
        }
        if self.psd_sweep.iter().chain(&self.power_sweep).any(|p| !p.gsnr_db.is_finite()) {
            return Err(Error::Regime("sweep contains a non-finite GSNR".into()));
        }
        Ok(())
    }

    /// Rows `(symbol_rate, gsnr_psd, gsnr_power)` ascending by rate.
    pub fn rows(&self) -> Vec<(f64, f64, f64)> {
        let power: BTreeMap<i64, f64> = self.power_sweep.iter().map(|p| (rate_key(p.symbol_rate), p.gsnr_db)).collect();
        let mut rows: Vec<(f64, f64, f64)> = self
            .psd_sweep
            .iter()
            .filter_map(|p| power.get(&rate_key(p.symbol_rate)).map(|&g| (p.symbol_rate, p.gsnr_db, g)))
            .collect();
        rows.sort_by(|x, y| x.0.total_cmp(&y.0));
        rows
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Nonlinear,
    NearOptimum,
    Linear,
}

/// Direction in which the channel power should move.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerAdjustment {
    Decrease,
    Hold,
    Increase,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegimeVerdict {
    pub regime: Regime,
    /// Mean over sub-reference rates of `gsnr_psd − gsnr_power`.
    pub mean_delta_db: f64,
    pub tolerance_db: f64,
}

impl RegimeVerdict {
    pub fn suggested_adjustment(&self) -> PowerAdjustment {
        match self.regime {
            Regime::Nonlinear => PowerAdjustment::Decrease,
            Regime::NearOptimum => PowerAdjustment::Hold,
            Regime::Linear => PowerAdjustment::Increase,
        }
    }
}

fn per_rate_mean(measurements: &[ProbeMeasurement]) -> BTreeMap<i64, RatePoint> {
    let mut acc: BTreeMap<i64, (f64, f64, usize)> = BTreeMap::new();
    for m in measurements {
        if let Some(g) = m.gsnr_db {
            let e = acc.entry(rate_key(m.symbol_rate)).or_insert((m.symbol_rate, 0.0, 0));
            e.1 += g;
            e.2 += 1;
        }
    }
    acc.into_iter().map(|(k, (symbol_rate, sum, n))| (k, RatePoint { symbol_rate, gsnr_db: sum / n as f64 })).collect()
}

/// Runs the constant-PSD and constant-power sweeps anchored at
/// `reference_power` (dBm) on the equalization configuration. Rates with no
/// usable reading in either sweep are left out of both; this can include the
/// reference rate itself on heavily filtered links.
pub fn build_regime_input(
    source: &dyn MeasurementSource,
    catalog: &[PltConfig],
    curves: &CurveSet,
    reference_power: f64,
    repeats: u32,
) -> Result<RegimeInput> {
    if !reference_power.is_finite() {
        return Err(Error::Regime(format!("reference power {reference_power} dBm must be finite")));
    }
    let anchor = equalization_config(catalog)?;
    let psd = dbm_to_mw(reference_power) / anchor.occupied_bandwidth;
    let by_psd = run_tagged_sweep(source, catalog, curves, PowerMode::ConstantPsd { psd }, repeats, sweep::REGIME_PSD)?;
    let by_power = run_tagged_sweep(
        source,
        catalog,
        curves,
        PowerMode::ConstantPower { power: reference_power },
        repeats,
        sweep::REGIME_POWER,
    )?;
    let psd_means = per_rate_mean(&by_psd);
    let power_means = per_rate_mean(&by_power);
    let shared = |a: &BTreeMap<i64, RatePoint>, b: &BTreeMap<i64, RatePoint>| -> Vec<RatePoint> {
        a.iter().filter(|(k, _)| b.contains_key(k)).map(|(_, p)| *p).collect()
    };
    let input = RegimeInput {
        psd_sweep: shared(&psd_means, &power_means),
        power_sweep: shared(&power_means, &psd_means),
        reference_rate: anchor.symbol_rate,
        reference_power,
    };
    input.validate()?;
    Ok(input)
}

pub fn classify(input: &RegimeInput, tolerance_db: f64) -> Result<RegimeVerdict> {
    if !(tolerance_db >= 0.0 && tolerance_db.is_finite()) {
        return Err(Error::Regime(format!("tolerance {tolerance_db} dB must be non-negative")));
    }
    input.validate()?;
    let reference = rate_key(input.reference_rate);
    let deltas: Vec<f64> = input
        .rows()
        .into_iter()
        .filter(|(rate, _, _)| rate_key(*rate) < reference)
        .map(|(_, psd, power)| psd - power)
        .collect();
    if deltas.is_empty() {
        return Err(Error::Regime("no symbol rate below the reference rate".into()));
    }
    let mean_delta_db = deltas.iter().sum::<f64>() / deltas.len() as f64;
    let regime = if mean_delta_db > tolerance_db {
        Regime::Nonlinear
    } else if mean_delta_db < -tolerance_db {
        Regime::Linear
    } else {
        Regime::NearOptimum
    };
    Ok(RegimeVerdict { regime, mean_delta_db, tolerance_db })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{default_catalog, default_curves};
    use crate::engine::SimulatedSource;
    use crate::link::{fixture, Amplifier, Element, LinkSpec, NoiseModel, Span};
    use proptest::prelude::*;

    fn input(deltas: &[(f64, f64, f64)], reference_rate: f64) -> RegimeInput {
        RegimeInput {
            psd_sweep: deltas.iter().map(|&(r, p, _)| RatePoint { symbol_rate: r, gsnr_db: p }).collect(),
            power_sweep: deltas.iter().map(|&(r, _, w)| RatePoint { symbol_rate: r, gsnr_db: w }).collect(),
            reference_rate,
            reference_power: 0.0,
        }
    }

    fn simulated(link: LinkSpec) -> SimulatedSource {
        let catalog = default_catalog();
        SimulatedSource::new(link, default_curves(&catalog).unwrap(), NoiseModel::noiseless())
    }

    fn linear_link() -> LinkSpec {
        let mut span = Span::ssmf(80.0);
        span.gamma = 0.0;
        let gain = span.loss();
        LinkSpec::new("linear", vec![Element::Span(span.clone()), Element::Amp(Amplifier::new(5.0, gain))])
    }

    #[test]
    fn psd_above_power_is_nonlinear() {
        let v = classify(&input(&[(31.5, 16.0, 15.0), (46.3, 15.5, 14.5), (69.4, 14.0, 14.0)], 69.4), 0.2).unwrap();
        assert_eq!(v.regime, Regime::Nonlinear);
        assert!((v.mean_delta_db - 1.0).abs() < 1e-12);
        assert_eq!(v.suggested_adjustment(), PowerAdjustment::Decrease);
    }

    #[test]
    fn identical_curves_are_near_optimum() {
        let v = classify(&input(&[(31.5, 15.0, 15.0), (69.4, 14.0, 14.0)], 69.4), 0.2).unwrap();
        assert_eq!(v.regime, Regime::NearOptimum);
        assert_eq!(v.mean_delta_db, 0.0);
    }

    #[test]
    fn power_above_psd_is_linear() {
        let v = classify(&input(&[(31.5, 14.0, 15.0), (69.4, 14.0, 14.0)], 69.4), 0.2).unwrap();
        assert_eq!(v.regime, Regime::Linear);
        assert_eq!(v.suggested_adjustment(), PowerAdjustment::Increase);
    }

    #[test]
    fn classify_errors() {
        assert!(matches!(classify(&input(&[(69.4, 14.0, 14.0)], 69.4), 0.2), Err(Error::Regime(_))));
        assert!(classify(&input(&[(31.5, 14.0, 14.0)], 69.4), 0.2).is_ok());
        let mut bad = input(&[(31.5, 14.0, 14.0), (69.4, 14.0, 14.0)], 69.4);
        bad.power_sweep.pop();
        assert!(matches!(classify(&bad, 0.2), Err(Error::Regime(_))));
        let bad = input(&[], 69.4);
        assert!(matches!(classify(&bad, 0.2), Err(Error::Regime(_))));
    }

    #[test]
    fn linear_limit_prefers_constant_power() {
        let catalog = default_catalog();
        let src = simulated(linear_link());
        let input = build_regime_input(&src, &catalog, &src.curves, -8.0, 1).unwrap();
        let rows = input.rows();
        let first = rows[0].1;
        assert!(rows.iter().all(|r| (r.1 - first).abs() < 1e-6), "PSD sweep should be flat: {rows:?}");
        for pair in rows.windows(2) {
            assert!(pair[0].2 > pair[1].2, "power sweep should fall with rate: {rows:?}");
        }
        let verdict = classify(&input, DEFAULT_TOLERANCE_DB).unwrap();
        assert!(verdict.mean_delta_db < 0.0);
        assert_eq!(verdict.regime, Regime::Linear);
    }

    #[test]
    fn anchor_entries_coincide() {
        let catalog = default_catalog();
        for name in ["LH_WAR", "R_VIL", "R_TSIR"] {
            let src = simulated(fixture(name).unwrap());
            let input = build_regime_input(&src, &catalog, &src.curves, 1.0, 1).unwrap();
            let anchor = input.rows().into_iter().find(|r| rate_key(r.0) == rate_key(69.4)).unwrap();
            assert!((anchor.1 - anchor.2).abs() < 1e-9, "{name}: {anchor:?}");
        }
    }

    #[test]
    fn filtered_anchor_is_dropped() {
        let catalog = default_catalog();
        let src = simulated(fixture("R_ILM").unwrap());
        let input = build_regime_input(&src, &catalog, &src.curves, 0.0, 1).unwrap();
        assert_eq!(input.reference_rate, 69.4);
        assert!(input.rows().iter().all(|r| r.0 < 69.0));
        classify(&input, DEFAULT_TOLERANCE_DB).unwrap();
    }

    #[test]
    fn overdriven_link_prefers_constant_psd() {
        let catalog = default_catalog();
        let src = simulated(fixture("R_VIL").unwrap());
        let input = build_regime_input(&src, &catalog, &src.curves, 4.0, 1).unwrap();
        for (rate, psd, power) in input.rows() {
            if rate < 69.0 {
                assert!(power < psd, "{rate}: psd {psd} power {power}");
            }
        }
        assert_eq!(classify(&input, DEFAULT_TOLERANCE_DB).unwrap().regime, Regime::Nonlinear);
    }

    #[test]
    fn verdicts_are_ordered_over_reference_power() {
        let catalog = default_catalog();
        let src = simulated(fixture("R_VIL").unwrap());
        let mut transitions = 0;
        let mut last = None;
        for step in -12..=12 {
            let p = 0.5 + 0.5 * f64::from(step);
            let input = build_regime_input(&src, &catalog, &src.curves, p, 1).unwrap();
            let regime = classify(&input, DEFAULT_TOLERANCE_DB).unwrap().regime;
            let rank = match regime {
                Regime::Linear => 0,
                Regime::NearOptimum => 1,
                Regime::Nonlinear => 2,
            };
            if let Some(prev) = last {
                assert!(rank >= prev, "verdict went backwards at {p} dBm");
                if rank != prev {
                    transitions += 1;
                }
            }
            last = Some(rank);
        }
        assert_eq!(transitions, 2);
    }

    proptest! {
        #[test]
        fn shift_invariance(shift in -20.0f64..20.0, d1 in -2.0f64..2.0, d2 in -2.0f64..2.0) {
            let base = input(&[(31.5, 15.0 + d1, 15.0), (46.3, 14.0 + d2, 14.5), (69.4, 13.0, 13.0)], 69.4);
            let mut shifted = base.clone();
            for p in shifted.psd_sweep.iter_mut().chain(shifted.power_sweep.iter_mut()) {
                p.gsnr_db += shift;
            }
            let a = classify(&base, 0.2).unwrap();
            let b = classify(&shifted, 0.2).unwrap();
            prop_assert_eq!(a.regime, b.regime);
            prop_assert!((a.mean_delta_db - b.mean_delta_db).abs() < 1e-9);
        }
    }
}
