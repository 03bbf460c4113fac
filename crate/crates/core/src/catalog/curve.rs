use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::conversion::q_from_ber;
use crate::error::{Error, Result};

/// Below this magnitude the quadratic term is treated as zero when inverting.
const LINEAR_EPS: f64 = 1e-12;

/// Back-to-back Q-over-OSNR characteristic of one configuration:
/// `Q_dB(x) = a·x² + b·x + c` with `x` the OSNR in dB over 12.5 GHz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct B2BCurve {
    pub config_id: String,
    /// `[a, b, c]`.
    pub coeffs: [f64; 3],
    /// `[osnr_min_db, osnr_max_db]`.
    pub valid_range: [f64; 2],
    pub fec_threshold_ber: f64,
    pub required_gosnr_db: f64,
}

/// Outcome of inverting a curve with clamping allowed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Inversion {
    Exact(f64),
    /// Q was above the curve image; the upper range bound is returned.
    ClampedHigh(f64),
    /// Q was below the curve image; the lower range bound is returned.
    ClampedLow(f64),
}

impl Inversion {
    pub fn value(self) -> f64 {
        match self {
            Inversion::Exact(x) | Inversion::ClampedHigh(x) | Inversion::ClampedLow(x) => x,
        }
    }
}

impl B2BCurve {
    /// Builds a curve from known coefficients, solving the required GOSNR
    /// from the FEC threshold and checking the invariants.
    pub fn from_parts(
        config_id: impl Into<String>,
        coeffs: [f64; 3],
        valid_range: [f64; 2],
        fec_threshold_ber: f64,
    ) -> Result<Self> {
        let mut curve =
            Self { config_id: config_id.into(), coeffs, valid_range, fec_threshold_ber, required_gosnr_db: f64::NAN };
        curve.check_monotone()?;
        let q_thr = q_from_ber(fec_threshold_ber)?;
        curve.required_gosnr_db = curve.gosnr_from_q(q_thr).map_err(|_| {
            let (lo, hi) = curve.q_image();
            curve.characterization_error(format!(
                "FEC threshold Q {q_thr:.3} dB outside curve range [{lo:.3}, {hi:.3}] dB"
            ))
        })?;
        Ok(curve)
    }

    /// Re-checks the invariants of a deserialized curve.
    pub fn validate(&self) -> Result<()> {
        self.check_monotone()?;
        let q_thr = q_from_ber(self.fec_threshold_ber)?;
        let x = self.gosnr_from_q(q_thr)?;
        if (x - self.required_gosnr_db).abs() > 1e-6 {
            return Err(self.characterization_error(format!(
                "required_gosnr_db {} inconsistent with FEC threshold (expected {x:.6})",
                self.required_gosnr_db
            )));
        }
        Ok(())
    }

    fn characterization_error(&self, reason: String) -> Error {
        Error::Characterization { config_id: self.config_id.clone(), reason }
    }

    fn check_monotone(&self) -> Result<()> {
        let [lo, hi] = self.valid_range;
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(self.characterization_error(format!("empty valid range [{lo}, {hi}]")));
        }
        if self.coeffs.iter().any(|c| !c.is_finite()) {
            return Err(self.characterization_error("non-finite coefficients".into()));
        }
        // dQ/dx is linear in x, so checking both ends covers the range.
        if self.slope(lo) <= 0.0 || self.slope(hi) <= 0.0 {
            return Err(self.characterization_error("non-monotone characterization".into()));
        }
        Ok(())
    }

    pub fn eval(&self, osnr_db: f64) -> f64 {
        let [a, b, c] = self.coeffs;
        (a * osnr_db + b) * osnr_db + c
    }

    /// dQ/dOSNR, dB per dB.
    pub fn slope(&self, osnr_db: f64) -> f64 {
        2.0 * self.coeffs[0] * osnr_db + self.coeffs[1]
    }

    /// Q range covered by the valid OSNR range.
    pub fn q_image(&self) -> (f64, f64) {
        (self.eval(self.valid_range[0]), self.eval(self.valid_range[1]))
    }

    pub fn threshold_q_db(&self) -> Result<f64> {
        q_from_ber(self.fec_threshold_ber)
    }

    pub fn q_from_osnr(&self, osnr_db: f64) -> Result<f64> {
        let [lo, hi] = self.valid_range;
        if !(lo..=hi).contains(&osnr_db) {
            return Err(Error::Extrapolation { osnr_db, min: lo, max: hi });
        }
        Ok(self.eval(osnr_db))
    }

    /// Like [`q_from_osnr`](Self::q_from_osnr) but continues the curve
    /// along its boundary tangent outside the valid range. The flag is set
    /// when the range was left.
    pub fn q_from_osnr_extended(&self, osnr_db: f64) -> (f64, bool) {
        let [lo, hi] = self.valid_range;
        let edge = osnr_db.clamp(lo, hi);
        let q = self.eval(edge) + self.slope(edge) * (osnr_db - edge);
        (q, edge != osnr_db)
    }

    pub fn gosnr_from_q(&self, q_db: f64) -> Result<f64> {
        match self.invert(q_db) {
            Inversion::Exact(x) => Ok(x),
            _ => {
                let (min, max) = self.q_image();
                Err(Error::Inversion { q_db, min, max })
            }
        }
    }

    /// Inverts the curve, clamping Q outside the image to the range bounds.
    pub fn invert(&self, q_db: f64) -> Inversion {
        let [lo, hi] = self.valid_range;
        let (q_lo, q_hi) = self.q_image();
        if q_db.is_nan() || q_db < q_lo {
            return Inversion::ClampedLow(lo);
        }
        if q_db > q_hi {
            return Inversion::ClampedHigh(hi);
        }
        let [a, b, c] = self.coeffs;
        let c0 = c - q_db;
        let x = if a.abs() < LINEAR_EPS {
            -c0 / b
        } else {
            let disc = (b * b - 4.0 * a * c0).max(0.0);
            // Stable form: avoids cancellation between b and √disc.
            let t = -0.5 * (b + b.signum() * disc.sqrt());
            let roots = [t / a, c0 / t];
            roots
                .into_iter()
                .filter(|r| r.is_finite())
                .min_by(|r1, r2| range_distance(*r1, lo, hi).total_cmp(&range_distance(*r2, lo, hi)))
                .unwrap_or(lo)
        };
        Inversion::Exact(x.clamp(lo, hi))
    }
}

fn range_distance(x: f64, lo: f64, hi: f64) -> f64 {
    if x < lo {
        lo - x
    } else if x > hi {
        x - hi
    } else {
        0.0
    }
}

/// Least-squares quadratic fit of back-to-back `(osnr_db, q_db)` samples.
pub fn fit_b2b(config_id: &str, samples: &[(f64, f64)], fec_threshold_ber: f64) -> Result<B2BCurve> {
    if samples.iter().any(|(x, q)| !x.is_finite() || !q.is_finite()) {
        return Err(Error::Fit(format!("`{config_id}`: non-finite sample")));
    }
    let mut xs: Vec<f64> = samples.iter().map(|s| s.0).collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    if xs.len() < 3 {
        return Err(Error::Fit(format!(
            "`{config_id}`: insufficient samples ({} distinct OSNR values, need 3)",
            xs.len()
        )));
    }

    let design = DMatrix::from_fn(samples.len(), 3, |i, j| samples[i].0.powi(2 - j as i32));
    let rhs = DVector::from_iterator(samples.len(), samples.iter().map(|s| s.1));
    let solution = design.svd(true, true).solve(&rhs, 1e-14).map_err(|e| Error::Fit(format!("`{config_id}`: {e}")))?;

    let valid_range = [xs[0], xs[xs.len() - 1]];
    B2BCurve::from_parts(config_id, [solution[0], solution[1], solution[2]], valid_range, fec_threshold_ber)
}
