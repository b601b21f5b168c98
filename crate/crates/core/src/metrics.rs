//! Oscillator figures of merit.
//!
//! ```text
//! FoM   = -PN + 20 log10(f0 / df) - 10 log10(P / 1 mW)
//! FoM_T = FoM + 20 log10(TR% / 10)
//! FoM_A = FoM + 10 log10(1 mm^2 / area)
//! ```

use crate::units::de_eng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, thiserror::Error)]
#[error("invalid metrics input: {0}")]
pub struct MetricsError(pub String);

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OscMetricsInput {
    /// Phase noise at `offset_hz`, dBc/Hz (negative).
    #[serde(deserialize_with = "de_eng")]
    pub pn_dbchz: f64,
    #[serde(deserialize_with = "de_eng")]
    pub f0_hz: f64,
    #[serde(deserialize_with = "de_eng")]
    pub offset_hz: f64,
    #[serde(deserialize_with = "de_eng")]
    pub p_mw: f64,
    #[serde(deserialize_with = "de_eng")]
    pub area_mm2: f64,
    #[serde(deserialize_with = "de_eng")]
    pub f_min_hz: f64,
    #[serde(deserialize_with = "de_eng")]
    pub f_max_hz: f64,
}

impl OscMetricsInput {
    pub fn check(&self) -> Result<(), MetricsError> {
        let all_finite =
            [self.pn_dbchz, self.f0_hz, self.offset_hz, self.p_mw, self.area_mm2, self.f_min_hz, self.f_max_hz]
                .iter()
                .all(|v| v.is_finite());
        if !all_finite {
            return Err(MetricsError("all inputs must be finite".into()));
        }
        if !(self.f0_hz > self.offset_hz && self.offset_hz > 0.0) {
            return Err(MetricsError(format!(
                "need f0 > offset > 0 (got f0 = {}, offset = {})",
                self.f0_hz, self.offset_hz
            )));
        }
        if !(self.p_mw > 0.0) {
            return Err(MetricsError(format!("power must be positive (got {})", self.p_mw)));
        }
        if !(self.area_mm2 > 0.0) {
            return Err(MetricsError(format!("area must be positive (got {})", self.area_mm2)));
        }
        if !(self.f_min_hz > 0.0 && self.f_min_hz < self.f_max_hz) {
            return Err(MetricsError(format!("need 0 < f_min < f_max (got {} .. {})", self.f_min_hz, self.f_max_hz)));
        }
        Ok(())
    }
}

/// Tuning range as a percentage of the band center.
pub fn tuning_range_pct(f_min_hz: f64, f_max_hz: f64) -> f64 {
    100.0 * (f_max_hz - f_min_hz) / ((f_max_hz + f_min_hz) / 2.0)
}

pub fn fom(input: &OscMetricsInput) -> f64 {
    -input.pn_dbchz + 20.0 * (input.f0_hz / input.offset_hz).log10() - 10.0 * input.p_mw.log10()
}

pub fn fom_t(input: &OscMetricsInput) -> f64 {
    fom(input) + 20.0 * (tuning_range_pct(input.f_min_hz, input.f_max_hz) / 10.0).log10()
}

pub fn fom_a(input: &OscMetricsInput) -> f64 {
    fom(input) + 10.0 * (1.0 / input.area_mm2).log10()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MetricsReport {
    pub tr_pct: f64,
    pub fom: f64,
    pub fom_t: f64,
    pub fom_a: f64,
}

pub fn evaluate(input: &OscMetricsInput) -> Result<MetricsReport, MetricsError> {
    input.check()?;
    Ok(MetricsReport {
        tr_pct: tuning_range_pct(input.f_min_hz, input.f_max_hz),
        fom: fom(input),
        fom_t: fom_t(input),
        fom_a: fom_a(input),
    })
}
