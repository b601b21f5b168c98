//! Differential-mode input impedance seen across `L1 || C1`.
//!
//! Two independent evaluation paths exist. [`zin_linear_solve`] builds the
//! 3x3 branch impedance matrix (self terms `jwL_i + r_i`, mutual terms
//! `jwM_ij`, capacitive loads on branches 2 and 3) and solves it; it handles
//! lossy coils. [`zin_closed_form`] evaluates the reduced rational
//! expression
//!
//! ```text
//! Z_eff(s) = sL1 - s^3 (M12^2 C2 + M13^2 C3 + s^2 C2 C3 (L3 M12^2 + L2 M13^2 - 2 M23 M12 M13))
//!                   / (1 + s^2 (L2 C2 + L3 C3) + s^4 C2 C3 (L2 L3 - M23^2))
//! Z_in(s)  = Z_eff / (1 + s C1 Z_eff)
//! ```
//!
//! which is only defined for the lossless tank.

use crate::modes::{characteristic_coefficients, modes_numerical};
use crate::tank::{InvalidTank, TankParams};
use crate::units::de_eng;
use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Relative tolerance for declaring a pole or singular denominator.
pub const POLE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, thiserror::Error)]
pub enum ImpedanceError {
    #[error("lossless impedance has a pole at {f_hz} Hz")]
    PoleAtFrequency { f_hz: f64 },
    #[error("branch network is singular at {f_hz} Hz")]
    SingularSystem { f_hz: f64 },
    #[error("branch 2-3 sub-network resonates at {f_hz} Hz")]
    InternalPole { f_hz: f64 },
    #[error("closed-form impedance requires a lossless tank")]
    RequiresLossless,
    #[error("frequency must be positive and finite (got {0})")]
    InvalidFrequency(f64),
    #[error("invalid frequency grid: {0}")]
    InvalidGrid(String),
    #[error(transparent)]
    InvalidTank(#[from] InvalidTank),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    #[default]
    Linear,
    Logarithmic,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FrequencyGrid {
    #[serde(deserialize_with = "de_eng")]
    pub start_hz: f64,
    #[serde(deserialize_with = "de_eng")]
    pub stop_hz: f64,
    pub points: usize,
    #[serde(default)]
    pub spacing: Spacing,
}

impl FrequencyGrid {
    pub fn new(start_hz: f64, stop_hz: f64, points: usize, spacing: Spacing) -> Result<Self, ImpedanceError> {
        let grid = FrequencyGrid { start_hz, stop_hz, points, spacing };
        grid.check()?;
        Ok(grid)
    }

    pub fn check(&self) -> Result<(), ImpedanceError> {
        if !(self.start_hz > 0.0 && self.stop_hz.is_finite() && self.start_hz < self.stop_hz) {
            return Err(ImpedanceError::InvalidGrid(format!(
                "need 0 < start_hz < stop_hz (got {} .. {})",
                self.start_hz, self.stop_hz
            )));
        }
        if self.points < 2 {
            return Err(ImpedanceError::InvalidGrid(format!("need at least 2 points (got {})", self.points)));
        }
        Ok(())
    }

    /// Grid frequencies, hertz. Endpoints are exact.
    pub fn frequencies(&self) -> Vec<f64> {
        let n = self.points;
        let last = (n - 1) as f64;
        (0..n)
            .map(|i| {
                if i == 0 {
                    return self.start_hz;
                }
                if i == n - 1 {
                    return self.stop_hz;
                }
                let t = i as f64 / last;
                match self.spacing {
                    Spacing::Linear => self.start_hz + t * (self.stop_hz - self.start_hz),
                    Spacing::Logarithmic => self.start_hz * (self.stop_hz / self.start_hz).powf(t),
                }
            })
            .collect()
    }
}

fn omega_of(f_hz: f64) -> Result<f64, ImpedanceError> {
    if f_hz.is_finite() && f_hz > 0.0 {
        Ok(2.0 * PI * f_hz)
    } else {
        Err(ImpedanceError::InvalidFrequency(f_hz))
    }
}

/// Z_in by direct solution of the coupled branch equations.
pub fn zin_linear_solve(params: &TankParams, f_hz: f64) -> Result<Complex64, ImpedanceError> {
    let w = omega_of(f_hz)?;
    let jw = Complex64::new(0.0, w);
    let m = params.mutual_inductances();
    let r = params.series_resistances();
    let l = params.inductances();

    let mut z = Matrix3::<Complex64>::zeros();
    for i in 0..3 {
        z[(i, i)] = jw * l[i] + r[i];
    }
    for (i, j, mij) in [(0, 1, m.m12), (0, 2, m.m13), (1, 2, m.m23)] {
        z[(i, j)] = jw * mij;
        z[(j, i)] = jw * mij;
    }
    // V2 = -I2/(jwC2), V3 = -I3/(jwC3) moves the loads to the left side
    let mut a = z;
    a[(1, 1)] += 1.0 / (jw * params.c2);
    a[(2, 2)] += 1.0 / (jw * params.c3);
    let yc1 = jw * params.c1;

    // Admittance form: drive V1 = 1, read I1 = 1/Z_eff.
    if let Some(i) = a.lu().solve(&Vector3::new(Complex64::new(1.0, 0.0), 0.0.into(), 0.0.into())) {
        let y_in = yc1 + i[0];
        if i.iter().all(|v| v.is_finite()) {
            if y_in.norm() <= POLE_TOL * yc1.norm() {
                return Err(ImpedanceError::PoleAtFrequency { f_hz });
            }
            return Ok(1.0 / y_in);
        }
    }
    // Impedance form: drive I1 = 1 and solve for (V1, I2, I3). Reached only
    // where Z_eff = 0, i.e. at a series resonance of the port branch.
    let mut b = a;
    b[(0, 0)] = Complex64::new(-1.0, 0.0);
    for i in 1..3 {
        b[(i, 0)] = 0.0.into();
    }
    let rhs = Vector3::new(-a[(0, 0)], -a[(1, 0)], -a[(2, 0)]);
    match b.lu().solve(&rhs) {
        Some(v) if v.iter().all(|x| x.is_finite()) => {
            let z_eff = v[0];
            Ok(z_eff / (1.0 + yc1 * z_eff))
        }
        _ => Err(ImpedanceError::SingularSystem { f_hz }),
    }
}

/// Lossless `Z_eff` from the reduced rational expression.
pub fn zeff_closed_form(params: &TankParams, f_hz: f64) -> Result<Complex64, ImpedanceError> {
    if !params.is_lossless() {
        return Err(ImpedanceError::RequiresLossless);
    }
    let w = omega_of(f_hz)?;
    let s = Complex64::new(0.0, w);
    let s2 = s * s;
    let (l1, l2, l3) = (params.l1, params.l2, params.l3);
    let (c2, c3) = (params.c2, params.c3);
    let m = params.mutual_inductances();

    let zl1 = s * l1;
    let num = m.m12 * m.m12 * c2
        + m.m13 * m.m13 * c3
        + s2 * c2 * c3 * (l3 * m.m12 * m.m12 + l2 * m.m13 * m.m13 - 2.0 * m.m23 * m.m12 * m.m13);
    if num == Complex64::new(0.0, 0.0) {
        return Ok(zl1);
    }
    let t2 = s2 * (l2 * c2 + l3 * c3);
    let t4 = s2 * s2 * c2 * c3 * (l2 * l3 - m.m23 * m.m23);
    let den = 1.0 + t2 + t4;
    if den.norm() <= POLE_TOL * (1.0 + t2.norm() + t4.norm()) {
        return Err(ImpedanceError::InternalPole { f_hz });
    }
    Ok(zl1 - s * s2 * num / den)
}

/// Lossless `Z_in = Z_eff / (1 + s C1 Z_eff)`.
pub fn zin_closed_form(params: &TankParams, f_hz: f64) -> Result<Complex64, ImpedanceError> {
    let s = Complex64::new(0.0, omega_of(f_hz)?);
    match zeff_closed_form(params, f_hz) {
        Ok(z_eff) => {
            let load = s * params.c1 * z_eff;
            let den = 1.0 + load;
            if den.norm() <= POLE_TOL * load.norm().max(1.0) {
                return Err(ImpedanceError::PoleAtFrequency { f_hz });
            }
            Ok(z_eff / den)
        }
        // Z_eff -> infinity leaves only C1 across the port
        Err(ImpedanceError::InternalPole { .. }) => Ok(1.0 / (s * params.c1)),
        Err(e) => Err(e),
    }
}

/// Real-valued function of `w` whose zeros are the poles of the lossless
/// `Z_in`: the Z_eff denominator times `1 + s C1 Z_eff`, at `s = jw`.
///
/// Equals `-p(w^2) / c0` for the characteristic cubic `p`, and is a
/// polynomial in `w^2` so it has no singularities to step over.
pub fn pole_function(params: &TankParams, omega: f64) -> f64 {
    let x = omega * omega;
    let (l1, l2, l3) = (params.l1, params.l2, params.l3);
    let (c1, c2, c3) = (params.c1, params.c2, params.c3);
    let m = params.mutual_inductances();
    let num = m.m12 * m.m12 * c2 + m.m13 * m.m13 * c3
        - x * c2 * c3 * (l3 * m.m12 * m.m12 + l2 * m.m13 * m.m13 - 2.0 * m.m23 * m.m12 * m.m13);
    let den = 1.0 - x * (l2 * c2 + l3 * c3) + x * x * c2 * c3 * (l2 * l3 - m.m23 * m.m23);
    den * (1.0 - x * l1 * c1) - x * x * c1 * num
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[default]
    LinearSolve,
    ClosedForm,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleFlag {
    Ok,
    NearPole,
    /// Branch matrix singular away from a mode. Unreachable for valid tanks.
    Singular,
}

impl SampleFlag {
    pub fn as_str(&self) -> &'static str {
        match self {
            SampleFlag::Ok => "ok",
            SampleFlag::NearPole => "near_pole",
            SampleFlag::Singular => "singular",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Sample {
    pub freq_hz: f64,
    /// `None` only when the point sits on a lossless pole.
    pub z: Option<Complex64>,
    pub flag: SampleFlag,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ImpedanceSweep {
    pub grid: FrequencyGrid,
    pub method: Method,
    pub params_digest: String,
    pub samples: Vec<Sample>,
}

/// Evaluates Z_in at every grid point. Per-point failures are recorded in
/// the sample flag and never abort the sweep.
pub fn sweep(params: &TankParams, grid: &FrequencyGrid, method: Method) -> Result<ImpedanceSweep, ImpedanceError> {
    let params = params.checked()?;
    grid.check()?;
    if method == Method::ClosedForm && !params.is_lossless() {
        return Err(ImpedanceError::RequiresLossless);
    }
    let mode_hz: Vec<f64> = if params.is_lossless() {
        match modes_numerical(&characteristic_coefficients(&params)) {
            Ok(m) => m.hz(),
            Err(_) => Vec::new(),
        }
    } else {
        Vec::new()
    };
    let near_mode = |f: f64| mode_hz.iter().any(|m| (f - m).abs() <= POLE_TOL * m);

    let samples = grid
        .frequencies()
        .into_iter()
        .map(|f| {
            let z = match method {
                Method::LinearSolve => zin_linear_solve(&params, f),
                Method::ClosedForm => zin_closed_form(&params, f),
            };
            match z {
                Ok(z) if near_mode(f) => Sample { freq_hz: f, z: Some(z), flag: SampleFlag::NearPole },
                Ok(z) => Sample { freq_hz: f, z: Some(z), flag: SampleFlag::Ok },
                Err(ImpedanceError::PoleAtFrequency { .. }) => {
                    Sample { freq_hz: f, z: None, flag: SampleFlag::NearPole }
                }
                Err(_) => Sample { freq_hz: f, z: None, flag: SampleFlag::Singular },
            }
        })
        .collect();
    Ok(ImpedanceSweep { grid: *grid, method, params_digest: params.digest(), samples })
}

impl ImpedanceSweep {
    /// Indices of interior local maxima of `|Z|`.
    pub fn magnitude_peaks(&self) -> Vec<usize> {
        let mag: Vec<f64> = self.samples.iter().map(|s| s.z.map_or(f64::INFINITY, |z| z.norm())).collect();
        (1..mag.len().saturating_sub(1)).filter(|&i| mag[i] > mag[i - 1] && mag[i] >= mag[i + 1]).collect()
    }
}
