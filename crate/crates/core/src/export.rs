//! Artifact rendering and atomic file output.
//!
//! Every renderer is a pure function of its input, and floats are written
//! with the shortest round-trip representation, so identical runs produce
//! byte-identical files.

use crate::designer::RatioMap;
use crate::impedance::{FrequencyGrid, ImpedanceSweep, Method};
use crate::modes::{
    characteristic_coefficients, modes_closed_form, modes_from_impedance, modes_numerical, trig_roots,
    CubicCoefficients, ModeError, ModeSet, TrigForm,
};
use crate::tank::TankParams;
use serde::Serialize;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::{self, Write};
use std::path::Path;

pub const SWEEP_CSV_HEADER: &str = "freq_hz,re_z_ohm,im_z_ohm,mag_z_ohm,flag";
pub const RATIO_CSV_HEADER: &str = "X,k12,k13,k23,r2,r3,valid";

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

pub fn sweep_csv(sweep: &ImpedanceSweep) -> String {
    let mut out = String::with_capacity(64 * (sweep.samples.len() + 1));
    out.push_str(SWEEP_CSV_HEADER);
    out.push('\n');
    for s in &sweep.samples {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            s.freq_hz,
            opt(s.z.map(|z| z.re)),
            opt(s.z.map(|z| z.im)),
            opt(s.z.map(|z| z.norm())),
            s.flag.as_str()
        );
    }
    out
}

#[derive(Serialize)]
struct SweepRow {
    freq_hz: f64,
    re_z_ohm: Option<f64>,
    im_z_ohm: Option<f64>,
    mag_z_ohm: Option<f64>,
    flag: &'static str,
}

#[derive(Serialize)]
struct SweepDoc<'a> {
    params_digest: &'a str,
    method: Method,
    grid: &'a FrequencyGrid,
    samples: Vec<SweepRow>,
}

pub fn sweep_json(sweep: &ImpedanceSweep) -> String {
    let samples = sweep
        .samples
        .iter()
        .map(|s| SweepRow {
            freq_hz: s.freq_hz,
            re_z_ohm: s.z.map(|z| z.re),
            im_z_ohm: s.z.map(|z| z.im),
            mag_z_ohm: s.z.map(|z| z.norm()),
            flag: s.flag.as_str(),
        })
        .collect();
    to_json(&SweepDoc { params_digest: &sweep.params_digest, method: sweep.method, grid: &sweep.grid, samples })
}

pub fn ratio_map_csv(map: &RatioMap) -> String {
    let mut out = String::with_capacity(48 * (map.cells.len() + 1));
    out.push_str(RATIO_CSV_HEADER);
    out.push('\n');
    for c in &map.cells {
        let _ = writeln!(out, "{},{},{},{},{},{},{}", c.x, c.k12, c.k13, c.k23, opt(c.r2), opt(c.r3), c.valid);
    }
    out
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("artifact types serialize infallibly");
    s.push('\n');
    s
}

/// The same roots evaluated with the leading coefficient replaced by `c1`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PrintedFormComparison {
    /// `None` where the swapped formula gives a non-positive or complex `x`.
    pub modes_hz: Vec<Option<f64>>,
    pub max_rel_err: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModesReport {
    pub coefficients: CubicCoefficients,
    pub modes_hz: Vec<f64>,
    pub ratios: Vec<f64>,
    pub degenerate: Vec<bool>,
    /// Set when `det K ~ 0` and only two modes remain.
    pub mode_lost: bool,
    /// Largest relative difference between the closed form and the two
    /// numerical routes.
    pub method_agreement_rel_err: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub printed_form: Option<PrintedFormComparison>,
}

/// Modes by all three routes, reported from the closed form.
pub fn modes_report(params: &TankParams, compare_printed: bool) -> Result<ModesReport, ModeError> {
    let coefficients = characteristic_coefficients(params);
    let (closed, mode_lost) = match modes_closed_form(&coefficients) {
        Ok(m) => (m, false),
        Err(ModeError::DegenerateCubic { modes }) => (modes, true),
        Err(e) => return Err(e),
    };
    let agreement = if mode_lost {
        match modes_numerical(&coefficients) {
            Err(ModeError::DegenerateCubic { modes }) => closed.max_rel_diff(&modes),
            Ok(m) => closed.max_rel_diff(&m),
            Err(e) => return Err(e),
        }
    } else {
        let numerical = modes_numerical(&coefficients)?;
        let poles = modes_from_impedance(params)?;
        closed.max_rel_diff(&numerical).max(closed.max_rel_diff(&poles))
    };
    let printed_form = (compare_printed && !mode_lost).then(|| printed_comparison(&coefficients, &closed));
    Ok(ModesReport {
        coefficients,
        modes_hz: closed.hz(),
        ratios: closed.ratios(),
        degenerate: closed.degenerate.clone(),
        mode_lost,
        method_agreement_rel_err: agreement,
        printed_form,
    })
}

fn printed_comparison(coeffs: &CubicCoefficients, reference: &ModeSet) -> PrintedFormComparison {
    let modes_hz: Vec<Option<f64>> = trig_roots(coeffs, TrigForm::SwappedLeading)
        .iter()
        .map(|&x| (x.is_finite() && x > 0.0).then(|| x.sqrt() / (2.0 * PI)))
        .collect();
    let max_rel_err = modes_hz
        .iter()
        .zip(reference.hz())
        .map(|(p, r)| p.map(|p| (p - r).abs() / r))
        .collect::<Option<Vec<f64>>>()
        .map(|errs| errs.into_iter().fold(0.0, f64::max));
    PrintedFormComparison { modes_hz, max_rel_err }
}

/// Writes `contents` to a temporary file next to `path`, then renames it
/// into place so readers never see a partial artifact.
pub fn write_atomic(path: &Path, contents: &str) -> io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(contents.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::designer::{ratio_map, AxisRange, ConstraintMode, SweepSpec};
    use crate::impedance::{sweep, Spacing};

    fn normalized() -> TankParams {
        TankParams::lossless([1.0; 3], [1.0, 0.25, 1.0 / 9.0], 0.0, 0.0, 0.0)
    }

    #[test]
    fn sweep_csv_layout() {
        let grid = FrequencyGrid::new(0.1, 0.2, 3, Spacing::Linear).unwrap();
        let s = sweep(&normalized(), &grid, Method::LinearSolve).unwrap();
        let csv = sweep_csv(&s);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], SWEEP_CSV_HEADER);
        assert_eq!(lines.len(), 4);
        for line in &lines[1..] {
            let fields: Vec<&str> = line.split(',').collect();
            assert_eq!(fields.len(), 5);
            let f: f64 = fields[0].parse().unwrap();
            assert!((0.1..=0.2).contains(&f));
            assert_eq!(fields[4], "ok");
        }
        let json: serde_json::Value = serde_json::from_str(&sweep_json(&s)).unwrap();
        assert_eq!(json["samples"].as_array().unwrap().len(), 3);
        assert_eq!(json["samples"][0]["flag"], "ok");
    }

    #[test]
    fn pole_sample_has_empty_fields() {
        // 1 / (2 pi) Hz is the first mode of the normalized tank
        let f = 1.0 / (2.0 * PI);
        let grid = FrequencyGrid::new(0.5 * f, 1.5 * f, 3, Spacing::Linear).unwrap();
        let s = sweep(&normalized(), &grid, Method::ClosedForm).unwrap();
        let row = sweep_csv(&s).lines().nth(2).unwrap().to_string();
        assert!(row.ends_with(",near_pole"), "{row}");
    }

    #[test]
    fn ratio_csv_layout() {
        let spec = SweepSpec {
            x_range: AxisRange { min: 4.0, max: 9.0, points: 2 },
            k12_values: vec![0.0],
            k13_values: vec![0.0, 0.99],
            k23_values: vec![0.99],
            constraint: ConstraintMode::Nu2EqualsNu3,
        };
        let map = ratio_map(&spec, &normalized()).unwrap();
        let csv = ratio_map_csv(&map);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], RATIO_CSV_HEADER);
        assert_eq!(lines.len(), 5);
        assert!(lines.iter().any(|l| l.ends_with(",,,false")), "{csv}");
    }

    #[test]
    fn modes_report_normalized() {
        let r = modes_report(&normalized(), true).unwrap();
        for (got, want) in r.ratios.iter().zip([1.0, 2.0, 3.0]) {
            assert!((got - want).abs() < 1e-12);
        }
        assert!(!r.mode_lost);
        assert!(r.method_agreement_rel_err < 1e-9);
        assert!(r.printed_form.is_some());
        let j = to_json(&r);
        assert!(j.contains("\"coefficients\"") && j.ends_with("}\n"));
    }

    #[test]
    fn printed_form_disagrees_when_coupled() {
        let p = TankParams::lossless([300e-12, 210e-12, 117e-12], [146.6e-15, 100e-15, 180e-15], 0.3, 0.3, 0.25);
        let cmp = modes_report(&p, true).unwrap().printed_form.unwrap();
        assert!(cmp.max_rel_err.is_none_or(|e| e > 1e-3), "{cmp:?}");
    }

    #[test]
    fn atomic_write_replaces() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        write_atomic(&path, "a\n").unwrap();
        write_atomic(&path, "b\n").unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "b\n");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
