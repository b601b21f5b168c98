//! Physical description of the three magnetically coupled LC branches.
//!
//! Branch 1 carries the port (across `L1 || C1`); branches 2 and 3 are
//! closed by their own capacitors. Coupling between coils `i` and `j` is
//! given by the normalized coefficient `k_ij = M_ij / sqrt(L_i L_j)`.

use crate::units::de_eng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::f64::consts::PI;
use std::fmt;

/// `det K` at or below this value is treated as a rank-deficient coupling matrix.
pub const DET_K_TOL: f64 = 1e-12;

/// Series loss model of the three coils.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum LossSpec {
    Lossless {},
    /// Frequency-independent series resistance per branch, ohms.
    SeriesResistance {
        #[serde(deserialize_with = "de_eng")]
        r1: f64,
        #[serde(deserialize_with = "de_eng")]
        r2: f64,
        #[serde(deserialize_with = "de_eng")]
        r3: f64,
    },
    /// Coil quality factors quoted at `f_ref`; converted to `r = 2 pi f_ref L / Q`.
    QAtReference {
        #[serde(deserialize_with = "de_eng")]
        q1: f64,
        #[serde(deserialize_with = "de_eng")]
        q2: f64,
        #[serde(deserialize_with = "de_eng")]
        q3: f64,
        #[serde(deserialize_with = "de_eng")]
        f_ref: f64,
    },
}

impl Default for LossSpec {
    fn default() -> Self {
        LossSpec::Lossless {}
    }
}

/// Electrical parameters of a triple-coupled transformer tank, SI units.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TankParams {
    #[serde(rename = "L1", deserialize_with = "de_eng")]
    pub l1: f64,
    #[serde(rename = "L2", deserialize_with = "de_eng")]
    pub l2: f64,
    #[serde(rename = "L3", deserialize_with = "de_eng")]
    pub l3: f64,
    #[serde(rename = "C1", deserialize_with = "de_eng")]
    pub c1: f64,
    #[serde(rename = "C2", deserialize_with = "de_eng")]
    pub c2: f64,
    #[serde(rename = "C3", deserialize_with = "de_eng")]
    pub c3: f64,
    #[serde(deserialize_with = "de_eng")]
    pub k12: f64,
    #[serde(deserialize_with = "de_eng")]
    pub k13: f64,
    #[serde(deserialize_with = "de_eng")]
    pub k23: f64,
    #[serde(default)]
    pub loss: LossSpec,
}

/// Mutual inductances, henries.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mutuals {
    pub m12: f64,
    pub m13: f64,
    pub m23: f64,
}

/// Resonance frequencies of each branch with all coupling removed, rad/s.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UncoupledFrequencies {
    pub nu1: f64,
    pub nu2: f64,
    pub nu3: f64,
}

impl UncoupledFrequencies {
    pub fn squared(&self) -> [f64; 3] {
        [self.nu1 * self.nu1, self.nu2 * self.nu2, self.nu3 * self.nu3]
    }

    pub fn hz(&self) -> [f64; 3] {
        [self.nu1 / (2.0 * PI), self.nu2 / (2.0 * PI), self.nu3 / (2.0 * PI)]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    NonPositiveInductance { branch: u8, value: f64 },
    NonPositiveCapacitance { branch: u8, value: f64 },
    CouplingOutOfRange { pair: &'static str, value: f64 },
    NonPhysicalCoupling { det_k: f64 },
    InvalidLoss { detail: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NonPositiveInductance { branch, value } => {
                write!(f, "L{branch} must be positive and finite (got {value})")
            }
            Violation::NonPositiveCapacitance { branch, value } => {
                write!(f, "C{branch} must be positive and finite (got {value})")
            }
            Violation::CouplingOutOfRange { pair, value } => {
                write!(f, "|k{pair}| must be below 1 (got {value})")
            }
            Violation::NonPhysicalCoupling { det_k } => {
                write!(f, "coupling matrix is not positive definite (det K = {det_k:e})")
            }
            Violation::InvalidLoss { detail } => write!(f, "invalid loss spec: {detail}"),
        }
    }
}

/// Outcome of [`TankParams::validate`]. Never an error by itself.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub det_k: f64,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_valid() {
            return write!(f, "valid (det K = {})", self.det_k);
        }
        let msgs: Vec<String> = self.violations.iter().map(|v| v.to_string()).collect();
        f.write_str(&msgs.join("; "))
    }
}

#[derive(Debug, Clone, thiserror::Error)]
#[error("invalid tank parameters: {0}")]
pub struct InvalidTank(pub ValidationReport);

/// Determinant of the normalized coupling matrix
/// `[[1, k12, k13], [k12, 1, k23], [k13, k23, 1]]`.
pub fn coupling_det(k12: f64, k13: f64, k23: f64) -> f64 {
    1.0 - (k12 * k12 + k13 * k13 + k23 * k23) + 2.0 * k12 * k13 * k23
}

impl TankParams {
    /// Lossless tank from inductances, capacitances and couplings.
    pub fn lossless(l: [f64; 3], c: [f64; 3], k12: f64, k13: f64, k23: f64) -> Self {
        TankParams {
            l1: l[0],
            l2: l[1],
            l3: l[2],
            c1: c[0],
            c2: c[1],
            c3: c[2],
            k12,
            k13,
            k23,
            loss: LossSpec::Lossless {},
        }
    }

    pub fn with_loss(mut self, loss: LossSpec) -> Self {
        self.loss = loss;
        self
    }

    pub fn inductances(&self) -> [f64; 3] {
        [self.l1, self.l2, self.l3]
    }

    pub fn capacitances(&self) -> [f64; 3] {
        [self.c1, self.c2, self.c3]
    }

    pub fn det_k(&self) -> f64 {
        coupling_det(self.k12, self.k13, self.k23)
    }

    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        for (i, &l) in self.inductances().iter().enumerate() {
            if !(l.is_finite() && l > 0.0) {
                violations.push(Violation::NonPositiveInductance { branch: i as u8 + 1, value: l });
            }
        }
        for (i, &c) in self.capacitances().iter().enumerate() {
            if !(c.is_finite() && c > 0.0) {
                violations.push(Violation::NonPositiveCapacitance { branch: i as u8 + 1, value: c });
            }
        }
        for (pair, k) in [("12", self.k12), ("13", self.k13), ("23", self.k23)] {
            if !(k.is_finite() && k.abs() < 1.0) {
                violations.push(Violation::CouplingOutOfRange { pair, value: k });
            }
        }
        let det_k = self.det_k();
        if !(det_k > DET_K_TOL) {
            violations.push(Violation::NonPhysicalCoupling { det_k });
        }
        if let Some(detail) = self.loss.check() {
            violations.push(Violation::InvalidLoss { detail });
        }
        ValidationReport { det_k, violations }
    }

    /// Returns `self` if [`validate`](Self::validate) passes.
    pub fn checked(self) -> Result<Self, InvalidTank> {
        let report = self.validate();
        if report.is_valid() {
            Ok(self)
        } else {
            Err(InvalidTank(report))
        }
    }

    pub fn mutual_inductances(&self) -> Mutuals {
        Mutuals {
            m12: self.k12 * (self.l1 * self.l2).sqrt(),
            m13: self.k13 * (self.l1 * self.l3).sqrt(),
            m23: self.k23 * (self.l2 * self.l3).sqrt(),
        }
    }

    pub fn uncoupled_frequencies(&self) -> UncoupledFrequencies {
        UncoupledFrequencies {
            nu1: 1.0 / (self.l1 * self.c1).sqrt(),
            nu2: 1.0 / (self.l2 * self.c2).sqrt(),
            nu3: 1.0 / (self.l3 * self.c3).sqrt(),
        }
    }

    /// Series resistance of each coil, ohms.
    pub fn series_resistances(&self) -> [f64; 3] {
        match self.loss {
            LossSpec::Lossless {} => [0.0; 3],
            LossSpec::SeriesResistance { r1, r2, r3 } => [r1, r2, r3],
            LossSpec::QAtReference { q1, q2, q3, f_ref } => {
                let w = 2.0 * PI * f_ref;
                [w * self.l1 / q1, w * self.l2 / q2, w * self.l3 / q3]
            }
        }
    }

    pub fn is_lossless(&self) -> bool {
        self.series_resistances().iter().all(|&r| r == 0.0)
    }

    /// Relabels branches 2 and 3. The port branch is untouched.
    pub fn swap_branches_2_3(&self) -> Self {
        let loss = match self.loss {
            LossSpec::Lossless {} => LossSpec::Lossless {},
            LossSpec::SeriesResistance { r1, r2, r3 } => LossSpec::SeriesResistance { r1, r2: r3, r3: r2 },
            LossSpec::QAtReference { q1, q2, q3, f_ref } => LossSpec::QAtReference { q1, q2: q3, q3: q2, f_ref },
        };
        TankParams {
            l1: self.l1,
            l2: self.l3,
            l3: self.l2,
            c1: self.c1,
            c2: self.c3,
            c3: self.c2,
            k12: self.k13,
            k13: self.k12,
            k23: self.k23,
            loss,
        }
    }

    /// Multiplies all three capacitances by `alpha`.
    pub fn scale_capacitances(&self, alpha: f64) -> Self {
        TankParams { c1: self.c1 * alpha, c2: self.c2 * alpha, c3: self.c3 * alpha, ..*self }
    }

    /// Short content hash of the canonical JSON form.
    pub fn digest(&self) -> String {
        let json = serde_json::to_vec(self).expect("tank params serialize");
        let hash = Sha256::digest(&json);
        hash[..8].iter().map(|b| format!("{b:02x}")).collect()
    }
}

impl LossSpec {
    fn check(&self) -> Option<String> {
        match *self {
            LossSpec::Lossless {} => None,
            LossSpec::SeriesResistance { r1, r2, r3 } => [r1, r2, r3]
                .iter()
                .any(|r| !(r.is_finite() && *r >= 0.0))
                .then(|| format!("resistances must be finite and >= 0 (got {r1}, {r2}, {r3})")),
            LossSpec::QAtReference { q1, q2, q3, f_ref } => {
                if [q1, q2, q3].iter().any(|q| !(q.is_finite() && *q > 0.0)) {
                    Some(format!("quality factors must be positive (got {q1}, {q2}, {q3})"))
                } else if !(f_ref.is_finite() && f_ref > 0.0) {
                    Some(format!("f_ref must be positive (got {f_ref})"))
                } else {
                    None
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit(k12: f64, k13: f64, k23: f64) -> TankParams {
        TankParams::lossless([1.0; 3], [1.0; 3], k12, k13, k23)
    }

    #[test]
    fn validate_identity_coupling() {
        let r = unit(0.0, 0.0, 0.0).validate();
        assert!(r.is_valid());
        assert_eq!(r.det_k, 1.0);
    }

    #[test]
    fn validate_perfect_coupling_fails() {
        let r = unit(0.0, 0.0, 1.0).validate();
        assert!(!r.is_valid());
        assert_eq!(r.det_k, 0.0);
        assert!(r.violations.iter().any(|v| matches!(v, Violation::CouplingOutOfRange { .. })));
        assert!(r.violations.iter().any(|v| matches!(v, Violation::NonPhysicalCoupling { .. })));
    }

    #[test]
    fn validate_equal_half_coupling() {
        let r = unit(0.5, 0.5, 0.5).validate();
        assert!(r.is_valid());
        assert!((r.det_k - 0.5).abs() < 1e-15);
    }

    #[test]
    fn validate_non_physical_triple() {
        // each |k| < 1 but the matrix is indefinite
        let r = unit(0.9, 0.9, -0.9).validate();
        assert!(r.det_k < 0.0);
        assert_eq!(r.violations, vec![Violation::NonPhysicalCoupling { det_k: r.det_k }]);
    }

    #[test]
    fn validate_collects_every_violation() {
        let mut p = unit(0.0, 0.0, 0.0);
        p.l2 = -1.0;
        p.c3 = f64::NAN;
        p.loss = LossSpec::QAtReference { q1: 10.0, q2: 0.0, q3: 5.0, f_ref: 1e9 };
        let r = p.validate();
        assert_eq!(r.violations.len(), 3, "{r}");
    }

    #[test]
    fn mutuals() {
        let p = TankParams::lossless([1e-9, 1e-9, 1e-9], [1e-12; 3], 0.5, 0.0, 0.0);
        let m = p.mutual_inductances();
        assert!((m.m12 - 0.5e-9).abs() < 1e-24);
        assert_eq!(m.m13, 0.0);
        assert_eq!(m.m23, 0.0);

        let p = TankParams::lossless([300e-12, 210e-12, 117e-12], [1e-13; 3], 0.3, 0.0, 0.0);
        // 0.3 * sqrt(300 * 210) = 75.2994...
        assert!((p.mutual_inductances().m12 - 75.29940238807362e-12).abs() < 1e-22);
    }

    #[test]
    fn uncoupled() {
        let p = TankParams::lossless([1e-9; 3], [1e-12; 3], 0.0, 0.0, 0.0);
        let nu = p.uncoupled_frequencies();
        assert!((nu.nu1 / 3.1622776601683795e10 - 1.0).abs() < 1e-15);
        assert!((nu.hz()[0] - 5.032921210448704e9).abs() < 1.0);

        let p = TankParams::lossless([300e-12; 3], [146.6e-15; 3], 0.0, 0.0, 0.0);
        assert!((p.uncoupled_frequencies().hz()[0] / 24e9 - 1.0).abs() < 1e-3);

        let mut q = p;
        q.l1 *= 4.0;
        let ratio = q.uncoupled_frequencies().nu1 / p.uncoupled_frequencies().nu1;
        assert!((ratio - 0.5).abs() < 1e-15);
    }

    #[test]
    fn q_to_resistance() {
        let p = TankParams::lossless([300e-12, 210e-12, 117e-12], [1e-13; 3], 0.0, 0.0, 0.0)
            .with_loss(LossSpec::QAtReference { q1: 21.8, q2: 17.4, q3: 15.0, f_ref: 24e9 });
        let r = p.series_resistances();
        let w = 2.0 * PI * 24e9;
        assert!((r[0] - w * 300e-12 / 21.8).abs() < 1e-12);
        assert!((r[2] - w * 117e-12 / 15.0).abs() < 1e-12);
        assert!(!p.is_lossless());
    }

    #[test]
    fn json_accepts_engineering_strings() {
        let p: TankParams = serde_json::from_str(
            r#"{"L1":"300p","L2":"210p","L3":"117p","C1":"146.6f","C2":1e-13,"C3":"0.2p",
                "k12":0.3,"k13":"0.2","k23":0.25,
                "loss":{"mode":"q_at_reference","q1":21.8,"q2":17.4,"q3":15,"f_ref":"24G"}}"#,
        )
        .unwrap();
        assert_eq!(p.l1, 3.0e-10);
        assert_eq!(p.c1, 146.6e-15);
        assert_eq!(p.k13, 0.2);
        assert!(matches!(p.loss, LossSpec::QAtReference { f_ref, .. } if f_ref == 24e9));

        let back: TankParams = serde_json::from_str(&serde_json::to_string(&p).unwrap()).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn json_rejects_unknown_keys() {
        let err = serde_json::from_str::<TankParams>(
            r#"{"L1":1,"L2":1,"L3":1,"C1":1,"C2":1,"C3":1,"C4":1,"k12":0,"k13":0,"k23":0}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("C4"), "{err}");

        let err = serde_json::from_str::<LossSpec>(r#"{"mode":"lossless","r1":1}"#).unwrap_err();
        assert!(err.to_string().contains("r1"), "{err}");
    }

    proptest! {
        #[test]
        fn det_k_matches_matrix_determinant(
            k12 in -0.999f64..0.999, k13 in -0.999f64..0.999, k23 in -0.999f64..0.999
        ) {
            let m = nalgebra::Matrix3::new(1.0, k12, k13, k12, 1.0, k23, k13, k23, 1.0);
            let det = coupling_det(k12, k13, k23);
            prop_assert!((m.determinant() - det).abs() <= 1e-12 * det.abs().max(1e-3));
        }

        #[test]
        fn validate_iff_conditions(
            k12 in -1.2f64..1.2, k13 in -1.2f64..1.2, k23 in -1.2f64..1.2,
            l2 in -1.0f64..2.0, c3 in -1.0f64..2.0,
        ) {
            let mut p = unit(k12, k13, k23);
            p.l2 = l2;
            p.c3 = c3;
            let expect = l2 > 0.0 && c3 > 0.0
                && k12.abs() < 1.0 && k13.abs() < 1.0 && k23.abs() < 1.0
                && coupling_det(k12, k13, k23) > DET_K_TOL;
            prop_assert_eq!(p.validate().is_valid(), expect);
        }

        #[test]
        fn mutuals_follow_branch_relabel(
            l in prop::array::uniform3(1e-11f64..2e-9),
            k12 in -0.9f64..0.9, k13 in -0.9f64..0.9, k23 in -0.9f64..0.9,
        ) {
            let p = TankParams::lossless(l, [1e-13; 3], k12, k13, k23);
            let (a, b) = (p.mutual_inductances(), p.swap_branches_2_3().mutual_inductances());
            prop_assert_eq!(a.m12, b.m13);
            prop_assert_eq!(a.m13, b.m12);
            prop_assert!((a.m23 - b.m23).abs() <= 1e-15 * a.m23.abs());
        }
    }
}
