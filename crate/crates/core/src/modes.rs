//! Differential-mode resonance frequencies of the coupled tank.
//!
//! The squared mode frequencies `x = w^2` are the roots of
//!
//! ```text
//! c3 x^3 - c2 x^2 + c1 x - c0 = 0
//! c3 = 1 - (k12^2 + k13^2 + k23^2) + 2 k12 k13 k23
//! c2 = (1 - k12^2) nu3^2 + (1 - k13^2) nu2^2 + (1 - k23^2) nu1^2
//! c1 = nu1^2 nu2^2 + nu1^2 nu3^2 + nu2^2 nu3^2
//! c0 = nu1^2 nu2^2 nu3^2
//! ```
//!
//! where `nu_i = 1/sqrt(L_i C_i)`. Three independent routes are provided:
//! the trigonometric (Viete) closed form, eigenvalues of the companion
//! matrix, and bracketing of the impedance poles directly on the jw axis.

use crate::impedance::pole_function;
use crate::tank::{TankParams, DET_K_TOL};
use nalgebra::Matrix3;
use serde::Serialize;
use std::f64::consts::PI;

/// Modes closer than this (relative) are reported as degenerate.
pub const DEGENERATE_REL: f64 = 1e-9;
/// Companion eigenvalues with a smaller relative imaginary part are real.
pub const IMAG_REL_TOL: f64 = 1e-9;
/// A conjugate pair tighter than this is read as a split multiple real root.
pub const MULTIPLE_ROOT_REL: f64 = 1e-5;
/// The arccos argument may overshoot +-1 by this much before it is an error.
pub const ACOS_CLAMP: f64 = 1e-9;

const BRACKET_POINTS: usize = 4000;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CubicCoefficients {
    pub c3: f64,
    pub c2: f64,
    pub c1: f64,
    pub c0: f64,
}

impl CubicCoefficients {
    pub fn new(c3: f64, c2: f64, c1: f64, c0: f64) -> Self {
        CubicCoefficients { c3, c2, c1, c0 }
    }

    /// `c3 x^3 - c2 x^2 + c1 x - c0`, Horner form.
    pub fn eval(&self, x: f64) -> f64 {
        ((self.c3 * x - self.c2) * x + self.c1) * x - self.c0
    }

    /// `|p(x)|` divided by the sum of term magnitudes.
    pub fn relative_residual(&self, x: f64) -> f64 {
        let scale = (self.c3 * x * x * x).abs() + (self.c2 * x * x).abs() + (self.c1 * x).abs() + self.c0.abs();
        self.eval(x).abs() / scale
    }

    fn is_finite(&self) -> bool {
        [self.c3, self.c2, self.c1, self.c0].iter().all(|c| c.is_finite())
    }
}

pub fn characteristic_coefficients(params: &TankParams) -> CubicCoefficients {
    let [n1, n2, n3] = params.uncoupled_frequencies().squared();
    let (k12, k13, k23) = (params.k12, params.k13, params.k23);
    CubicCoefficients {
        c3: params.det_k(),
        c2: (1.0 - k12 * k12) * n3 + (1.0 - k13 * k13) * n2 + (1.0 - k23 * k23) * n1,
        c1: n1 * n2 + n1 * n3 + n2 * n3,
        c0: n1 * n2 * n3,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeMethod {
    ClosedForm,
    NumericalOracle,
    ImpedancePoles,
}

/// Resonance frequencies sorted ascending, rad/s.
///
/// Normally three entries. A degenerate cubic (`c3 ~ 0`) carries two.
/// `degenerate[i]` marks `omega[i]` and `omega[i + 1]` as coincident.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ModeSet {
    pub omega: Vec<f64>,
    pub degenerate: Vec<bool>,
    pub method: ModeMethod,
}

impl ModeSet {
    fn from_squared(mut x: Vec<f64>, method: ModeMethod) -> Result<Self, ModeError> {
        if let Some(&bad) = x.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(ModeError::NonPositiveRoot { x: bad });
        }
        x.sort_by(f64::total_cmp);
        Ok(Self::from_omega(x.into_iter().map(f64::sqrt).collect(), method))
    }

    fn from_omega(omega: Vec<f64>, method: ModeMethod) -> Self {
        let degenerate = omega.windows(2).map(|w| (w[1] - w[0]).abs() <= DEGENERATE_REL * w[1].abs()).collect();
        ModeSet { omega, degenerate, method }
    }

    pub fn hz(&self) -> Vec<f64> {
        self.omega.iter().map(|w| w / (2.0 * PI)).collect()
    }

    /// Each mode divided by the lowest one.
    pub fn ratios(&self) -> Vec<f64> {
        self.omega.iter().map(|w| w / self.omega[0]).collect()
    }

    /// Largest per-mode relative difference to `other`, or infinity when the
    /// two sets have different lengths.
    pub fn max_rel_diff(&self, other: &ModeSet) -> f64 {
        if self.omega.len() != other.omega.len() {
            return f64::INFINITY;
        }
        self.omega.iter().zip(&other.omega).map(|(a, b)| (a - b).abs() / a.abs().max(b.abs())).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, thiserror::Error)]
pub enum ModeError {
    #[error("degenerate cubic (c3 ~ 0): highest mode lost, remaining modes {:?} rad/s", modes.omega)]
    DegenerateCubic { modes: ModeSet },
    #[error("characteristic cubic has complex roots: {detail}")]
    ComplexRoots { detail: String },
    #[error("characteristic root x = {x} is not positive")]
    NonPositiveRoot { x: f64 },
    #[error("found {found} of 3 impedance poles")]
    BracketingFailure { found: usize },
    #[error("non-finite cubic coefficients")]
    NonFinite,
}

/// Which coefficient placement to use in the trigonometric root formula.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrigForm {
    /// `3 c3` in the root denominators and `27 c3^2 c0` in the angle.
    Standard,
    /// `3 c1` and `27 c1^2 c0` in the same places. Kept only to show that
    /// this placement disagrees with the actual roots.
    SwappedLeading,
}

/// Raw trigonometric roots `x_k` (not sorted, may be NaN), ordered as
/// `[k = 2, k = 1, k = 0]`, i.e. smallest to largest for the standard form.
pub fn trig_roots(coeffs: &CubicCoefficients, form: TrigForm) -> [f64; 3] {
    let CubicCoefficients { c3, c2, c1, c0 } = *coeffs;
    let lead = match form {
        TrigForm::Standard => c3,
        TrigForm::SwappedLeading => c1,
    };
    let d0 = c2 * c2 - 3.0 * c1 * c3;
    let arg = (27.0 * lead * lead * c0 - 9.0 * c1 * c2 * c3 + 2.0 * c2 * c2 * c2) / (2.0 * (d0 * d0 * d0).sqrt());
    let theta = arg.acos();
    let r = 2.0 * d0.sqrt();
    [
        (c2 - r * ((theta - PI) / 3.0).cos()) / (3.0 * lead),
        (c2 - r * ((theta + PI) / 3.0).cos()) / (3.0 * lead),
        (c2 + r * (theta / 3.0).cos()) / (3.0 * lead),
    ]
}

fn degenerate_pair(coeffs: &CubicCoefficients, method: ModeMethod) -> ModeError {
    // c3 = 0 leaves c2 x^2 - c1 x + c0 = 0
    let CubicCoefficients { c2, c1, c0, .. } = *coeffs;
    let disc = (c1 * c1 - 4.0 * c2 * c0).max(0.0);
    let hi = (c1 + disc.sqrt()) / (2.0 * c2);
    let lo = c0 / (c2 * hi);
    match ModeSet::from_squared(vec![lo, hi], method) {
        Ok(modes) => ModeError::DegenerateCubic { modes },
        Err(e) => e,
    }
}

/// Trigonometric closed form.
///
/// Works on `y = x c3 / c2` so that the roots sum to one. The largest root
/// comes straight from the cosine formula, where no cancellation occurs; the
/// lower pair follows from the product and pairwise-sum identities, which
/// keeps the small roots accurate when the spread is large.
pub fn modes_closed_form(coeffs: &CubicCoefficients) -> Result<ModeSet, ModeError> {
    if !coeffs.is_finite() {
        return Err(ModeError::NonFinite);
    }
    if coeffs.c3.abs() <= DET_K_TOL {
        return Err(degenerate_pair(coeffs, ModeMethod::ClosedForm));
    }
    let CubicCoefficients { c3, c2, c1, c0 } = *coeffs;
    let scale = c2 / c3;
    // y^3 - y^2 + p1 y - p0 = 0
    let p1 = c1 / (c3 * scale * scale);
    let p0 = c0 / (c3 * scale * scale * scale);

    let d0 = 1.0 - 3.0 * p1;
    let y3 = if d0 <= 1e-15 {
        if d0 < -1e-12 {
            return Err(ModeError::ComplexRoots { detail: format!("negative discriminant {d0:e}") });
        }
        1.0 / 3.0
    } else {
        let mut arg = (27.0 * p0 - 9.0 * p1 + 2.0) / (2.0 * d0 * d0.sqrt());
        if arg.abs() > 1.0 + ACOS_CLAMP || !arg.is_finite() {
            return Err(ModeError::ComplexRoots { detail: format!("arccos argument {arg}") });
        }
        arg = arg.clamp(-1.0, 1.0);
        let theta = arg.acos();
        (1.0 + 2.0 * d0.sqrt() * (theta / 3.0).cos()) / 3.0
    };
    if !(y3 > 0.0) {
        return Err(ModeError::NonPositiveRoot { x: y3 * scale });
    }
    let prod = p0 / y3;
    let sum = (p1 - prod) / y3;
    let disc = sum * sum - 4.0 * prod;
    if disc < -1e-12 * sum * sum {
        return Err(ModeError::ComplexRoots { detail: format!("lower pair discriminant {disc:e}") });
    }
    let y2 = 0.5 * (sum + disc.max(0.0).sqrt());
    let y1 = prod / y2;
    ModeSet::from_squared(vec![y1 * scale, y2 * scale, y3 * scale], ModeMethod::ClosedForm)
}

/// Roots from the eigenvalues of the companion matrix.
pub fn modes_numerical(coeffs: &CubicCoefficients) -> Result<ModeSet, ModeError> {
    if !coeffs.is_finite() {
        return Err(ModeError::NonFinite);
    }
    let CubicCoefficients { c3, c2, c1, c0 } = *coeffs;
    if c3.abs() <= DET_K_TOL {
        return numerical_quadratic(coeffs);
    }
    // x = s y with s the geometric mean root magnitude, so the monic
    // polynomial y^3 + a2 y^2 + a1 y + a0 has |a0| = 1
    let s = (c0 / c3).abs().cbrt();
    let s = if s > 0.0 { s } else { 1.0 };
    let a2 = -c2 / (c3 * s);
    let a1 = c1 / (c3 * s * s);
    let a0 = -c0 / (c3 * s * s * s);
    let companion = Matrix3::new(
        0.0, 0.0, -a0, //
        1.0, 0.0, -a1, //
        0.0, 1.0, -a2,
    );
    let eig = companion.complex_eigenvalues();
    let mut roots: Vec<(f64, f64)> = eig.iter().map(|z| (z.re, z.im)).collect();
    roots.sort_by(|a, b| a.0.total_cmp(&b.0));
    let x = merge_split_roots(&roots)?;
    ModeSet::from_squared(x.into_iter().map(|y| y * s).collect(), ModeMethod::NumericalOracle)
}

/// Turns eigenvalues into real roots.
///
/// Rounding splits an exact multiple root into a tight cluster that may
/// contain a conjugate pair. A pair whose imaginary part is below
/// `MULTIPLE_ROOT_REL` is merged with every eigenvalue within the same
/// radius, each member taking the cluster mean (which is well conditioned).
fn merge_split_roots(roots: &[(f64, f64)]) -> Result<Vec<f64>, ModeError> {
    let mag = roots.iter().map(|r| r.0.hypot(r.1)).fold(0.0, f64::max);
    let mut out: Vec<f64> = roots.iter().map(|r| r.0).collect();
    let complex: Vec<usize> = (0..roots.len()).filter(|&i| roots[i].1.abs() > IMAG_REL_TOL * mag).collect();
    if complex.is_empty() {
        return Ok(out);
    }
    let radius = MULTIPLE_ROOT_REL * mag;
    if complex.iter().any(|&i| roots[i].1.abs() > radius) {
        let worst = complex.iter().map(|&i| roots[i].1.abs() / mag).fold(0.0, f64::max);
        return Err(ModeError::ComplexRoots { detail: format!("relative imaginary part {worst:e}") });
    }
    let center = roots[complex[0]].0;
    let members: Vec<usize> = (0..roots.len()).filter(|&i| (roots[i].0 - center).abs() <= 2.0 * radius).collect();
    let mean = members.iter().map(|&i| roots[i].0).sum::<f64>() / members.len() as f64;
    for i in members {
        out[i] = mean;
    }
    Ok(out)
}

fn numerical_quadratic(coeffs: &CubicCoefficients) -> Result<ModeSet, ModeError> {
    let CubicCoefficients { c2, c1, c0, .. } = *coeffs;
    let s = (c0 / c2).abs().sqrt();
    let (a1, a0) = (-c1 / (c2 * s), c0 / (c2 * s * s));
    let companion = nalgebra::Matrix2::new(0.0, -a0, 1.0, -a1);
    let eig = companion.complex_eigenvalues();
    let mut roots: Vec<(f64, f64)> = eig.iter().map(|z| (z.re, z.im)).collect();
    roots.sort_by(|a, b| a.0.total_cmp(&b.0));
    let x = merge_split_roots(&roots)?;
    let modes = ModeSet::from_squared(x.into_iter().map(|y| y * s).collect(), ModeMethod::NumericalOracle)?;
    Err(ModeError::DegenerateCubic { modes })
}

/// Locates the impedance poles by sign changes of the pole function on a
/// logarithmic grid, refined by bisection.
///
/// The grid spans `0.1 sqrt(c0/c1)` to `2 sqrt(c2/c3)`; these bound the
/// lowest and highest roots from below and above respectively.
pub fn modes_from_impedance(params: &TankParams) -> Result<ModeSet, ModeError> {
    let coeffs = characteristic_coefficients(params);
    if !coeffs.is_finite() {
        return Err(ModeError::NonFinite);
    }
    if coeffs.c3 <= DET_K_TOL {
        return Err(degenerate_pair(&coeffs, ModeMethod::ImpedancePoles));
    }
    let lo = 0.1 * (coeffs.c0 / coeffs.c1).sqrt();
    let hi = 2.0 * (coeffs.c2 / coeffs.c3).sqrt();
    let f = |w: f64| pole_function(params, w);

    let mut found = bracket_roots(&f, lo, hi, BRACKET_POINTS);
    if found.len() != 3 {
        found = bracket_roots(&f, lo, hi, 10 * BRACKET_POINTS);
    }
    if found.len() != 3 {
        return Err(ModeError::BracketingFailure { found: found.len() });
    }
    Ok(ModeSet::from_omega(found, ModeMethod::ImpedancePoles))
}

fn bracket_roots(f: &impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let step = (hi / lo).ln() / (n - 1) as f64;
    let grid = |i: usize| if i == n - 1 { hi } else { lo * (step * i as f64).exp() };
    let mut roots = Vec::new();
    let mut a = lo;
    let mut fa = f(a);
    for i in 1..n {
        let b = grid(i);
        let fb = f(b);
        if fa == 0.0 {
            roots.push(a);
        } else if fa.signum() != fb.signum() && fb != 0.0 {
            roots.push(bisect(f, a, b, fa));
        }
        a = b;
        fa = fb;
    }
    if fa == 0.0 {
        roots.push(a);
    }
    roots
}

fn bisect(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    fn normalized(nu: [f64; 3], k12: f64, k13: f64, k23: f64) -> TankParams {
        // L = 1 so that C_i = 1/nu_i^2
        TankParams::lossless([1.0; 3], nu.map(|n| 1.0 / (n * n)), k12, k13, k23)
    }

    #[test]
    fn coefficients_uncoupled_unit() {
        let c = characteristic_coefficients(&normalized([1.0; 3], 0.0, 0.0, 0.0));
        assert_eq!(c, CubicCoefficients::new(1.0, 3.0, 3.0, 1.0));
    }

    #[test]
    fn coefficients_symmetric_half() {
        let c = characteristic_coefficients(&normalized([1.0; 3], 0.5, 0.5, 0.0));
        assert_eq!(c, CubicCoefficients::new(0.5, 2.5, 3.0, 1.0));
    }

    #[test]
    fn coefficients_perfect_coupling() {
        let c = characteristic_coefficients(&normalized([1.0; 3], 0.0, 0.0, 1.0));
        assert_eq!(c.c3, 0.0);
    }

    #[test]
    fn closed_form_uncoupled() {
        let c = characteristic_coefficients(&normalized([1.0, 2.0, 3.0], 0.0, 0.0, 0.0));
        let m = modes_closed_form(&c).unwrap();
        for (w, want) in m.omega.iter().zip([1.0, 2.0, 3.0]) {
            assert!(rel(*w, want) < 1e-14, "{w} vs {want}");
        }
        assert_eq!(m.degenerate, vec![false, false]);
    }

    #[test]
    fn closed_form_symmetric_case() {
        let k: f64 = 0.5;
        let lo = ((1.0 - k * 2f64.sqrt()) / (1.0 - 2.0 * k * k)).sqrt();
        let hi = ((1.0 + k * 2f64.sqrt()) / (1.0 - 2.0 * k * k)).sqrt();
        for w0 in [1.0, 2.0 * PI * 24e9] {
            let p = normalized([w0; 3], k, k, 0.0);
            let m = modes_closed_form(&characteristic_coefficients(&p)).unwrap();
            assert!(rel(m.omega[0], lo * w0) < 1e-12);
            assert!(rel(m.omega[1], w0) < 1e-12);
            assert!(rel(m.omega[2], hi * w0) < 1e-12);
        }
        assert!((lo - 0.7653668647301796).abs() < 1e-15);
        assert!((hi - 1.8477590650225735).abs() < 1e-15);
    }

    #[test]
    fn closed_form_triple_root() {
        let m = modes_closed_form(&CubicCoefficients::new(1.0, 3.0, 3.0, 1.0)).unwrap();
        assert_eq!(m.omega, vec![1.0; 3]);
        assert_eq!(m.degenerate, vec![true, true]);
    }

    #[test]
    fn closed_form_double_root() {
        // (x - 1)(x - 4)^2 = x^3 - 9x^2 + 24x - 16; a double root only
        // resolves to about sqrt(eps)
        let m = modes_closed_form(&CubicCoefficients::new(1.0, 9.0, 24.0, 16.0)).unwrap();
        assert!(rel(m.omega[0], 1.0) < 1e-14);
        assert!(rel(m.omega[1], 2.0) < 1e-7 && rel(m.omega[2], 2.0) < 1e-7, "{:?}", m.omega);
        assert!(!m.degenerate[0]);
    }

    #[test]
    fn closed_form_degenerate_cubic() {
        let p = normalized([1.0, 2.0, 3.0], 0.0, 0.0, 1.0);
        match modes_closed_form(&characteristic_coefficients(&p)) {
            Err(ModeError::DegenerateCubic { modes }) => {
                // branch 1 alone, and branches 2 and 3 merged in series
                let series = (4.0f64 * 9.0 / 13.0).sqrt();
                assert_eq!(modes.omega.len(), 2);
                assert!(rel(modes.omega[0], 1.0) < 1e-14);
                assert!(rel(modes.omega[1], series) < 1e-14);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn closed_form_complex_roots() {
        // (x - 1)(x^2 + 1) = x^3 - x^2 + x - 1
        assert!(matches!(
            modes_closed_form(&CubicCoefficients::new(1.0, 1.0, 1.0, 1.0)),
            Err(ModeError::ComplexRoots { .. })
        ));
        assert!(matches!(
            modes_numerical(&CubicCoefficients::new(1.0, 1.0, 1.0, 1.0)),
            Err(ModeError::ComplexRoots { .. })
        ));
    }

    #[test]
    fn standard_trig_roots_match_printed_order() {
        let c = characteristic_coefficients(&normalized([1.0, 1.3, 1.9], 0.3, 0.2, 0.25));
        let x = trig_roots(&c, TrigForm::Standard);
        let m = modes_numerical(&c).unwrap();
        for (xi, w) in x.iter().zip(&m.omega) {
            assert!(rel(xi.sqrt(), *w) < 1e-9);
        }
        let swapped = trig_roots(&c, TrigForm::SwappedLeading);
        assert!(swapped.iter().zip(&m.omega).any(|(xi, w)| !(rel(xi.sqrt(), *w) < 1e-3)));
    }

    #[test]
    fn numerical_triple_root() {
        let m = modes_numerical(&CubicCoefficients::new(1.0, 3.0, 3.0, 1.0)).unwrap();
        for w in &m.omega {
            assert!(rel(*w, 1.0) < 1e-12, "{:?}", m.omega);
        }
        assert_eq!(m.degenerate, vec![true, true]);
    }

    #[test]
    fn numerical_distinct() {
        let m = modes_numerical(&CubicCoefficients::new(1.0, 6.0, 11.0, 6.0)).unwrap();
        for (w, want) in m.omega.iter().zip([1.0, 2f64.sqrt(), 3f64.sqrt()]) {
            assert!(rel(*w, want) < 1e-13);
        }
        assert_eq!(m.method, ModeMethod::NumericalOracle);
    }

    #[test]
    fn numerical_degenerate() {
        let p = normalized([1.0, 2.0, 3.0], 0.0, 0.0, 1.0);
        match modes_numerical(&characteristic_coefficients(&p)) {
            Err(ModeError::DegenerateCubic { modes }) => {
                assert!(rel(modes.omega[1], (36.0f64 / 13.0).sqrt()) < 1e-13);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn impedance_poles_uncoupled() {
        let m = modes_from_impedance(&normalized([1.0, 2.0, 3.0], 0.0, 0.0, 0.0)).unwrap();
        for (w, want) in m.omega.iter().zip([1.0, 2.0, 3.0]) {
            assert!(rel(*w, want) < 1e-12);
        }
    }

    #[test]
    fn impedance_poles_symmetric() {
        let w0 = 2.0 * PI * 24e9;
        let p = TankParams::lossless(
            [300e-12, 210e-12, 117e-12],
            [300e-12, 210e-12, 117e-12].map(|l| 1.0 / (w0 * w0 * l)),
            0.5,
            0.5,
            0.0,
        );
        let m = modes_from_impedance(&p).unwrap();
        let oracle = modes_numerical(&characteristic_coefficients(&p)).unwrap();
        assert!(m.max_rel_diff(&oracle) < 1e-9);
        assert!(rel(m.omega[0] / w0, 0.7653668647301796) < 1e-9);
    }

    #[test]
    fn impedance_poles_miss_exact_double_root() {
        let err = modes_from_impedance(&normalized([1.0, 2.0, 2.0], 0.0, 0.0, 0.0)).unwrap_err();
        assert!(matches!(err, ModeError::BracketingFailure { found: 1 }), "{err:?}");
    }

    #[test]
    fn residuals_small() {
        let c = characteristic_coefficients(&normalized([1.0, 2.5, 3.1], 0.4, -0.3, 0.6));
        let m = modes_closed_form(&c).unwrap();
        for w in m.omega {
            assert!(c.relative_residual(w * w) < 1e-12);
        }
    }
}
