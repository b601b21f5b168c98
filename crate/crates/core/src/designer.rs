//! Third-harmonic placement: ratio maps and a design search.
//!
//! A tank "shape" is the coupling triple plus `X = L1 C1 / (L2 C2)` and, when
//! `nu2 != nu3`, the ratio `nu3 / nu2`. Mode ratios depend on the shape only:
//! scaling every capacitance by `a` scales every mode by `a^-1/2`. The search
//! therefore runs over shapes and sets the capacitance scale last so that the
//! lowest mode lands on the requested fundamental.

use crate::modes::{characteristic_coefficients, modes_closed_form, ModeError, ModeSet};
use crate::tank::{coupling_det, TankParams, DET_K_TOL};
use crate::units::{de_eng, de_eng_opt3, de_eng_vec};
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::f64::consts::PI;

/// Coverage for a zero-width band counts the center as covered within this
/// relative distance. Exact double roots only resolve to about `sqrt(eps)`.
const POINT_BAND_TOL: f64 = 1e-7;
const GOLDEN_ITERS: usize = 40;
const DEFAULT_INDUCTANCE: f64 = 100e-12;

#[derive(Debug, Clone, thiserror::Error)]
pub enum DesignError {
    #[error("invalid design spec: {0}")]
    InvalidSpec(String),
    #[error("no evaluated design covers the target band (best coverage 0, nearest r2 = {:.4}, r3 = {:.4})", best.achieved.r2, best.achieved.r3)]
    NoFeasibleDesign { best: Box<DesignResult> },
    #[error(transparent)]
    Mode(#[from] ModeError),
}

/// How `C3` follows from the other capacitances.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintMode {
    #[default]
    Nu2EqualsNu3,
    Free,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CapacitanceConstraint {
    /// `L2 C2 = L3 C3`.
    Nu2EqualsNu3,
    Free {
        nu3_over_nu2: f64,
    },
}

impl CapacitanceConstraint {
    fn nu3_over_nu2(&self) -> f64 {
        match *self {
            CapacitanceConstraint::Nu2EqualsNu3 => 1.0,
            CapacitanceConstraint::Free { nu3_over_nu2 } => nu3_over_nu2,
        }
    }
}

/// Scale-free description of a tank.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Shape {
    pub x: f64,
    pub k12: f64,
    pub k13: f64,
    pub k23: f64,
    pub nu3_over_nu2: f64,
}

impl Shape {
    /// Tank with `L = 1` and `nu1 = 1`; the modes come out as ratios.
    fn normalized(&self) -> TankParams {
        let nu2 = self.x.sqrt();
        let nu3 = nu2 * self.nu3_over_nu2;
        TankParams::lossless([1.0; 3], [1.0, 1.0 / (nu2 * nu2), 1.0 / (nu3 * nu3)], self.k12, self.k13, self.k23)
    }

    /// `(r2, r3)`, or `None` for a non-realizable or degenerate shape.
    pub fn ratios(&self) -> Option<(f64, f64)> {
        let p = self.normalized();
        if !p.validate().is_valid() {
            return None;
        }
        let m = modes_closed_form(&characteristic_coefficients(&p)).ok()?;
        let r = m.ratios();
        Some((r[1], r[2]))
    }
}

/// Capacitances that put the lowest mode at `f0_hz` for the given shape.
///
/// `C2` sets the unit, `C1` follows from `X`, `C3` from the constraint. The
/// common scale then follows from the homogeneity of the modes in `1/C`,
/// with a short fixed-point pass to absorb rounding.
pub fn capacitances_for_fundamental(
    inductances: [f64; 3],
    k12: f64,
    k13: f64,
    k23: f64,
    x: f64,
    f0_hz: f64,
    constraint: CapacitanceConstraint,
) -> Result<[f64; 3], DesignError> {
    let [l1, l2, l3] = inductances;
    if !(x > 0.0 && f0_hz > 0.0 && x.is_finite() && f0_hz.is_finite()) {
        return Err(DesignError::InvalidSpec(format!("need X > 0 and f0 > 0 (got {x}, {f0_hz})")));
    }
    let ratio = constraint.nu3_over_nu2();
    let c2 = 1.0 / l2;
    let mut c = [x * l2 * c2 / l1, c2, l2 * c2 / (l3 * ratio * ratio)];
    let target = 2.0 * PI * f0_hz;
    for _ in 0..4 {
        let p = TankParams::lossless(inductances, c, k12, k13, k23);
        let report = p.validate();
        if !report.is_valid() {
            return Err(DesignError::InvalidSpec(report.to_string()));
        }
        let w1 = modes_closed_form(&characteristic_coefficients(&p))?.omega[0];
        let alpha = (w1 / target).powi(2);
        c = c.map(|ci| ci * alpha);
        if (alpha - 1.0).abs() < 1e-13 {
            break;
        }
    }
    Ok(c)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AxisRange {
    #[serde(deserialize_with = "de_eng")]
    pub min: f64,
    #[serde(deserialize_with = "de_eng")]
    pub max: f64,
    pub points: usize,
}

impl AxisRange {
    fn values(&self) -> Vec<f64> {
        linspace(self.min, self.max, self.points)
    }
}

fn linspace(min: f64, max: f64, n: usize) -> Vec<f64> {
    if n <= 1 || min == max {
        return vec![min];
    }
    (0..n).map(|i| if i == n - 1 { max } else { min + (max - min) * i as f64 / (n - 1) as f64 }).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub x_range: AxisRange,
    #[serde(deserialize_with = "de_eng_vec")]
    pub k12_values: Vec<f64>,
    #[serde(deserialize_with = "de_eng_vec")]
    pub k13_values: Vec<f64>,
    #[serde(deserialize_with = "de_eng_vec")]
    pub k23_values: Vec<f64>,
    #[serde(default)]
    pub constraint: ConstraintMode,
}

impl SweepSpec {
    pub fn check(&self) -> Result<(), DesignError> {
        let x = &self.x_range;
        if !(x.min > 0.0 && x.max >= x.min && x.max.is_finite() && x.points >= 1) {
            return Err(DesignError::InvalidSpec(format!(
                "x_range needs 0 < min <= max and points >= 1 (got {} .. {}, {})",
                x.min, x.max, x.points
            )));
        }
        for (name, ks) in [("k12", &self.k12_values), ("k13", &self.k13_values), ("k23", &self.k23_values)] {
            if ks.is_empty() {
                return Err(DesignError::InvalidSpec(format!("{name}_values is empty")));
            }
            if let Some(k) = ks.iter().find(|k| !(k.abs() < 1.0)) {
                return Err(DesignError::InvalidSpec(format!("{name} value {k} is not within (-1, 1)")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RatioCell {
    pub x: f64,
    pub k12: f64,
    pub k13: f64,
    pub k23: f64,
    pub r2: Option<f64>,
    pub r3: Option<f64>,
    pub valid: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatioMap {
    pub x_values: Vec<f64>,
    pub k12_values: Vec<f64>,
    pub k13_values: Vec<f64>,
    pub k23_values: Vec<f64>,
    pub nu3_over_nu2: f64,
    /// Row-major over (X, k12, k13, k23), k23 fastest.
    pub cells: Vec<RatioCell>,
}

/// Mode ratios over a grid of shapes. `base` supplies `nu3 / nu2` when the
/// constraint is free; it is otherwise unused.
pub fn ratio_map(spec: &SweepSpec, base: &TankParams) -> Result<RatioMap, DesignError> {
    spec.check()?;
    let nu3_over_nu2 = match spec.constraint {
        ConstraintMode::Nu2EqualsNu3 => 1.0,
        ConstraintMode::Free => {
            let nu = base.uncoupled_frequencies();
            nu.nu3 / nu.nu2
        }
    };
    let x_values = spec.x_range.values();
    let mut cells =
        Vec::with_capacity(x_values.len() * spec.k12_values.len() * spec.k13_values.len() * spec.k23_values.len());
    for &x in &x_values {
        for &k12 in &spec.k12_values {
            for &k13 in &spec.k13_values {
                for &k23 in &spec.k23_values {
                    let ratios = Shape { x, k12, k13, k23, nu3_over_nu2 }.ratios();
                    cells.push(RatioCell {
                        x,
                        k12,
                        k13,
                        k23,
                        r2: ratios.map(|r| r.0),
                        r3: ratios.map(|r| r.1),
                        valid: ratios.is_some(),
                    });
                }
            }
        }
    }
    Ok(RatioMap {
        x_values,
        k12_values: spec.k12_values.clone(),
        k13_values: spec.k13_values.clone(),
        k23_values: spec.k23_values.clone(),
        nu3_over_nu2,
        cells,
    })
}

fn default_center() -> f64 {
    3.0
}
fn default_bw() -> f64 {
    0.30
}
fn default_k23() -> [f64; 2] {
    [0.2, 0.3]
}
fn default_k_side() -> [f64; 2] {
    [0.0, 0.8]
}
fn default_x() -> [f64; 2] {
    [1.0, 20.0]
}
fn default_nu_ratio() -> [f64; 2] {
    [0.8, 1.25]
}
fn default_budget() -> usize {
    20_000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignSpec {
    #[serde(deserialize_with = "de_eng")]
    pub f0_target: f64,
    #[serde(default = "default_center", deserialize_with = "de_eng")]
    pub band_center_ratio: f64,
    #[serde(default = "default_bw")]
    pub fractional_bandwidth_target: f64,
    #[serde(default = "default_k23")]
    pub k23_range: [f64; 2],
    #[serde(default = "default_k_side")]
    pub k12_range: [f64; 2],
    #[serde(default = "default_k_side")]
    pub k13_range: [f64; 2],
    #[serde(default = "default_x")]
    pub x_range: [f64; 2],
    #[serde(default)]
    pub constraint: ConstraintMode,
    /// Searched only when `constraint` is free.
    #[serde(default = "default_nu_ratio")]
    pub nu3_over_nu2_range: [f64; 2],
    #[serde(default, deserialize_with = "de_eng_opt3")]
    pub fixed_inductances: Option<[f64; 3]>,
    #[serde(default = "default_budget")]
    pub search_budget: usize,
}

impl DesignSpec {
    pub fn new(f0_target: f64) -> Self {
        DesignSpec {
            f0_target,
            band_center_ratio: default_center(),
            fractional_bandwidth_target: default_bw(),
            k23_range: default_k23(),
            k12_range: default_k_side(),
            k13_range: default_k_side(),
            x_range: default_x(),
            constraint: ConstraintMode::default(),
            nu3_over_nu2_range: default_nu_ratio(),
            fixed_inductances: None,
            search_budget: default_budget(),
        }
    }

    pub fn check(&self) -> Result<(), DesignError> {
        let bad = |m: String| Err(DesignError::InvalidSpec(m));
        if !(self.f0_target > 0.0 && self.f0_target.is_finite()) {
            return bad(format!("f0_target must be positive (got {})", self.f0_target));
        }
        if !(self.band_center_ratio > 1.0) {
            return bad(format!("band_center_ratio must exceed 1 (got {})", self.band_center_ratio));
        }
        if !(0.0..2.0).contains(&self.fractional_bandwidth_target) {
            return bad(format!(
                "fractional_bandwidth_target must be in [0, 2) (got {})",
                self.fractional_bandwidth_target
            ));
        }
        for (name, [lo, hi]) in
            [("k12_range", self.k12_range), ("k13_range", self.k13_range), ("k23_range", self.k23_range)]
        {
            if !(lo <= hi && lo > -1.0 && hi < 1.0) {
                return bad(format!("{name} must satisfy -1 < min <= max < 1 (got [{lo}, {hi}])"));
            }
        }
        let [xl, xh] = self.x_range;
        if !(xl > 0.0 && xl <= xh && xh.is_finite()) {
            return bad(format!("x_range must satisfy 0 < min <= max (got [{xl}, {xh}])"));
        }
        let [nl, nh] = self.nu3_over_nu2_range;
        if self.constraint == ConstraintMode::Free && !(nl > 0.0 && nl <= nh && nh.is_finite()) {
            return bad(format!("nu3_over_nu2_range must satisfy 0 < min <= max (got [{nl}, {nh}])"));
        }
        if let Some(l) = self.fixed_inductances {
            if l.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                return bad(format!("fixed inductances must be positive (got {l:?})"));
            }
        }
        if self.search_budget < 100 {
            return bad(format!("search_budget must be at least 100 (got {})", self.search_budget));
        }
        Ok(())
    }

    /// Target band in units of the fundamental.
    pub fn band(&self) -> (f64, f64) {
        let half = self.fractional_bandwidth_target / 2.0;
        (self.band_center_ratio * (1.0 - half), self.band_center_ratio * (1.0 + half))
    }

    /// Fraction of the target band covered by `[r2, r3]`.
    pub fn coverage(&self, r2: f64, r3: f64) -> f64 {
        let (lo, hi) = self.band();
        if hi - lo <= 0.0 {
            let c = self.band_center_ratio;
            let covered = r2 <= c * (1.0 + POINT_BAND_TOL) && r3 >= c * (1.0 - POINT_BAND_TOL);
            return if covered { 1.0 } else { 0.0 };
        }
        ((r3.min(hi) - r2.max(lo)) / (hi - lo)).max(0.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Achieved {
    pub f_mode1: f64,
    pub f_mode2: f64,
    pub f_mode3: f64,
    pub r2: f64,
    pub r3: f64,
    pub band_coverage: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignResult {
    pub params: TankParams,
    pub shape: Shape,
    pub achieved: Achieved,
    pub objective_value: f64,
    pub evaluations: usize,
}

impl Achieved {
    pub fn from_modes(modes: &ModeSet, spec: &DesignSpec) -> Self {
        let hz = modes.hz();
        let (r2, r3) = (hz[1] / hz[0], hz[2] / hz[0]);
        Achieved { f_mode1: hz[0], f_mode2: hz[1], f_mode3: hz[2], r2, r3, band_coverage: spec.coverage(r2, r3) }
    }
}

#[derive(Clone, Copy, Debug)]
struct Candidate {
    shape: Shape,
    r2: f64,
    r3: f64,
    coverage: f64,
    index: usize,
}

impl Candidate {
    fn centering(&self, center: f64) -> f64 {
        (0.5 * (self.r2 + self.r3) - center).abs()
    }

    /// `Greater` means `self` is the better design.
    fn rank(&self, other: &Candidate, center: f64) -> Ordering {
        self.coverage
            .total_cmp(&other.coverage)
            .then_with(|| other.centering(center).total_cmp(&self.centering(center)))
            .then_with(|| {
                let (a, b) = (&self.shape, &other.shape);
                coupling_det(a.k12, a.k13, a.k23).total_cmp(&coupling_det(b.k12, b.k13, b.k23))
            })
            .then_with(|| other.index.cmp(&self.index))
    }
}

fn evaluate(shape: Shape, spec: &DesignSpec, index: usize) -> Option<Candidate> {
    if coupling_det(shape.k12, shape.k13, shape.k23) <= DET_K_TOL {
        return None;
    }
    let (r2, r3) = shape.ratios()?;
    Some(Candidate { shape, r2, r3, coverage: spec.coverage(r2, r3), index })
}

/// Points per non-degenerate axis so that the grid stays within `budget`.
fn points_per_axis(budget: usize, axes: usize) -> usize {
    if axes == 0 {
        return 1;
    }
    let mut n = (budget as f64).powf(1.0 / axes as f64).floor() as usize;
    while n > 2 && n.pow(axes as u32) > budget {
        n -= 1;
    }
    n.max(2)
}

/// Coarse grid search over the shape box, then golden-section refinement of
/// `X` around the best cell. Deterministic for a given spec.
pub fn design_third_harmonic(spec: &DesignSpec) -> Result<DesignResult, DesignError> {
    spec.check()?;
    let free = spec.constraint == ConstraintMode::Free;
    let ranges: Vec<[f64; 2]> = {
        let mut r = vec![spec.x_range, spec.k12_range, spec.k13_range, spec.k23_range];
        r.push(if free { spec.nu3_over_nu2_range } else { [1.0, 1.0] });
        r
    };
    let live = ranges.iter().filter(|r| r[0] < r[1]).count();
    let grid_budget = spec.search_budget.saturating_sub(GOLDEN_ITERS + 2).max(1);
    let n = points_per_axis(grid_budget, live);
    let axes: Vec<Vec<f64>> = ranges.iter().map(|r| linspace(r[0], r[1], n)).collect();

    let mut evaluations = 0usize;
    let mut best: Option<Candidate> = None;
    let mut nearest: Option<Candidate> = None;
    let mut index = 0usize;
    for &x in &axes[0] {
        for &k12 in &axes[1] {
            for &k13 in &axes[2] {
                for &k23 in &axes[3] {
                    for &nu3_over_nu2 in &axes[4] {
                        let shape = Shape { x, k12, k13, k23, nu3_over_nu2 };
                        evaluations += 1;
                        index += 1;
                        let Some(cand) = evaluate(shape, spec, index) else { continue };
                        if best.is_none_or(|b| cand.rank(&b, spec.band_center_ratio).is_gt()) {
                            best = Some(cand);
                        }
                        let closer = nearest.is_none_or(|b| {
                            gap(&cand, spec).total_cmp(&gap(&b, spec)).then(b.index.cmp(&cand.index)).is_lt()
                        });
                        if closer {
                            nearest = Some(cand);
                        }
                    }
                }
            }
        }
    }
    let Some(mut best) = best else {
        return Err(DesignError::InvalidSpec("no realizable shape in the search box".into()));
    };

    // refine X between the neighbouring grid values
    let xs = &axes[0];
    if xs.len() > 1 {
        let pos = xs.iter().position(|&x| x == best.shape.x).unwrap_or(0);
        let lo = xs[pos.saturating_sub(1)];
        let hi = xs[(pos + 1).min(xs.len() - 1)];
        let score = |x: f64, evals: &mut usize| {
            *evals += 1;
            evaluate(Shape { x, ..best.shape }, spec, usize::MAX)
                .map_or(f64::NEG_INFINITY, |c| c.coverage - 1e-3 * c.centering(spec.band_center_ratio))
        };
        let x_opt = golden_max(lo, hi, GOLDEN_ITERS, |x| score(x, &mut evaluations));
        evaluations += 1;
        if let Some(c) = evaluate(Shape { x: x_opt, ..best.shape }, spec, usize::MAX) {
            if c.rank(&best, spec.band_center_ratio).is_gt() {
                best = Candidate { index: best.index, ..c };
            }
        }
    }

    if best.coverage <= 0.0 {
        let near = nearest.unwrap_or(best);
        let result = realize(near, spec, evaluations)?;
        return Err(DesignError::NoFeasibleDesign { best: Box::new(result) });
    }
    realize(best, spec, evaluations)
}

/// Distance from `[r2, r3]` to the target band, in ratio units.
fn gap(c: &Candidate, spec: &DesignSpec) -> f64 {
    let (lo, hi) = spec.band();
    (lo - c.r3).max(c.r2 - hi).max(0.0)
}

fn golden_max(mut a: f64, mut b: f64, iters: usize, mut f: impl FnMut(f64) -> f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        c
    } else {
        d
    }
}

fn realize(c: Candidate, spec: &DesignSpec, evaluations: usize) -> Result<DesignResult, DesignError> {
    let l = spec.fixed_inductances.unwrap_or([DEFAULT_INDUCTANCE; 3]);
    let s = c.shape;
    let constraint = match spec.constraint {
        ConstraintMode::Nu2EqualsNu3 => CapacitanceConstraint::Nu2EqualsNu3,
        ConstraintMode::Free => CapacitanceConstraint::Free { nu3_over_nu2: s.nu3_over_nu2 },
    };
    let caps = capacitances_for_fundamental(l, s.k12, s.k13, s.k23, s.x, spec.f0_target, constraint)?;
    let params = TankParams::lossless(l, caps, s.k12, s.k13, s.k23);
    let modes = modes_closed_form(&characteristic_coefficients(&params))?;
    let achieved = Achieved::from_modes(&modes, spec);
    Ok(DesignResult { params, shape: s, achieved, objective_value: achieved.band_coverage, evaluations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modes::modes_numerical;

    const REF_L: [f64; 3] = [300e-12, 210e-12, 117e-12];

    fn shape(x: f64, k12: f64, k13: f64, k23: f64) -> Shape {
        Shape { x, k12, k13, k23, nu3_over_nu2: 1.0 }
    }

    #[test]
    fn uncoupled_ratios() {
        let spec = SweepSpec {
            x_range: AxisRange { min: 1.5, max: 12.0, points: 8 },
            k12_values: vec![0.0],
            k13_values: vec![0.0],
            k23_values: vec![0.0],
            constraint: ConstraintMode::Free,
        };
        let base = TankParams::lossless([1.0; 3], [1.0, 1.0, 0.5], 0.0, 0.0, 0.0);
        let map = ratio_map(&spec, &base).unwrap();
        assert_eq!(map.cells.len(), 8);
        for cell in &map.cells {
            let nu2 = cell.x.sqrt();
            let nu3 = nu2 * 2f64.sqrt();
            assert!(cell.valid);
            assert!((cell.r2.unwrap() / nu2 - 1.0).abs() < 1e-12);
            assert!((cell.r3.unwrap() / nu3 - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn coupling_splits_degenerate_pair() {
        let (r2, r3) = shape(9.0, 0.3, 0.3, 0.25).ratios().unwrap();
        assert!(r2 < 3.0 && 3.0 < r3, "{r2} {r3}");
        let oracle =
            modes_numerical(&characteristic_coefficients(&shape(9.0, 0.3, 0.3, 0.25).normalized())).unwrap().ratios();
        assert!((oracle[1] - r2).abs() < 1e-9 && (oracle[2] - r3).abs() < 1e-9);
    }

    #[test]
    fn invalid_cells_flagged() {
        let spec = SweepSpec {
            x_range: AxisRange { min: 4.0, max: 4.0, points: 1 },
            k12_values: vec![0.9],
            k13_values: vec![0.9],
            k23_values: vec![-0.9, 0.9],
            constraint: ConstraintMode::Nu2EqualsNu3,
        };
        let map = ratio_map(&spec, &TankParams::lossless([1.0; 3], [1.0; 3], 0.0, 0.0, 0.0)).unwrap();
        assert!(!map.cells[0].valid && map.cells[0].r2.is_none());
        assert!(map.cells[1].valid);
    }

    #[test]
    fn sweep_spec_rejects_bad_axes() {
        let mut spec = SweepSpec {
            x_range: AxisRange { min: 0.0, max: 2.0, points: 3 },
            k12_values: vec![0.1],
            k13_values: vec![0.1],
            k23_values: vec![0.1],
            constraint: ConstraintMode::Nu2EqualsNu3,
        };
        assert!(spec.check().is_err());
        spec.x_range.min = 1.0;
        spec.k13_values.clear();
        assert!(spec.check().is_err());
        spec.k13_values.push(1.0);
        assert!(spec.check().is_err());
    }

    #[test]
    fn capacitances_uncoupled_equal_l() {
        let f0 = 24e9;
        let c = capacitances_for_fundamental([200e-12; 3], 0.0, 0.0, 0.0, 1.0, f0, CapacitanceConstraint::Nu2EqualsNu3)
            .unwrap();
        let want = 1.0 / ((2.0 * PI * f0).powi(2) * 200e-12);
        for ci in c {
            assert!((ci / want - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn capacitances_scale_law() {
        let c = capacitances_for_fundamental(REF_L, 0.3, 0.4, 0.25, 7.0, 24e9, CapacitanceConstraint::Nu2EqualsNu3)
            .unwrap();
        let p = TankParams::lossless(REF_L, c, 0.3, 0.4, 0.25);
        let m = modes_closed_form(&characteristic_coefficients(&p)).unwrap();
        assert!((m.hz()[0] / 24e9 - 1.0).abs() < 1e-9);
        let m2 = modes_closed_form(&characteristic_coefficients(&p.scale_capacitances(2.0))).unwrap();
        for (a, b) in m.omega.iter().zip(&m2.omega) {
            assert!((a / b - 2f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn capacitances_reference_inductances() {
        let c = capacitances_for_fundamental(REF_L, 0.0, 0.0, 0.0, 9.0, 24e9, CapacitanceConstraint::Nu2EqualsNu3)
            .unwrap();
        let want = 1.0 / ((2.0 * PI * 24e9).powi(2) * 300e-12);
        assert!((c[0] / want - 1.0).abs() < 1e-12);
        assert!((c[0] - 146.6e-15).abs() < 0.1e-15);
    }

    #[test]
    fn coverage_definition() {
        let spec = DesignSpec::new(24e9);
        let (lo, hi) = spec.band();
        assert!((lo - 2.55).abs() < 1e-12 && (hi - 3.45).abs() < 1e-12);
        assert_eq!(spec.coverage(2.0, 4.0), 1.0);
        assert!((spec.coverage(3.0, 4.0) - 0.5).abs() < 1e-12);
        assert_eq!(spec.coverage(3.5, 4.0), 0.0);
    }

    #[test]
    fn zero_bandwidth_uncoupled() {
        for (x, want) in [(9.0, 1.0), (10.0, 0.0)] {
            let spec = DesignSpec {
                fractional_bandwidth_target: 0.0,
                k12_range: [0.0, 0.0],
                k13_range: [0.0, 0.0],
                k23_range: [0.0, 0.0],
                x_range: [x, x],
                ..DesignSpec::new(24e9)
            };
            match design_third_harmonic(&spec) {
                Ok(r) => {
                    assert_eq!(want, 1.0);
                    assert!((r.achieved.r2 / r.achieved.r3 - 1.0).abs() < 1e-7);
                    assert_eq!(r.achieved.band_coverage, 1.0);
                }
                Err(DesignError::NoFeasibleDesign { best }) => {
                    assert_eq!(want, 0.0);
                    assert!((best.achieved.r2 - 10f64.sqrt()).abs() < 1e-6);
                }
                Err(e) => panic!("{e}"),
            }
        }
    }

    #[test]
    fn infeasible_ratio() {
        let spec = DesignSpec {
            band_center_ratio: 50.0,
            k12_range: [-0.3, 0.3],
            k13_range: [-0.3, 0.3],
            k23_range: [-0.3, 0.3],
            x_range: [1.0, 20.0],
            search_budget: 2000,
            ..DesignSpec::new(24e9)
        };
        match design_third_harmonic(&spec) {
            Err(DesignError::NoFeasibleDesign { best }) => {
                assert!(best.achieved.r3 < 10.0);
                assert!(best.params.validate().is_valid());
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn design_is_deterministic_and_consistent() {
        let spec = DesignSpec { fixed_inductances: Some(REF_L), search_budget: 3000, ..DesignSpec::new(24e9) };
        let a = design_third_harmonic(&spec).unwrap();
        let b = design_third_harmonic(&spec).unwrap();
        assert_eq!(a, b);
        assert!(a.params.validate().is_valid());
        assert!(a.evaluations <= spec.search_budget);
        let m = modes_closed_form(&characteristic_coefficients(&a.params)).unwrap();
        let again = Achieved::from_modes(&m, &spec);
        for (x, y) in [
            (again.f_mode1, a.achieved.f_mode1),
            (again.f_mode2, a.achieved.f_mode2),
            (again.f_mode3, a.achieved.f_mode3),
            (again.r2, a.achieved.r2),
            (again.r3, a.achieved.r3),
        ] {
            assert!((x / y - 1.0).abs() < 1e-9);
        }
        assert!((a.achieved.f_mode1 / 24e9 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn free_constraint_searches_nu_ratio() {
        let spec = DesignSpec { constraint: ConstraintMode::Free, search_budget: 1000, ..DesignSpec::new(10e9) };
        let r = design_third_harmonic(&spec).unwrap();
        let nu = r.params.uncoupled_frequencies();
        assert!((nu.nu3 / nu.nu2 / r.shape.nu3_over_nu2 - 1.0).abs() < 1e-9);
        assert!(r.achieved.band_coverage > 0.0);
    }

    #[test]
    fn spec_validation() {
        assert!(DesignSpec { search_budget: 50, ..DesignSpec::new(1e9) }.check().is_err());
        assert!(DesignSpec { band_center_ratio: 1.0, ..DesignSpec::new(1e9) }.check().is_err());
        assert!(DesignSpec { k23_range: [0.3, 0.2], ..DesignSpec::new(1e9) }.check().is_err());
        assert!(DesignSpec::new(-1.0).check().is_err());
    }
}
