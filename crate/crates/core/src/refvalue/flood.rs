//! Flooding: choosing a reference activation vector `ã` on the line
//! `(a − t·c)⁺` so that the output layer maps it onto the reference value.
//!
//! `h(t) = Σ_j w_j · (a_j − c_j·t)⁺` is piecewise linear in `t` with one
//! breakpoint per unit at `t = a_j / c_j`. The solver walks the segments
//! between sorted breakpoints and solves each linear piece in closed form.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Shift applied per unit along the flooding line.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FloodMode {
    /// `ã = (a − t·1)⁺`.
    #[default]
    Symmetric,
    /// `ã = (a − (t·1_{w≤0} − t/4·1_{w>0}))⁺`, for references above the prediction.
    Asymmetric,
}

/// Ratio between the shift of positively weighted units and `t` in
/// [`FloodMode::Asymmetric`].
pub const ASYMMETRIC_POSITIVE_FACTOR: f64 = -0.25;

impl FloodMode {
    pub fn label(self) -> &'static str {
        match self {
            FloodMode::Symmetric => "symmetric",
            FloodMode::Asymmetric => "asymmetric",
        }
    }

    fn slope(self, w: f64) -> f64 {
        match self {
            FloodMode::Symmetric => 1.0,
            FloodMode::Asymmetric if w > 0.0 => ASYMMETRIC_POSITIVE_FACTOR,
            FloodMode::Asymmetric => 1.0,
        }
    }

    /// `ã(t)` for activations `a` and outgoing weights `w`.
    pub fn a_tilde(self, a: &[f64], w: &[f64], t: f64) -> Vec<f64> {
        a.iter().zip(w).map(|(aj, wj)| (aj - self.slope(*wj) * t).max(0.0)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FloodSolution {
    pub t: f64,
    pub a_tilde: Vec<f64>,
    pub mode: FloodMode,
    /// Level the flooded activations must reach: `Σ ã_j w_j = target`.
    pub target: f64,
    /// `|Σ ã_j w_j − target|`.
    pub residual: f64,
    /// More than one `t` solves the equation; the one closest to zero was kept.
    pub multiple_roots: bool,
}

fn level(a: &[f64], w: &[f64], mode: FloodMode, t: f64) -> f64 {
    mode.a_tilde(a, w, t).iter().zip(w).map(|(x, y)| x * y).sum()
}

/// Find `t` with `Σ_j w_j·ã_j(t) + b = ỹ`.
///
/// The output bias is folded into the level (`target = ỹ − b`) so that a
/// network whose output bias is then dropped computes exactly `f(x) − ỹ`.
/// Among several solutions, the one with the smallest `|t|` is returned.
pub fn flood_reference(a: &[f64], w: &[f64], b: f64, reference: f64, mode: FloodMode) -> Result<FloodSolution> {
    if a.len() != w.len() {
        return Err(Error::InputShape { expected: w.len(), got: a.len() });
    }
    if a.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(Error::Precondition("flooding needs finite nonnegative activations".into()));
    }
    if !reference.is_finite() || !b.is_finite() || w.iter().any(|v| !v.is_finite()) {
        return Err(Error::Precondition("flooding needs finite weights and reference".into()));
    }
    let target = reference - b;
    let slopes: Vec<f64> = w.iter().map(|&wj| mode.slope(wj)).collect();

    let mut breaks: Vec<f64> = a.iter().zip(&slopes).map(|(aj, cj)| aj / cj).collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();

    // segment i spans [bounds[i], bounds[i+1]]
    let mut bounds = Vec::with_capacity(breaks.len() + 2);
    bounds.push(f64::NEG_INFINITY);
    bounds.extend(&breaks);
    bounds.push(f64::INFINITY);

    let mut roots: Vec<f64> = Vec::new();
    for seg in bounds.windows(2) {
        let (lo, hi) = (seg[0], seg[1]);
        let probe = match (lo.is_finite(), hi.is_finite()) {
            (true, true) => 0.5 * (lo + hi),
            (false, true) => hi - 1.0,
            (true, false) => lo + 1.0,
            (false, false) => 0.0,
        };
        // h(t) = alpha + beta·t on this segment
        let (mut alpha, mut beta) = (0.0, 0.0);
        for ((aj, wj), cj) in a.iter().zip(w).zip(&slopes) {
            if aj - cj * probe > 0.0 {
                alpha += wj * aj;
                beta -= wj * cj;
            }
        }
        if beta == 0.0 {
            if alpha == target {
                roots.push(0.0f64.clamp(lo, hi));
            }
            continue;
        }
        let t = (target - alpha) / beta;
        if t >= lo && t <= hi {
            roots.push(t);
        }
    }

    if roots.is_empty() {
        let (min, max) = attainable_range(a, w, mode, &slopes, &breaks);
        return Err(Error::NoFloodSolution { target, min, max });
    }
    roots.sort_by(f64::total_cmp);
    let scale = roots.iter().fold(1.0f64, |m, r| m.max(r.abs()));
    roots.dedup_by(|x, y| (*x - *y).abs() <= 1e-12 * scale);
    let t = roots.iter().copied().min_by(|x, y| x.abs().total_cmp(&y.abs())).expect("nonempty");
    let a_tilde = mode.a_tilde(a, w, t);
    let reached: f64 = a_tilde.iter().zip(w).map(|(x, y)| x * y).sum();
    Ok(FloodSolution { t, a_tilde, mode, target, residual: (reached - target).abs(), multiple_roots: roots.len() > 1 })
}

fn attainable_range(a: &[f64], w: &[f64], mode: FloodMode, slopes: &[f64], breaks: &[f64]) -> (f64, f64) {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    for &t in breaks {
        let v = level(a, w, mode, t);
        min = min.min(v);
        max = max.max(v);
    }
    // slopes of the two unbounded pieces decide whether h is unbounded
    let left: f64 = w.iter().zip(slopes).filter(|(_, c)| **c > 0.0).map(|(wj, cj)| -wj * cj).sum();
    let right: f64 = w.iter().zip(slopes).filter(|(_, c)| **c < 0.0).map(|(wj, cj)| -wj * cj).sum();
    if left < 0.0 {
        max = f64::INFINITY;
    } else if left > 0.0 {
        min = f64::NEG_INFINITY;
    }
    if right > 0.0 {
        max = f64::INFINITY;
    } else if right < 0.0 {
        min = f64::NEG_INFINITY;
    }
    (min, max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auction_flood() {
        let s = flood_reference(&[2000.0, 200.0, 0.0], &[0.5; 3], 0.0, 1000.0, FloodMode::Symmetric).unwrap();
        assert_eq!(s.t, 100.0);
        assert_eq!(s.a_tilde, vec![1900.0, 100.0, 0.0]);
        assert_eq!(s.residual, 0.0);
        assert!(!s.multiple_roots);
    }

    #[test]
    fn zero_shift_fixed_point() {
        let a = [3.0, 1.0, 0.0, 2.5];
        let w = [0.7, -0.2, 1.1, 0.4];
        let f: f64 = a.iter().zip(&w).map(|(x, y)| x * y).sum();
        let s = flood_reference(&a, &w, 0.0, f, FloodMode::Symmetric).unwrap();
        assert_eq!(s.t, 0.0);
        assert_eq!(s.a_tilde, a.to_vec());
    }

    #[test]
    fn full_flooding_for_zero_reference() {
        let a = [3.0, 1.0, 0.0, 2.5];
        let s = flood_reference(&a, &[0.5, 0.2, 1.0, 0.3], 0.0, 0.0, FloodMode::Symmetric).unwrap();
        assert_eq!(s.t, 3.0);
        assert!(s.a_tilde.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn bias_is_folded_into_the_level() {
        let a = [4.0, 2.0];
        let w = [1.0, 1.0];
        let s = flood_reference(&a, &w, 0.5, 3.5, FloodMode::Symmetric).unwrap();
        let reached: f64 = s.a_tilde.iter().zip(&w).map(|(x, y)| x * y).sum();
        assert!((reached + 0.5 - 3.5).abs() < 1e-12);
        assert_eq!(s.target, 3.0);
    }

    #[test]
    fn no_solution_reports_range() {
        // all weights negative: h(t) ≤ 0 for t ≥ -∞... h → -∞ as t → -∞ and 0 as t → ∞
        match flood_reference(&[1.0, 2.0], &[-1.0, -1.0], 0.0, 5.0, FloodMode::Symmetric) {
            Err(Error::NoFloodSolution { target, min, max }) => {
                assert_eq!(target, 5.0);
                assert_eq!(min, f64::NEG_INFINITY);
                assert_eq!(max, 0.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn mixed_signs_pick_smallest_root() {
        // h(t) = 2(3 - t)+ - 1(1 - t)+ : t<1: 5 - t, 1<=t<3: 6 - 2t, t>=3: 0
        // target 4: t = 1 (both pieces meet there) -> single root after dedup
        let s = flood_reference(&[3.0, 1.0], &[2.0, -1.0], 0.0, 4.0, FloodMode::Symmetric).unwrap();
        assert!((s.t - 1.0).abs() < 1e-12);
        // h(t) = 1(1 - t)+ - 2(3 - t)+ : t<1: -5 + t, 1<=t<3: -6 + 2t, t>=3: 0
        // target -0.5 on [1,3): t = 2.75; no other root
        let s = flood_reference(&[1.0, 3.0], &[1.0, -2.0], 0.0, -0.5, FloodMode::Symmetric).unwrap();
        assert!((s.t - 2.75).abs() < 1e-12);
        // h(t) = (2 - t)+ - 2(1 - t)+: t<1: t, 1<=t<2: 2 - t, t>=2: 0 ; target 0.5 hits t=0.5 and t=1.5
        let s = flood_reference(&[2.0, 1.0], &[1.0, -2.0], 0.0, 0.5, FloodMode::Symmetric).unwrap();
        assert!((s.t - 0.5).abs() < 1e-12);
        assert!(s.multiple_roots);
    }

    #[test]
    fn asymmetric_line_raises_positive_units() {
        let a = [1.0, 2.0];
        let w = [1.0, -1.0];
        // f = -1; reference above the prediction
        let s = flood_reference(&a, &w, 0.0, 1.0, FloodMode::Asymmetric).unwrap();
        assert!(s.residual < 1e-12);
        assert_eq!(s.a_tilde, FloodMode::Asymmetric.a_tilde(&a, &w, s.t));
        assert!(s.t > 0.0);
        assert!(s.a_tilde[0] > a[0] && s.a_tilde[1] < a[1]);
    }
}
