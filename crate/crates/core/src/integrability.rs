//! Integrability of test functions against `ξ̇` and existence verdicts for
//! the elliptic problem.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::func::FnDesc;
use crate::levy::{LevyMeasure, LevyTriplet};
use crate::spectral::HyperBox;

pub const DRIFT_GAUSS_TOL: f64 = 1e-8;
pub const JUMP_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrabilityReport {
    /// `∫ |b f|`
    pub drift_integral: f64,
    /// `∫ |σ f|²`
    pub gauss_integral: f64,
    /// `∫∫ (|z f(x)|² ∧ 1) dx ν(dz)`
    pub jump_integral: f64,
    pub verdict: bool,
}

/// The three integrals deciding whether `f` is `ξ̇`-integrable.
pub fn rr_integrability(f: &FnDesc, triplet: &LevyTriplet, bx: &HyperBox) -> Result<IntegrabilityReport> {
    triplet.validate()?;
    f.validate(bx)?;
    let drift_integral = if triplet.b == 0.0 {
        0.0
    } else {
        triplet.b.abs() * f.abs_power_integral(bx, 1.0)?
    };
    let gauss_integral = if triplet.sigma == 0.0 {
        0.0
    } else {
        triplet.sigma * triplet.sigma * f.abs_power_integral(bx, 2.0)?
    };
    let measure = triplet.measure;
    let jump_integral = match measure {
        LevyMeasure::Null => 0.0,
        LevyMeasure::AlphaStable { alpha } => 2.0 / (2.0 - alpha) * f.abs_power_integral(bx, alpha)?,
        _ => f.integrate_composed(bx, &move |v: f64| measure.truncated_square(v), JUMP_TOL)?,
    };
    let verdict = drift_integral.is_finite() && gauss_integral.is_finite() && jump_integral.is_finite();
    Ok(IntegrabilityReport {
        drift_integral,
        gauss_integral,
        jump_integral,
        verdict,
    })
}

/// Which Green kernel the existence question is asked for.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum OperatorMode {
    /// `(−Δ)^γ` with Dirichlet conditions.
    Spectral { gamma: f64 },
    /// A second-order operator whose Green kernel is bounded by the
    /// Laplacian's.
    LaplacianGreenBound,
}

/// Range of `p` for which `∫_{|z|≤1} |z|^p ν(dz) < ∞` is required.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PRange {
    pub lo: f64,
    pub hi: f64,
    pub lo_inclusive: bool,
    pub hi_inclusive: bool,
}

impl PRange {
    fn point(p: f64) -> Self {
        Self {
            lo: p,
            hi: p,
            lo_inclusive: true,
            hi_inclusive: true,
        }
    }

    fn open(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            lo_inclusive: false,
            hi_inclusive: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExistenceVerdict {
    pub d: usize,
    pub mode: OperatorMode,
    /// Order of the operator; 1 for the Laplacian-bound mode.
    pub gamma: f64,
    pub triplet: LevyTriplet,
    pub exists: bool,
    pub p_required: PRange,
    /// Supremum of Sobolev orders `r` with `u ∈ H_r(D)` a.s.
    pub r_max: f64,
    pub continuous: bool,
    pub reason: String,
}

/// Whether some `p` in `(0, hi)` gives a finite small-jump `p`-moment.
fn small_moment_below(measure: &LevyMeasure, hi: f64) -> bool {
    match *measure {
        LevyMeasure::AlphaStable { alpha } => alpha < hi,
        _ => true,
    }
}

/// Existence verdict for `(−Δ)^γ u = ξ̇` in dimension `d`.
pub fn existence_verdict(d: usize, gamma: f64, triplet: &LevyTriplet) -> ExistenceVerdict {
    existence_verdict_mode(d, OperatorMode::Spectral { gamma }, triplet)
}

pub fn existence_verdict_mode(d: usize, mode: OperatorMode, triplet: &LevyTriplet) -> ExistenceVerdict {
    let df = d as f64;
    match mode {
        OperatorMode::Spectral { gamma } => {
            let exists = gamma > df / 4.0;
            let continuous = gamma > df / 2.0;
            let reason = if exists {
                format!("gamma = {gamma} > d/4 = {}", df / 4.0)
            } else {
                format!("gamma = {gamma} <= d/4 = {}", df / 4.0)
            };
            ExistenceVerdict {
                d,
                mode,
                gamma,
                triplet: *triplet,
                exists,
                p_required: PRange::point(2.0),
                r_max: 2.0 * gamma - df / 2.0,
                continuous,
                reason,
            }
        }
        OperatorMode::LaplacianGreenBound => {
            let (exists, p_required, reason) = if d <= 3 {
                (true, PRange::point(2.0), "d <= 3: second small-jump moment is always finite".to_string())
            } else {
                let hi = df / (df - 2.0);
                let range = PRange::open(0.0, hi);
                if triplet.sigma != 0.0 {
                    (false, range, "d >= 4 requires sigma = 0".to_string())
                } else if small_moment_below(&triplet.measure, hi) {
                    (true, range, format!("small-jump p-moment finite for some p < d/(d-2) = {hi}"))
                } else {
                    (false, range, format!("small-jump p-moment infinite for every p < d/(d-2) = {hi}"))
                }
            };
            ExistenceVerdict {
                d,
                mode,
                gamma: 1.0,
                triplet: *triplet,
                exists,
                p_required,
                r_max: 2.0 - df / 2.0,
                continuous: exists && d == 1,
                reason,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn stable(alpha: f64) -> LevyTriplet {
        LevyTriplet::pure_jump(LevyMeasure::AlphaStable { alpha }).unwrap()
    }

    #[test]
    fn gaussian_constant() {
        let t = LevyTriplet::new(0.0, 1.0, LevyMeasure::Null).unwrap();
        let r = rr_integrability(&FnDesc::one(), &t, &HyperBox::unit(1).unwrap()).unwrap();
        assert_eq!((r.drift_integral, r.jump_integral), (0.0, 0.0));
        assert_relative_eq!(r.gauss_integral, 1.0);
        assert!(r.verdict);
    }

    #[test]
    fn green_kernel_against_stable() {
        let bx = HyperBox::unit(1).unwrap();
        let g = FnDesc::Green { gamma: 1.0, pole: vec![0.5] };
        let r = rr_integrability(&g, &stable(1.5), &bx).unwrap();
        assert!(r.verdict);
        // ∫ G^1.5 = 0.25^1.5 / 2.5, times 2/(2 − 1.5)
        assert_relative_eq!(r.jump_integral, 4.0 * 0.125 / 2.5, epsilon = 1e-12);
    }

    #[test]
    fn inverse_power_is_not_gaussian_integrable() {
        let bx = HyperBox::unit(1).unwrap();
        let t = LevyTriplet::new(0.0, 1.0, LevyMeasure::Null).unwrap();
        let f = FnDesc::Power { coeff: 1.0, exponents: vec![-1.0] };
        let r = rr_integrability(&f, &t, &bx).unwrap();
        assert!(r.gauss_integral.is_infinite());
        assert!(!r.verdict);
    }

    #[test]
    fn two_point_jump_integral_by_quadrature() {
        let bx = HyperBox::unit(1).unwrap();
        let t = LevyTriplet::pure_jump(LevyMeasure::TwoPoint { rate: 2.0, magnitude: 0.5 }).unwrap();
        let f = FnDesc::Power { coeff: 3.0, exponents: vec![1.0] };
        // h(v) = 2 min((0.5 v)², 1); ∫_0^1 2 min(2.25 x², 1) dx
        let x0: f64 = 1.0 / 1.5;
        let exact = 2.0 * (2.25 * x0.powi(3) / 3.0 + (1.0 - x0));
        let r = rr_integrability(&f, &t, &bx).unwrap();
        assert!((r.jump_integral - exact).abs() < 1e-6);
    }

    #[test]
    fn verdict_examples() {
        let v = existence_verdict(3, 1.0, &stable(1.5));
        assert!(v.exists && !v.continuous);
        assert_relative_eq!(v.r_max, 0.5);
        let v = existence_verdict_mode(6, OperatorMode::LaplacianGreenBound, &stable(1.8));
        assert!(!v.exists);
        assert!(existence_verdict(1, 1.0, &stable(1.5)).continuous);
        assert!(!existence_verdict(1, 0.25, &stable(1.5)).exists);
        let gauss4 = LevyTriplet::new(0.0, 1.0, LevyMeasure::Null).unwrap();
        assert!(!existence_verdict_mode(4, OperatorMode::LaplacianGreenBound, &gauss4).exists);
    }

    proptest! {
        #[test]
        fn boundary_is_strict(d in 1usize..7, e in 1e-9f64..1.0) {
            let t = stable(1.0);
            prop_assert!(existence_verdict(d, d as f64 / 4.0 + e, &t).exists);
            prop_assert!(!existence_verdict(d, d as f64 / 4.0, &t).exists);
        }

        #[test]
        fn continuous_implies_exists(d in 1usize..7, gamma in 0.01f64..5.0) {
            let v = existence_verdict(d, gamma, &stable(1.2));
            prop_assert!(!v.continuous || v.exists);
            prop_assert_eq!(v.r_max, 2.0 * gamma - d as f64 / 2.0);
        }

        #[test]
        fn scaling_never_breaks_integrability(c in 0.01f64..1.0, p in -0.9f64..2.0, alpha in 0.2f64..1.9) {
            let bx = HyperBox::unit(1).unwrap();
            let t = LevyTriplet::new(0.5, 1.0, LevyMeasure::AlphaStable { alpha }).unwrap();
            let f = FnDesc::Power { coeff: 1.0, exponents: vec![p] };
            let g = FnDesc::Power { coeff: c, exponents: vec![p] };
            let rf = rr_integrability(&f, &t, &bx).unwrap();
            let rg = rr_integrability(&g, &t, &bx).unwrap();
            prop_assert!(!rf.verdict || rg.verdict);
        }
    }
}
