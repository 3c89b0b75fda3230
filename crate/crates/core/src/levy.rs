//! Symmetric Lévy measures, characteristic exponents and jump samplers.
//!
//! Every variant has closed-form tail masses and truncated moments; an
//! independent quadrature route over the Lévy density is kept alongside for
//! cross-checks and for the characteristic exponent of the stable family.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{self, exp_integral_e1, QuadResult, Tolerance};

/// Absolute tolerance for quadrature over Lévy densities.
pub const NU_QUAD_TOL: f64 = 1e-10;

/// Symmetric Lévy measure `ν`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum LevyMeasure {
    /// `ν(dz) = (α/2) |z|^{-α-1} dz`, `α ∈ (0, 2)`.
    AlphaStable { alpha: f64 },
    /// `ν = rate · (δ_{+a} + δ_{-a}) / 2` with `a = magnitude`.
    TwoPoint { rate: f64, magnitude: f64 },
    /// `ν(dz) = (c / |z|) e^{-m|z|} dz`.
    VarianceGamma { c: f64, m: f64 },
    Null,
}

/// Characteristic triplet `(b, σ, ν)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevyTriplet {
    pub b: f64,
    pub sigma: f64,
    pub measure: LevyMeasure,
}

impl LevyTriplet {
    pub fn new(b: f64, sigma: f64, measure: LevyMeasure) -> Result<Self> {
        let t = Self { b, sigma, measure };
        t.validate()?;
        Ok(t)
    }

    /// Pure-jump symmetric noise `(0, 0, ν)`.
    pub fn pure_jump(measure: LevyMeasure) -> Result<Self> {
        Self::new(0.0, 0.0, measure)
    }

    pub fn zero() -> Self {
        Self {
            b: 0.0,
            sigma: 0.0,
            measure: LevyMeasure::Null,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.b.is_finite() {
            return Err(Error::param("drift b must be finite"));
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return Err(Error::param(format!("sigma must be >= 0, got {}", self.sigma)));
        }
        self.measure.validate()
    }
}

/// Truncated statistics of a Lévy measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NuStats {
    /// `ν({|z| > eps})`
    pub tail_mass: f64,
    /// `∫_{|z| ≤ eps} z² ν(dz)`
    pub small_variance: f64,
    /// `∫_{|z| ≤ 1} |z|^p ν(dz)`; `+∞` when divergent.
    pub p_moment_small: f64,
}

impl LevyMeasure {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            LevyMeasure::AlphaStable { alpha } => alpha.is_finite() && alpha > 0.0 && alpha < 2.0,
            LevyMeasure::TwoPoint { rate, magnitude } => {
                rate.is_finite() && rate > 0.0 && magnitude.is_finite() && magnitude > 0.0
            }
            LevyMeasure::VarianceGamma { c, m } => c.is_finite() && c > 0.0 && m.is_finite() && m > 0.0,
            LevyMeasure::Null => true,
        };
        if !ok {
            return Err(Error::param(format!("invalid Lévy measure parameters: {self:?}")));
        }
        let levy = self.small_variance(1.0) + self.tail_mass(1.0);
        if !levy.is_finite() {
            return Err(Error::param(format!("∫(|z|²∧1)ν(dz) is not finite for {self:?}")));
        }
        Ok(())
    }

    /// Stability-type index `β` with `ν(dz) ~ |z|^{-1-β}` at the origin.
    pub fn origin_index(&self) -> f64 {
        match *self {
            LevyMeasure::AlphaStable { alpha } => alpha,
            _ => 0.0,
        }
    }

    /// Density of `ν` at `z ≠ 0`, for the absolutely continuous variants.
    pub fn density(&self, z: f64) -> Option<f64> {
        let a = z.abs();
        match *self {
            LevyMeasure::AlphaStable { alpha } => Some(0.5 * alpha * a.powf(-alpha - 1.0)),
            LevyMeasure::VarianceGamma { c, m } => Some(c * (-m * a).exp() / a),
            LevyMeasure::Null => Some(0.0),
            LevyMeasure::TwoPoint { .. } => None,
        }
    }

    /// `ν({|z| > eps})` for any `eps > 0`.
    pub fn tail_mass(&self, eps: f64) -> f64 {
        match *self {
            LevyMeasure::AlphaStable { alpha } => eps.powf(-alpha),
            LevyMeasure::TwoPoint { rate, magnitude } => {
                if magnitude > eps {
                    rate
                } else {
                    0.0
                }
            }
            LevyMeasure::VarianceGamma { c, m } => 2.0 * c * exp_integral_e1(m * eps),
            LevyMeasure::Null => 0.0,
        }
    }

    /// `∫_{|z| ≤ eps} z² ν(dz)` for any `eps ≥ 0`.
    pub fn small_variance(&self, eps: f64) -> f64 {
        match *self {
            LevyMeasure::AlphaStable { alpha } => alpha * eps.powf(2.0 - alpha) / (2.0 - alpha),
            LevyMeasure::TwoPoint { rate, magnitude } => {
                if magnitude <= eps {
                    rate * magnitude * magnitude
                } else {
                    0.0
                }
            }
            LevyMeasure::VarianceGamma { c, m } => 2.0 * c / (m * m) * one_minus_exp_poly(m * eps),
            LevyMeasure::Null => 0.0,
        }
    }

    /// `∫_{lo < |z| ≤ hi} z² ν(dz)`.
    pub fn band_variance(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        match *self {
            LevyMeasure::AlphaStable { alpha } => {
                alpha * (hi.powf(2.0 - alpha) - lo.powf(2.0 - alpha)) / (2.0 - alpha)
            }
            LevyMeasure::TwoPoint { rate, magnitude } => {
                if magnitude > lo && magnitude <= hi {
                    rate * magnitude * magnitude
                } else {
                    0.0
                }
            }
            _ => self.small_variance(hi) - self.small_variance(lo),
        }
    }

    /// `∫_{|z| ≤ 1} |z|^p ν(dz)`, `+∞` when the integral diverges.
    pub fn p_moment_small(&self, p: f64) -> f64 {
        match *self {
            LevyMeasure::AlphaStable { alpha } => {
                if p > alpha {
                    alpha / (p - alpha)
                } else {
                    f64::INFINITY
                }
            }
            LevyMeasure::TwoPoint { rate, magnitude } => {
                if magnitude <= 1.0 {
                    rate * magnitude.powf(p)
                } else {
                    0.0
                }
            }
            LevyMeasure::VarianceGamma { c, m } => {
                2.0 * c * m.powf(-p) * statrs::function::gamma::gamma_li(p, m)
            }
            LevyMeasure::Null => 0.0,
        }
    }

    /// `∫ (|a z|² ∧ 1) ν(dz)`, the inner integral of the jump integrability
    /// condition, split at `|z| = 1/a`.
    pub fn truncated_square(&self, a: f64) -> f64 {
        let a = a.abs();
        if a == 0.0 {
            return 0.0;
        }
        if !a.is_finite() {
            return match self {
                LevyMeasure::Null => 0.0,
                _ => f64::INFINITY,
            };
        }
        let cut = 1.0 / a;
        match *self {
            LevyMeasure::AlphaStable { alpha } => 2.0 * a.powf(alpha) / (2.0 - alpha),
            _ => a * a * self.small_variance(cut) + self.tail_mass(cut),
        }
    }

    /// Real jump part of the characteristic exponent,
    /// `∫ (cos(uz) − 1) ν(dz)`, in closed form.
    pub fn jump_exponent(&self, u: f64) -> f64 {
        match *self {
            LevyMeasure::AlphaStable { alpha } => -u.abs().powf(alpha) * stable_constant(alpha),
            LevyMeasure::TwoPoint { rate, magnitude } => rate * ((u * magnitude).cos() - 1.0),
            LevyMeasure::VarianceGamma { c, m } => -c * (u * u / (m * m)).ln_1p(),
            LevyMeasure::Null => 0.0,
        }
    }

    /// Restricted sample from `ν|_{|z|>eps} / ν(|z|>eps)`.
    pub fn sample_jump<R: Rng + ?Sized>(&self, eps: f64, rng: &mut R) -> Result<f64> {
        if !(eps > 0.0 || matches!(self, LevyMeasure::TwoPoint { .. })) {
            return Err(Error::InfiniteTailMass { eps });
        }
        let magnitude = match *self {
            LevyMeasure::AlphaStable { alpha } => {
                let u: f64 = 1.0 - rng.random::<f64>();
                eps * u.powf(-1.0 / alpha)
            }
            LevyMeasure::TwoPoint { magnitude, .. } => {
                if magnitude <= eps {
                    return Err(Error::NoJumpsAboveThreshold { eps });
                }
                magnitude
            }
            LevyMeasure::VarianceGamma { m, .. } => sample_vg_magnitude(m, eps, rng),
            LevyMeasure::Null => return Err(Error::NoJumpsAboveThreshold { eps }),
        };
        Ok(if rng.random::<bool>() { magnitude } else { -magnitude })
    }
}

/// `1 − e^{−x}(1 + x)` without cancellation at small `x`.
fn one_minus_exp_poly(x: f64) -> f64 {
    if x < 0.1 {
        // Σ_{n≥2} (−1)^n (n−1) x^n / n!
        let mut term = 1.0;
        let mut sum = 0.0;
        for n in 1..30u32 {
            term *= x / n as f64;
            if n >= 2 {
                let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
                sum += sign * (n - 1) as f64 * term;
            }
        }
        sum
    } else {
        1.0 - (-x).exp() * (1.0 + x)
    }
}

/// `∫_0^∞ (1 − cos t) α t^{−α−1} dt = Γ(1−α) cos(πα/2)`, written in a form
/// that stays regular at `α = 1`.
fn stable_constant(alpha: f64) -> f64 {
    let delta = 1.0 - alpha;
    let x = 0.5 * PI * delta;
    let sinc = if x.abs() < 1e-8 { 1.0 - x * x / 6.0 } else { x.sin() / x };
    statrs::function::gamma::gamma(2.0 - alpha) * 0.5 * PI * sinc
}

/// Magnitude sampler for `∝ e^{−mz}/z` on `(eps, ∞)`.
///
/// Envelope: `e^{−m eps}/z` on `(eps, b]` and `e^{−mz}/b` on `(b, ∞)` with
/// `b = max(eps, 1/m)`; each piece is sampled exactly and thinned.
fn sample_vg_magnitude<R: Rng + ?Sized>(m: f64, eps: f64, rng: &mut R) -> f64 {
    let b = eps.max(1.0 / m);
    let w_log = (-m * eps).exp() * (b / eps).ln();
    let w_exp = (-m * b).exp() / (m * b);
    let exp = Exp::new(m).expect("m > 0");
    loop {
        let pick: f64 = rng.random::<f64>() * (w_log + w_exp);
        if pick < w_log {
            let u: f64 = rng.random();
            let z = eps * (b / eps).powf(u);
            let accept = (-m * (z - eps)).exp();
            if rng.random::<f64>() < accept {
                return z;
            }
        } else {
            let z = b + exp.sample(rng);
            if rng.random::<f64>() < b / z {
                return z;
            }
        }
    }
}

/// Characteristic exponent
/// `Ψ(u) = i b u − σ² u² / 2 + ∫ (e^{iuz} − 1 − iuz 1_{|z|≤1}) ν(dz)`.
/// The compensator term vanishes for symmetric `ν`.
pub fn characteristic_exponent(triplet: &LevyTriplet, u: f64) -> Result<Complex64> {
    if !u.is_finite() {
        return Err(Error::Domain(format!("characteristic exponent at non-finite u = {u}")));
    }
    let re = -0.5 * triplet.sigma * triplet.sigma * u * u + triplet.measure.jump_exponent(u);
    Ok(Complex64::new(re, triplet.b * u))
}

/// Characteristic exponent with the jump integral computed by quadrature.
pub fn characteristic_exponent_quadrature(triplet: &LevyTriplet, u: f64) -> Result<Complex64> {
    if !u.is_finite() {
        return Err(Error::Domain(format!("characteristic exponent at non-finite u = {u}")));
    }
    let jump = jump_exponent_quadrature(&triplet.measure, u).require(NU_QUAD_TOL)?;
    let re = -0.5 * triplet.sigma * triplet.sigma * u * u + jump;
    Ok(Complex64::new(re, triplet.b * u))
}

/// `2 ∫_0^{hi} g(z) dz` for integrands behaving like `z^{order−1}` at the
/// origin, after substituting `z = hi · t^{1/order}`.
fn origin_integral<G: Fn(f64) -> f64>(g: G, order: f64, hi: f64, tol: Tolerance) -> QuadResult {
    let s = 1.0 / order;
    let h = |t: f64| {
        if t <= 0.0 {
            return 0.0;
        }
        let z = hi * t.powf(s);
        g(z) * hi * s * t.powf(s - 1.0)
    };
    let r = quad::integrate(&h, 0.0, 1.0, tol);
    QuadResult {
        value: 2.0 * r.value,
        error: 2.0 * r.error,
        converged: r.converged,
    }
}

/// `∫_a^∞ g` for `g(z) ~ z^{−1−β}`, after substituting `z = a s^{−1/β}`
/// which makes the transformed integrand bounded at `s = 0`.
fn power_tail_integral<G: Fn(f64) -> f64>(g: G, beta: f64, a: f64, tol: Tolerance) -> QuadResult {
    let q = 1.0 / beta;
    let h = |s: f64| {
        if s <= 0.0 {
            return 0.0;
        }
        let z = a * s.powf(-q);
        g(z) * a * q * s.powf(-q - 1.0)
    };
    quad::integrate(&h, 0.0, 1.0, tol)
}

fn nu_tol() -> Tolerance {
    Tolerance {
        abs: NU_QUAD_TOL,
        rel: 1e-13,
        max_intervals: 5000,
    }
}

fn combine(parts: &[QuadResult]) -> QuadResult {
    QuadResult {
        value: parts.iter().map(|p| p.value).sum(),
        error: parts.iter().map(|p| p.error).sum(),
        converged: parts.iter().all(|p| p.converged),
    }
}

fn exact(value: f64) -> QuadResult {
    QuadResult {
        value,
        error: 0.0,
        converged: true,
    }
}

/// `∫_a^Z cos(uz) z^{−β} dz + ∫_Z^∞ …`, with `Z` on a period boundary far
/// enough out that the leading asymptotic term `β Z^{−β−1}/u²` closes the tail.
fn oscillatory_power_tail(u: f64, beta: f64, a: f64, tol: Tolerance) -> QuadResult {
    let u = u.abs();
    let period = 2.0 * PI / u;
    let n_end = ((2000.0f64).max(u * a) / (2.0 * PI)).ceil().max(1.0);
    let z_end = n_end * period;
    let mut parts = Vec::new();
    let mut lo = a;
    let mut j = (a / period).floor() + 1.0;
    let piece_tol = Tolerance {
        abs: tol.abs / (n_end + 1.0),
        ..tol
    };
    while lo < z_end {
        let hi = (j * period).min(z_end);
        if hi > lo {
            parts.push(quad::integrate(&|z: f64| (u * z).cos() * z.powf(-beta), lo, hi, piece_tol));
        }
        lo = hi;
        j += 1.0;
    }
    parts.push(exact(beta * z_end.powf(-beta - 1.0) / (u * u)));
    combine(&parts)
}

/// `∫ (cos(uz) − 1) ν(dz)` by quadrature over the Lévy density, split at
/// `|z| = 1`.
pub fn jump_exponent_quadrature(measure: &LevyMeasure, u: f64) -> QuadResult {
    let tol = nu_tol();
    if u == 0.0 {
        return exact(0.0);
    }
    match *measure {
        LevyMeasure::Null => exact(0.0),
        LevyMeasure::TwoPoint { .. } => exact(measure.jump_exponent(u)),
        LevyMeasure::AlphaStable { alpha } => {
            let rho = |z: f64| 0.5 * alpha * z.powf(-alpha - 1.0);
            let cm1 = |z: f64| -2.0 * (0.5 * u * z).sin().powi(2);
            let small = origin_integral(|z| cm1(z) * rho(z), 2.0 - alpha, 1.0, tol);
            let osc = oscillatory_power_tail(u, alpha + 1.0, 1.0, tol);
            let tail = power_tail_integral(rho, alpha, 1.0, tol);
            combine(&[
                small,
                QuadResult {
                    value: alpha * osc.value,
                    error: alpha * osc.error,
                    converged: osc.converged,
                },
                QuadResult {
                    value: -2.0 * tail.value,
                    error: 2.0 * tail.error,
                    converged: tail.converged,
                },
            ])
        }
        LevyMeasure::VarianceGamma { c, m } => {
            let g = |z: f64| -2.0 * (0.5 * u * z).sin().powi(2) * c * (-m * z).exp() / z;
            let small = origin_integral(g, 2.0, 1.0, tol);
            let z_end = 1.0 + 60.0 / m;
            let step = (2.0 * PI / u.abs()).min(1.0 / m).max(1e-3);
            let mut parts = vec![small];
            let mut lo = 1.0;
            while lo < z_end {
                let hi = (lo + step).min(z_end);
                let r = quad::integrate(&g, lo, hi, Tolerance { abs: tol.abs * 1e-3, ..tol });
                parts.push(QuadResult {
                    value: 2.0 * r.value,
                    error: 2.0 * r.error,
                    converged: r.converged,
                });
                lo = hi;
            }
            combine(&parts)
        }
    }
}

/// Closed-form truncated statistics.
pub fn nu_stats(nu: &LevyMeasure, eps: f64, p: f64) -> Result<NuStats> {
    nu.validate()?;
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::param(format!("eps must lie in (0, 1], got {eps}")));
    }
    if !(p > 0.0 && p.is_finite()) {
        return Err(Error::param(format!("p must be > 0, got {p}")));
    }
    Ok(NuStats {
        tail_mass: nu.tail_mass(eps),
        small_variance: nu.small_variance(eps),
        p_moment_small: nu.p_moment_small(p),
    })
}

/// The same statistics by quadrature of the Lévy density (atoms are summed
/// directly). Divergence is decided by the closed-form criterion `p ≤ α`.
pub fn nu_stats_quadrature(nu: &LevyMeasure, eps: f64, p: f64) -> Result<NuStats> {
    nu.validate()?;
    if !(eps > 0.0 && eps <= 1.0) || !(p > 0.0) {
        return Err(Error::param("eps must lie in (0, 1] and p > 0"));
    }
    let tol = nu_tol();
    match *nu {
        LevyMeasure::Null | LevyMeasure::TwoPoint { .. } => nu_stats(nu, eps, p),
        LevyMeasure::AlphaStable { .. } | LevyMeasure::VarianceGamma { .. } => {
            let beta = nu.origin_index();
            let rho = |z: f64| nu.density(z).expect("continuous variant");
            let tail_near = quad::integrate(&rho, eps, 1.0, tol);
            let tail_far = match *nu {
                LevyMeasure::AlphaStable { alpha } => power_tail_integral(rho, alpha, 1.0, tol),
                _ => quad::integrate_to_infinity(&rho, 1.0, tol),
            };
            let tail = combine(&[tail_near, tail_far]);
            let fine = Tolerance { abs: 1e-18, ..tol };
            let small = origin_integral(|z| z * z * rho(z), 2.0 - beta, eps, fine);
            let moment = if p <= beta {
                exact(f64::INFINITY)
            } else {
                origin_integral(|z| z.powf(p) * rho(z), p - beta, 1.0, tol)
            };
            Ok(NuStats {
                tail_mass: 2.0 * tail.require(tol.abs)?,
                small_variance: small.require(tol.abs)?,
                p_moment_small: if moment.value.is_infinite() {
                    f64::INFINITY
                } else {
                    moment.require(tol.abs)?
                },
            })
        }
    }
}

/// Draw one jump size with `|z| > eps`.
pub fn sample_jump_size<R: Rng + ?Sized>(nu: &LevyMeasure, eps: f64, rng: &mut R) -> Result<f64> {
    let mass = nu.tail_mass(eps);
    if !mass.is_finite() {
        return Err(Error::InfiniteTailMass { eps });
    }
    if mass == 0.0 {
        return Err(Error::NoJumpsAboveThreshold { eps });
    }
    nu.sample_jump(eps, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn two_point(rate: f64, magnitude: f64) -> LevyMeasure {
        LevyMeasure::TwoPoint { rate, magnitude }
    }

    #[test]
    fn exponent_examples() {
        let t = LevyTriplet::pure_jump(two_point(1.0, 1.0)).unwrap();
        assert_eq!(characteristic_exponent(&t, 0.0).unwrap(), Complex64::new(0.0, 0.0));
        let v = characteristic_exponent(&t, PI).unwrap();
        assert_relative_eq!(v.re, -2.0, epsilon = 1e-15);
        assert_eq!(v.im, 0.0);
        let s = LevyTriplet::pure_jump(LevyMeasure::AlphaStable { alpha: 1.0 }).unwrap();
        assert_relative_eq!(characteristic_exponent(&s, 1.0).unwrap().re, -PI / 2.0, epsilon = 1e-14);
    }

    #[test]
    fn non_finite_u_is_domain_error() {
        let t = LevyTriplet::zero();
        assert!(matches!(characteristic_exponent(&t, f64::NAN), Err(Error::Domain(_))));
    }

    #[test]
    fn stable_exponent_matches_quadrature() {
        for &alpha in &[0.3, 0.8, 1.0, 1.2, 1.5, 1.9] {
            let m = LevyMeasure::AlphaStable { alpha };
            for &u in &[0.5, 1.0, 2.0] {
                let q = jump_exponent_quadrature(&m, u);
                assert!(q.converged, "alpha {alpha} u {u}: {q:?}");
                assert_relative_eq!(q.value, m.jump_exponent(u), max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn vg_exponent_matches_quadrature() {
        let m = LevyMeasure::VarianceGamma { c: 1.3, m: 2.0 };
        for &u in &[0.5, 1.0, 2.0, 7.0] {
            let q = jump_exponent_quadrature(&m, u);
            assert!(q.converged);
            assert_relative_eq!(q.value, m.jump_exponent(u), max_relative = 1e-8);
        }
    }

    #[test]
    fn nu_stats_examples() {
        let s = nu_stats(&LevyMeasure::AlphaStable { alpha: 1.0 }, 1.0, 1.5).unwrap();
        assert_relative_eq!(s.tail_mass, 1.0);
        assert_relative_eq!(s.small_variance, 1.0);
        assert_relative_eq!(s.p_moment_small, 2.0);
        let s = nu_stats(&LevyMeasure::Null, 0.3, 0.7).unwrap();
        assert_eq!((s.tail_mass, s.small_variance, s.p_moment_small), (0.0, 0.0, 0.0));
        let s = nu_stats(&LevyMeasure::AlphaStable { alpha: 1.0 }, 1.0, 0.5).unwrap();
        assert!(s.p_moment_small.is_infinite());
    }

    #[test]
    fn nu_stats_rejects_bad_parameters() {
        let m = LevyMeasure::AlphaStable { alpha: 1.0 };
        assert!(nu_stats(&m, 0.0, 1.5).is_err());
        assert!(nu_stats(&m, 1.5, 1.5).is_err());
        assert!(nu_stats(&m, 0.5, 0.0).is_err());
        assert!(LevyMeasure::AlphaStable { alpha: 2.0 }.validate().is_err());
        assert!(two_point(-1.0, 1.0).validate().is_err());
        assert!(LevyTriplet::new(0.0, -1.0, LevyMeasure::Null).is_err());
    }

    #[test]
    fn closed_forms_match_quadrature() {
        let specs = [
            LevyMeasure::AlphaStable { alpha: 0.4 },
            LevyMeasure::AlphaStable { alpha: 1.0 },
            LevyMeasure::AlphaStable { alpha: 1.7 },
            LevyMeasure::VarianceGamma { c: 1.0, m: 1.0 },
            LevyMeasure::VarianceGamma { c: 0.5, m: 3.0 },
        ];
        for nu in &specs {
            for &eps in &[0.01, 0.1, 0.5, 1.0] {
                for &p in &[0.5, 1.5, 2.0] {
                    let a = nu_stats(nu, eps, p).unwrap();
                    let b = nu_stats_quadrature(nu, eps, p).unwrap();
                    assert_relative_eq!(a.tail_mass, b.tail_mass, max_relative = 1e-8);
                    assert_relative_eq!(a.small_variance, b.small_variance, max_relative = 1e-8);
                    if a.p_moment_small.is_finite() {
                        assert_relative_eq!(a.p_moment_small, b.p_moment_small, max_relative = 1e-8);
                    } else {
                        assert!(b.p_moment_small.is_infinite());
                    }
                }
            }
        }
    }

    #[test]
    fn truncated_square_stable_closed_form() {
        let m = LevyMeasure::AlphaStable { alpha: 1.5 };
        // a² ∫_{|z|≤1/a} z²ν + ν(|z|>1/a) = a^α (α/(2−α) + 1)
        let a: f64 = 3.0;
        assert_relative_eq!(m.truncated_square(a), a.powf(1.5) * 4.0, max_relative = 1e-14);
        let generic = a * a * m.small_variance(1.0 / a) + m.tail_mass(1.0 / a);
        assert_relative_eq!(m.truncated_square(a), generic, max_relative = 1e-13);
    }

    #[test]
    fn two_point_sampler_support() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = two_point(1.0, 1.0);
        for _ in 0..100 {
            let z = sample_jump_size(&m, 0.5, &mut rng).unwrap();
            assert!(z == 1.0 || z == -1.0);
        }
        assert!(matches!(
            sample_jump_size(&m, 1.0, &mut rng),
            Err(Error::NoJumpsAboveThreshold { .. })
        ));
        assert!(sample_jump_size(&LevyMeasure::Null, 0.5, &mut rng).is_err());
        assert!(matches!(
            sample_jump_size(&LevyMeasure::AlphaStable { alpha: 1.0 }, 0.0, &mut rng),
            Err(Error::InfiniteTailMass { .. })
        ));
    }

    fn ks_distance(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
        xs.sort_by(f64::total_cmp);
        let n = xs.len() as f64;
        xs.iter()
            .enumerate()
            .map(|(i, &x)| {
                let f = cdf(x);
                (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn stable_sampler_ks() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let m = LevyMeasure::AlphaStable { alpha: 1.0 };
        let draws: Vec<f64> = (0..100_000).map(|_| sample_jump_size(&m, 1.0, &mut rng).unwrap()).collect();
        let sign_mean = draws.iter().map(|z| z.signum()).sum::<f64>() / draws.len() as f64;
        assert!(sign_mean.abs() <= 0.02, "sign mean {sign_mean}");
        let mags: Vec<f64> = draws.iter().map(|z| z.abs()).collect();
        assert!(mags.iter().all(|&z| z > 1.0));
        let d = ks_distance(mags, |z| 1.0 - 1.0 / z);
        assert!(d < 0.01, "KS distance {d}");
    }

    #[test]
    fn vg_sampler_matches_tail_ratio() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = LevyMeasure::VarianceGamma { c: 1.0, m: 2.0 };
        let eps = 0.05;
        let draws: Vec<f64> = (0..100_000).map(|_| sample_jump_size(&m, eps, &mut rng).unwrap()).collect();
        let sign_mean = draws.iter().map(|z| z.signum()).sum::<f64>() / draws.len() as f64;
        assert!(sign_mean.abs() <= 0.02);
        let mags: Vec<f64> = draws.iter().map(|z| z.abs()).collect();
        let total = m.tail_mass(eps);
        let d = ks_distance(mags, |z| 1.0 - m.tail_mass(z) / total);
        assert!(d < 0.01, "KS distance {d}");
    }

    proptest! {
        #[test]
        fn exponent_is_real_and_nonpositive(u in -50.0f64..50.0, alpha in 0.1f64..1.95, rate in 0.1f64..5.0, a in 0.1f64..3.0) {
            for m in [
                LevyMeasure::AlphaStable { alpha },
                two_point(rate, a),
                LevyMeasure::VarianceGamma { c: rate, m: a },
            ] {
                let t = LevyTriplet::new(0.0, 0.7, m).unwrap();
                let psi = characteristic_exponent(&t, u).unwrap();
                let psi_neg = characteristic_exponent(&t, -u).unwrap();
                prop_assert_eq!(psi.im, 0.0);
                prop_assert!(psi.re <= 0.0);
                prop_assert_eq!(psi_neg, psi.conj());
            }
        }

        #[test]
        fn drift_only_in_imaginary_part(u in -10.0f64..10.0, b in -3.0f64..3.0) {
            let t = LevyTriplet::new(b, 0.0, two_point(1.0, 1.0)).unwrap();
            let psi = characteristic_exponent(&t, u).unwrap();
            prop_assert_eq!(psi.im, b * u);
            let conj = characteristic_exponent(&t, -u).unwrap();
            prop_assert_eq!(conj, psi.conj());
        }
    }
}
