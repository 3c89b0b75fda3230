//! Function descriptors used as integrands, test functions and pairing
//! targets.
//!
//! Closed-form descriptors carry exact Fourier coefficients and `L^q`
//! integrals; [`FnDesc::Custom`] wraps an arbitrary callable and is only
//! handled by quadrature.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{self, Tolerance};
use crate::spectral::{eigenfunction_unchecked, Cutoff, EigenSystem, HyperBox, MultiIndex};

/// Tolerance for Fourier coefficients computed by quadrature.
pub const COEFF_TOL: f64 = 1e-10;

type Callable = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// Arbitrary callable integrand.
#[derive(Clone)]
pub struct CustomFn {
    pub name: String,
    f: Arc<Callable>,
    /// Set by the caller once integrability has been established elsewhere.
    pub certified: bool,
}

impl CustomFn {
    pub fn new(name: impl Into<String>, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self {
            name: name.into(),
            f: Arc::new(f),
            certified: false,
        }
    }

    pub fn certify(mut self) -> Self {
        self.certified = true;
        self
    }

    pub fn call(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
}

impl fmt::Debug for CustomFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomFn")
            .field("name", &self.name)
            .field("certified", &self.certified)
            .finish()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FnDesc {
    Zero,
    Constant {
        value: f64,
    },
    /// Indicator of the half-open product `Π [c_i, d_i)` intersected with the box.
    Indicator {
        region: Vec<(f64, f64)>,
    },
    Eigen {
        k: MultiIndex,
    },
    /// `Σ w · e_k`.
    EigenSeries {
        terms: Vec<(MultiIndex, f64)>,
    },
    /// `coeff · Π (x_i − a_i)^{p_i}` with `a_i` the lower box corner.
    Power {
        coeff: f64,
        exponents: Vec<f64>,
    },
    /// `G_γ(pole, ·)`.
    Green {
        gamma: f64,
        pole: Vec<f64>,
    },
    #[serde(skip)]
    Custom(CustomFn),
}

/// `∫_0^1 |sin πt|^q dt`.
fn mean_abs_sine_power(q: f64) -> f64 {
    use statrs::function::gamma::ln_gamma;
    (ln_gamma(0.5 * (q + 1.0)) - ln_gamma(0.5 * q + 1.0)).exp() / PI.sqrt()
}

/// `𝓕_k[1]` on the box.
pub fn constant_coeff(bx: &HyperBox, k: &[u32]) -> f64 {
    let mut c = 1.0;
    for (i, &ki) in k.iter().enumerate() {
        if ki % 2 == 0 {
            return 0.0;
        }
        let l = bx.length(i);
        c *= bx.norm_factor(i) * 2.0 * l / (PI * ki as f64);
    }
    c
}

/// `∫_{lo}^{hi} sqrt(2/L) sin(πk(x − a)/L) dx` for `a ≤ lo ≤ hi ≤ b`.
fn sine_segment(bx: &HyperBox, axis: usize, k: u32, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let l = bx.length(axis);
    let kf = k as f64;
    let c0 = crate::trig::cos_pi(kf * bx.relative(axis, lo));
    let c1 = crate::trig::cos_pi(kf * bx.relative(axis, hi));
    bx.norm_factor(axis) * l / (PI * kf) * (c0 - c1)
}

fn check_dim(bx: &HyperBox, n: usize, what: &str) -> Result<()> {
    if n != bx.dim() {
        return Err(Error::param(format!(
            "{what} has dimension {n}, box has dimension {}",
            bx.dim()
        )));
    }
    Ok(())
}

fn clipped_region(bx: &HyperBox, region: &[(f64, f64)]) -> Vec<(f64, f64)> {
    region
        .iter()
        .zip(bx.intervals())
        .map(|(&(c, d), &(a, b))| (c.max(a), d.min(b)))
        .collect()
}

impl FnDesc {
    pub fn one() -> Self {
        FnDesc::Constant { value: 1.0 }
    }

    pub fn eigen(k: Vec<u32>) -> Result<Self> {
        Ok(FnDesc::Eigen { k: MultiIndex::new(k)? })
    }

    pub fn indicator(region: Vec<(f64, f64)>) -> Self {
        FnDesc::Indicator { region }
    }

    pub fn custom(name: impl Into<String>, f: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        FnDesc::Custom(CustomFn::new(name, f))
    }

    pub fn kind(&self) -> &'static str {
        match self {
            FnDesc::Zero => "zero",
            FnDesc::Constant { .. } => "constant",
            FnDesc::Indicator { .. } => "indicator",
            FnDesc::Eigen { .. } => "eigen",
            FnDesc::EigenSeries { .. } => "eigen-series",
            FnDesc::Power { .. } => "power",
            FnDesc::Green { .. } => "green",
            FnDesc::Custom(_) => "custom",
        }
    }

    /// Whether the Green kernel has the interval closed form.
    fn green_closed(bx: &HyperBox, gamma: f64) -> bool {
        bx.dim() == 1 && gamma == 1.0
    }

    /// Whether the descriptor takes only finitely many values on
    /// axis-aligned pieces (constants and indicators).
    pub fn piecewise_constant(&self) -> bool {
        matches!(self, FnDesc::Zero | FnDesc::Constant { .. } | FnDesc::Indicator { .. })
    }

    /// Shape checks against a box.
    pub fn validate(&self, bx: &HyperBox) -> Result<()> {
        match self {
            FnDesc::Zero | FnDesc::Custom(_) => Ok(()),
            FnDesc::Constant { value } => {
                if value.is_finite() {
                    Ok(())
                } else {
                    Err(Error::param("constant must be finite"))
                }
            }
            FnDesc::Indicator { region } => {
                check_dim(bx, region.len(), "indicator region")?;
                if region.iter().any(|&(c, d)| !(c.is_finite() && d.is_finite())) {
                    return Err(Error::param("indicator bounds must be finite"));
                }
                Ok(())
            }
            FnDesc::Eigen { k } => check_dim(bx, k.dim(), "eigen index"),
            FnDesc::EigenSeries { terms } => {
                for (k, w) in terms {
                    check_dim(bx, k.dim(), "series index")?;
                    if !w.is_finite() {
                        return Err(Error::param("series weights must be finite"));
                    }
                }
                Ok(())
            }
            FnDesc::Power { coeff, exponents } => {
                check_dim(bx, exponents.len(), "power exponents")?;
                if !coeff.is_finite() || exponents.iter().any(|p| !p.is_finite()) {
                    return Err(Error::param("power coefficients must be finite"));
                }
                Ok(())
            }
            FnDesc::Green { gamma, pole } => {
                check_dim(bx, pole.len(), "green pole")?;
                if !(gamma.is_finite() && *gamma > 0.0) {
                    return Err(Error::param("green gamma must be > 0"));
                }
                bx.check_point(pole)
            }
        }
    }

    /// Replace a Green kernel without a closed form by its truncated
    /// eigen-expansion on `system`; other descriptors are returned as is.
    pub fn materialize(&self, system: &EigenSystem) -> Result<FnDesc> {
        match self {
            FnDesc::Green { gamma, pole } if !Self::green_closed(system.bx(), *gamma) => {
                self.validate(system.bx())?;
                let terms = system
                    .iter()
                    .map(|(k, lam)| {
                        let w = eigenfunction_unchecked(system.bx(), k, pole) / lam.powf(*gamma);
                        (MultiIndex::new(k.to_vec()).expect("listed indices are valid"), w)
                    })
                    .collect();
                Ok(FnDesc::EigenSeries { terms })
            }
            other => Ok(other.clone()),
        }
    }

    /// Point value `f(x)` for `x` in the closed box.
    pub fn eval(&self, bx: &HyperBox, x: &[f64]) -> Result<f64> {
        bx.check_point(x)?;
        self.validate(bx)?;
        if let FnDesc::Green { gamma, .. } = self {
            if !Self::green_closed(bx, *gamma) {
                return Err(Error::Unevaluable(
                    "green kernel has no closed form here; materialize it on an eigen system".into(),
                ));
            }
        }
        Ok(self.eval_unchecked(bx, x))
    }

    /// Point value without validation. Green kernels must be closed-form.
    pub(crate) fn eval_unchecked(&self, bx: &HyperBox, x: &[f64]) -> f64 {
        match self {
            FnDesc::Zero => 0.0,
            FnDesc::Constant { value } => *value,
            FnDesc::Indicator { region } => {
                let inside = region.iter().zip(x).all(|(&(c, d), &xi)| xi >= c && xi < d);
                if inside {
                    1.0
                } else {
                    0.0
                }
            }
            FnDesc::Eigen { k } => eigenfunction_unchecked(bx, k.as_slice(), x),
            FnDesc::EigenSeries { terms } => {
                let mut s = 0.0;
                for (k, w) in terms {
                    s += w * eigenfunction_unchecked(bx, k.as_slice(), x);
                }
                s
            }
            FnDesc::Power { coeff, exponents } => {
                let mut v = *coeff;
                for (i, &p) in exponents.iter().enumerate() {
                    v *= (x[i] - bx.intervals()[i].0).powf(p);
                }
                v
            }
            FnDesc::Green { pole, .. } => {
                let (a, b) = bx.intervals()[0];
                let lo = x[0].min(pole[0]);
                let hi = x[0].max(pole[0]);
                (lo - a) * (b - hi) / (b - a)
            }
            FnDesc::Custom(c) => c.call(x),
        }
    }

    /// `∫_D f`.
    pub fn integral(&self, bx: &HyperBox) -> Result<f64> {
        self.validate(bx)?;
        Ok(match self {
            FnDesc::Zero => 0.0,
            FnDesc::Constant { value } => value * bx.volume(),
            FnDesc::Indicator { region } => clipped_region(bx, region)
                .iter()
                .map(|&(c, d)| (d - c).max(0.0))
                .product(),
            FnDesc::Eigen { k } => constant_coeff(bx, k.as_slice()),
            FnDesc::EigenSeries { terms } => {
                terms.iter().map(|(k, w)| w * constant_coeff(bx, k.as_slice())).sum()
            }
            FnDesc::Power { coeff, exponents } => {
                let mut v = *coeff;
                for (i, &p) in exponents.iter().enumerate() {
                    if p <= -1.0 {
                        return Ok(f64::INFINITY);
                    }
                    v *= bx.length(i).powf(p + 1.0) / (p + 1.0);
                }
                v
            }
            FnDesc::Green { gamma, pole } => {
                if !Self::green_closed(bx, *gamma) {
                    return Err(Error::Unevaluable("materialize the green kernel first".into()));
                }
                let (a, b) = bx.intervals()[0];
                0.5 * (pole[0] - a) * (b - pole[0])
            }
            FnDesc::Custom(c) => {
                let g = |x: &[f64]| c.call(x);
                quad::integrate_box(&g, bx.intervals(), Tolerance::new(1e-10, 1e-10)).require(1e-10)?
            }
        })
    }

    /// `𝓕_k[f] = ⟨f, e_k⟩`.
    pub fn fourier_coeff(&self, bx: &HyperBox, k: &[u32]) -> Result<f64> {
        self.validate(bx)?;
        check_dim(bx, k.len(), "multi-index")?;
        Ok(match self {
            FnDesc::Zero => 0.0,
            FnDesc::Constant { value } => value * constant_coeff(bx, k),
            FnDesc::Indicator { region } => {
                let clipped = clipped_region(bx, region);
                let mut c = 1.0;
                for (i, &(lo, hi)) in clipped.iter().enumerate() {
                    c *= sine_segment(bx, i, k[i], lo, hi);
                }
                c
            }
            FnDesc::Eigen { k: k0 } => {
                if k0.as_slice() == k {
                    1.0
                } else {
                    0.0
                }
            }
            FnDesc::EigenSeries { terms } => terms
                .iter()
                .filter(|(kk, _)| kk.as_slice() == k)
                .map(|(_, w)| *w)
                .sum(),
            FnDesc::Power { coeff, exponents } => {
                let mut c = *coeff;
                for (i, &p) in exponents.iter().enumerate() {
                    c *= power_sine_moment(bx, i, p, k[i])?;
                }
                c
            }
            FnDesc::Green { gamma, pole } => {
                let lam = crate::spectral::eigenvalue_key(bx, k);
                eigenfunction_unchecked(bx, k, pole) / lam.powf(*gamma)
            }
            FnDesc::Custom(c) => {
                let g = |x: &[f64]| c.call(x) * eigenfunction_unchecked(bx, k, x);
                let tol = Tolerance::abs(COEFF_TOL);
                quad::integrate_box(&g, bx.intervals(), tol).require(COEFF_TOL)?
            }
        })
    }

    /// Coefficients `𝓕_k[f]` for every entry of `system`.
    pub fn coefficients(&self, system: &EigenSystem) -> Result<Vec<f64>> {
        if let FnDesc::EigenSeries { terms } = self {
            self.validate(system.bx())?;
            let mut out = vec![0.0; system.len()];
            for (k, w) in terms {
                if let Some(i) = system.position(k.as_slice()) {
                    out[i] += w;
                }
            }
            return Ok(out);
        }
        system.iter().map(|(k, _)| self.fourier_coeff(system.bx(), k)).collect()
    }

    /// Analytic verdict on `∫_D |f|^q < ∞`; `None` when no criterion is known.
    pub fn lq_finite(&self, bx: &HyperBox, q: f64) -> Option<bool> {
        match self {
            FnDesc::Power { coeff, exponents } => {
                Some(*coeff == 0.0 || exponents.iter().all(|&p| p * q > -1.0))
            }
            FnDesc::Green { gamma, .. } => {
                let d = bx.dim() as f64;
                Some(2.0 * gamma >= d || q * (d - 2.0 * gamma) < d)
            }
            FnDesc::Custom(_) => None,
            _ => Some(true),
        }
    }

    /// `∫_D |f|^q`, `+∞` when analytically divergent.
    pub fn abs_power_integral(&self, bx: &HyperBox, q: f64) -> Result<f64> {
        if !(q > 0.0) {
            return Err(Error::param("exponent q must be > 0"));
        }
        self.validate(bx)?;
        if self.lq_finite(bx, q) == Some(false) {
            return Ok(f64::INFINITY);
        }
        Ok(match self {
            FnDesc::Zero => 0.0,
            FnDesc::Constant { value } => value.abs().powf(q) * bx.volume(),
            FnDesc::Indicator { .. } => self.integral(bx)?,
            FnDesc::Eigen { .. } => {
                let m = mean_abs_sine_power(q);
                (0..bx.dim())
                    .map(|i| (2.0 / bx.length(i)).powf(0.5 * q) * bx.length(i) * m)
                    .product()
            }
            FnDesc::EigenSeries { terms } => {
                if q == 2.0 {
                    let mut merged: std::collections::BTreeMap<&MultiIndex, f64> = Default::default();
                    for (k, w) in terms {
                        *merged.entry(k).or_default() += w;
                    }
                    merged.values().map(|w| w * w).sum()
                } else {
                    series_abs_power(bx, terms, q)?
                }
            }
            FnDesc::Power { coeff, exponents } => {
                let mut v = coeff.abs().powf(q);
                for (i, &p) in exponents.iter().enumerate() {
                    v *= bx.length(i).powf(p * q + 1.0) / (p * q + 1.0);
                }
                v
            }
            FnDesc::Green { gamma, pole } => {
                if Self::green_closed(bx, *gamma) {
                    let (a, b) = bx.intervals()[0];
                    let peak = (pole[0] - a) * (b - pole[0]) / (b - a);
                    peak.powf(q) * (b - a) / (q + 1.0)
                } else {
                    let system = crate::spectral::enumerate_eigen(bx, Cutoff::Count(GREEN_MODES))?;
                    self.materialize(&system)?.abs_power_integral(bx, q)?
                }
            }
            FnDesc::Custom(c) => {
                let g = |x: &[f64]| c.call(x).abs().powf(q);
                quad::integrate_box(&g, bx.intervals(), Tolerance::new(1e-8, 1e-8)).require(1e-8)?
            }
        })
    }

    /// `∫_D h(f(x)) dx` for a non-negative `h` with `h(0) = 0`.
    pub fn integrate_composed(&self, bx: &HyperBox, h: &(dyn Fn(f64) -> f64 + Sync), tol: f64) -> Result<f64> {
        self.validate(bx)?;
        match self {
            FnDesc::Zero => Ok(0.0),
            FnDesc::Constant { value } => Ok(h(*value) * bx.volume()),
            FnDesc::Indicator { .. } => Ok(h(1.0) * self.integral(bx)?),
            FnDesc::Green { gamma, .. } if !Self::green_closed(bx, *gamma) => {
                let system = crate::spectral::enumerate_eigen(bx, Cutoff::Count(GREEN_MODES))?;
                self.materialize(&system)?.integrate_composed(bx, h, tol)
            }
            FnDesc::Eigen { .. } | FnDesc::EigenSeries { .. } => {
                let (nodes, weights) = series_rule(bx, self)?;
                let d = bx.dim();
                let mut total = 0.0;
                for (x, w) in nodes.chunks(d).zip(&weights) {
                    total += w * h(self.eval_unchecked(bx, x));
                }
                Ok(total)
            }
            FnDesc::Green { pole, .. } => {
                let (a, b) = bx.intervals()[0];
                let g = |y: f64| h(self.eval_unchecked(bx, &[y]));
                let t = Tolerance::new(tol, tol);
                Ok(quad::integrate(&g, a, pole[0], t).require(tol)? + quad::integrate(&g, pole[0], b, t).require(tol)?)
            }
            _ => {
                let g = |x: &[f64]| h(self.eval_unchecked(bx, x));
                quad::integrate_box(&g, bx.intervals(), Tolerance::new(tol, tol)).require(tol)
            }
        }
    }
}

/// Modes used when a Green kernel without closed form is expanded for
/// integral estimates.
pub const GREEN_MODES: usize = 2048;

/// Tensor Gauss–Legendre rule fine enough to resolve every mode of a series.
fn series_rule(bx: &HyperBox, f: &FnDesc) -> Result<(Vec<f64>, Vec<f64>)> {
    let d = bx.dim();
    let mut kmax = vec![1u32; d];
    let mut visit = |k: &[u32]| {
        for i in 0..d {
            kmax[i] = kmax[i].max(k[i]);
        }
    };
    match f {
        FnDesc::Eigen { k } => visit(k.as_slice()),
        FnDesc::EigenSeries { terms } => terms.iter().for_each(|(k, _)| visit(k.as_slice())),
        _ => unreachable!("series rule requested for a non-series descriptor"),
    }
    let n: Vec<usize> = kmax.iter().map(|&k| 2 * k as usize + 32).collect();
    let total: usize = n.iter().product();
    if total > 4_000_000 {
        return Err(Error::Unevaluable(format!("series quadrature needs {total} nodes")));
    }
    Ok(tensor_rule(bx, &n))
}

/// Flattened tensor Gauss–Legendre nodes (row-major, last axis fastest) and weights.
pub fn tensor_rule(bx: &HyperBox, n: &[usize]) -> (Vec<f64>, Vec<f64>) {
    let d = bx.dim();
    let rules: Vec<(Vec<f64>, Vec<f64>)> = (0..d)
        .map(|i| {
            let (a, b) = bx.intervals()[i];
            quad::gauss_legendre_on(n[i], a, b)
        })
        .collect();
    let total: usize = n.iter().product();
    let mut nodes = Vec::with_capacity(total * d);
    let mut weights = Vec::with_capacity(total);
    let mut idx = vec![0usize; d];
    for _ in 0..total {
        let mut w = 1.0;
        for i in 0..d {
            nodes.push(rules[i].0[idx[i]]);
            w *= rules[i].1[idx[i]];
        }
        weights.push(w);
        for i in (0..d).rev() {
            idx[i] += 1;
            if idx[i] < n[i] {
                break;
            }
            idx[i] = 0;
        }
    }
    (nodes, weights)
}

fn series_abs_power(bx: &HyperBox, terms: &[(MultiIndex, f64)], q: f64) -> Result<f64> {
    let f = FnDesc::EigenSeries { terms: terms.to_vec() };
    f.integrate_composed(bx, &|v: f64| v.abs().powf(q), 1e-8)
}

/// `∫_a^b (x − a)^p sqrt(2/L) sin(πk(x − a)/L) dx`, integrated one
/// half-period at a time.
fn power_sine_moment(bx: &HyperBox, axis: usize, p: f64, k: u32) -> Result<f64> {
    if p <= -2.0 {
        return Err(Error::Unevaluable(format!("power exponent {p} is not integrable against sines")));
    }
    let l = bx.length(axis);
    let kf = k as f64;
    let g = |t: f64| t.powf(p) * crate::trig::sin_pi(kf * t);
    let tol = Tolerance::abs(COEFF_TOL);
    let mut s = quad::integrate(&g, 0.0, 1.0 / kf, tol).require(COEFF_TOL)?;
    for j in 1..k {
        let a = j as f64 / kf;
        let b = (j + 1) as f64 / kf;
        s += quad::integrate(&g, a, b, tol).require(COEFF_TOL)?;
    }
    Ok(bx.norm_factor(axis) * l.powf(p + 1.0) * s)
}
