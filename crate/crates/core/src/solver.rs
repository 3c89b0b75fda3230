//! Mild solutions of `(−Δ)^γ u = ξ̇` in the Dirichlet eigenbasis.
//!
//! The solution of a realization is `u = Σ_k c_k λ_k^{−γ} e_k` with
//! `c_k = ⟨ξ̇, e_k⟩`; everything here acts on truncated coefficient vectors.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::func::{constant_coeff, FnDesc};
use crate::noise::NoiseRealization;
use crate::parallel::{self, Exec};
use crate::spectral::{eigenfunction_unchecked, EigenSystem, HyperBox, MultiIndex};
use crate::trig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Provenance {
    SolvedFromNoise { seed: u64 },
    Manual,
}

/// A function given by eigen-coefficients aligned with an [`EigenSystem`].
#[derive(Debug, Clone)]
pub struct SpectralField {
    system: Arc<EigenSystem>,
    gamma: f64,
    coeffs: Vec<f64>,
    provenance: Provenance,
}

/// Truncated series value with an estimate of the omitted tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GreenValue {
    pub value: f64,
    /// Weyl-law bound on `Σ_{λ_k > λ_max} |e_k(x) e_k(y)| λ_k^{−γ}`; infinite when
    /// the series does not converge absolutely.
    pub tail_bound: f64,
}

/// Weyl-law estimate of `sup|e|² Σ_{λ > t} λ^{−s}` using
/// `N(t) ≈ ω_d |D| t^{d/2} / (2π)^d`.
pub fn weyl_tail(bx: &HyperBox, s: f64, t: f64) -> f64 {
    let half_d = 0.5 * bx.dim() as f64;
    if s <= half_d {
        return f64::INFINITY;
    }
    let sup_sq: f64 = (0..bx.dim()).map(|i| 2.0 / bx.length(i)).product();
    let c = bx.weyl_leading(1.0);
    sup_sq * c * half_d * t.powf(half_d - s) / (s - half_d)
}

/// `G_γ(x, y) = Σ e_k(x) e_k(y) λ_k^{−γ}` truncated to `system`.
pub fn green_gamma_eval(bx: &HyperBox, gamma: f64, x: &[f64], y: &[f64], system: &EigenSystem) -> Result<GreenValue> {
    if system.bx() != bx {
        return Err(Error::BoxMismatch);
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::param("gamma must be > 0"));
    }
    bx.check_point(x)?;
    bx.check_point(y)?;
    let mut value = 0.0;
    for (k, lam) in system.iter() {
        value += eigenfunction_unchecked(bx, k, x) * eigenfunction_unchecked(bx, k, y) / lam.powf(gamma);
    }
    Ok(GreenValue {
        value,
        tail_bound: weyl_tail(bx, gamma, system.lambda_max()),
    })
}

/// `min(x,y) (1 − max(x,y))` scaled to `(a, b)`: the Dirichlet Green
/// function of `−d²/dx²` on an interval.
pub fn interval_green(a: f64, b: f64, x: f64, y: f64) -> f64 {
    let lo = x.min(y);
    let hi = x.max(y);
    (lo - a) * (b - hi) / (b - a)
}

impl SpectralField {
    pub fn new(system: Arc<EigenSystem>, gamma: f64, coeffs: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if coeffs.len() != system.len() {
            return Err(Error::param(format!(
                "{} coefficients for an eigen system of {} entries",
                coeffs.len(),
                system.len()
            )));
        }
        Ok(Self {
            system,
            gamma,
            coeffs,
            provenance,
        })
    }

    /// Field with a single nonzero coefficient.
    pub fn single(system: Arc<EigenSystem>, k: &MultiIndex, value: f64) -> Result<Self> {
        let i = system
            .position(k.as_slice())
            .ok_or_else(|| Error::param(format!("index {k} is not in the eigen system")))?;
        let mut coeffs = vec![0.0; system.len()];
        coeffs[i] = value;
        Self::new(system, 1.0, coeffs, Provenance::Manual)
    }

    pub fn system(&self) -> &EigenSystem {
        &self.system
    }

    pub fn system_arc(&self) -> &Arc<EigenSystem> {
        &self.system
    }

    pub fn bx(&self) -> &HyperBox {
        self.system.bx()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    /// The first `n` modes.
    pub fn truncated(&self, n: usize) -> SpectralField {
        let n = n.min(self.coeffs.len());
        SpectralField {
            system: Arc::new(self.system.prefix(n)),
            gamma: self.gamma,
            coeffs: self.coeffs[..n].to_vec(),
            provenance: self.provenance,
        }
    }

    /// The same field as a function descriptor.
    pub fn to_descriptor(&self) -> FnDesc {
        let terms = self
            .coeffs
            .iter()
            .enumerate()
            .filter(|(_, &a)| a != 0.0)
            .map(|(i, &a)| (self.system.multi_index(i), a))
            .collect();
        FnDesc::EigenSeries { terms }
    }

    /// `u(x)` at one point, recomputing every sine directly.
    pub fn eval_point(&self, x: &[f64]) -> Result<f64> {
        self.bx().check_point(x)?;
        let mut u = 0.0;
        for (i, (k, _)) in self.system.iter().enumerate() {
            u += self.coeffs[i] * eigenfunction_unchecked(self.bx(), k, x);
        }
        Ok(u)
    }
}

/// Refuses `γ ≤ d/4` unless `allow_nonexistent` is set.
pub fn check_existence(d: usize, gamma: f64, allow_nonexistent: bool) -> Result<()> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::param(format!("gamma must be > 0, got {gamma}")));
    }
    if gamma > d as f64 / 4.0 || allow_nonexistent {
        Ok(())
    } else {
        Err(Error::NonExistent { d, gamma })
    }
}

/// `a_k = c_k / λ_k^γ`.
pub fn solve_mild(
    realization: &NoiseRealization,
    gamma: f64,
    system: &Arc<EigenSystem>,
    allow_nonexistent: bool,
) -> Result<SpectralField> {
    solve_mild_with(realization, gamma, system, allow_nonexistent, Exec::Parallel)
}

pub fn solve_mild_with(
    realization: &NoiseRealization,
    gamma: f64,
    system: &Arc<EigenSystem>,
    allow_nonexistent: bool,
    exec: Exec,
) -> Result<SpectralField> {
    check_existence(system.dim(), gamma, allow_nonexistent)?;
    let c = realization.pair_eigen_with(system, exec)?;
    let coeffs = c
        .iter()
        .zip(system.lambdas())
        .map(|(c, lam)| c / lam.powf(gamma))
        .collect();
    SpectralField::new(
        system.clone(),
        gamma,
        coeffs,
        Provenance::SolvedFromNoise {
            seed: realization.seed(),
        },
    )
}

/// Per-axis sine tables at given coordinates.
struct AxisTables {
    kmax: Vec<usize>,
    norms: Vec<f64>,
}

impl AxisTables {
    fn new(field: &SpectralField) -> Self {
        let bx = field.bx();
        Self {
            kmax: field.system.max_index_per_axis().iter().map(|&k| k as usize).collect(),
            norms: (0..bx.dim()).map(|i| bx.norm_factor(i)).collect(),
        }
    }

    fn table(&self, bx: &HyperBox, axis: usize, x: f64) -> Vec<f64> {
        let mut t = vec![0.0; self.kmax[axis]];
        trig::fill_sine_multiples(bx.relative(axis, x), &mut t);
        t
    }
}

fn sum_modes(field: &SpectralField, tabs: &AxisTables, rows: &[&[f64]]) -> f64 {
    let d = rows.len();
    let mut u = 0.0;
    for (i, (k, _)) in field.system.iter().enumerate() {
        let a = field.coeffs[i];
        if a == 0.0 {
            continue;
        }
        let mut e = 1.0;
        for ax in 0..d {
            e *= tabs.norms[ax] * rows[ax][k[ax] as usize - 1];
        }
        u += a * e;
    }
    u
}

/// `u(x) = Σ a_k e_k(x)` at each point.
pub fn eval_field(field: &SpectralField, points: &[Vec<f64>]) -> Result<Vec<f64>> {
    eval_field_with(field, points, Exec::Parallel)
}

pub fn eval_field_with(field: &SpectralField, points: &[Vec<f64>], exec: Exec) -> Result<Vec<f64>> {
    let bx = field.bx();
    for p in points {
        bx.check_point(p)?;
    }
    let tabs = AxisTables::new(field);
    Ok(parallel::map_indexed(exec, points.len(), |j| {
        let p = &points[j];
        let rows: Vec<Vec<f64>> = (0..bx.dim()).map(|ax| tabs.table(bx, ax, p[ax])).collect();
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        sum_modes(field, &tabs, &refs)
    }))
}

/// Values on the tensor grid `axes[0] × … × axes[d−1]`, last axis fastest.
pub fn eval_grid(field: &SpectralField, axes: &[Vec<f64>], exec: Exec) -> Result<Vec<f64>> {
    let bx = field.bx();
    if axes.len() != bx.dim() {
        return Err(Error::param("grid dimension does not match box"));
    }
    for (i, xs) in axes.iter().enumerate() {
        let (a, b) = bx.intervals()[i];
        if xs.iter().any(|&x| !(x >= a && x <= b)) {
            return Err(Error::Domain(format!("grid coordinate outside box along axis {i}")));
        }
    }
    let tabs = AxisTables::new(field);
    let tables: Vec<Vec<Vec<f64>>> = axes
        .iter()
        .enumerate()
        .map(|(i, xs)| xs.iter().map(|&x| tabs.table(bx, i, x)).collect())
        .collect();
    let shape: Vec<usize> = axes.iter().map(|a| a.len()).collect();
    let total: usize = shape.iter().product();
    Ok(parallel::map_indexed(exec, total, |flat| {
        let mut rem = flat;
        let mut idx = vec![0usize; shape.len()];
        for ax in (0..shape.len()).rev() {
            idx[ax] = rem % shape[ax];
            rem /= shape[ax];
        }
        let refs: Vec<&[f64]> = (0..shape.len()).map(|ax| tables[ax][idx[ax]].as_slice()).collect();
        sum_modes(field, &tabs, &refs)
    }))
}

/// Dyadic grid with `2^level + 1` points per axis, boundary included.
pub fn dyadic_axes(bx: &HyperBox, level: u32) -> Vec<Vec<f64>> {
    let n = 1usize << level;
    bx.intervals()
        .iter()
        .map(|&(a, b)| {
            (0..=n)
                .map(|j| if j == n { b } else { a + (b - a) * j as f64 / n as f64 })
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SobolevNorm {
    /// `Σ λ_k^r a_k²` over the field's modes.
    pub norm_sq: f64,
    /// Contribution of the last dyadic block of modes `[K/2, K)`.
    pub last_block_increment: f64,
}

/// Squared `H_r` norm of the truncated field.
pub fn sobolev_norm(field: &SpectralField, r: f64) -> SobolevNorm {
    let n = field.coeffs.len();
    let half = n / 2;
    let mut head = 0.0;
    let mut tail = 0.0;
    for (i, (&a, &lam)) in field.coeffs.iter().zip(field.system.lambdas()).enumerate() {
        let v = lam.powf(r) * a * a;
        if i < half {
            head += v;
        } else {
            tail += v;
        }
    }
    SobolevNorm {
        norm_sq: head + tail,
        last_block_increment: tail,
    }
}

/// Partial sums `Σ_{i < K} λ_i^r a_i²` at each requested `K` (ascending,
/// clipped to the field size).
pub fn sobolev_trajectory(field: &SpectralField, r: f64, ks: &[usize]) -> Vec<f64> {
    let mut out = Vec::with_capacity(ks.len());
    let mut acc = 0.0;
    let mut i = 0;
    for &k in ks {
        let k = k.min(field.coeffs.len());
        while i < k {
            acc += field.system.lambda(i).powf(r) * field.coeffs[i] * field.coeffs[i];
            i += 1;
        }
        out.push(acc);
    }
    out
}

/// Spectral approximation of the torsion function `−Δv = 1`, `v|∂D = 0`.
pub fn torsion_solution(bx: &HyperBox, system: &Arc<EigenSystem>) -> Result<SpectralField> {
    if system.bx() != bx {
        return Err(Error::BoxMismatch);
    }
    let coeffs = system.iter().map(|(k, lam)| constant_coeff(bx, k) / lam).collect();
    SpectralField::new(system.clone(), 1.0, coeffs, Provenance::Manual)
}

/// `G_γ ⊛ φ` as an eigen-series: `𝓕_k[G_γ ⊛ φ] = 𝓕_k[φ] / λ_k^γ`.
pub fn green_convolve(bx: &HyperBox, gamma: f64, phi: &FnDesc, system: &EigenSystem) -> Result<FnDesc> {
    let field = green_convolve_field(bx, gamma, phi, &Arc::new(system.clone()))?;
    Ok(field.to_descriptor())
}

pub fn green_convolve_field(bx: &HyperBox, gamma: f64, phi: &FnDesc, system: &Arc<EigenSystem>) -> Result<SpectralField> {
    if system.bx() != bx {
        return Err(Error::BoxMismatch);
    }
    if !(gamma > 0.0) {
        return Err(Error::param("gamma must be > 0"));
    }
    let f = phi.coefficients(system)?;
    let coeffs = f
        .iter()
        .zip(system.lambdas())
        .map(|(c, lam)| c / lam.powf(gamma))
        .collect();
    SpectralField::new(system.clone(), gamma, coeffs, Provenance::Manual)
}

/// `Σ λ_k^{−2γ} e_k(x)²`, the squared `L²` norm of `G_γ(x, ·)` truncated to `system`.
pub fn green_l2_sq(system: &EigenSystem, gamma: f64, x: &[f64]) -> f64 {
    system
        .iter()
        .map(|(k, lam)| eigenfunction_unchecked(system.bx(), k, x).powi(2) / lam.powf(2.0 * gamma))
        .sum()
}
