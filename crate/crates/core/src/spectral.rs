//! Dirichlet eigenpairs of `-Δ` on hyperrectangles.
//!
//! On `D = Π (a_i, b_i)` with side lengths `L_i` the eigenpairs are
//! `λ_k = Σ (π k_i / L_i)²` and `e_k(x) = Π sqrt(2/L_i) sin(π k_i (x_i − a_i)/L_i)`
//! for multi-indices `k ∈ {1, 2, …}^d`.

use std::cmp::Ordering;
use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::func::FnDesc;
use crate::trig;

pub const MAX_DIM: usize = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(f64, f64)>", into = "Vec<(f64, f64)>")]
pub struct HyperBox {
    intervals: Vec<(f64, f64)>,
}

impl TryFrom<Vec<(f64, f64)>> for HyperBox {
    type Error = Error;
    fn try_from(v: Vec<(f64, f64)>) -> Result<Self> {
        HyperBox::new(v)
    }
}

impl From<HyperBox> for Vec<(f64, f64)> {
    fn from(b: HyperBox) -> Self {
        b.intervals
    }
}

impl HyperBox {
    pub fn new(intervals: Vec<(f64, f64)>) -> Result<Self> {
        if intervals.is_empty() || intervals.len() > MAX_DIM {
            return Err(Error::param(format!(
                "box dimension must be in 1..={MAX_DIM}, got {}",
                intervals.len()
            )));
        }
        for &(a, b) in &intervals {
            if !(a.is_finite() && b.is_finite() && a < b) {
                return Err(Error::param(format!("invalid interval ({a}, {b})")));
            }
        }
        Ok(Self { intervals })
    }

    /// `(0, 1)^d`.
    pub fn unit(d: usize) -> Result<Self> {
        Self::new(vec![(0.0, 1.0); d])
    }

    pub fn dim(&self) -> usize {
        self.intervals.len()
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn length(&self, axis: usize) -> f64 {
        let (a, b) = self.intervals[axis];
        b - a
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim()).map(|i| self.length(i)).product()
    }

    pub fn center(&self) -> Vec<f64> {
        self.intervals.iter().map(|&(a, b)| 0.5 * (a + b)).collect()
    }

    /// Whether `x` lies in the closed box.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x.iter()
                .zip(&self.intervals)
                .all(|(&xi, &(a, b))| xi >= a && xi <= b)
    }

    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        if self.contains(x) {
            Ok(())
        } else {
            Err(Error::Domain(format!("point {x:?} outside box {:?}", self.intervals)))
        }
    }

    /// `(x − a)/L` along `axis`.
    #[inline]
    pub fn relative(&self, axis: usize, x: f64) -> f64 {
        let (a, b) = self.intervals[axis];
        (x - a) / (b - a)
    }

    #[inline]
    pub fn norm_factor(&self, axis: usize) -> f64 {
        (2.0 / self.length(axis)).sqrt()
    }

    /// Ground-state eigenvalue `Σ (π / L_i)²`.
    pub fn lambda_min(&self) -> f64 {
        eigenvalue_key(self, &vec![1; self.dim()])
    }

    /// Leading Weyl term `ω_d |D| t^{d/2} / (2π)^d`.
    pub fn weyl_leading(&self, t: f64) -> f64 {
        let d = self.dim() as f64;
        let omega = PI.powf(0.5 * d) / statrs::function::gamma::gamma(0.5 * d + 1.0);
        omega * self.volume() * t.max(0.0).powf(0.5 * d) / (2.0 * PI).powf(d)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<u32>", into = "Vec<u32>")]
pub struct MultiIndex(Vec<u32>);

impl TryFrom<Vec<u32>> for MultiIndex {
    type Error = Error;
    fn try_from(v: Vec<u32>) -> Result<Self> {
        MultiIndex::new(v)
    }
}

impl From<MultiIndex> for Vec<u32> {
    fn from(m: MultiIndex) -> Self {
        m.0
    }
}

impl MultiIndex {
    pub fn new(k: Vec<u32>) -> Result<Self> {
        if k.is_empty() || k.contains(&0) {
            return Err(Error::param(format!("multi-index components must be >= 1, got {k:?}")));
        }
        Ok(Self(k))
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, k) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{k}")?;
        }
        write!(f, ")")
    }
}

/// Eigenvalue as the sum of per-axis terms added in ascending order, so that
/// permuted indices on congruent axes produce bit-identical keys.
pub fn eigenvalue_key(bx: &HyperBox, k: &[u32]) -> f64 {
    let mut terms = [0.0f64; MAX_DIM];
    let d = k.len();
    for i in 0..d {
        let w = PI * k[i] as f64 / bx.length(i);
        terms[i] = w * w;
    }
    let t = &mut terms[..d];
    t.sort_by(f64::total_cmp);
    t.iter().sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Cutoff {
    Count(usize),
    Threshold(f64),
}

/// Sorted, complete listing of Dirichlet eigenpairs below a cutoff.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem {
    bx: HyperBox,
    indices: Vec<u32>,
    lambdas: Vec<f64>,
    cutoff: Cutoff,
}

/// Relative slack for `λ ≤ t`, so that a threshold written as a multiple
/// of `π²` keeps the eigenvalues it lands on exactly.
pub const THRESHOLD_SLACK: f64 = 1e-12;

fn within(lam: f64, t: f64) -> bool {
    lam <= t * (1.0 + THRESHOLD_SLACK)
}

fn visit_lattice(bx: &HyperBox, limit: f64, visit: &mut dyn FnMut(&[u32])) {
    let d = bx.dim();
    let mut k = vec![1u32; d];
    let slack = limit * (1.0 + 2.0 * THRESHOLD_SLACK);
    fn rec(bx: &HyperBox, axis: usize, partial: f64, slack: f64, k: &mut Vec<u32>, visit: &mut dyn FnMut(&[u32])) {
        let d = k.len();
        // remaining axes contribute at least their ground terms
        let rest: f64 = (axis + 1..d).map(|i| (PI / bx.length(i)).powi(2)).sum();
        let mut ki = 1u32;
        loop {
            let w = PI * ki as f64 / bx.length(axis);
            let p = partial + w * w;
            if p + rest > slack {
                break;
            }
            k[axis] = ki;
            if axis + 1 == d {
                visit(k);
            } else {
                rec(bx, axis + 1, p, slack, k, visit);
            }
            ki += 1;
        }
    }
    rec(bx, 0, 0.0, slack, &mut k, visit);
}

/// `N(t) = #{k : λ_k ≤ t}` by lattice enumeration.
pub fn weyl_count(bx: &HyperBox, t: f64) -> usize {
    let mut n = 0usize;
    visit_lattice(bx, t, &mut |k| {
        if within(eigenvalue_key(bx, k), t) {
            n += 1;
        }
    });
    n
}

fn cmp_entries(l1: f64, k1: &[u32], l2: f64, k2: &[u32]) -> Ordering {
    l1.total_cmp(&l2).then_with(|| k1.cmp(k2))
}

/// Enumerate eigenpairs in ascending order, ties broken lexicographically.
pub fn enumerate_eigen(bx: &HyperBox, cutoff: Cutoff) -> Result<EigenSystem> {
    let d = bx.dim();
    let limit = match cutoff {
        Cutoff::Threshold(t) => {
            let first = bx.lambda_min();
            if !(t >= first) {
                return Err(Error::EmptyEigenSystem { threshold: t, first });
            }
            t
        }
        Cutoff::Count(k) => {
            if k == 0 {
                return Err(Error::param("eigen cutoff count must be >= 1"));
            }
            let mut t = bx.lambda_min();
            while weyl_count(bx, t) < k {
                t *= 2.0;
            }
            t
        }
    };
    let mut raw: Vec<(f64, usize)> = Vec::new();
    let mut flat: Vec<u32> = Vec::new();
    visit_lattice(bx, limit, &mut |k| {
        let lam = eigenvalue_key(bx, k);
        if within(lam, limit) {
            raw.push((lam, flat.len()));
            flat.extend_from_slice(k);
        }
    });
    raw.sort_by(|a, b| cmp_entries(a.0, &flat[a.1..a.1 + d], b.0, &flat[b.1..b.1 + d]));
    if let Cutoff::Count(k) = cutoff {
        raw.truncate(k);
    }
    let mut indices = Vec::with_capacity(raw.len() * d);
    let mut lambdas = Vec::with_capacity(raw.len());
    for &(lam, off) in &raw {
        indices.extend_from_slice(&flat[off..off + d]);
        lambdas.push(lam);
    }
    Ok(EigenSystem {
        bx: bx.clone(),
        indices,
        lambdas,
        cutoff,
    })
}

impl EigenSystem {
    pub fn bx(&self) -> &HyperBox {
        &self.bx
    }

    pub fn dim(&self) -> usize {
        self.bx.dim()
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    pub fn cutoff(&self) -> Cutoff {
        self.cutoff
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn lambda(&self, i: usize) -> f64 {
        self.lambdas[i]
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambdas.last().copied().unwrap_or(0.0)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn index(&self, i: usize) -> &[u32] {
        let d = self.dim();
        &self.indices[i * d..(i + 1) * d]
    }

    pub fn multi_index(&self, i: usize) -> MultiIndex {
        MultiIndex(self.index(i).to_vec())
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[u32], f64)> + '_ {
        self.indices.chunks(self.dim()).zip(self.lambdas.iter().copied())
    }

    /// Position of `k` in the listing.
    pub fn position(&self, k: &[u32]) -> Option<usize> {
        if k.len() != self.dim() {
            return None;
        }
        let lam = eigenvalue_key(&self.bx, k);
        let lo = self.lambdas.partition_point(|&l| l < lam);
        (lo..self.len())
            .take_while(|&i| self.lambdas[i] == lam)
            .find(|&i| self.index(i) == k)
    }

    /// Largest component per axis over the listing.
    pub fn max_index_per_axis(&self) -> Vec<u32> {
        let d = self.dim();
        let mut m = vec![0u32; d];
        for k in self.indices.chunks(d) {
            for i in 0..d {
                m[i] = m[i].max(k[i]);
            }
        }
        m
    }

    /// Number of leading entries with `λ ≤ t`.
    pub fn count_at_most(&self, t: f64) -> usize {
        self.lambdas.partition_point(|&l| l <= t)
    }

    /// The first `n` entries as a system of their own.
    pub fn prefix(&self, n: usize) -> EigenSystem {
        let n = n.min(self.len());
        EigenSystem {
            bx: self.bx.clone(),
            indices: self.indices[..n * self.dim()].to_vec(),
            lambdas: self.lambdas[..n].to_vec(),
            cutoff: Cutoff::Count(n),
        }
    }
}

/// `e_k(x)`; exactly zero on the boundary.
pub fn eigenfunction_eval(bx: &HyperBox, k: &MultiIndex, x: &[f64]) -> Result<f64> {
    if k.dim() != bx.dim() {
        return Err(Error::param("multi-index dimension does not match box"));
    }
    bx.check_point(x)?;
    Ok(eigenfunction_unchecked(bx, k.as_slice(), x))
}

#[inline]
pub(crate) fn eigenfunction_unchecked(bx: &HyperBox, k: &[u32], x: &[f64]) -> f64 {
    let mut e = 1.0;
    for i in 0..k.len() {
        e *= bx.norm_factor(i) * trig::sin_pi(k[i] as f64 * bx.relative(i, x[i]));
    }
    e
}

/// `𝓕_k[f] = ⟨f, e_k⟩`.
pub fn fourier_coeff(bx: &HyperBox, k: &MultiIndex, f: &FnDesc) -> Result<f64> {
    if k.dim() != bx.dim() {
        return Err(Error::param("multi-index dimension does not match box"));
    }
    f.fourier_coeff(bx, k.as_slice())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn unit(d: usize) -> HyperBox {
        HyperBox::unit(d).unwrap()
    }

    #[test]
    fn unit_interval_spectrum() {
        let s = enumerate_eigen(&unit(1), Cutoff::Count(3)).unwrap();
        let pi2 = PI * PI;
        assert_eq!(s.len(), 3);
        assert_relative_eq!(s.lambda(0), pi2);
        assert_relative_eq!(s.lambda(1), 4.0 * pi2);
        assert_relative_eq!(s.lambda(2), 9.0 * pi2);
    }

    #[test]
    fn unit_square_threshold() {
        let s = enumerate_eigen(&unit(2), Cutoff::Threshold(5.0 * PI * PI)).unwrap();
        let idx: Vec<Vec<u32>> = s.iter().map(|(k, _)| k.to_vec()).collect();
        assert_eq!(idx, vec![vec![1, 1], vec![1, 2], vec![2, 1]]);
        assert_eq!(s.lambda(1).to_bits(), s.lambda(2).to_bits());
    }

    #[test]
    fn scaled_interval() {
        let bx = HyperBox::new(vec![(0.0, 2.0)]).unwrap();
        let s = enumerate_eigen(&bx, Cutoff::Count(1)).unwrap();
        assert_relative_eq!(s.lambda(0), PI * PI / 4.0);
        let s = enumerate_eigen(&bx, Cutoff::Count(50)).unwrap();
        for (i, (k, lam)) in s.iter().enumerate() {
            assert_eq!(k[0] as usize, i + 1);
            assert_eq!(lam, (PI * k[0] as f64 / 2.0).powi(2));
        }
    }

    #[test]
    fn threshold_below_ground_state_is_error() {
        assert!(matches!(
            enumerate_eigen(&unit(1), Cutoff::Threshold(1.0)),
            Err(Error::EmptyEigenSystem { .. })
        ));
        assert!(enumerate_eigen(&unit(1), Cutoff::Count(0)).is_err());
    }

    #[test]
    fn eigenfunction_examples() {
        let k1 = MultiIndex::new(vec![1]).unwrap();
        let k2 = MultiIndex::new(vec![2]).unwrap();
        assert_relative_eq!(eigenfunction_eval(&unit(1), &k1, &[0.5]).unwrap(), 2f64.sqrt());
        assert_eq!(eigenfunction_eval(&unit(1), &k2, &[0.5]).unwrap(), 0.0);
        let k11 = MultiIndex::new(vec![1, 1]).unwrap();
        assert_relative_eq!(eigenfunction_eval(&unit(2), &k11, &[0.5, 0.5]).unwrap(), 2.0, epsilon = 1e-15);
        assert_eq!(eigenfunction_eval(&unit(1), &k1, &[1.0]).unwrap(), 0.0);
        assert!(eigenfunction_eval(&unit(1), &k1, &[1.5]).is_err());
    }

    #[test]
    fn weyl_count_examples() {
        assert_eq!(weyl_count(&unit(1), 100.0), 3);
        assert_eq!(weyl_count(&unit(1), PI * PI / 2.0), 0);
        assert_eq!(weyl_count(&unit(2), 5.0 * PI * PI), 3);
    }

    #[test]
    fn weyl_law_unit_square() {
        let t = 1e4;
        let n = weyl_count(&unit(2), t) as f64;
        let ratio = n * 4.0 * PI / t;
        assert!((0.7..=1.1).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn position_lookup() {
        let s = enumerate_eigen(&unit(2), Cutoff::Count(40)).unwrap();
        for i in 0..s.len() {
            assert_eq!(s.position(s.index(i)), Some(i));
        }
        assert_eq!(s.position(&[100, 100]), None);
    }

    #[test]
    fn orthonormality_gram() {
        use crate::quad::gauss_legendre_on;
        let bx = unit(1);
        let s = enumerate_eigen(&bx, Cutoff::Count(20)).unwrap();
        let (x, w) = gauss_legendre_on(64, 0.0, 1.0);
        for i in 0..20 {
            for j in 0..20 {
                let g: f64 = x
                    .iter()
                    .zip(&w)
                    .map(|(&x, &w)| {
                        w * eigenfunction_unchecked(&bx, s.index(i), &[x]) * eigenfunction_unchecked(&bx, s.index(j), &[x])
                    })
                    .sum();
                let expected = if i == j { 1.0 } else { 0.0 };
                assert!((g - expected).abs() < 1e-8, "G[{i}][{j}] = {g}");
            }
        }
    }

    proptest! {
        #[test]
        fn prefix_consistent_and_sorted(k in 1usize..120, d in 1usize..4) {
            let bx = HyperBox::new((0..d).map(|i| (0.0, 1.0 + 0.5 * i as f64)).collect()).unwrap();
            let a = enumerate_eigen(&bx, Cutoff::Count(k)).unwrap();
            let b = enumerate_eigen(&bx, Cutoff::Count(k + 1)).unwrap();
            prop_assert_eq!(a.len(), k);
            for i in 0..k {
                prop_assert_eq!(a.index(i), b.index(i));
                prop_assert_eq!(a.lambda(i), b.lambda(i));
            }
            for i in 1..b.len() {
                prop_assert!(b.lambda(i - 1) <= b.lambda(i));
            }
            // completeness: every eigenvalue strictly below the largest listed is present
            let lam_max = a.lambda_max();
            prop_assert!(weyl_count(&bx, lam_max) >= k);
            let below = a.lambdas().iter().filter(|&&l| l < lam_max).count();
            prop_assert_eq!(below, a.count_at_most(lam_max.next_down()));
        }

        #[test]
        fn weyl_count_monotone(t1 in 1.0f64..5e3, dt in 0.0f64..5e3) {
            let bx = unit(2);
            prop_assert!(weyl_count(&bx, t1) <= weyl_count(&bx, t1 + dt));
        }

        #[test]
        fn interval_scaling(l in 0.1f64..10.0, k in 1u32..200) {
            let bx = HyperBox::new(vec![(0.0, l)]).unwrap();
            prop_assert_eq!(eigenvalue_key(&bx, &[k]), (PI * k as f64 / l).powi(2));
        }
    }
}
