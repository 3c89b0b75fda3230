//! Samples of symmetric Lévy white noise and their pairings `⟨ξ̇, f⟩`.
//!
//! A realization consists of the Poisson atoms with `|z| > eps`, a
//! counter-keyed Gaussian coefficient stream for `σ W`, and, under the
//! `gaussianize` policy, a second stream standing in for the compensated
//! small jumps. Jumps in `eps < |z| ≤ 1` are summed uncompensated: every
//! supported `ν` is symmetric, so the compensator vanishes.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::func::{constant_coeff, FnDesc};
use crate::levy::{LevyMeasure, LevyTriplet};
use crate::parallel::{self, Exec};
use crate::rng::{self, tag};
use crate::spectral::{EigenSystem, HyperBox, MultiIndex};
use crate::trig;

pub const DEFAULT_EPS: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SmallJumpPolicy {
    Drop,
    #[default]
    Gaussianize,
}

/// Atoms `(y, z)` of the Poisson random measure with `|z| > eps`.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpAtomSet {
    bx: HyperBox,
    eps: f64,
    locations: Vec<f64>,
    sizes: Vec<f64>,
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps <= 1.0 {
        Ok(())
    } else {
        Err(Error::param(format!("truncation level eps must be in (0, 1], got {eps}")))
    }
}

impl JumpAtomSet {
    pub fn new(bx: HyperBox, eps: f64, atoms: Vec<(Vec<f64>, f64)>) -> Result<Self> {
        check_eps(eps)?;
        let mut locations = Vec::with_capacity(atoms.len() * bx.dim());
        let mut sizes = Vec::with_capacity(atoms.len());
        for (y, z) in atoms {
            bx.check_point(&y)?;
            if !(z.abs() > eps && z.is_finite()) {
                return Err(Error::param(format!("atom size {z} is not above eps = {eps}")));
            }
            locations.extend_from_slice(&y);
            sizes.push(z);
        }
        Ok(Self {
            bx,
            eps,
            locations,
            sizes,
        })
    }

    pub fn empty(bx: HyperBox, eps: f64) -> Result<Self> {
        Self::new(bx, eps, Vec::new())
    }

    pub fn bx(&self) -> &HyperBox {
        &self.bx
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn len(&self) -> usize {
        self.sizes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sizes.is_empty()
    }

    pub fn location(&self, j: usize) -> &[f64] {
        let d = self.bx.dim();
        &self.locations[j * d..(j + 1) * d]
    }

    pub fn size(&self, j: usize) -> f64 {
        self.sizes[j]
    }

    pub fn sizes(&self) -> &[f64] {
        &self.sizes
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.locations.chunks(self.bx.dim()).zip(self.sizes.iter().copied())
    }

    /// Atoms with `|z| ≤ hi`, keeping the order.
    pub fn with_sizes_at_most(&self, hi: f64) -> JumpAtomSet {
        let d = self.bx.dim();
        let mut locations = Vec::new();
        let mut sizes = Vec::new();
        for (y, z) in self.iter() {
            if z.abs() <= hi {
                locations.extend_from_slice(y);
                sizes.push(z);
            }
        }
        debug_assert_eq!(locations.len(), sizes.len() * d);
        JumpAtomSet {
            bx: self.bx.clone(),
            eps: self.eps,
            locations,
            sizes,
        }
    }
}

/// Compound-Poisson sample of the atoms with `|z| > eps`: a
/// `Poisson(|D| ν(|z| > eps))` count, uniform locations, restricted sizes.
pub fn sample_prm_large<R: Rng + ?Sized>(
    bx: &HyperBox,
    nu: &LevyMeasure,
    eps: f64,
    rng: &mut R,
) -> Result<JumpAtomSet> {
    nu.validate()?;
    if !(eps > 0.0) {
        return match nu {
            LevyMeasure::AlphaStable { .. } | LevyMeasure::VarianceGamma { .. } => Err(Error::InfiniteTailMass { eps }),
            _ => Err(Error::param(format!("truncation level eps must be in (0, 1], got {eps}"))),
        };
    }
    check_eps(eps)?;
    let tail = nu.tail_mass(eps);
    if !tail.is_finite() {
        return Err(Error::InfiniteTailMass { eps });
    }
    let mean = bx.volume() * tail;
    let n = if mean > 0.0 {
        let p = Poisson::new(mean).map_err(|e| Error::param(format!("atom count: {e}")))?;
        p.sample(rng) as usize
    } else {
        0
    };
    let d = bx.dim();
    let mut locations = Vec::with_capacity(n * d);
    let mut sizes = Vec::with_capacity(n);
    for _ in 0..n {
        for &(a, b) in bx.intervals() {
            let u: f64 = rng.random();
            locations.push(a + (b - a) * u);
        }
        sizes.push(nu.sample_jump(eps, rng)?);
    }
    Ok(JumpAtomSet {
        bx: bx.clone(),
        eps,
        locations,
        sizes,
    })
}

/// One sample of `ξ̇`.
#[derive(Debug, Clone)]
pub struct NoiseRealization {
    triplet: LevyTriplet,
    atoms: JumpAtomSet,
    policy: SmallJumpPolicy,
    master_seed: u64,
    gauss_key: u64,
    small_key: u64,
    small_sd: f64,
}

/// Serializable description of a realization.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub triplet: LevyTriplet,
    #[serde(rename = "box")]
    pub bx: HyperBox,
    pub eps: f64,
    pub policy: SmallJumpPolicy,
    pub seed: u64,
    pub atom_count: usize,
    pub small_jump_variance: f64,
}

impl NoiseRealization {
    /// Draw atoms from the `ATOMS` stream of `seed`.
    pub fn sample(
        triplet: &LevyTriplet,
        bx: &HyperBox,
        eps: f64,
        policy: SmallJumpPolicy,
        seed: u64,
    ) -> Result<Self> {
        triplet.validate()?;
        check_eps(eps)?;
        let mut rng = rng::stream_rng(seed, tag::ATOMS);
        let atoms = sample_prm_large(bx, &triplet.measure, eps, &mut rng)?;
        Self::from_atoms(triplet, atoms, policy, seed)
    }

    /// Realization with a prescribed atom set; Gaussian streams still come from `seed`.
    pub fn from_atoms(triplet: &LevyTriplet, atoms: JumpAtomSet, policy: SmallJumpPolicy, seed: u64) -> Result<Self> {
        triplet.validate()?;
        let small_sd = match policy {
            SmallJumpPolicy::Drop => 0.0,
            SmallJumpPolicy::Gaussianize => triplet.measure.small_variance(atoms.eps).sqrt(),
        };
        Ok(Self {
            triplet: *triplet,
            atoms,
            policy,
            master_seed: seed,
            gauss_key: rng::derive_seed(seed, tag::GAUSSIAN),
            small_key: rng::derive_seed(seed, tag::SMALL_JUMPS),
            small_sd,
        })
    }

    pub fn triplet(&self) -> &LevyTriplet {
        &self.triplet
    }

    pub fn atoms(&self) -> &JumpAtomSet {
        &self.atoms
    }

    pub fn bx(&self) -> &HyperBox {
        self.atoms.bx()
    }

    pub fn eps(&self) -> f64 {
        self.atoms.eps()
    }

    pub fn policy(&self) -> SmallJumpPolicy {
        self.policy
    }

    pub fn seed(&self) -> u64 {
        self.master_seed
    }

    pub fn manifest(&self) -> Manifest {
        Manifest {
            triplet: self.triplet,
            bx: self.bx().clone(),
            eps: self.eps(),
            policy: self.policy,
            seed: self.master_seed,
            atom_count: self.atoms.len(),
            small_jump_variance: self.small_sd * self.small_sd,
        }
    }

    /// Same realization with the jump atoms replaced.
    pub fn with_atoms(&self, atoms: JumpAtomSet) -> Result<Self> {
        if atoms.bx() != self.bx() {
            return Err(Error::BoxMismatch);
        }
        Self::from_atoms(&self.triplet, atoms, self.policy, self.master_seed)
    }

    /// `σ g_k` with `g_k` i.i.d. standard normal, addressed by `k`.
    pub fn gaussian_coeff(&self, k: &[u32]) -> f64 {
        if self.triplet.sigma == 0.0 {
            0.0
        } else {
            self.triplet.sigma * rng::indexed_normal(self.gauss_key, k)
        }
    }

    /// Standard deviation of the small-jump surrogate coefficients.
    pub fn small_jump_sd(&self) -> f64 {
        self.small_sd
    }

    pub fn small_jump_coeff(&self, k: &[u32]) -> f64 {
        if self.small_sd == 0.0 {
            0.0
        } else {
            self.small_sd * rng::indexed_normal(self.small_key, k)
        }
    }

    fn check_box(&self, bx: &HyperBox) -> Result<()> {
        if bx == self.bx() {
            Ok(())
        } else {
            Err(Error::BoxMismatch)
        }
    }

    /// `e_k(y)` through the same sine recurrence as the batch path.
    fn basis_at(&self, k: &[u32], y: &[f64]) -> f64 {
        let bx = self.bx();
        let mut e = 1.0;
        for i in 0..k.len() {
            e *= bx.norm_factor(i) * trig::sine_multiple(k[i], bx.relative(i, y[i]));
        }
        e
    }

    #[inline]
    fn assemble(&self, k: &[u32], jump: f64) -> f64 {
        let mut c = self.triplet.b * constant_coeff(self.bx(), k) + self.gaussian_coeff(k);
        c += jump;
        c += self.small_jump_coeff(k);
        c
    }

    /// `c_k = ⟨ξ̇, e_k⟩` for a single index.
    pub fn pair_basis(&self, k: &MultiIndex) -> Result<f64> {
        if k.dim() != self.bx().dim() {
            return Err(Error::param("multi-index dimension does not match box"));
        }
        let k = k.as_slice();
        let mut jump = 0.0;
        for (y, z) in self.atoms.iter() {
            jump += z * self.basis_at(k, y);
        }
        Ok(self.assemble(k, jump))
    }

    /// `c_k` for every entry of `system`, bit-identical to [`Self::pair_basis`].
    pub fn pair_eigen(&self, system: &EigenSystem) -> Result<Vec<f64>> {
        self.pair_eigen_with(system, Exec::Parallel)
    }

    pub fn pair_eigen_with(&self, system: &EigenSystem, exec: Exec) -> Result<Vec<f64>> {
        self.check_box(system.bx())?;
        let jumps = if self.atoms.is_empty() {
            vec![0.0; system.len()]
        } else if system.dim() == 1 {
            self.jump_sums_interval(system, exec)
        } else {
            self.jump_sums_tables(system, exec)
        };
        let mut out = jumps;
        parallel::fill_chunked(exec, &mut out, 4096, |start, slice| {
            for (off, c) in slice.iter_mut().enumerate() {
                *c = self.assemble(system.index(start + off), *c);
            }
        });
        Ok(out)
    }

    /// One-dimensional systems list `k = 1, 2, …, K` in order, so sine
    /// blocks are generated on the fly and never stored.
    fn jump_sums_interval(&self, system: &EigenSystem, exec: Exec) -> Vec<f64> {
        let bx = self.bx();
        let norm = bx.norm_factor(0);
        let n = self.atoms.len();
        let ts: Vec<f64> = (0..n).map(|j| bx.relative(0, self.atoms.location(j)[0])).collect();
        let two_c: Vec<f64> = ts.iter().map(|&t| 2.0 * trig::cos_pi(t)).collect();
        let zs = self.atoms.sizes();
        let mut acc = vec![0.0; system.len()];
        parallel::fill_chunked(exec, &mut acc, trig::BLOCK, |start, block| {
            let k0 = (start + 1) as f64;
            let len = block.len();
            let mut j = 0;
            while j + 4 <= n {
                let mut a = [0.0; 4];
                let mut b = [0.0; 4];
                for q in 0..4 {
                    a[q] = trig::sin_pi(k0 * ts[j + q]);
                    b[q] = trig::sin_pi((k0 + 1.0) * ts[j + q]);
                }
                let c2 = [two_c[j], two_c[j + 1], two_c[j + 2], two_c[j + 3]];
                let z = [zs[j], zs[j + 1], zs[j + 2], zs[j + 3]];
                for m in 0..len {
                    let s = if m == 0 {
                        a
                    } else if m == 1 {
                        b
                    } else {
                        let next = [
                            c2[0] * b[0] - a[0],
                            c2[1] * b[1] - a[1],
                            c2[2] * b[2] - a[2],
                            c2[3] * b[3] - a[3],
                        ];
                        a = b;
                        b = next;
                        next
                    };
                    let mut v = block[m];
                    v += z[0] * (norm * s[0]);
                    v += z[1] * (norm * s[1]);
                    v += z[2] * (norm * s[2]);
                    v += z[3] * (norm * s[3]);
                    block[m] = v;
                }
                j += 4;
            }
            while j < n {
                let t = ts[j];
                let mut a = trig::sin_pi(k0 * t);
                let mut b = trig::sin_pi((k0 + 1.0) * t);
                for m in 0..len {
                    let s = if m == 0 {
                        a
                    } else if m == 1 {
                        b
                    } else {
                        let next = two_c[j] * b - a;
                        a = b;
                        b = next;
                        next
                    };
                    block[m] += zs[j] * (norm * s);
                }
                j += 1;
            }
        });
        acc
    }

    /// General dimension: per-axis sine tables for a chunk of atoms at a time.
    fn jump_sums_tables(&self, system: &EigenSystem, exec: Exec) -> Vec<f64> {
        const TABLE_BUDGET: usize = 1 << 21;
        let bx = self.bx();
        let d = bx.dim();
        let kmax: Vec<usize> = system.max_index_per_axis().iter().map(|&k| k as usize).collect();
        let offsets: Vec<usize> = kmax
            .iter()
            .scan(0usize, |acc, &k| {
                let o = *acc;
                *acc += k;
                Some(o)
            })
            .collect();
        let stride: usize = kmax.iter().sum();
        let norms: Vec<f64> = (0..d).map(|i| bx.norm_factor(i)).collect();
        let n = self.atoms.len();
        let chunk = (TABLE_BUDGET / stride.max(1)).clamp(1, n.max(1));
        let mut acc = vec![0.0; system.len()];
        let mut tables = vec![0.0; chunk * stride];
        let mut start = 0;
        while start < n {
            let end = (start + chunk).min(n);
            let count = end - start;
            parallel::fill_chunked(exec, &mut tables[..count * stride], stride, |off, row| {
                let y = self.atoms.location(start + off / stride);
                for i in 0..d {
                    trig::fill_sine_multiples(bx.relative(i, y[i]), &mut row[offsets[i]..offsets[i] + kmax[i]]);
                }
            });
            let tables = &tables;
            let zs = &self.atoms.sizes()[start..end];
            parallel::fill_chunked(exec, &mut acc, 1024, |mstart, slice| {
                for (off, v) in slice.iter_mut().enumerate() {
                    let k = system.index(mstart + off);
                    let mut s = *v;
                    for (j, &z) in zs.iter().enumerate() {
                        let row = &tables[j * stride..(j + 1) * stride];
                        let mut e = 1.0;
                        for i in 0..d {
                            e *= norms[i] * row[offsets[i] + k[i] as usize - 1];
                        }
                        s += z * e;
                    }
                    *v = s;
                }
            });
            start = end;
        }
        acc
    }

    /// Whether `f` may be paired without an external certificate.
    fn certify(&self, f: &FnDesc) -> Result<()> {
        let bx = self.bx();
        let t = &self.triplet;
        let require = |q: f64, what: &str| -> Result<()> {
            if f.lq_finite(bx, q) == Some(false) {
                Err(Error::Uncertified(format!("{} is not {what}-integrable", f.kind())))
            } else {
                Ok(())
            }
        };
        match f {
            FnDesc::Custom(c) if !c.certified => {
                return Err(Error::Uncertified(format!("custom function '{}' has no integrability certificate", c.name)))
            }
            FnDesc::Custom(_) => return Ok(()),
            _ => {}
        }
        if t.b != 0.0 {
            require(1.0, "drift")?;
        }
        if t.sigma != 0.0 {
            require(2.0, "gaussian")?;
        }
        if let LevyMeasure::AlphaStable { alpha } = t.measure {
            require(alpha, "jump")?;
        }
        Ok(())
    }

    /// Sample of `⟨ξ̇, f⟩` for this realization.
    pub fn pair_with_function(&self, f: &FnDesc, system: &EigenSystem) -> Result<f64> {
        PreparedPairing::new(f, system)?.apply(self)
    }
}

/// A test function prepared once for pairing with many realizations on a
/// fixed eigen system.
#[derive(Debug, Clone)]
pub struct PreparedPairing {
    f: FnDesc,
    bx: HyperBox,
    integral: Option<f64>,
    /// `(position, 𝓕_k[f])` for the nonzero coefficients.
    coeffs: Vec<(usize, f64)>,
    system: std::sync::Arc<EigenSystem>,
}

impl PreparedPairing {
    pub fn new(f: &FnDesc, system: &EigenSystem) -> Result<Self> {
        let bx = system.bx().clone();
        let f = f.materialize(system)?;
        f.validate(&bx)?;
        let coeffs = match &f {
            FnDesc::Eigen { .. } => Vec::new(),
            _ => f
                .coefficients(system)?
                .into_iter()
                .enumerate()
                .filter(|&(_, c)| c != 0.0)
                .collect(),
        };
        Ok(Self {
            integral: None,
            f,
            bx,
            coeffs,
            system: std::sync::Arc::new(system.clone()),
        })
    }

    pub fn function(&self) -> &FnDesc {
        &self.f
    }

    pub fn apply(&self, r: &NoiseRealization) -> Result<f64> {
        r.check_box(&self.bx)?;
        r.certify(&self.f)?;
        if let FnDesc::Eigen { k } = &self.f {
            return r.pair_basis(k);
        }
        let t = r.triplet();
        let mut value = if t.b == 0.0 {
            0.0
        } else {
            t.b * match self.integral {
                Some(v) => v,
                None => self.f.integral(&self.bx)?,
            }
        };
        if t.sigma != 0.0 {
            let mut g = 0.0;
            for &(i, c) in &self.coeffs {
                g += c * r.gaussian_coeff(self.system.index(i));
            }
            value += g;
        }
        let mut jump = 0.0;
        for (y, z) in r.atoms().iter() {
            jump += self.f.eval_unchecked(&self.bx, y) * z;
        }
        value += jump;
        if r.small_jump_sd() != 0.0 {
            let mut s = 0.0;
            for &(i, c) in &self.coeffs {
                s += c * r.small_jump_coeff(self.system.index(i));
            }
            value += s;
        }
        Ok(value)
    }

    /// Cache `∫f` for repeated drift evaluations.
    pub fn with_cached_integral(mut self) -> Result<Self> {
        self.integral = Some(self.f.integral(&self.bx)?);
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{enumerate_eigen, Cutoff};
    use approx::assert_relative_eq;
    use rand::SeedableRng;

    fn unit(d: usize) -> HyperBox {
        HyperBox::unit(d).unwrap()
    }

    fn single_atom(y: Vec<f64>, z: f64) -> NoiseRealization {
        let bx = HyperBox::unit(y.len()).unwrap();
        let atoms = JumpAtomSet::new(bx, 0.5, vec![(y, z)]).unwrap();
        let t = LevyTriplet::pure_jump(LevyMeasure::TwoPoint { rate: 1.0, magnitude: 2.0 }).unwrap();
        NoiseRealization::from_atoms(&t, atoms, SmallJumpPolicy::Drop, 1).unwrap()
    }

    #[test]
    fn null_measure_gives_no_atoms() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let a = sample_prm_large(&unit(2), &LevyMeasure::Null, 0.1, &mut rng).unwrap();
        assert!(a.is_empty());
    }

    #[test]
    fn infinite_tail_is_error() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let r = sample_prm_large(&unit(1), &LevyMeasure::AlphaStable { alpha: 1.0 }, 0.0, &mut rng);
        assert!(matches!(r, Err(Error::InfiniteTailMass { .. })));
    }

    #[test]
    fn zero_triplet_pairs_to_zero() {
        let r = NoiseRealization::sample(&LevyTriplet::zero(), &unit(1), 0.01, SmallJumpPolicy::Gaussianize, 3).unwrap();
        let sys = enumerate_eigen(&unit(1), Cutoff::Count(50)).unwrap();
        assert!(r.pair_eigen(&sys).unwrap().iter().all(|&c| c == 0.0));
    }

    #[test]
    fn single_atom_coefficient() {
        let r = single_atom(vec![0.5], 2.0);
        let sys = enumerate_eigen(&unit(1), Cutoff::Count(3)).unwrap();
        let c = r.pair_eigen(&sys).unwrap();
        assert_relative_eq!(c[0], 2.0 * 2f64.sqrt(), epsilon = 1e-15);
        assert_eq!(c[1], 0.0);
    }

    #[test]
    fn drift_coefficient() {
        let t = LevyTriplet::new(1.0, 0.0, LevyMeasure::Null).unwrap();
        let r = NoiseRealization::sample(&t, &unit(1), 0.01, SmallJumpPolicy::Drop, 0).unwrap();
        let sys = enumerate_eigen(&unit(1), Cutoff::Count(2)).unwrap();
        let c = r.pair_eigen(&sys).unwrap();
        assert_relative_eq!(c[0], 2.0 * 2f64.sqrt() / std::f64::consts::PI, epsilon = 1e-15);
        assert_eq!(c[1], 0.0);
    }

    #[test]
    fn batch_matches_single_bitwise() {
        let t = LevyTriplet::new(0.3, 0.7, LevyMeasure::AlphaStable { alpha: 1.5 }).unwrap();
        for (d, k) in [(1usize, 1000usize), (2, 700), (3, 300)] {
            let bx = HyperBox::new((0..d).map(|i| (-0.5, 1.0 + i as f64)).collect()).unwrap();
            let r = NoiseRealization::sample(&t, &bx, 0.1, SmallJumpPolicy::Gaussianize, 11).unwrap();
            assert!(r.atoms().len() > 5);
            let sys = enumerate_eigen(&bx, Cutoff::Count(k)).unwrap();
            let seq = r.pair_eigen_with(&sys, Exec::Sequential).unwrap();
            let par = r.pair_eigen_with(&sys, Exec::Parallel).unwrap();
            for i in 0..sys.len() {
                let single = r.pair_basis(&sys.multi_index(i)).unwrap();
                assert_eq!(seq[i].to_bits(), single.to_bits(), "d={d} i={i}");
                assert_eq!(par[i].to_bits(), single.to_bits());
            }
            let e = FnDesc::Eigen { k: sys.multi_index(7) };
            assert_eq!(r.pair_with_function(&e, &sys).unwrap().to_bits(), seq[7].to_bits());
        }
    }

    #[test]
    fn jump_sum_matches_direct_evaluation() {
        let t = LevyTriplet::pure_jump(LevyMeasure::AlphaStable { alpha: 1.2 }).unwrap();
        let bx = unit(1);
        let r = NoiseRealization::sample(&t, &bx, 0.05, SmallJumpPolicy::Drop, 5).unwrap();
        let sys = enumerate_eigen(&bx, Cutoff::Count(3000)).unwrap();
        let c = r.pair_eigen(&sys).unwrap();
        let scale: f64 = r.atoms().sizes().iter().map(|z| z.abs()).sum();
        for i in [0usize, 17, 255, 256, 1999, 2999] {
            let k = sys.index(i)[0] as f64;
            let direct: f64 = r
                .atoms()
                .iter()
                .map(|(y, z)| z * 2f64.sqrt() * (std::f64::consts::PI * k * y[0]).sin())
                .sum();
            assert!((c[i] - direct).abs() < 1e-10 * scale, "i={i}: {} vs {direct}", c[i]);
        }
    }

    #[test]
    fn gaussian_stream_is_order_independent() {
        let t = LevyTriplet::new(0.0, 2.0, LevyMeasure::Null).unwrap();
        let r = NoiseRealization::sample(&t, &unit(2), 0.01, SmallJumpPolicy::Drop, 9).unwrap();
        let a = r.gaussian_coeff(&[3, 4]);
        let _ = r.gaussian_coeff(&[1, 1]);
        assert_eq!(a, r.gaussian_coeff(&[3, 4]));
        assert_ne!(a, r.gaussian_coeff(&[4, 3]));
        let zero = NoiseRealization::sample(&LevyTriplet::zero(), &unit(2), 0.01, SmallJumpPolicy::Drop, 9).unwrap();
        assert_eq!(zero.gaussian_coeff(&[3, 4]), 0.0);
    }

    #[test]
    fn box_mismatch_is_rejected() {
        let r = single_atom(vec![0.5], 2.0);
        let sys = enumerate_eigen(&HyperBox::new(vec![(0.0, 2.0)]).unwrap(), Cutoff::Count(3)).unwrap();
        assert!(matches!(r.pair_eigen(&sys), Err(Error::BoxMismatch)));
    }

    #[test]
    fn pairing_refusals_and_zero() {
        let r = single_atom(vec![0.5], 2.0);
        let sys = enumerate_eigen(&unit(1), Cutoff::Count(10)).unwrap();
        assert_eq!(r.pair_with_function(&FnDesc::Zero, &sys).unwrap(), 0.0);
        let c = FnDesc::custom("x", |x: &[f64]| x[0]);
        assert!(matches!(r.pair_with_function(&c, &sys), Err(Error::Uncertified(_))));
        if let FnDesc::Custom(cf) = c {
            let v = r.pair_with_function(&FnDesc::Custom(cf.certify()), &sys).unwrap();
            assert_relative_eq!(v, 1.0);
        }
        let t = LevyTriplet::new(0.0, 1.0, LevyMeasure::Null).unwrap();
        let g = NoiseRealization::sample(&t, &unit(1), 0.01, SmallJumpPolicy::Drop, 0).unwrap();
        let inv = FnDesc::Power { coeff: 1.0, exponents: vec![-1.0] };
        assert!(matches!(g.pair_with_function(&inv, &sys), Err(Error::Uncertified(_))));
    }

    #[test]
    fn indicator_additivity() {
        let t = LevyTriplet::new(0.4, 1.0, LevyMeasure::VarianceGamma { c: 2.0, m: 1.0 }).unwrap();
        let bx = unit(2);
        let sys = enumerate_eigen(&bx, Cutoff::Count(200)).unwrap();
        let r = NoiseRealization::sample(&t, &bx, 0.05, SmallJumpPolicy::Gaussianize, 21).unwrap();
        let a = FnDesc::indicator(vec![(0.0, 0.3), (0.0, 1.0)]);
        let b = FnDesc::indicator(vec![(0.3, 1.0), (0.0, 1.0)]);
        let ab = FnDesc::indicator(vec![(0.0, 1.0), (0.0, 1.0)]);
        let va = r.pair_with_function(&a, &sys).unwrap();
        let vb = r.pair_with_function(&b, &sys).unwrap();
        let vab = r.pair_with_function(&ab, &sys).unwrap();
        assert!((va + vb - vab).abs() < 1e-11 * (1.0 + vab.abs()), "{va} + {vb} vs {vab}");
    }

    #[test]
    fn stable_atom_count_mean() {
        let bx = unit(1);
        let nu = LevyMeasure::AlphaStable { alpha: 1.0 };
        let n = 10_000;
        let total: usize = (0..n)
            .map(|i| {
                let mut rng = rng::stream_rng(rng::replicate_seed(77, i), tag::ATOMS);
                sample_prm_large(&bx, &nu, 1.0, &mut rng).unwrap().len()
            })
            .sum();
        let mean = total as f64 / n as f64;
        assert!((mean - 1.0).abs() <= 0.03, "mean {mean}");
    }

    #[test]
    fn two_point_atom_count_is_poisson() {
        let bx = unit(1);
        let nu = LevyMeasure::TwoPoint { rate: 2.0, magnitude: 1.0 };
        let n = 20_000;
        let counts: Vec<f64> = (0..n)
            .map(|i| {
                let mut rng = rng::stream_rng(rng::replicate_seed(5, i), tag::ATOMS);
                let a = sample_prm_large(&bx, &nu, 0.5, &mut rng).unwrap();
                assert!(a.sizes().iter().all(|z| z.abs() == 1.0));
                a.len() as f64
            })
            .collect();
        let mean = counts.iter().sum::<f64>() / n as f64;
        let var = counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((mean - 2.0).abs() < 0.05, "mean {mean}");
        assert!((var - 2.0).abs() < 0.1, "var {var}");
        let p0 = counts.iter().filter(|&&c| c == 0.0).count() as f64 / n as f64;
        assert!((p0 - (-2f64).exp()).abs() < 0.01);
    }

    #[test]
    fn gaussian_pairing_variance_with_constant() {
        let t = LevyTriplet::new(0.0, 1.0, LevyMeasure::Null).unwrap();
        let bx = unit(1);
        let sys = enumerate_eigen(&bx, Cutoff::Count(1000)).unwrap();
        let p = PreparedPairing::new(&FnDesc::one(), &sys).unwrap();
        let n = 100_000u64;
        let vals: Vec<f64> = (0..n)
            .map(|i| {
                let r = NoiseRealization::sample(&t, &bx, 0.01, SmallJumpPolicy::Drop, rng::replicate_seed(3, i)).unwrap();
                p.apply(&r).unwrap()
            })
            .collect();
        let mean = vals.iter().sum::<f64>() / n as f64;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((0.98..=1.02).contains(&var), "var {var}");
    }

    #[test]
    fn symmetric_pairings_have_zero_odd_moments() {
        let bx = unit(1);
        let sys = enumerate_eigen(&bx, Cutoff::Count(64)).unwrap();
        let f = FnDesc::Power { coeff: 1.0, exponents: vec![1.0] };
        let p = PreparedPairing::new(&f, &sys).unwrap();
        for nu in [LevyMeasure::TwoPoint { rate: 3.0, magnitude: 0.7 }, LevyMeasure::VarianceGamma { c: 1.5, m: 2.0 }] {
            let t = LevyTriplet::pure_jump(nu).unwrap();
            let n = 100_000u64;
            let vals: Vec<f64> = (0..n)
                .map(|i| {
                    let r = NoiseRealization::sample(&t, &bx, 0.05, SmallJumpPolicy::Gaussianize, rng::replicate_seed(8, i)).unwrap();
                    p.apply(&r).unwrap()
                })
                .collect();
            for power in [1, 3] {
                let m: Vec<f64> = vals.iter().map(|v| v.powi(power)).collect();
                let mean = m.iter().sum::<f64>() / n as f64;
                let sd = (m.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
                assert!(mean.abs() <= 3.0 * sd / (n as f64).sqrt(), "{nu:?} moment {power}: {mean}");
            }
        }
    }

    #[test]
    fn band_sums_have_zero_mean() {
        let bx = unit(1);
        let nu = LevyMeasure::AlphaStable { alpha: 1.3 };
        let n = 50_000u64;
        let sums: Vec<f64> = (0..n)
            .map(|i| {
                let mut rng = rng::stream_rng(rng::replicate_seed(12, i), tag::ATOMS);
                let a = sample_prm_large(&bx, &nu, 0.1, &mut rng).unwrap();
                a.with_sizes_at_most(1.0).sizes().iter().sum()
            })
            .collect();
        let mean = sums.iter().sum::<f64>() / n as f64;
        let sd = (sums.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt();
        assert!(mean.abs() <= 3.0 * sd / (n as f64).sqrt());
    }

    #[test]
    fn realization_is_reproducible() {
        let t = LevyTriplet::new(0.0, 0.5, LevyMeasure::AlphaStable { alpha: 0.8 }).unwrap();
        let a = NoiseRealization::sample(&t, &unit(2), 0.05, SmallJumpPolicy::Gaussianize, 99).unwrap();
        let b = NoiseRealization::sample(&t, &unit(2), 0.05, SmallJumpPolicy::Gaussianize, 99).unwrap();
        assert_eq!(a.atoms(), b.atoms());
        let sys = enumerate_eigen(&unit(2), Cutoff::Count(100)).unwrap();
        assert_eq!(a.pair_eigen(&sys).unwrap(), b.pair_eigen(&sys).unwrap());
    }
}
