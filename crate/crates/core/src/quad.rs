//! Numerical integration: adaptive Gauss–Kronrod (7/15), Gauss–Legendre
//! rules, nested box quadrature, and the exponential integral `E1`.

use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Tolerances and subdivision budget for adaptive quadrature.
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub max_intervals: usize,
}

impl Tolerance {
    pub const fn abs(abs: f64) -> Self {
        Self {
            abs,
            rel: 0.0,
            max_intervals: 2000,
        }
    }

    pub const fn new(abs: f64, rel: f64) -> Self {
        Self {
            abs,
            rel,
            max_intervals: 2000,
        }
    }

    fn target(&self, value: f64) -> f64 {
        self.abs.max(self.rel * value.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub error: f64,
    pub converged: bool,
}

impl QuadResult {
    pub fn require(self, tol: f64) -> Result<f64> {
        if self.converged && self.value.is_finite() {
            Ok(self.value)
        } else {
            Err(Error::QuadratureStalled {
                error: self.error,
                tolerance: tol,
            })
        }
    }
}

fn gk15<F: Fn(f64) -> f64 + ?Sized>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    let kron = kron * h;
    let gauss = gauss * h;
    (kron, (kron - gauss).abs())
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Globally adaptive Gauss–Kronrod quadrature of `f` over `[a, b]`.
pub fn integrate<F: Fn(f64) -> f64 + ?Sized>(f: &F, a: f64, b: f64, tol: Tolerance) -> QuadResult {
    if a == b {
        return QuadResult {
            value: 0.0,
            error: 0.0,
            converged: true,
        };
    }
    let (value, error) = gk15(f, a, b);
    let mut heap = BinaryHeap::new();
    heap.push(Segment { a, b, value, error });
    let mut total = value;
    let mut total_err = error;
    while total_err > tol.target(total) && heap.len() < tol.max_intervals {
        let seg = heap.pop().expect("heap is never empty");
        let m = 0.5 * (seg.a + seg.b);
        if m <= seg.a || m >= seg.b {
            heap.push(seg);
            break;
        }
        let (v1, e1) = gk15(f, seg.a, m);
        let (v2, e2) = gk15(f, m, seg.b);
        total += v1 + v2 - seg.value;
        total_err += e1 + e2 - seg.error;
        heap.push(Segment {
            a: seg.a,
            b: m,
            value: v1,
            error: e1,
        });
        heap.push(Segment {
            a: m,
            b: seg.b,
            value: v2,
            error: e2,
        });
    }
    // Re-sum to shed drift from the running updates.
    let mut value = 0.0;
    let mut error = 0.0;
    for s in heap.iter() {
        value += s.value;
        error += s.error;
    }
    QuadResult {
        value,
        error,
        converged: error <= tol.target(value) && value.is_finite(),
    }
}

/// `∫_a^∞ f` via `x = a + t / (1 - t)`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64 + ?Sized>(f: &F, a: f64, tol: Tolerance) -> QuadResult {
    let g = |t: f64| {
        let one_minus = 1.0 - t;
        let x = a + t / one_minus;
        let v = f(x) / (one_minus * one_minus);
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    integrate(&g, 0.0, 1.0, tol)
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            if n == 1 {
                p1 = z;
                p0 = 1.0;
            } else {
                for j in 2..=n {
                    let p2 = ((2 * j - 1) as f64 * z * p1 - (j - 1) as f64 * p0) / j as f64;
                    p0 = p1;
                    p1 = p2;
                }
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        if n == 1 {
            x[0] = 0.0;
            w[0] = 2.0;
            break;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Gauss–Legendre nodes and weights mapped to `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(n);
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    (
        x.iter().map(|xi| c + h * xi).collect(),
        w.iter().map(|wi| h * wi).collect(),
    )
}

/// Integral of `f` over the box `intervals`.
///
/// Dimensions up to two use nested adaptive Gauss–Kronrod; higher
/// dimensions use tensor Gauss–Legendre rules doubled until two successive
/// estimates agree.
pub fn integrate_box<F>(f: &F, intervals: &[(f64, f64)], tol: Tolerance) -> QuadResult
where
    F: Fn(&[f64]) -> f64 + ?Sized,
{
    let d = intervals.len();
    if d <= 2 {
        let mut point = vec![0.0; d];
        nested(f, intervals, 0, &mut point, tol)
    } else {
        tensor_doubling(f, intervals, tol)
    }
}

fn nested<F>(f: &F, intervals: &[(f64, f64)], axis: usize, point: &mut [f64], tol: Tolerance) -> QuadResult
where
    F: Fn(&[f64]) -> f64 + ?Sized,
{
    let (a, b) = intervals[axis];
    if axis + 1 == intervals.len() {
        let g = |x: f64| {
            let mut p = point.to_vec();
            p[axis] = x;
            f(&p)
        };
        return integrate(&g, a, b, tol);
    }
    let inner_ok = std::cell::Cell::new(true);
    let inner_err = std::cell::Cell::new(0.0f64);
    let base = point.to_vec();
    let g = |x: f64| {
        let mut p = base.clone();
        p[axis] = x;
        let r = nested(f, intervals, axis + 1, &mut p, tol);
        if !r.converged {
            inner_ok.set(false);
        }
        inner_err.set(inner_err.get().max(r.error));
        r.value
    };
    let outer = integrate(&g, a, b, tol);
    QuadResult {
        value: outer.value,
        error: outer.error + inner_err.get() * (b - a),
        converged: outer.converged && inner_ok.get(),
    }
}

fn tensor_gl<F>(f: &F, intervals: &[(f64, f64)], n: usize) -> f64
where
    F: Fn(&[f64]) -> f64 + ?Sized,
{
    let rules: Vec<(Vec<f64>, Vec<f64>)> = intervals
        .iter()
        .map(|&(a, b)| gauss_legendre_on(n, a, b))
        .collect();
    let d = intervals.len();
    let mut idx = vec![0usize; d];
    let mut point = vec![0.0; d];
    let mut total = 0.0;
    loop {
        let mut w = 1.0;
        for i in 0..d {
            point[i] = rules[i].0[idx[i]];
            w *= rules[i].1[idx[i]];
        }
        total += w * f(&point);
        let mut i = 0;
        loop {
            if i == d {
                return total;
            }
            idx[i] += 1;
            if idx[i] < n {
                break;
            }
            idx[i] = 0;
            i += 1;
        }
    }
}

fn tensor_doubling<F>(f: &F, intervals: &[(f64, f64)], tol: Tolerance) -> QuadResult
where
    F: Fn(&[f64]) -> f64 + ?Sized,
{
    let d = intervals.len() as u32;
    let budget: usize = 2_000_000;
    let mut n = 4;
    let mut prev = tensor_gl(f, intervals, n);
    loop {
        let next_n = n * 2;
        if next_n.pow(d) > budget {
            return QuadResult {
                value: prev,
                error: f64::INFINITY,
                converged: false,
            };
        }
        let cur = tensor_gl(f, intervals, next_n);
        let err = (cur - prev).abs();
        if err <= tol.target(cur) {
            return QuadResult {
                value: cur,
                error: err,
                converged: true,
            };
        }
        prev = cur;
        n = next_n;
    }
}

/// Exponential integral `E1(x) = ∫_x^∞ e^{-t}/t dt` for `x > 0`.
///
/// Power series for `x ≤ 1`, modified Lentz continued fraction above.
pub fn exp_integral_e1(x: f64) -> f64 {
    const EULER: f64 = 0.577_215_664_901_532_860_6;
    const TOL: f64 = 1e-15;
    if x <= 0.0 {
        return f64::INFINITY;
    }
    if x <= 1.0 {
        let mut sum = 0.0;
        let mut term = 1.0;
        for n in 1..200 {
            term *= -x / n as f64;
            let c = term / n as f64;
            sum += c;
            if c.abs() < TOL * sum.abs().max(1e-300) {
                break;
            }
        }
        -EULER - x.ln() - sum
    } else {
        let tiny = 1e-300;
        let mut b = x + 1.0;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let an = -((i * i) as f64);
            b += 2.0;
            d = 1.0 / (an * d + b);
            c = b + an / c;
            let del = c * d;
            h *= del;
            if (del - 1.0).abs() < TOL {
                break;
            }
        }
        h * (-x).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gk_polynomial_and_trig() {
        let r = integrate(&|x: f64| x * x, 0.0, 1.0, Tolerance::abs(1e-12));
        assert_relative_eq!(r.value, 1.0 / 3.0, epsilon = 1e-14);
        let r = integrate(&|x: f64| (std::f64::consts::PI * x).sin(), 0.0, 1.0, Tolerance::abs(1e-12));
        assert_relative_eq!(r.value, 2.0 / std::f64::consts::PI, epsilon = 1e-13);
    }

    #[test]
    fn gk_endpoint_singularity() {
        let r = integrate(&|x: f64| x.powf(-0.5), 0.0, 1.0, Tolerance::abs(1e-10));
        assert!(r.converged);
        assert_relative_eq!(r.value, 2.0, epsilon = 1e-9);
    }

    #[test]
    fn infinite_range() {
        let r = integrate_to_infinity(&|x: f64| (-x).exp(), 0.0, Tolerance::abs(1e-12));
        assert_relative_eq!(r.value, 1.0, epsilon = 1e-11);
        let r = integrate_to_infinity(&|x: f64| x.powi(-2), 1.0, Tolerance::abs(1e-12));
        assert_relative_eq!(r.value, 1.0, epsilon = 1e-11);
    }

    #[test]
    fn gauss_legendre_exact_for_polynomials() {
        let (x, w) = gauss_legendre(10);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(18)).sum();
        assert_relative_eq!(s, 2.0 / 19.0, epsilon = 1e-14);
        let s: f64 = w.iter().sum();
        assert_relative_eq!(s, 2.0, epsilon = 1e-14);
        let (x, w) = gauss_legendre(1);
        assert_eq!((x[0], w[0]), (0.0, 2.0));
        let (x, w) = gauss_legendre(5);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(8)).sum();
        assert_relative_eq!(s, 2.0 / 9.0, epsilon = 1e-14);
    }

    #[test]
    fn box_integrals() {
        let r = integrate_box(&|p: &[f64]| p[0] * p[1], &[(0.0, 1.0), (0.0, 2.0)], Tolerance::abs(1e-10));
        assert_relative_eq!(r.value, 1.0, epsilon = 1e-10);
        let r = integrate_box(
            &|p: &[f64]| p.iter().product::<f64>(),
            &[(0.0, 1.0); 3],
            Tolerance::abs(1e-10),
        );
        assert!(r.converged);
        assert_relative_eq!(r.value, 0.125, epsilon = 1e-10);
    }

    #[test]
    fn e1_reference_values() {
        // Abramowitz & Stegun table 5.1.
        assert_relative_eq!(exp_integral_e1(0.5), 0.559_773_594_776_160_8, epsilon = 1e-13);
        assert_relative_eq!(exp_integral_e1(1.0), 0.219_383_934_395_520_3, epsilon = 1e-13);
        assert_relative_eq!(exp_integral_e1(2.0), 0.048_900_510_708_061_1, epsilon = 1e-14);
        assert_relative_eq!(exp_integral_e1(0.01), 4.037_929_576_538_114, epsilon = 1e-12);
    }

    #[test]
    fn e1_matches_quadrature() {
        for &x in &[0.05, 0.7, 1.3, 5.0, 20.0] {
            let q = integrate_to_infinity(&|t: f64| (-t).exp() / t, x, Tolerance::new(1e-300, 1e-13));
            assert_relative_eq!(exp_integral_e1(x), q.value, max_relative = 1e-10);
        }
    }
}
