//! Sine evaluation for Dirichlet eigenfunctions.
//!
//! `sin_pi` reduces its argument exactly, so integer arguments give an exact
//! zero. Batches of `sin(π k t)` for consecutive `k` use a three-term
//! recurrence restarted from direct anchors every [`BLOCK`] terms; the
//! single-value path [`sine_multiple`] replays the same arithmetic, so both
//! routes return identical bits.

pub const BLOCK: usize = 256;

/// `sin(π t)` with exact zeros at integers.
#[inline]
pub fn sin_pi(t: f64) -> f64 {
    let n = t.round();
    let f = t - n;
    let s = (std::f64::consts::PI * f).sin();
    if (n as i64) & 1 == 0 {
        s
    } else {
        -s
    }
}

/// `cos(π t)`.
#[inline]
pub fn cos_pi(t: f64) -> f64 {
    let n = t.round();
    let f = t - n;
    let c = (std::f64::consts::PI * f).cos();
    if (n as i64) & 1 == 0 {
        c
    } else {
        -c
    }
}

/// `out[j] = sin(π (j + 1) t)` for `j < out.len()`.
pub fn fill_sine_multiples(t: f64, out: &mut [f64]) {
    let two_c = 2.0 * cos_pi(t);
    let mut start = 0;
    while start < out.len() {
        let end = (start + BLOCK).min(out.len());
        let block = &mut out[start..end];
        let k0 = (start + 1) as f64;
        block[0] = sin_pi(k0 * t);
        if block.len() > 1 {
            block[1] = sin_pi((k0 + 1.0) * t);
        }
        for j in 2..block.len() {
            block[j] = two_c * block[j - 1] - block[j - 2];
        }
        start = end;
    }
}

/// `sin(π k t)` for `k ≥ 1`, bit-identical to entry `k - 1` of
/// [`fill_sine_multiples`].
pub fn sine_multiple(k: u32, t: f64) -> f64 {
    debug_assert!(k >= 1);
    let j = (k - 1) as usize;
    let start = j - j % BLOCK;
    let k0 = (start + 1) as f64;
    let s0 = sin_pi(k0 * t);
    if j == start {
        return s0;
    }
    let s1 = sin_pi((k0 + 1.0) * t);
    if j == start + 1 {
        return s1;
    }
    let two_c = 2.0 * cos_pi(t);
    let (mut a, mut b) = (s0, s1);
    for _ in start + 2..=j {
        let c = two_c * b - a;
        a = b;
        b = c;
    }
    b
}
