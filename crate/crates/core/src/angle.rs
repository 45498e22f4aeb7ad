//! Rational multiples of π.
//!
//! Builders compute every angle through [`pi_frac`] and the text format
//! evaluates `pi*p/q` the same way, so angles written in that form survive a
//! round trip bit for bit.

use std::f64::consts::PI;

/// Largest denominator the text format will use for a `pi*p/q` angle.
pub const MAX_DENOMINATOR: u64 = 1 << 20;

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// `p/q` in lowest terms with a positive denominator.
pub fn reduce(p: i64, q: u64) -> (i64, u64) {
    assert!(q != 0, "zero denominator");
    let g = gcd(p.unsigned_abs(), q).max(1);
    (p / g as i64, q / g)
}

/// Evaluates `π·p/q` exactly as the parser does.
pub fn eval_pi_frac(p: i64, q: u64) -> f64 {
    PI * p as f64 / q as f64
}

/// `π·p/q`, reduced first so equal rationals give identical bits.
pub fn pi_frac(p: i64, q: u64) -> f64 {
    let (p, q) = reduce(p, q);
    eval_pi_frac(p, q)
}

/// Finds `(p, q)` with `q ≤ MAX_DENOMINATOR` such that evaluating `π·p/q`
/// reproduces `angle` exactly. Tries continued-fraction convergents of
/// `angle/π` and accepts the first whose value is within `1e-12` and
/// bit-identical.
pub fn as_pi_frac(angle: f64) -> Option<(i64, u64)> {
    if !angle.is_finite() {
        return None;
    }
    if angle == 0.0 {
        return if angle.is_sign_negative() { None } else { Some((0, 1)) };
    }
    let x = angle / PI;
    if x.abs() > 1e9 {
        return None;
    }
    // Convergents h/k of the continued fraction of x.
    let (mut h_prev, mut h) = (1i64, x.floor() as i64);
    let (mut k_prev, mut k) = (0i64, 1i64);
    let mut frac = x - x.floor();
    loop {
        let (p, q) = reduce(h, k as u64);
        let value = eval_pi_frac(p, q);
        if (value - angle).abs() <= 1e-12 && value.to_bits() == angle.to_bits() {
            return Some((p, q));
        }
        if frac.abs() < 1e-15 {
            return None;
        }
        let inv = 1.0 / frac;
        let a = inv.floor();
        frac = inv - a;
        let a = a as i64;
        let h_next = a.checked_mul(h)?.checked_add(h_prev)?;
        let k_next = a.checked_mul(k)?.checked_add(k_prev)?;
        if k_next as u64 > MAX_DENOMINATOR {
            return None;
        }
        (h_prev, h, k_prev, k) = (h, h_next, k, k_next);
    }
}
