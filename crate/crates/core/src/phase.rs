//! Phase reduction modulo 2π for products like Ω·τ that reach 10⁵ rad.
//!
//! The product of two `f64`s is formed exactly as a double-double pair and
//! reduced against a double-double 2π, so the reduced angle carries the full
//! precision of the inputs instead of losing ~5 digits to the magnitude.

use std::f64::consts::TAU;

/// Low word of 2π: `TAU + TAU_LO` is 2π to ~32 digits.
const TAU_LO: f64 = 2.449_293_598_294_706_4e-16;

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn reduce_dd(hi: f64, lo: f64) -> f64 {
    let k = (hi / TAU).round();
    if k == 0.0 {
        return wrap(hi + lo);
    }
    let (q, qe) = two_prod(k, TAU);
    // Sterbenz: hi and q are within a factor of two, so this is exact.
    let r = hi - q;
    let (s, e) = two_sum(r, lo - qe - k * TAU_LO);
    wrap(s + e)
}

fn wrap(x: f64) -> f64 {
    let r = x.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// `(rate * t) mod 2π` in `[0, 2π)`.
pub fn reduce_product(rate: f64, t: f64) -> f64 {
    let (hi, lo) = two_prod(rate, t);
    reduce_dd(hi, lo)
}

/// `x mod 2π` in `[0, 2π)`.
pub fn reduce(x: f64) -> f64 {
    reduce_dd(x, 0.0)
}

/// Maps an angle into `(-π, π]`.
pub fn centered(x: f64) -> f64 {
    let r = reduce(x);
    if r > std::f64::consts::PI {
        r - TAU
    } else {
        r
    }
}

/// Smallest absolute difference between two angles.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    centered(a - b).abs()
}
