#![allow(dead_code)]

use std::f64::consts::PI;

use css_core::field::lp_norm;
use css_core::{make_grid, ComplexField2D, Grid2D};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn grid(n: usize, length: f64) -> Grid2D {
    make_grid(n, length).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `||a - b||_2 / ||b||_2`
pub fn rel_l2(a: &ComplexField2D, b: &ComplexField2D) -> f64 {
    lp_norm(&a.sub(b).unwrap(), 2.0).unwrap() / lp_norm(b, 2.0).unwrap()
}

pub fn sup(f: &ComplexField2D) -> f64 {
    lp_norm(f, f64::INFINITY).unwrap()
}

pub fn real_field(grid: &Grid2D, f: impl Fn(f64, f64) -> f64) -> ComplexField2D {
    ComplexField2D::from_fn(grid, |x, y| Complex64::new(f(x, y), 0.0))
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// `Q'' + Q'/r - Q + Q^3 = 0` by RK4 from `r0` with `Q(r0) = a`; returns
/// `(+1, mass)` when `Q` turns back up before crossing zero (undershoot),
/// `(-1, mass)` when it crosses zero (overshoot).
fn shoot(a: f64) -> (i32, f64) {
    let dr = 2e-4;
    let r0 = 1e-6;
    let rhs = |r: f64, q: f64, p: f64| (p, -p / r + q - q * q * q);
    let (mut r, mut q, mut p) = (r0, a, 0.5 * (a - a * a * a) * r0);
    let mut mass = 0.0;
    while r < 20.0 {
        let (k1q, k1p) = rhs(r, q, p);
        let (k2q, k2p) = rhs(r + 0.5 * dr, q + 0.5 * dr * k1q, p + 0.5 * dr * k1p);
        let (k3q, k3p) = rhs(r + 0.5 * dr, q + 0.5 * dr * k2q, p + 0.5 * dr * k2p);
        let (k4q, k4p) = rhs(r + dr, q + dr * k3q, p + dr * k3p);
        let qn = q + dr / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
        let pn = p + dr / 6.0 * (k1p + 2.0 * k2p + 2.0 * k3p + k4p);
        // trapezoid on 2 pi int Q^2 r dr
        mass += PI * dr * (q * q * r + qn * qn * (r + dr));
        r += dr;
        q = qn;
        p = pn;
        if q < 0.0 {
            return (-1, mass);
        }
        if p > 0.0 {
            return (1, mass);
        }
    }
    (0, mass)
}

/// Mass of the ground state of the cubic equation, `2 pi int Q^2 r dr`.
pub fn townes_mass() -> f64 {
    let (mut lo, mut hi) = (2.0, 2.5);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if shoot(mid).0 < 0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    // the bracket converges to the separatrix; its lower edge stays positive
    shoot(lo).1
}
