//! Initial-data building blocks: smooth compactly supported bumps, Gaussians
//! and the perturbed-Maxwellian family.

use crate::phase_grid::{Grid, PhaseField};
use std::f64::consts::PI;

/// `B(u) = exp(-1/(1-u^2))` on `|u| < 1`, zero outside.
pub fn unit_bump(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - u * u)).exp()
    }
}

/// Smooth bump supported in `[lo, hi]` with peak value `e^{-1}` at the centre.
pub fn interval_bump(x: f64, lo: f64, hi: f64) -> f64 {
    unit_bump((2.0 * x - lo - hi) / (hi - lo))
}

/// `d^k/dv^k exp(-1/(1-(2v)^2))` for `k <= 3`; supported in `[-1/2, 1/2]`.
///
/// With `u = 1 - 4v^2` and `g = -1/u`, the bump is `e^g` and the derivatives
/// follow from Faa di Bruno on `g`.
pub fn half_bump_derivative(v: f64, k: u32) -> f64 {
    let u = 1.0 - 4.0 * v * v;
    if u <= 0.0 {
        return 0.0;
    }
    let b = (-1.0 / u).exp();
    if b == 0.0 {
        return 0.0;
    }
    let u1 = -8.0 * v;
    let u2 = -8.0;
    let g1 = u1 / (u * u);
    let g2 = -2.0 * u1 * u1 / (u * u * u) + u2 / (u * u);
    let g3 = 6.0 * u1 * u1 * u1 / (u * u * u * u) - 6.0 * u1 * u2 / (u * u * u);
    match k {
        0 => b,
        1 => g1 * b,
        2 => (g2 + g1 * g1) * b,
        3 => (g3 + 3.0 * g1 * g2 + g1 * g1 * g1) * b,
        _ => panic!("bump derivatives are implemented up to order 3"),
    }
}

/// The mean-zero profile `phi = d/dv exp(-1/(1-(2v)^2))`.
pub fn mean_zero_bump(v: f64) -> f64 {
    half_bump_derivative(v, 1)
}

/// `(2 pi vth^2)^{-1/2} exp(-v^2 / (2 vth^2))`.
pub fn maxwellian(v: f64, vth: f64) -> f64 {
    (-v * v / (2.0 * vth * vth)).exp() / (2.0 * PI * vth * vth).sqrt()
}

/// `(1 + eps cos(2 pi mode x)) * maxwellian(v, vth)`.
pub fn gaussian_perturbed(grid: Grid, eps: f64, mode: u32, vth: f64) -> PhaseField {
    PhaseField::from_fn(grid, |x, v| {
        (1.0 + eps * (2.0 * PI * mode as f64 * x).cos()) * maxwellian(v, vth)
    })
}
