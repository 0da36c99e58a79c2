//! The kinetic averaging operator
//!
//! ```text
//! K_U(H)(t, x) = int_0^t int (d_x H)(s, x - (t - s) a(v)) U(t, s, x, v) dv ds
//! ```
//!
//! and a probe of its smoothing: the apparent loss of one `x` derivative is
//! compensated by the velocity average.

use crate::error::{KineticError, Result};
use crate::fourier::{
    drop_roundoff_modes, ifft_in_place, rfft, shift_derivative_multiplier, signed_mode,
};
use crate::models::AdvectionField;
use crate::phase_grid::{Grid, SpatialField};
use rustfft::num_complex::Complex64;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

/// Default number of Simpson nodes in `s` (odd).
pub const DEFAULT_S_POINTS: usize = 129;
/// Simpson nodes in the outer time integral of the smoothing ratio.
pub const RATIO_T_POINTS: usize = 33;

type KernelFn = dyn Fn(f64, f64, f64, f64) -> f64 + Send + Sync;

/// Kernel `U(t, s, x, v)` with its certified smoothness and decay data.
#[derive(Clone)]
pub struct Kernel {
    pub id: String,
    u: Arc<KernelFn>,
    /// Number of derivatives of `U` available.
    pub smoothness_budget: u32,
    /// `sigma` with `|U| (1+v^2)^(sigma/2)` bounded.
    pub decay_weight: f64,
    /// True when `U` does not depend on `x` (enables the spectral shortcut).
    pub x_independent: bool,
    /// `U` depends on `v` alone, so it is tabulated once per call.
    velocity_only: bool,
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Kernel")
            .field("id", &self.id)
            .field("smoothness_budget", &self.smoothness_budget)
            .field("decay_weight", &self.decay_weight)
            .field("x_independent", &self.x_independent)
            .finish()
    }
}

impl Kernel {
    pub fn new(
        id: impl Into<String>,
        u: impl Fn(f64, f64, f64, f64) -> f64 + Send + Sync + 'static,
        smoothness_budget: u32,
        decay_weight: f64,
        x_independent: bool,
    ) -> Self {
        Kernel {
            id: id.into(),
            u: Arc::new(u),
            smoothness_budget,
            decay_weight,
            x_independent,
            velocity_only: false,
        }
    }

    /// `U = eta(v)`, independent of `(t, s, x)`.
    pub fn velocity_only(
        id: impl Into<String>,
        eta: impl Fn(f64) -> f64 + Send + Sync + 'static,
        smoothness_budget: u32,
        decay_weight: f64,
    ) -> Self {
        let mut k = Kernel::new(
            id,
            move |_, _, _, v| eta(v),
            smoothness_budget,
            decay_weight,
            true,
        );
        k.velocity_only = true;
        k
    }

    /// `U = 0`.
    pub fn zero() -> Self {
        Kernel::velocity_only("zero", |_| 0.0, u32::MAX, f64::INFINITY)
    }

    /// `U = exp(-v^2/2)`: smooth with Gaussian decay.
    pub fn gaussian() -> Self {
        Kernel::velocity_only(
            "gaussian",
            |v| (-0.5 * v * v).exp(),
            u32::MAX,
            f64::INFINITY,
        )
    }

    /// Unit-height bump of half-width `width` at `v = 0`. For small widths its
    /// derivatives are huge, so only a zero smoothness budget is certified.
    pub fn narrow_bump(width: f64) -> Self {
        Kernel::velocity_only(
            format!("bump{width}"),
            move |v| crate::profiles::unit_bump(v / width) * std::f64::consts::E,
            0,
            f64::INFINITY,
        )
    }

    #[inline]
    pub fn eval(&self, t: f64, s: f64, x: f64, v: f64) -> f64 {
        (self.u)(t, s, x, v)
    }

    /// Smoothness and decay requirements of the boundedness estimate in one
    /// dimension with advection growth exponent `lambda`.
    pub fn certificate(&self, lambda: f64) -> KernelCertificate {
        let k = self.smoothness_budget;
        let required_weight = self.decay_weight + (1.0 + lambda) * (1.0 + k.min(3) as f64);
        KernelCertificate {
            smooth_enough: k >= 3,
            decays_enough: self.decay_weight > 0.5,
            required_weight,
            provided_weight: self.decay_weight,
            shortfall: self.decay_weight < required_weight,
        }
    }
}

/// Kernel hypotheses checked against the thresholds `k >= 3`, `sigma > 1/2`
/// and the weight `r_k = sigma + (1 + lambda)(1 + k)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelCertificate {
    pub smooth_enough: bool,
    pub decays_enough: bool,
    pub required_weight: f64,
    pub provided_weight: f64,
    /// Provided decay is below `r_k`; flagged, not refused.
    pub shortfall: bool,
}

impl KernelCertificate {
    pub fn certified(&self) -> bool {
        self.smooth_enough && self.decays_enough
    }
}

/// Composite Simpson nodes and weights on `[0, t]` with `n` (odd) points.
pub fn simpson(t: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    let n = if n % 2 == 0 { n + 1 } else { n.max(3) };
    let h = t / (n - 1) as f64;
    let nodes = (0..n).map(|i| i as f64 * h).collect();
    let weights = (0..n)
        .map(|i| {
            let w = if i == 0 || i == n - 1 {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * h / 3.0
        })
        .collect();
    (nodes, weights)
}

/// Phases `exp(-2 pi i m (t - s) a_j)` for one mode, advanced along the
/// uniform `s` nodes by a fixed rotation per node and resynchronised
/// periodically against drift.
struct Rotor {
    m: f64,
    speeds: Vec<f64>,
    phase: Vec<Complex64>,
    rotation: Vec<Complex64>,
    at: Option<usize>,
}

impl Rotor {
    const RESYNC: usize = 64;

    fn new(k: usize, n: usize, speeds: &[f64], h: f64) -> Self {
        let m = signed_mode(k, n) as f64;
        Rotor {
            m,
            speeds: speeds.to_vec(),
            phase: vec![Complex64::new(0.0, 0.0); speeds.len()],
            rotation: speeds
                .iter()
                .map(|&a| Complex64::from_polar(1.0, 2.0 * PI * (m * h * a).rem_euclid(1.0)))
                .collect(),
            at: None,
        }
    }

    fn sync(&mut self, step: usize, lag: f64) {
        if self.at == Some(step) && step % Self::RESYNC != 0 {
            return;
        }
        let m = self.m;
        for (p, &a) in self.phase.iter_mut().zip(&self.speeds) {
            *p = Complex64::from_polar(1.0, -2.0 * PI * (m * lag * a).rem_euclid(1.0));
        }
        self.at = Some(step);
    }

    fn advance(&mut self) {
        for (p, r) in self.phase.iter_mut().zip(&self.rotation) {
            *p *= r;
        }
        self.at = self.at.map(|i| i + 1);
    }
}

/// Core quadrature: velocity nodes `vs` with uniform weight `dw`, transport
/// speed `speed(v)`.
fn apply_k_nodes(
    kernel: &Kernel,
    h: &dyn Fn(f64) -> SpatialField,
    speed: &dyn Fn(f64) -> f64,
    vs: &[f64],
    dw: f64,
    nx: usize,
    t: f64,
    s_points: usize,
) -> SpatialField {
    let mut acc = vec![Complex64::new(0.0, 0.0); nx];
    let mut out = vec![0.0; nx];
    if t <= 0.0 {
        return SpatialField::new(out, t);
    }
    let (nodes, weights) = simpson(t, s_points);
    let xs: Vec<f64> = (0..nx).map(|i| i as f64 / nx as f64).collect();
    let mut buf = vec![Complex64::new(0.0, 0.0); nx];
    let table: Option<Vec<f64>> = kernel
        .velocity_only
        .then(|| vs.iter().map(|&v| kernel.eval(t, 0.0, 0.0, v)).collect());
    let speeds: Vec<f64> = vs.iter().map(|&v| speed(v)).collect();
    let h_s = nodes[1] - nodes[0];
    let mut rotors: HashMap<usize, Rotor> = HashMap::new();
    for (step, (&s, &ws)) in nodes.iter().zip(&weights).enumerate() {
        let field = h(s);
        let mut spec = rfft(&field.values);
        drop_roundoff_modes(&mut spec);
        let active: Vec<usize> = (0..nx).filter(|&k| spec[k].norm() > 0.0).collect();
        if active.is_empty() {
            continue;
        }
        // real data: the upper half of the spectrum is restored by symmetry
        let half: Vec<usize> = active.iter().copied().filter(|&k| k <= nx / 2).collect();
        if let Some(tab) = &table {
            for &k in &half {
                if nx % 2 == 0 && k == nx / 2 {
                    continue;
                }
                let rotor = rotors
                    .entry(k)
                    .or_insert_with(|| Rotor::new(k, nx, &speeds, h_s));
                rotor.sync(step, t - s);
                let sum: Complex64 = rotor.phase.iter().zip(tab).map(|(p, &u)| p * u).sum();
                acc[k] += spec[k] * shift_derivative_multiplier(k, nx, 0.0, 1) * sum * (ws * dw);
                rotor.advance();
            }
            if nx % 2 == 0 && half.last() == Some(&(nx / 2)) {
                let k = nx / 2;
                for (j, &u) in tab.iter().enumerate() {
                    let shift = (t - s) * speeds[j];
                    acc[k] +=
                        spec[k] * shift_derivative_multiplier(k, nx, shift, 1) * (ws * dw * u);
                }
            }
            continue;
        }
        for (j, &v) in vs.iter().enumerate() {
            let shift = (t - s) * speed(v);
            if kernel.x_independent {
                let u = match &table {
                    Some(tab) => tab[j],
                    None => kernel.eval(t, s, 0.0, v),
                };
                if u == 0.0 {
                    continue;
                }
                let c = ws * dw * u;
                for &k in &half {
                    acc[k] += spec[k] * shift_derivative_multiplier(k, nx, shift, 1) * c;
                }
            } else {
                buf.iter_mut().for_each(|z| *z = Complex64::new(0.0, 0.0));
                for &k in &active {
                    buf[k] = spec[k] * shift_derivative_multiplier(k, nx, shift, 1);
                }
                ifft_in_place(&mut buf);
                for i in 0..nx {
                    out[i] += ws * dw * kernel.eval(t, s, xs[i], v) * buf[i].re;
                }
            }
        }
    }
    if kernel.x_independent {
        for k in 1..nx.div_ceil(2) {
            acc[nx - k] = acc[k].conj();
        }
        ifft_in_place(&mut acc);
        for i in 0..nx {
            out[i] += acc[i].re;
        }
    }
    SpatialField::new(out, t)
}

/// `K_U(H)(t, .)`: Simpson in `s`, midpoint sum over the velocity grid,
/// `d_x H` and the shift `x - (t - s) a(v)` exact in Fourier.
pub fn apply_k(
    kernel: &Kernel,
    h: &dyn Fn(f64) -> SpatialField,
    a: &AdvectionField,
    grid: &Grid,
    t: f64,
    s_points: usize,
) -> SpatialField {
    let a = *a;
    apply_k_nodes(
        kernel,
        h,
        &move |v| a.eval(v),
        &grid.vs(),
        grid.dv,
        grid.nx,
        t,
        s_points,
    )
}

/// `U(t, s, x, a^{-1}(w)) / |a'(a^{-1}(w))|` on `a(R)`, zero outside.
pub fn straighten_variable(kernel: &Kernel, a: &AdvectionField) -> Kernel {
    let inner = kernel.clone();
    let a = *a;
    Kernel {
        id: format!("{}-straight-{}", kernel.id, a.name()),
        u: Arc::new(move |t, s, x, w| match a.inverse(w) {
            Ok(v) => inner.eval(t, s, x, v) / a.deriv(v).abs(),
            Err(_) => 0.0,
        }),
        smoothness_budget: kernel.smoothness_budget,
        decay_weight: kernel.decay_weight,
        x_independent: kernel.x_independent,
        velocity_only: kernel.velocity_only,
    }
}

/// `K` with straight transport `x - (t - s) w` on `nw` midpoint nodes of
/// `[w_lo, w_hi]`.
pub fn apply_k_straight(
    kernel: &Kernel,
    h: &dyn Fn(f64) -> SpatialField,
    nx: usize,
    w_range: (f64, f64),
    nw: usize,
    t: f64,
    s_points: usize,
) -> SpatialField {
    let (lo, hi) = w_range;
    let dw = (hi - lo) / nw as f64;
    let ws: Vec<f64> = (0..nw).map(|j| lo + (j as f64 + 0.5) * dw).collect();
    apply_k_nodes(kernel, h, &|w| w, &ws, dw, nx, t, s_points)
}

/// Image of the velocity box `[-v_cut, v_cut]` under `a`.
pub fn straight_range(a: &AdvectionField, v_cut: f64) -> (f64, f64) {
    (a.eval(-v_cut), a.eval(v_cut))
}

/// One row of the smoothing table.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioRow {
    pub mode: u32,
    pub ratio: f64,
    pub kernel_id: String,
    pub t: f64,
    pub quadrature_level: u32,
}

/// `||K(H_m)||_{L^2(0,t;L^2)} / ||H_m||_{L^2(0,t;L^2)}` with
/// `H_m(s, x) = cos(2 pi m x)`, time integral by Simpson on
/// `RATIO_T_POINTS` samples and `s` nodes from [`ratio_s_points`].
pub fn smoothing_ratio(
    kernel: &Kernel,
    a: &AdvectionField,
    grid: &Grid,
    modes: &[u32],
    t: f64,
    quadrature_level: u32,
) -> Result<Vec<RatioRow>> {
    if modes.iter().any(|&m| m == 0 || 2 * m as usize >= grid.nx) {
        return Err(KineticError::Config(format!(
            "modes must lie in 1..{} on a grid with nx = {}",
            grid.nx / 2,
            grid.nx
        )));
    }
    if !(t > 0.0) {
        return Err(KineticError::Config("ratio time must be positive".into()));
    }
    let (taus, wt) = simpson(t, RATIO_T_POINTS);
    let nx = grid.nx;
    modes
        .iter()
        .map(|&m| {
            let s_points = ratio_s_points(m, quadrature_level);
            let hm = move |s: f64| {
                SpatialField::from_fn(nx, |x| (2.0 * std::f64::consts::PI * m as f64 * x).cos())
                    .with_time(s)
            };
            let num: f64 = taus
                .iter()
                .zip(&wt)
                .map(|(&tau, &w)| {
                    let k = apply_k(kernel, &hm, a, grid, tau, s_points);
                    w * k.values.iter().map(|x| x * x).sum::<f64>() / nx as f64
                })
                .sum();
            let den = 0.5 * t;
            Ok(RatioRow {
                mode: m,
                ratio: (num / den).sqrt(),
                kernel_id: kernel.id.clone(),
                t,
                quadrature_level,
            })
        })
        .collect()
}

/// `s` nodes for mode `m`: the default, grown with `m` so the layer of width
/// `1/m` near `s = t` stays resolved, doubled per quadrature level.
pub fn ratio_s_points(m: u32, quadrature_level: u32) -> usize {
    let base = (DEFAULT_S_POINTS - 1) * (m as usize / 8).max(1);
    (base << quadrature_level) + 1
}

/// Least-squares slope of `ratio` against `mode`.
pub fn ratio_slope(rows: &[RatioRow]) -> f64 {
    let n = rows.len() as f64;
    let mx = rows.iter().map(|r| r.mode as f64).sum::<f64>() / n;
    let my = rows.iter().map(|r| r.ratio).sum::<f64>() / n;
    let sxy: f64 = rows
        .iter()
        .map(|r| (r.mode as f64 - mx) * (r.ratio - my))
        .sum();
    let sxx: f64 = rows.iter().map(|r| (r.mode as f64 - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase_grid::build_grid;
    use std::f64::consts::PI;

    fn cos_mode(nx: usize, m: u32) -> impl Fn(f64) -> SpatialField {
        move |s| SpatialField::from_fn(nx, |x| (2.0 * PI * m as f64 * x).cos()).with_time(s)
    }

    #[test]
    fn trivial_inputs_give_zero() {
        let g = build_grid(16, 64, 8.0).unwrap();
        let a = AdvectionField::Classical;
        let c = |s: f64| SpatialField::from_fn(16, |_| 3.0).with_time(s);
        assert!(apply_k(&Kernel::gaussian(), &c, &a, &g, 0.5, 33).max_abs() < 1e-14);
        assert_eq!(
            apply_k(&Kernel::zero(), &cos_mode(16, 2), &a, &g, 0.5, 33).max_abs(),
            0.0
        );
    }

    #[test]
    fn straightening_classical_is_identity_and_relativistic_vanishes_outside() {
        let k = Kernel::gaussian();
        let s = straighten_variable(&k, &AdvectionField::Classical);
        assert_eq!(s.eval(0.1, 0.0, 0.3, 1.7), k.eval(0.1, 0.0, 0.3, 1.7));
        let r = straighten_variable(&k, &AdvectionField::relativistic(1.0).unwrap());
        assert_eq!(r.eval(0.0, 0.0, 0.0, 0.0), 1.0);
        assert_eq!(r.eval(0.0, 0.0, 0.0, 1.0), 0.0);
        assert_eq!(r.eval(0.0, 0.0, 0.0, -1.5), 0.0);
    }

    #[test]
    fn x_dependent_path_matches_spectral_shortcut() {
        let g = build_grid(16, 64, 8.0).unwrap();
        let a = AdvectionField::Classical;
        let fast = Kernel::gaussian();
        let slow = Kernel::new(
            "g",
            |_, _, _, v| (-0.5 * v * v).exp(),
            u32::MAX,
            f64::INFINITY,
            false,
        );
        let h = cos_mode(16, 3);
        let k1 = apply_k(&fast, &h, &a, &g, 0.3, 33);
        let k2 = apply_k(&slow, &h, &a, &g, 0.3, 33);
        for (x, y) in k1.values.iter().zip(&k2.values) {
            assert!((x - y).abs() < 1e-13);
        }
    }

    #[test]
    fn certificates() {
        let c = Kernel::gaussian().certificate(0.0);
        assert!(c.certified() && !c.shortfall);
        let b = Kernel::narrow_bump(0.01).certificate(0.0);
        assert!(!b.certified());
    }
}
