//! The second-order operator `L = d_x^2 + phi d_x d_v + psi d_v^2` whose
//! coefficients are transported so that `L` nearly commutes with
//! `T = d_t + a(v) d_x + F d_v`.
//!
//! Along characteristics the coefficients solve
//!
//! ```text
//! T phi = 2 a' psi - a' phi^2 + 2 F_x + phi F_v
//! T psi = -a' phi psi + phi F_x + 2 psi F_v
//! ```
//!
//! with zero initial data, and then
//! `L T g = T L g + (L F) g_v + (L a) g_x + a' phi L g`.
//! The derivation is in `docs/coefficient_system.md`.

use crate::characteristics::{check_escape, rk4_step, step_plan};
use crate::error::{KineticError, Result};
use crate::models::{AdvectionField, ForceField};
use crate::phase_grid::{fd_dv, spectral_dx, Grid, PhaseField};
use ndarray::Array2;
use std::f64::consts::PI;

/// Storage cadence of the coefficient stacks, in time steps.
pub const DEFAULT_STORE_EVERY: usize = 10;

/// Coefficient fields `(phi, psi)` sampled at increasing times.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffPair {
    pub phi: Vec<Array2<f64>>,
    pub psi: Vec<Array2<f64>>,
    pub times: Vec<f64>,
    pub grid: Grid,
}

impl CoeffPair {
    /// Synthetic constant coefficients on a single time level.
    pub fn constant(grid: Grid, phi: f64, psi: f64, time: f64) -> Self {
        CoeffPair {
            phi: vec![Array2::from_elem((grid.nx, grid.nv), phi)],
            psi: vec![Array2::from_elem((grid.nx, grid.nv), psi)],
            times: vec![time],
            grid,
        }
    }

    /// Coefficients linearly interpolated to time `t` (clamped to the range).
    pub fn at(&self, t: f64) -> (Array2<f64>, Array2<f64>) {
        let n = self.times.len();
        if n == 1 || t <= self.times[0] {
            return (self.phi[0].clone(), self.psi[0].clone());
        }
        if t >= self.times[n - 1] {
            return (self.phi[n - 1].clone(), self.psi[n - 1].clone());
        }
        let k = self.times.partition_point(|&s| s <= t) - 1;
        let w = (t - self.times[k]) / (self.times[k + 1] - self.times[k]);
        if w == 0.0 {
            return (self.phi[k].clone(), self.psi[k].clone());
        }
        let lerp = |a: &Array2<f64>, b: &Array2<f64>| a * (1.0 - w) + b * w;
        (
            lerp(&self.phi[k], &self.phi[k + 1]),
            lerp(&self.psi[k], &self.psi[k + 1]),
        )
    }

    /// Largest `|phi|` and `|psi|` over all stored times.
    pub fn sup_norms(&self) -> (f64, f64) {
        let sup = |s: &[Array2<f64>]| {
            s.iter()
                .flat_map(|a| a.iter())
                .fold(0.0f64, |m, x| m.max(x.abs()))
        };
        (sup(&self.phi), sup(&self.psi))
    }
}

/// Right-hand side of the augmented system `(X, V, phi, psi)`.
#[inline]
fn augmented_rhs(force: &dyn ForceField, a: &AdvectionField, t: f64, s: [f64; 4]) -> [f64; 4] {
    let [x, v, phi, psi] = s;
    let j = force.jet(t, x, v);
    let ap = a.deriv(v);
    [
        a.eval(v),
        j.f,
        2.0 * ap * psi - ap * phi * phi + 2.0 * j.fx + phi * j.fv,
        -ap * phi * psi + phi * j.fx + 2.0 * psi * j.fv,
    ]
}

#[inline]
fn axpy(s: [f64; 4], h: f64, k: [f64; 4]) -> [f64; 4] {
    [
        s[0] + h * k[0],
        s[1] + h * k[1],
        s[2] + h * k[2],
        s[3] + h * k[3],
    ]
}

/// Integrate the augmented system from `(0, x0, v0, 0, 0)` to time `t`.
pub fn integrate_coefficients(
    force: &dyn ForceField,
    a: &AdvectionField,
    x0: f64,
    v0: f64,
    t: f64,
    dt: f64,
) -> [f64; 4] {
    let (n, h) = step_plan(0.0, t, dt);
    let mut s = [x0, v0, 0.0, 0.0];
    for k in 0..n {
        let tau = k as f64 * h;
        let k1 = augmented_rhs(force, a, tau, s);
        let k2 = augmented_rhs(force, a, tau + 0.5 * h, axpy(s, 0.5 * h, k1));
        let k3 = augmented_rhs(force, a, tau + 0.5 * h, axpy(s, 0.5 * h, k2));
        let k4 = augmented_rhs(force, a, tau + h, axpy(s, h, k3));
        for i in 0..4 {
            s[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    s
}

/// Coefficients at the requested times. Each grid node is traced back to
/// `t = 0` and the augmented system is integrated forward from there, which
/// samples the transported coefficients directly on the grid.
pub fn solve_coeff_system_at(
    force: &dyn ForceField,
    a: &AdvectionField,
    grid: &Grid,
    times: &[f64],
    dt: f64,
) -> Result<CoeffPair> {
    if !(dt > 0.0) {
        return Err(KineticError::Config(format!("dt = {dt} must be positive")));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|&t| !(t >= 0.0)) {
        return Err(KineticError::Config(
            "coefficient times must be nonnegative and increasing".into(),
        ));
    }
    let mut phi = Vec::with_capacity(times.len());
    let mut psi = Vec::with_capacity(times.len());
    for &t in times {
        let mut p = Array2::zeros((grid.nx, grid.nv));
        let mut q = Array2::zeros((grid.nx, grid.nv));
        if t > 0.0 && !force.is_zero() {
            let (n, h) = step_plan(t, 0.0, dt);
            for i in 0..grid.nx {
                for j in 0..grid.nv {
                    let v_start = grid.v(j);
                    let (mut x, mut v) = (grid.x(i), v_start);
                    for k in 0..n {
                        let tau = t + k as f64 * h;
                        (x, v) = rk4_step(force, a, tau, x, v, h);
                    }
                    check_escape(v_start, v, grid.v_cut)?;
                    let s = integrate_coefficients(force, a, x, v, t, dt);
                    if !(s[2].is_finite() && s[3].is_finite()) {
                        return Err(KineticError::Horizon(format!(
                            "coefficient system blew up before t = {t}"
                        )));
                    }
                    p[[i, j]] = s[2];
                    q[[i, j]] = s[3];
                }
            }
        }
        phi.push(p);
        psi.push(q);
    }
    Ok(CoeffPair {
        phi,
        psi,
        times: times.to_vec(),
        grid: *grid,
    })
}

/// Coefficients on `[0, t_final]`, stored every `DEFAULT_STORE_EVERY` steps.
pub fn solve_coeff_system(
    force: &dyn ForceField,
    a: &AdvectionField,
    grid: &Grid,
    t_final: f64,
    dt: f64,
) -> Result<CoeffPair> {
    let (n, h) = step_plan(0.0, t_final, dt);
    let mut times: Vec<f64> = (0..=n)
        .step_by(DEFAULT_STORE_EVERY)
        .map(|k| k as f64 * h)
        .collect();
    if n % DEFAULT_STORE_EVERY != 0 {
        times.push(t_final);
    }
    solve_coeff_system_at(force, a, grid, &times, dt)
}

fn apply_l_with(phi: &Array2<f64>, psi: &Array2<f64>, g: &PhaseField) -> PhaseField {
    let gxx = spectral_dx(g, 2);
    let gxv = fd_dv(&spectral_dx(g, 1), 1).field;
    let gvv = fd_dv(g, 2).field;
    let values = &gxx.values + &(phi * &gxv.values) + &(psi * &gvv.values);
    PhaseField {
        grid: g.grid,
        values,
        time: g.time,
    }
}

/// `L g` with the coefficients interpolated to time `t`.
pub fn apply_l(coeffs: &CoeffPair, g: &PhaseField, t: f64) -> PhaseField {
    let (phi, psi) = coeffs.at(t);
    apply_l_with(&phi, &psi, g)
}

/// A test field `g(t, x, v)` with closed-form time derivative, periodic in `x`.
pub trait Manufactured {
    fn value(&self, t: f64, x: f64, v: f64) -> f64;
    fn time_derivative(&self, t: f64, x: f64, v: f64) -> f64;
}

/// `g = cos(2 pi m x) exp(-v^2 / 2) (1 + t)`.
#[derive(Debug, Clone, Copy)]
pub struct CosGaussian {
    pub mode: u32,
}

impl Default for CosGaussian {
    fn default() -> Self {
        CosGaussian { mode: 1 }
    }
}

impl Manufactured for CosGaussian {
    fn value(&self, t: f64, x: f64, v: f64) -> f64 {
        (2.0 * PI * self.mode as f64 * x).cos() * (-0.5 * v * v).exp() * (1.0 + t)
    }

    fn time_derivative(&self, _t: f64, x: f64, v: f64) -> f64 {
        (2.0 * PI * self.mode as f64 * x).cos() * (-0.5 * v * v).exp()
    }
}

fn sample(grid: Grid, t: f64, f: impl Fn(f64, f64) -> f64) -> PhaseField {
    PhaseField::from_fn(grid, f).with_time(t)
}

/// `T g = g_t + a g_x + F g_v` at time `t` with the module's derivatives.
fn transport_of(
    g: &dyn Manufactured,
    force: &dyn ForceField,
    a: &AdvectionField,
    grid: Grid,
    t: f64,
) -> PhaseField {
    transport_field(
        &sample(grid, t, |x, v| g.value(t, x, v)),
        &sample(grid, t, |x, v| g.time_derivative(t, x, v)),
        force,
        a,
    )
}

fn transport_field(
    h: &PhaseField,
    h_t: &PhaseField,
    force: &dyn ForceField,
    a: &AdvectionField,
) -> PhaseField {
    let grid = h.grid;
    let hx = spectral_dx(h, 1);
    let hv = fd_dv(h, 1).field;
    let mut out = h_t.clone();
    for i in 0..grid.nx {
        for j in 0..grid.nv {
            let (x, v) = (grid.x(i), grid.v(j));
            out.values[[i, j]] +=
                a.eval(v) * hx.values[[i, j]] + force.value(h.time, x, v) * hv.values[[i, j]];
        }
    }
    out
}

/// Grid `L^2` norm of `L T g - T L g - (L F) g_v - (L a) g_x - a' phi L g` at
/// time `t`. `d_t (L g)` is a centred difference over `+-dt` with the
/// coefficients evaluated at the matching times.
pub fn commutation_residual(
    coeffs: &CoeffPair,
    force: &dyn ForceField,
    a: &AdvectionField,
    g: &dyn Manufactured,
    t: f64,
    dt: f64,
) -> f64 {
    let grid = coeffs.grid;
    let (phi, psi) = coeffs.at(t);
    let g_now = sample(grid, t, |x, v| g.value(t, x, v));
    let tg = transport_of(g, force, a, grid, t);
    let l_tg = apply_l_with(&phi, &psi, &tg);

    let lg = apply_l_with(&phi, &psi, &g_now);
    let lg_plus = apply_l(
        coeffs,
        &sample(grid, t + dt, |x, v| g.value(t + dt, x, v)),
        t + dt,
    );
    let lg_minus = apply_l(
        coeffs,
        &sample(grid, t - dt, |x, v| g.value(t - dt, x, v)),
        t - dt,
    );
    let lg_t = PhaseField {
        grid,
        values: (&lg_plus.values - &lg_minus.values) / (2.0 * dt),
        time: t,
    };
    let t_lg = transport_field(&lg, &lg_t, force, a);

    let gx = spectral_dx(&g_now, 1);
    let gv = fd_dv(&g_now, 1).field;
    let mut total = 0.0;
    for i in 0..grid.nx {
        for j in 0..grid.nv {
            let (x, v) = (grid.x(i), grid.v(j));
            let jet = force.jet(t, x, v);
            let (p, q) = (phi[[i, j]], psi[[i, j]]);
            let lf = jet.fxx + p * jet.fxv + q * jet.fvv;
            let la = q * a.deriv2(v);
            let r = l_tg.values[[i, j]]
                - t_lg.values[[i, j]]
                - lf * gv.values[[i, j]]
                - la * gx.values[[i, j]]
                - a.deriv(v) * p * lg.values[[i, j]];
            total += r * r;
        }
    }
    (total * grid.dx * grid.dv).sqrt()
}

/// Coefficients at `t - dt, t, t + dt` followed by the residual at `t`.
pub fn commutation_check(
    force: &dyn ForceField,
    a: &AdvectionField,
    g: &dyn Manufactured,
    grid: &Grid,
    t: f64,
    dt: f64,
) -> Result<f64> {
    if t - dt < 0.0 {
        return Err(KineticError::Config(format!(
            "commutation check needs t >= dt (t = {t}, dt = {dt})"
        )));
    }
    let coeffs = solve_coeff_system_at(force, a, grid, &[t - dt, t, t + dt], dt)?;
    Ok(commutation_residual(&coeffs, force, a, g, t, dt))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{AnalyticForce, ZeroForce};
    use crate::phase_grid::build_grid;

    #[test]
    fn zero_force_gives_exact_zero_coefficients() {
        let g = build_grid(8, 16, 6.0).unwrap();
        let c = solve_coeff_system(&ZeroForce, &AdvectionField::Classical, &g, 0.05, 1e-3).unwrap();
        assert!(c
            .phi
            .iter()
            .chain(&c.psi)
            .all(|a| a.iter().all(|&x| x == 0.0)));
        assert_eq!(c.times.len(), 6);
    }

    #[test]
    fn l_at_time_zero_is_second_x_derivative() {
        let g = build_grid(16, 64, 7.0).unwrap();
        let f = AnalyticForce::sine(1.0, 1);
        let c = solve_coeff_system(&f, &AdvectionField::Classical, &g, 0.02, 1e-3).unwrap();
        let h = PhaseField::from_fn(g, |x, v| (2.0 * PI * x).sin() * (-v * v).exp());
        let l = apply_l(&c, &h, 0.0);
        let d2 = spectral_dx(&h, 2);
        let diff = (&l.values - &d2.values)
            .iter()
            .fold(0.0f64, |m, x| m.max(x.abs()));
        assert!(diff <= 1e-12);
    }

    #[test]
    fn constant_coefficients_match_symbolic_operator() {
        let g = build_grid(32, 256, 7.0).unwrap();
        let h = PhaseField::from_fn(g, |x, v| (2.0 * PI * x).sin() * (-v * v).exp());
        let l = apply_l(&CoeffPair::constant(g, 1.0, 1.0, 0.0), &h, 0.0);
        let mut worst = 0.0f64;
        for i in 0..g.nx {
            for j in 0..g.nv {
                let (x, v) = (g.x(i), g.v(j));
                let e = (-v * v).exp();
                let exact = -4.0 * PI * PI * (2.0 * PI * x).sin() * e
                    + 2.0 * PI * (2.0 * PI * x).cos() * (-2.0 * v) * e
                    + (2.0 * PI * x).sin() * (4.0 * v * v - 2.0) * e;
                worst = worst.max((l.values[[i, j]] - exact).abs());
            }
        }
        assert!(worst < 1e-4, "{worst}");
    }

    #[test]
    fn free_transport_commutes() {
        let g = build_grid(16, 64, 7.0).unwrap();
        let r = commutation_check(
            &ZeroForce,
            &AdvectionField::Classical,
            &CosGaussian::default(),
            &g,
            0.05,
            1e-3,
        )
        .unwrap();
        assert!(r <= 1e-8, "{r}");
    }
}
