//! Counterexamples bounding moment-regularity propagation.
//!
//! * Free transport of `g(x) phi(v)` with `g` the indicator of `[-1, 1]` and
//!   `phi` the derivative of a smooth bump: the density starts at zero, yet
//!   `||d_x^k rho(t)||` blows up as `t -> 0`.
//! * Superposition: a moment force whose test function sees only part of the
//!   phase space splits the nonlinear solution into a self-consistent driver
//!   plus a passive component transported linearly by the driver's force.
//!   The split is exact until the supports meet.

use crate::error::{CliError, Result};
use kinetic::models::{force_assemble, AdvectionField, ForceModel};
use kinetic::phase_grid::{build_grid, weighted_l2_distance, Grid, MomentSpec, PhaseField};
use kinetic::profiles::{half_bump_derivative, interval_bump};
use kinetic::solver::{run_sequential, run_with_forces, Scenario, SimOutput};
use kinetic::KineticError;
use std::f64::consts::PI;

/// Largest `t` for which the two translates of `phi` stay disjoint on the line.
pub const EXAMPLE1_T_MAX: f64 = 2.0;

const PHI_NODES: usize = 4000;
const X_NODES_PER_UNIT: f64 = 20000.0;

/// Trapezoid rule on `[lo, hi]`; spectrally accurate for integrands that
/// vanish with all derivatives at both ends.
fn trapezoid(lo: f64, hi: f64, n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let h = (hi - lo) / n as f64;
    let inner: f64 = (1..n).map(|i| f(lo + i as f64 * h)).sum();
    h * (inner + 0.5 * (f(lo) + f(hi)))
}

/// `||phi^{(j)}||_{L^2}^2` for `phi = d/dv exp(-1/(1-(2v)^2))`.
pub fn phi_derivative_norm_sq(j: u32) -> f64 {
    trapezoid(-0.5, 0.5, PHI_NODES, |v| half_bump_derivative(v, j + 1).powi(2))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Example1 {
    pub k: u32,
    pub t: f64,
    /// `(2 / t^{2(k-1)-1})^{1/2} ||phi^{(k-1)}||`.
    pub exact: f64,
    /// L2 quadrature of the translate formula
    /// `t^{-(k-1)} (phi^{(k-1)}((x+1)/t) - phi^{(k-1)}((x-1)/t))`.
    pub quadrature: f64,
    /// Norm of `d_x^k` of the density of the transported data itself. The
    /// chain rule puts one more factor `1/t` in front of the translates than
    /// the formula above carries.
    pub transported: f64,
}

pub fn counterexample1(k: u32, t: f64) -> Result<Example1> {
    if !(1..=3).contains(&k) {
        return Err(KineticError::Validity(format!(
            "derivative order k = {k} outside 1..=3"
        ))
        .into());
    }
    if !(t > 0.0 && t <= EXAMPLE1_T_MAX) {
        return Err(KineticError::Validity(format!(
            "t = {t}: the translates overlap beyond t = {EXAMPLE1_T_MAX}"
        ))
        .into());
    }
    let p = 2.0 * (k as f64 - 1.0) - 1.0;
    let exact = (2.0 / t.powf(p) * phi_derivative_norm_sq(k - 1)).sqrt();
    let scale = t.powi(-(k as i32 - 1));
    let d = |x: f64| {
        scale * (half_bump_derivative((x + 1.0) / t, k) - half_bump_derivative((x - 1.0) / t, k))
    };
    let (lo, hi) = (-1.0 - 0.5 * t, 1.0 + 0.5 * t);
    let n = ((hi - lo) * X_NODES_PER_UNIT).ceil() as usize;
    let quadrature = trapezoid(lo, hi, n, |x| d(x).powi(2)).sqrt();
    Ok(Example1 {
        k,
        t,
        exact,
        quadrature,
        transported: exact / t,
    })
}

/// Density of the transported data, `rho(t, x) = B((x+1)/t) - B((x-1)/t)`
/// with `B` the bump whose derivative is `phi`.
pub fn example1_density(t: f64, x: f64) -> f64 {
    half_bump_derivative((x + 1.0) / t, 0) - half_bump_derivative((x - 1.0) / t, 0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    Example2,
    Example3,
}

impl Which {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "example2" => Ok(Which::Example2),
            "example3" => Ok(Which::Example3),
            other => Err(CliError::invalid(
                "--which",
                format!("must be example2 or example3 (got '{other}')"),
            )),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Which::Example2 => "example2",
            Which::Example3 => "example3",
        }
    }
}

/// Everything the superposition runs need. `driver` is the component seen by
/// the moment, `passive` the one that must stay out of its reach.
#[derive(Debug, Clone)]
pub struct SuperpositionSetup {
    pub which: Which,
    pub grid: Grid,
    /// `psi = amplitude * exp(-1/(1-(2v)^2))`.
    pub psi_amplitude: f64,
    /// Force `m_psi(x + shift)`.
    pub shift: f64,
    pub driver: PhaseField,
    pub passive: PhaseField,
    pub dt: f64,
    pub t_final: f64,
}

impl SuperpositionSetup {
    /// Driver in `v` within `[-1/2, 1/2]` under `psi`, passive in `[1, 2]`.
    /// The force is negative, so both drift down until the passive component
    /// enters the support of `psi`.
    pub fn example2() -> Self {
        let grid = build_grid(64, 256, 4.0).expect("static grid");
        SuperpositionSetup {
            which: Which::Example2,
            grid,
            psi_amplitude: -400.0,
            shift: 0.0,
            driver: PhaseField::from_fn(grid, |x, v| {
                (1.0 + 0.5 * (2.0 * PI * x).cos()) * half_bump_derivative(v, 0)
            }),
            passive: PhaseField::from_fn(grid, |x, v| {
                (1.0 + 0.5 * (2.0 * PI * x).sin()) * interval_bump(v, 1.0, 2.0)
            }),
            dt: 2e-3,
            t_final: 0.2,
        }
    }

    /// Passive in `x` within `[0, 1/8]`, driver in `[1/4, 3/8]`, force read a
    /// quarter period ahead: the driver pushes the passive part and feels
    /// nothing until the spreading supports line up with the shift.
    pub fn example3() -> Self {
        let grid = build_grid(256, 128, 3.0).expect("static grid");
        SuperpositionSetup {
            which: Which::Example3,
            grid,
            psi_amplitude: 20.0,
            shift: 0.25,
            driver: PhaseField::from_fn(grid, |x, v| {
                interval_bump(x, 0.25, 0.375) * interval_bump(v, -1.0, 1.0)
            }),
            passive: PhaseField::from_fn(grid, |x, v| {
                interval_bump(x, 0.0, 0.125) * interval_bump(v, -1.0, 1.0)
            }),
            dt: 2e-3,
            t_final: 0.3,
        }
    }

    pub fn model(&self) -> ForceModel {
        let a = self.psi_amplitude;
        ForceModel::moment_force(
            MomentSpec::new("half_bump", move |v| a * half_bump_derivative(v, 0), 0.0, 3),
            self.shift,
        )
    }

    fn scenario(&self, f0: PhaseField, dt: f64) -> Scenario {
        let mut s = Scenario::new(AdvectionField::Classical, self.model(), f0, self.t_final);
        s.dt = dt;
        s.output_every = 1;
        s
    }

    /// Contact indicator: the passive component's own force, weighted by
    /// where the total field lives, relative to the initial driver force.
    fn contact(&self, model: &ForceModel, passive: &PhaseField, total: &PhaseField, norm: f64) -> f64 {
        let fp = model.spatial_component(passive);
        let g = self.grid;
        let worst = (0..g.nx)
            .map(|i| {
                let m = total.values.row(i).iter().fold(0.0f64, |a, x| a.max(x.abs()));
                fp.values[i].abs() * m
            })
            .fold(0.0, f64::max);
        worst / norm
    }

    /// Disjoint supports on the grid and no initial contact.
    pub fn validate(&self) -> Result<()> {
        if self.driver.grid != self.grid || self.passive.grid != self.grid {
            return Err(CliError::invalid("superposition", "components live on different grids"));
        }
        let overlap = self
            .driver
            .values
            .iter()
            .zip(self.passive.values.iter())
            .any(|(a, b)| *a != 0.0 && *b != 0.0);
        if overlap {
            return Err(CliError::invalid(
                "superposition",
                "driver and passive supports overlap",
            ));
        }
        let model = self.model();
        let total = self.driver.combine(1.0, &self.passive, 1.0);
        let norm = driver_scale(&model, &self.driver, &total);
        if norm == 0.0 {
            return Err(CliError::invalid("superposition", "the driver exerts no force"));
        }
        if self.contact(&model, &self.passive, &total, norm) > CONTACT_TOL {
            return Err(CliError::invalid(
                "superposition",
                "the passive component starts inside the reach of the moment",
            ));
        }
        Ok(())
    }
}

fn driver_scale(model: &ForceModel, driver: &PhaseField, total: &PhaseField) -> f64 {
    model.spatial_component(driver).max_abs() * total.max_abs()
}

/// Contact is declared when the indicator exceeds this. The Fourier shift in
/// `x` leaks a floor of about `5e-5` into the indicator for the example 3
/// bumps at 32 cells per support, so the threshold sits well above it.
pub const CONTACT_TOL: f64 = 1e-3;

#[derive(Debug, Clone)]
pub struct SuperpositionReport {
    pub which: Which,
    pub times: Vec<f64>,
    /// `||f - (f_driver + f_passive)||_{L^2}` per step.
    pub residual: Vec<f64>,
    pub contact: Vec<f64>,
    pub contact_time: Option<f64>,
    /// Sup distance between the coupled runs at `dt` and `dt/2` before contact.
    pub step_error: f64,
    pub pre_contact_max: f64,
    pub post_contact_max: f64,
}

impl SuperpositionReport {
    pub fn growth(&self) -> f64 {
        self.post_contact_max / self.pre_contact_max
    }
}

fn states(out: &SimOutput) -> &[PhaseField] {
    &out.snapshots
}

pub fn counterexample_superposition(setup: &SuperpositionSetup) -> Result<SuperpositionReport> {
    setup.validate()?;
    let model = setup.model();
    let total0 = setup.driver.combine(1.0, &setup.passive, 1.0);
    let coupled = run_sequential(&setup.scenario(total0.clone(), setup.dt))?;
    let driver = run_sequential(&setup.scenario(setup.driver.clone(), setup.dt))?;
    let drv = states(&driver);
    let passive = run_with_forces(&setup.scenario(setup.passive.clone(), setup.dt), |k, _| {
        force_assemble(&model, &drv[k])
    })?;

    let norm = driver_scale(&model, &setup.driver, &total0);
    let mut times = Vec::new();
    let mut residual = Vec::new();
    let mut contact = Vec::new();
    for ((f, d), p) in states(&coupled).iter().zip(drv).zip(states(&passive)) {
        let sum = d.combine(1.0, p, 1.0);
        times.push(f.time);
        residual.push(weighted_l2_distance(f, &sum, 0.0));
        contact.push(setup.contact(&model, p, &sum, norm));
    }
    let first = contact.iter().position(|&c| c > CONTACT_TOL);
    let contact_time = first.map(|k| times[k]);
    let cut = first.unwrap_or(times.len());

    let half = run_sequential(&setup.scenario(total0, 0.5 * setup.dt))?;
    let fine = states(&half);
    let step_error = states(&coupled)[..cut]
        .iter()
        .enumerate()
        .map(|(k, f)| weighted_l2_distance(f, &fine[2 * k], 0.0))
        .fold(0.0, f64::max);

    let pre_contact_max = residual[..cut].iter().cloned().fold(0.0, f64::max);
    let post_contact_max = residual[cut..].iter().cloned().fold(0.0, f64::max);
    Ok(SuperpositionReport {
        which: setup.which,
        times,
        residual,
        contact,
        contact_time,
        step_error,
        pre_contact_max,
        post_contact_max,
    })
}
