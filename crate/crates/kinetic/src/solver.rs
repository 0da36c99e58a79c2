//! Semi-Lagrangian transport and the Picard construction of the nonlinear
//! solution.
//!
//! A step traces every node back by `dt` with RK4 (force frozen at the step
//! start), then evaluates the old state at the foot: trigonometric
//! interpolation in `x`, local monotone cubic in `v`. The `x` part is an exact
//! Fourier shift by `dt a(v_r)` per velocity row plus a short Taylor series in
//! the remaining offset, so free streaming is exact to roundoff.

use crate::characteristics::{check_escape, step_plan};
use crate::error::{KineticError, Result};
use crate::fourier::{rfft, shifted_derivatives, signed_mode, TrigSeries};
use crate::interp::monotone_cubic_uniform;
use crate::models::{force_assemble, AdvectionField, ForceField, ForceKind, ForceModel};
use crate::phase_grid::{
    aniso_norm, moment, spatial_sobolev_norm, weighted_l2_distance, weighted_sobolev_norm,
    winf_norm, Grid, MomentSpec, NormReport, PhaseField, SpatialField, DEFAULT_DECAY_TOL,
};
use ndarray::Array2;
use rustfft::num_complex::Complex64;
use std::fmt;
use std::sync::Arc;

pub const DEFAULT_PICARD_TOL: f64 = 1e-8;
pub const DEFAULT_PICARD_MAX: usize = 25;
/// Contraction factor of the Picard gate, with its tolerance.
pub const PICARD_GATE: f64 = 0.5;
pub const PICARD_GATE_SLACK: f64 = 1e-3;

/// Largest Taylor order used for the residual `x` offset.
const MAX_TAYLOR: u32 = 12;
/// Taylor remainder bound relative to the field maximum.
const TAYLOR_TOL: f64 = 1e-15;

/// A norm to record at every snapshot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormRequest {
    Sobolev { k: u32, r: f64 },
    Winf { k: u32, r: f64 },
    Aniso { m: f64, n: f64 },
}

impl NormRequest {
    /// Parse `kind:a:b` with kind one of `sobolev`, `winf`, `aniso`.
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let bad = |why: &str| KineticError::Config(format!("norm request '{s}': {why}"));
        if parts.len() != 3 {
            return Err(bad("expected kind:a:b"));
        }
        let real = |p: &str| -> Result<f64> {
            p.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| bad("parameters must be finite numbers"))
        };
        let order = |p: &str| -> Result<u32> {
            p.parse::<u32>()
                .map_err(|_| bad("derivative order must be a nonnegative integer"))
        };
        match parts[0] {
            "sobolev" => Ok(NormRequest::Sobolev {
                k: order(parts[1])?,
                r: real(parts[2])?,
            }),
            "winf" => Ok(NormRequest::Winf {
                k: order(parts[1])?,
                r: real(parts[2])?,
            }),
            "aniso" => Ok(NormRequest::Aniso {
                m: real(parts[1])?,
                n: real(parts[2])?,
            }),
            other => Err(bad(&format!(
                "unknown kind '{other}' (sobolev, winf, aniso)"
            ))),
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            NormRequest::Sobolev { .. } => "sobolev",
            NormRequest::Winf { .. } => "winf",
            NormRequest::Aniso { .. } => "aniso",
        }
    }

    /// The two parameters as `a:b`.
    pub fn params(&self) -> String {
        match *self {
            NormRequest::Sobolev { k, r } | NormRequest::Winf { k, r } => format!("{k}:{r}"),
            NormRequest::Aniso { m, n } => format!("{m}:{n}"),
        }
    }

    pub fn evaluate(&self, f: &PhaseField) -> Result<f64> {
        match *self {
            NormRequest::Sobolev { k, r } => weighted_sobolev_norm(f, k, r),
            NormRequest::Winf { k, r } => winf_norm(f, k, r),
            NormRequest::Aniso { m, n } => aniso_norm(f, m, n),
        }
    }
}

impl fmt::Display for NormRequest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.kind(), self.params())
    }
}

/// Everything a run needs.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub grid: Grid,
    pub advection: AdvectionField,
    pub model: ForceModel,
    pub f0: PhaseField,
    pub t_final: f64,
    pub dt: f64,
    pub picard_tol: f64,
    pub picard_max: usize,
    pub norm_requests: Vec<NormRequest>,
    /// Snapshot cadence in steps.
    pub output_every: usize,
    /// Velocity weight of the contraction distance.
    pub weight_r: f64,
}

impl Scenario {
    /// Scenario with the documented defaults for the run parameters.
    pub fn new(advection: AdvectionField, model: ForceModel, f0: PhaseField, t_final: f64) -> Self {
        Scenario {
            grid: f0.grid,
            advection,
            model,
            f0,
            t_final,
            dt: crate::characteristics::DEFAULT_DT,
            picard_tol: DEFAULT_PICARD_TOL,
            picard_max: DEFAULT_PICARD_MAX,
            norm_requests: Vec::new(),
            output_every: 100,
            weight_r: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |m: String| Err(KineticError::Config(m));
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return cfg(format!(
                "run.t_final must be positive (got {})",
                self.t_final
            ));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return cfg(format!("run.dt must be positive (got {})", self.dt));
        }
        if !(self.picard_tol > 0.0) {
            return cfg(format!(
                "run.picard_tol must be positive (got {})",
                self.picard_tol
            ));
        }
        if self.picard_max == 0 {
            return cfg("run.picard_max must be at least 1".into());
        }
        if self.output_every == 0 {
            return cfg("run.output_every must be at least 1".into());
        }
        if self.f0.grid != self.grid {
            return cfg("initial data does not live on the scenario grid".into());
        }
        if !self.f0.is_finite() {
            return Err(KineticError::Domain("initial data is not finite".into()));
        }
        self.f0.check_decay(DEFAULT_DECAY_TOL)
    }

    /// The same scenario with another final time.
    pub fn with_t_final(&self, t_final: f64) -> Self {
        let mut s = self.clone();
        s.t_final = t_final;
        s
    }
}

/// Per-step conservation diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepDiagnostics {
    pub time: f64,
    pub mass: f64,
    /// Kinetic plus field energy; only for the Poisson coupling with unit factor.
    pub energy: Option<f64>,
    pub min: f64,
}

/// Result of a run.
#[derive(Debug, Clone)]
pub struct SimOutput {
    pub snapshots: Vec<PhaseField>,
    /// Spatial force component at each snapshot.
    pub forces: Vec<Vec<SpatialField>>,
    pub norms: NormReport,
    /// `D_k / D_{k-1}` for every sweep after the first.
    pub ratios: Vec<f64>,
    /// `D_k = sup_t ||f^(k) - f^(k-1)||` in the weighted `L^2` norm.
    pub distances: Vec<f64>,
    pub sweeps: usize,
    /// All ratios at most `PICARD_GATE + PICARD_GATE_SLACK`.
    pub gate_passed: bool,
    pub history: Vec<StepDiagnostics>,
    /// Density at every step.
    pub density: Vec<SpatialField>,
    pub dt: f64,
    pub t_final: f64,
}

impl SimOutput {
    /// Largest relative mass change over the run.
    pub fn mass_drift(&self) -> f64 {
        let m0 = self.history[0].mass;
        self.history
            .iter()
            .map(|d| ((d.mass - m0) / m0).abs())
            .fold(0.0, f64::max)
    }

    /// Largest relative energy change over the run, if energy is defined.
    pub fn energy_drift(&self) -> Option<f64> {
        let e0 = self.history[0].energy?;
        Some(
            self.history
                .iter()
                .filter_map(|d| d.energy)
                .map(|e| ((e - e0) / e0).abs())
                .fold(0.0, f64::max),
        )
    }

    pub fn final_state(&self) -> &PhaseField {
        self.snapshots
            .last()
            .expect("a run stores at least one snapshot")
    }

    /// `||rho||_{L^2(0,T; H^n)}` from the per-step density history.
    pub fn density_time_norm(&self, n: f64) -> f64 {
        moment_time_norm(&self.density, n)
    }
}

/// `(int_0^T ||m(t)||_{H^n}^2 dt)^(1/2)` by the trapezoid rule over the samples.
pub fn moment_time_norm(history: &[SpatialField], n: f64) -> f64 {
    let sq: Vec<(f64, f64)> = history
        .iter()
        .map(|m| (m.time, spatial_sobolev_norm(m, n).powi(2)))
        .collect();
    sq.windows(2)
        .map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1))
        .sum::<f64>()
        .sqrt()
}

/// Kinetic energy density `e(v)` with `e' = a`: `v^2/2` or `c^2 (sqrt(1+v^2/c^2) - 1)`.
pub fn kinetic_density(a: &AdvectionField, v: f64) -> f64 {
    match *a {
        AdvectionField::Classical => 0.5 * v * v,
        AdvectionField::Relativistic { c } => c * c * ((1.0 + v * v / (c * c)).sqrt() - 1.0),
    }
}

pub fn kinetic_energy(f: &PhaseField, a: &AdvectionField) -> f64 {
    let e: Vec<f64> = f.grid.vs().iter().map(|&v| kinetic_density(a, v)).collect();
    let total: f64 = f
        .values
        .rows()
        .into_iter()
        .map(|row| row.iter().zip(&e).map(|(x, w)| x * w).sum::<f64>())
        .sum();
    total * f.grid.dx * f.grid.dv
}

/// `kinetic + sign * (1/2) int E^2` for the Poisson coupling, else `None`.
pub fn total_energy(f: &PhaseField, model: &ForceModel, a: &AdvectionField) -> Option<f64> {
    match model.kind {
        ForceKind::Poisson(sign) if model.factor.is_unit() => {
            let e = model.spatial_component(f);
            let field = 0.5 * e.values.iter().map(|x| x * x).sum::<f64>() / e.nx as f64;
            Some(kinetic_energy(f, a) + sign.value() * field)
        }
        _ => None,
    }
}

fn diagnostics(f: &PhaseField, model: &ForceModel, a: &AdvectionField) -> StepDiagnostics {
    StepDiagnostics {
        time: f.time,
        mass: f.mass(),
        energy: total_energy(f, model, a),
        min: f.values.iter().fold(f64::INFINITY, |m, &x| m.min(x)),
    }
}

#[inline]
fn rk4_frozen(
    force: &dyn ForceField,
    a: &AdvectionField,
    t: f64,
    x: f64,
    v: f64,
    h: f64,
) -> (f64, f64) {
    let k1x = a.eval(v);
    let k1v = force.value(t, x, v);
    let k2x = a.eval(v + 0.5 * h * k1v);
    let k2v = force.value(t, x + 0.5 * h * k1x, v + 0.5 * h * k1v);
    let k3x = a.eval(v + 0.5 * h * k2v);
    let k3v = force.value(t, x + 0.5 * h * k2x, v + 0.5 * h * k2v);
    let k4x = a.eval(v + h * k3v);
    let k4v = force.value(t, x + h * k3x, v + h * k3v);
    (
        x + h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x),
        v + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v),
    )
}

/// Evaluator of one velocity row `f(x, v_r)` at positions `x_i - s_r + e`.
enum RowEval {
    Zero,
    /// `d[p][i] = d^p/dx^p f_r(x_i - s_r)`.
    Taylor(Vec<Vec<f64>>),
    Direct(TrigSeries),
}

impl RowEval {
    /// Taylor data when the remainder, bounded mode by mode from the spectrum,
    /// stays below `tol` for offsets up to `emax`; direct series otherwise.
    fn build(col: &[f64], shift: f64, emax: f64, tol: f64, scratch: &mut Vec<Complex64>) -> Self {
        if col.iter().all(|&x| x == 0.0) {
            return RowEval::Zero;
        }
        let n = col.len();
        let spec = rfft(col);
        let amps: Vec<(f64, f64)> = spec
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let w = 2.0 * std::f64::consts::PI * signed_mode(k, n).unsigned_abs() as f64 * emax;
                (c.norm() / n as f64, w)
            })
            .collect();
        let mut terms: Vec<f64> = amps.iter().map(|&(a, w)| a * w).collect();
        for q in 0..=MAX_TAYLOR {
            if terms.iter().sum::<f64>() <= tol {
                return RowEval::Taylor(shifted_derivatives(&spec, shift, q, scratch));
            }
            for (t, &(_, w)) in terms.iter_mut().zip(&amps) {
                *t *= w / (q + 2) as f64;
            }
        }
        RowEval::Direct(TrigSeries::from_spectrum(&spec))
    }

    #[inline]
    fn value(&self, i: usize, x_grid: f64, shift: f64, e: f64) -> f64 {
        match self {
            RowEval::Zero => 0.0,
            RowEval::Taylor(d) => {
                // Horner in e with the factorials folded in.
                let q = d.len() - 1;
                let mut acc = d[q][i];
                for p in (0..q).rev() {
                    acc = d[p][i] + acc * e / (p + 1) as f64;
                }
                acc
            }
            RowEval::Direct(s) => s.value(x_grid - shift + e),
        }
    }
}

/// One backward semi-Lagrangian step of length `dt` with the force frozen at
/// `f.time`.
pub fn transport_step(
    f: &PhaseField,
    force: &dyn ForceField,
    a: &AdvectionField,
    dt: f64,
) -> Result<PhaseField> {
    if dt == 0.0 {
        return Ok(f.clone());
    }
    if !(dt > 0.0) {
        return Err(KineticError::Config(format!("dt = {dt} must be positive")));
    }
    let g = f.grid;
    let (nx, nv) = (g.nx, g.nv);
    let t0 = f.time;
    let shifts: Vec<f64> = (0..nv).map(|r| dt * a.eval(g.v(r))).collect();

    // Feet of the characteristics: x offset relative to the free foot of the
    // target row, and the fractional velocity index.
    let zero_force = force.is_zero();
    let mut foot_dx = Array2::<f64>::zeros((nx, nv));
    let mut foot_p = Array2::<f64>::zeros((nx, nv));
    let mut emax = 0.0f64;
    for i in 0..nx {
        let x = g.x(i);
        for j in 0..nv {
            let v = g.v(j);
            if zero_force {
                foot_p[[i, j]] = j as f64;
                continue;
            }
            let (xf, vf) = rk4_frozen(force, a, t0, x, v, -dt);
            check_escape(v, vf, g.v_cut)?;
            let p = j as f64 + (vf - v) / g.dv;
            let d = xf - (x - shifts[j]);
            foot_dx[[i, j]] = d;
            foot_p[[i, j]] = p;
            let jv = p.floor() as isize;
            for r in (jv - 1).max(0)..(jv + 3).min(nv as isize) {
                emax = emax.max((d + shifts[j] - shifts[r as usize]).abs());
            }
        }
    }

    let tol = TAYLOR_TOL * f.max_abs();
    let mut scratch: Vec<Complex64> = Vec::with_capacity(nx);
    let rows: Vec<RowEval> = (0..nv)
        .map(|r| {
            RowEval::build(
                &f.values.column(r).to_vec(),
                shifts[r],
                emax,
                tol,
                &mut scratch,
            )
        })
        .collect();

    let mut out = Array2::<f64>::zeros((nx, nv));
    for i in 0..nx {
        let xg = g.x(i);
        for j in 0..nv {
            let p = foot_p[[i, j]];
            let jv = p.floor();
            let theta = p - jv;
            let jv = jv as isize;
            let d = foot_dx[[i, j]];
            let mut y = [0.0; 4];
            for (k, slot) in y.iter_mut().enumerate() {
                let r = jv - 1 + k as isize;
                if r < 0 || r >= nv as isize {
                    continue;
                }
                let r = r as usize;
                // Foot relative to the exactly shifted row: x_i - s_r + e.
                let e = d + shifts[r] - shifts[j];
                *slot = rows[r].value(i, xg, shifts[r], e);
            }
            out[[i, j]] = if theta == 0.0 {
                y[1]
            } else {
                monotone_cubic_uniform(y, theta)
            };
        }
    }
    Ok(PhaseField {
        grid: g,
        values: out,
        time: t0 + dt,
    })
}

/// The shared time mesh of a scenario.
fn time_mesh(s: &Scenario) -> (usize, f64) {
    step_plan(0.0, s.t_final, s.dt)
}

/// One Picard sweep: forces assembled from `prev` (sampled on the time mesh),
/// `f0` transported through them.
pub fn picard_iterate(prev: &[PhaseField], scenario: &Scenario) -> Result<Vec<PhaseField>> {
    let (n, h) = time_mesh(scenario);
    if prev.len() != n + 1 {
        return Err(KineticError::Config(format!(
            "previous trajectory has {} samples, the time mesh needs {}",
            prev.len(),
            n + 1
        )));
    }
    let mut out = Vec::with_capacity(n + 1);
    out.push(scenario.f0.clone().with_time(0.0));
    for k in 0..n {
        let force = force_assemble(&scenario.model, &prev[k])?;
        let next = transport_step(&out[k], force.as_ref(), &scenario.advection, h)?;
        out.push(next.with_time((k + 1) as f64 * h));
    }
    Ok(out)
}

fn trajectory_distance(a: &[PhaseField], b: &[PhaseField], r: f64) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| weighted_l2_distance(x, y, r))
        .fold(0.0, f64::max)
}

fn is_snapshot(k: usize, n: usize, every: usize) -> bool {
    k % every == 0 || k == n
}

fn record(scenario: &Scenario, traj: &[PhaseField]) -> Result<SimOutput> {
    let (n, h) = time_mesh(scenario);
    let mut out = SimOutput {
        snapshots: Vec::new(),
        forces: Vec::new(),
        norms: NormReport::default(),
        ratios: Vec::new(),
        distances: Vec::new(),
        sweeps: 0,
        gate_passed: true,
        history: Vec::with_capacity(n + 1),
        density: Vec::with_capacity(n + 1),
        dt: h,
        t_final: scenario.t_final,
    };
    for (k, f) in traj.iter().enumerate() {
        push_state(
            &mut out,
            scenario,
            f,
            is_snapshot(k, n, scenario.output_every),
        )?;
    }
    Ok(out)
}

fn push_state(
    out: &mut SimOutput,
    scenario: &Scenario,
    f: &PhaseField,
    snapshot: bool,
) -> Result<()> {
    out.history
        .push(diagnostics(f, &scenario.model, &scenario.advection));
    out.density.push(moment(f, &MomentSpec::density()));
    if snapshot {
        for req in &scenario.norm_requests {
            out.norms
                .insert(req.kind(), &req.params(), f.time, req.evaluate(f)?);
        }
        out.forces.push(vec![scenario.model.spatial_component(f)]);
        out.snapshots.push(f.clone());
    }
    Ok(())
}

/// Picard sweeps from the frozen initial guess until the trajectory distance
/// drops below `picard_tol`.
pub fn run_simulation(scenario: &Scenario) -> Result<SimOutput> {
    scenario.validate()?;
    let (n, h) = time_mesh(scenario);
    let mut prev: Vec<PhaseField> = (0..=n)
        .map(|k| scenario.f0.clone().with_time(k as f64 * h))
        .collect();
    if !scenario.model.is_self_consistent() {
        let traj = picard_iterate(&prev, scenario)?;
        let mut out = record(scenario, &traj)?;
        out.sweeps = 1;
        return Ok(out);
    }
    let mut distances = Vec::new();
    let mut ratios = Vec::new();
    for _ in 0..scenario.picard_max {
        let next = picard_iterate(&prev, scenario)?;
        let d = trajectory_distance(&next, &prev, scenario.weight_r);
        if let Some(&last) = distances.last() {
            ratios.push(d / last);
        }
        distances.push(d);
        prev = next;
        if d < scenario.picard_tol {
            let mut out = record(scenario, &prev)?;
            out.sweeps = distances.len();
            out.gate_passed = ratios.iter().all(|&r| r <= PICARD_GATE + PICARD_GATE_SLACK);
            out.ratios = ratios;
            out.distances = distances;
            return Ok(out);
        }
    }
    Err(KineticError::NonConvergence { ratios, distances })
}

/// March the fixed point of the Picard map directly: each step uses the force
/// of the current state. With the force frozen at the step start this is
/// exactly the limit of the sweeps in [`run_simulation`].
pub fn run_sequential(scenario: &Scenario) -> Result<SimOutput> {
    scenario.validate()?;
    run_with_forces(scenario, |_, f| force_assemble(&scenario.model, f))
}

/// March `f0` with a caller-supplied force per step (`(step, state) -> force`).
pub fn run_with_forces(
    scenario: &Scenario,
    mut force_at: impl FnMut(usize, &PhaseField) -> Result<Arc<dyn ForceField>>,
) -> Result<SimOutput> {
    let (n, h) = time_mesh(scenario);
    let mut out = record(scenario, &[])?;
    out.sweeps = 1;
    let mut f = scenario.f0.clone().with_time(0.0);
    push_state(&mut out, scenario, &f, true)?;
    for k in 0..n {
        let force = force_at(k, &f)?;
        f = transport_step(&f, force.as_ref(), &scenario.advection, h)?
            .with_time((k + 1) as f64 * h);
        push_state(
            &mut out,
            scenario,
            &f,
            is_snapshot(k + 1, n, scenario.output_every),
        )?;
    }
    Ok(out)
}

/// Largest final time (found by halving, then bisection) at which the Picard
/// sweeps converge with every contraction ratio under the gate.
pub fn find_horizon(scenario: &Scenario, refinements: usize) -> Result<(f64, SimOutput)> {
    let accept = |t: f64| -> Result<Option<SimOutput>> {
        match run_simulation(&scenario.with_t_final(t)) {
            Ok(out) if out.gate_passed => Ok(Some(out)),
            Ok(_) => Ok(None),
            Err(e) if e.is_horizon() => Ok(None),
            Err(e) => Err(e),
        }
    };
    let mut hi = scenario.t_final;
    if let Some(out) = accept(hi)? {
        return Ok((hi, out));
    }
    let mut best = None;
    let mut lo = hi;
    for _ in 0..20 {
        lo *= 0.5;
        if lo < scenario.dt {
            break;
        }
        if let Some(out) = accept(lo)? {
            best = Some((lo, out));
            break;
        }
        hi = lo;
    }
    let Some((mut good, mut good_out)) = best else {
        return Err(KineticError::Horizon(
            "no final time down to one step passes the contraction gate".into(),
        ));
    };
    for _ in 0..refinements {
        let mid = 0.5 * (good + hi);
        match accept(mid)? {
            Some(out) => {
                good = mid;
                good_out = out;
            }
            None => hi = mid,
        }
    }
    Ok((good, good_out))
}
