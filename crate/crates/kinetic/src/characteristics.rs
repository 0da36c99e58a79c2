//! Characteristic flows of `d_t + a(v) d_x + F d_v`, velocity-map inversion,
//! Liouville determinants and the Burgers straightening of the force.
//!
//! Positions are accumulated unwrapped during integration and reduced mod 1
//! only when stored.

use crate::error::{KineticError, Result};
use crate::fourier::TrigSeries;
use crate::interp::MonotoneCubic;
use crate::models::{AdvectionField, ForceField};
use crate::phase_grid::{fd_dv, spectral_dx, Grid, PhaseField};
use ndarray::Array2;

/// Fraction of `v_cut` inside which trajectories are tracked for escape.
pub const ESCAPE_BAND: f64 = 0.95;

/// Default RK4 step.
pub const DEFAULT_DT: f64 = 1e-3;

#[inline]
pub(crate) fn rk4_step(
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
    let k2v = force.value(t + 0.5 * h, x + 0.5 * h * k1x, v + 0.5 * h * k1v);
    let k3x = a.eval(v + 0.5 * h * k2v);
    let k3v = force.value(t + 0.5 * h, x + 0.5 * h * k2x, v + 0.5 * h * k2v);
    let k4x = a.eval(v + h * k3v);
    let k4v = force.value(t + h, x + h * k3x, v + h * k3v);
    (
        x + h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x),
        v + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v),
    )
}

/// Reduce to `[0, 1)`; `rem_euclid` alone rounds tiny negatives up to `1.0`.
fn wrap_unit(x: f64) -> f64 {
    let r = x.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// Number of steps and signed step size covering `from -> to` with `|h| <= dt`.
pub fn step_plan(from: f64, to: f64, dt: f64) -> (usize, f64) {
    let span = to - from;
    if span == 0.0 {
        return (0, 0.0);
    }
    let n = ((span.abs() / dt) - 1e-9).ceil().max(1.0) as usize;
    (n, span / n as f64)
}

/// Escape test: a trajectory that started inside the certified band must
/// stay on the velocity grid.
#[inline]
pub fn check_escape(v0: f64, v: f64, v_cut: f64) -> Result<()> {
    if v0.abs() <= ESCAPE_BAND * v_cut && v.abs() > v_cut {
        Err(KineticError::VelocityEscape {
            speed: v.abs(),
            v_cut,
        })
    } else {
        Ok(())
    }
}

/// Integrate one characteristic from `(t0, x0, v0)` to time `t1`; returns the
/// unwrapped position and the velocity.
pub fn trace_point(
    force: &dyn ForceField,
    a: &AdvectionField,
    t0: f64,
    x0: f64,
    v0: f64,
    t1: f64,
    dt: f64,
) -> (f64, f64) {
    let (n, h) = step_plan(t0, t1, dt);
    let (mut x, mut v) = (x0, v0);
    for k in 0..n {
        (x, v) = rk4_step(force, a, t0 + k as f64 * h, x, v, h);
    }
    (x, v)
}

/// Sampled characteristic map `(x, v) -> (X, V)(s; t, x, v)`.
#[derive(Debug, Clone)]
pub struct FlowMap {
    /// Arrival time.
    pub s: f64,
    /// Departure time.
    pub t: f64,
    /// Arrival positions reduced mod 1.
    pub x: Array2<f64>,
    pub v: Array2<f64>,
    /// Unwrapped displacement `X - x`, periodic in `x`.
    pub displacement: Array2<f64>,
    pub grid: Grid,
}

/// Trace every grid node from time `from_t` to `to_s` with RK4 (forward or
/// backward in time).
pub fn trace_flow(
    force: &dyn ForceField,
    a: &AdvectionField,
    from_t: f64,
    to_s: f64,
    grid: &Grid,
    dt: f64,
) -> Result<FlowMap> {
    if !(dt > 0.0) {
        return Err(KineticError::Config(format!("dt = {dt} must be positive")));
    }
    let (n, h) = step_plan(from_t, to_s, dt);
    let mut xs = Array2::zeros((grid.nx, grid.nv));
    let mut vs = Array2::zeros((grid.nx, grid.nv));
    let mut disp = Array2::zeros((grid.nx, grid.nv));
    for i in 0..grid.nx {
        let x0 = grid.x(i);
        for j in 0..grid.nv {
            let v0 = grid.v(j);
            let (mut x, mut v) = (x0, v0);
            for k in 0..n {
                (x, v) = rk4_step(force, a, from_t + k as f64 * h, x, v, h);
                check_escape(v0, v, grid.v_cut)?;
            }
            xs[[i, j]] = wrap_unit(x);
            vs[[i, j]] = v;
            disp[[i, j]] = x - x0;
        }
    }
    Ok(FlowMap {
        s: to_s,
        t: from_t,
        x: xs,
        v: vs,
        displacement: disp,
        grid: *grid,
    })
}

/// Inverse of the sampled velocity map `v -> V(x_i, v)` on one x-column.
#[derive(Debug, Clone)]
pub struct VelocityInverse {
    forward: MonotoneCubic,
}

impl VelocityInverse {
    /// Monotone cubic interpolant of the forward column.
    pub fn forward(&self, v: f64) -> f64 {
        self.forward.eval(v)
    }

    /// `V^{-1}(w)`: exact inverse of the forward interpolant.
    pub fn eval(&self, w: f64) -> f64 {
        self.forward
            .invert(w)
            .expect("monotonicity checked at construction")
    }
}

/// Invert the column `v -> V(x_i, v)` of a flow map.
pub fn invert_velocity_map(flow: &FlowMap, column: usize) -> Result<VelocityInverse> {
    let vs = flow.grid.vs();
    let col: Vec<f64> = flow.v.row(column).to_vec();
    invert_sampled_column(&vs, &col)
}

/// Invert a sampled map `v_j -> w_j`; fails unless strictly increasing.
pub fn invert_sampled_column(vs: &[f64], ws: &[f64]) -> Result<VelocityInverse> {
    if let Some(j) = ws.windows(2).position(|w| !(w[1] > w[0])) {
        return Err(KineticError::NotDiffeomorphism(format!(
            "velocity map is not strictly increasing at row {j}"
        )));
    }
    Ok(VelocityInverse {
        forward: MonotoneCubic::new(vs.to_vec(), ws.to_vec())?,
    })
}

/// Jacobian determinant of `(x, v) -> (X, V)`: spectral in `x` (on the
/// periodic displacement), fourth-order differences in `v`.
pub fn liouville_det(flow: &FlowMap) -> PhaseField {
    let g = flow.grid;
    let disp = PhaseField::from_values(g, flow.displacement.clone(), flow.s).unwrap();
    let vel = PhaseField::from_values(g, flow.v.clone(), flow.s).unwrap();
    let dx_disp = spectral_dx(&disp, 1);
    let dv_disp = fd_dv(&disp, 1).field;
    let dx_vel = spectral_dx(&vel, 1);
    let dv_vel = fd_dv(&vel, 1).field;
    let mut det = Array2::zeros((g.nx, g.nv));
    for i in 0..g.nx {
        for j in 0..g.nv {
            let xx = 1.0 + dx_disp.values[[i, j]];
            let xv = dv_disp.values[[i, j]];
            let vx = dx_vel.values[[i, j]];
            let vv = dv_vel.values[[i, j]];
            det[[i, j]] = xx * vv - xv * vx;
        }
    }
    PhaseField {
        grid: g,
        values: det,
        time: flow.s,
    }
}

/// Straightening field `Phi(t_n, x, v)` solving `d_t Phi + a(Phi) d_x Phi = F(t, x, Phi)`
/// with `Phi(0) = v`.
#[derive(Debug, Clone)]
pub struct BurgersField {
    pub phi: Vec<Array2<f64>>,
    pub times: Vec<f64>,
    pub grid: Grid,
}

impl BurgersField {
    /// Largest sup-norm change of `Phi - v` between consecutive stored times.
    pub fn max_jump(&self) -> f64 {
        self.phi
            .windows(2)
            .map(|w| {
                w[0].iter()
                    .zip(w[1].iter())
                    .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
            })
            .fold(0.0, f64::max)
    }

    /// Index `n` with `times[n] <= t <= times[n+1]` and the interpolation weight.
    fn bracket(&self, t: f64) -> (usize, f64) {
        let last = self.times.len() - 1;
        if t <= self.times[0] || last == 0 {
            return (0, 0.0);
        }
        if t >= self.times[last] {
            return (last - 1, 1.0);
        }
        let n = self.times.partition_point(|&s| s <= t) - 1;
        let w = (t - self.times[n]) / (self.times[n + 1] - self.times[n]);
        (n, w)
    }
}

/// Re-grid scattered periodic data `(y_i, phi_i)` (one period, `y` increasing)
/// onto the uniform grid by monotone cubic interpolation.
fn regrid_periodic(ys: &[f64], vals: &[f64], nx: usize) -> Result<Vec<f64>> {
    let n = ys.len();
    let shift = ys[0].floor();
    let mut ext_y = Vec::with_capacity(3 * n);
    let mut ext_v = Vec::with_capacity(3 * n);
    for p in -1..=1 {
        for i in 0..n {
            ext_y.push(ys[i] - shift + p as f64);
            ext_v.push(vals[i]);
        }
    }
    let c = MonotoneCubic::new(ext_y, ext_v)?;
    Ok((0..nx).map(|k| c.eval(k as f64 / nx as f64)).collect())
}

fn check_no_crossing(ys: &[f64], t: f64) -> Result<()> {
    let n = ys.len();
    let ordered = ys.windows(2).all(|w| w[1] > w[0]) && ys[n - 1] < ys[0] + 1.0;
    if ordered {
        Ok(())
    } else {
        Err(KineticError::Shock { time: t })
    }
}

/// Solve the label-wise Burgers problem by forward characteristics from all
/// `x_0` with `Phi(0) = v`, re-gridded by monotone cubic interpolation every
/// `store_every` steps. Crossing characteristics raise a shock error.
pub fn solve_burgers(
    force: &dyn ForceField,
    a: &AdvectionField,
    grid: &Grid,
    t_final: f64,
    dt: f64,
    store_every: usize,
) -> Result<BurgersField> {
    let (nsteps, h) = step_plan(0.0, t_final, dt);
    let store_every = store_every.max(1);
    let mut stored_steps: Vec<usize> = (0..=nsteps).step_by(store_every).collect();
    if *stored_steps.last().unwrap() != nsteps {
        stored_steps.push(nsteps);
    }
    let times: Vec<f64> = stored_steps.iter().map(|&k| k as f64 * h).collect();
    let mut phi: Vec<Array2<f64>> = vec![Array2::zeros((grid.nx, grid.nv)); times.len()];
    for j in 0..grid.nv {
        let v0 = grid.v(j);
        let mut ys: Vec<f64> = grid.xs();
        let mut ps = vec![v0; grid.nx];
        for i in 0..grid.nx {
            phi[0][[i, j]] = v0;
        }
        let mut slot = 1;
        for k in 0..nsteps {
            let t = k as f64 * h;
            for i in 0..grid.nx {
                let (y, p) = rk4_step(force, a, t, ys[i], ps[i], h);
                check_escape(v0, p, grid.v_cut)?;
                ys[i] = y;
                ps[i] = p;
            }
            check_no_crossing(&ys, t + h)?;
            if slot < stored_steps.len() && stored_steps[slot] == k + 1 {
                let col = regrid_periodic(&ys, &ps, grid.nx)?;
                for i in 0..grid.nx {
                    phi[slot][[i, j]] = col[i];
                }
                slot += 1;
            }
        }
    }
    Ok(BurgersField {
        phi,
        times,
        grid: *grid,
    })
}

/// First time at which characteristics of the Burgers problem cross, if any
/// before `t_max`: the empirical straightening horizon.
pub fn burgers_horizon(
    force: &dyn ForceField,
    a: &AdvectionField,
    grid: &Grid,
    t_max: f64,
    dt: f64,
) -> Option<f64> {
    match solve_burgers(force, a, grid, t_max, dt, usize::MAX) {
        Ok(_) => None,
        Err(KineticError::Shock { time }) => Some(time),
        Err(_) => None,
    }
}

/// Straightened flow between times `s` and `t`.
#[derive(Debug, Clone)]
pub struct StraightenedFlow {
    pub s: f64,
    pub t: f64,
    /// Unwrapped `X(t, s, x_i, v_j)`.
    pub x: Array2<f64>,
    /// `(X - x)/(t - s) - a(v)` (zero when `t = s`).
    pub xtilde: Array2<f64>,
    /// `Psi(t, s, x_i, v_j)` with `X(t, s, x_i, Psi) = x_i + (t - s) a(v_j)`.
    pub psi: Array2<f64>,
    /// Per-column interpolants of `X` in the label (absent when `t = s`).
    columns: Option<Vec<MonotoneCubic>>,
    orientation: f64,
    pub grid: Grid,
}

impl StraightenedFlow {
    /// `X(t, s, x_i, w)` at an arbitrary label `w` by monotone cubic
    /// interpolation of the sampled column.
    pub fn eval(&self, i: usize, w: f64) -> f64 {
        match &self.columns {
            Some(c) => self.orientation * c[i].eval(w),
            None => self.grid.x(i),
        }
    }

    /// `max |X(t, s, x, Psi) - x - (t - s) a(v)|` over the grid.
    pub fn identity_residual(&self, a: &AdvectionField) -> f64 {
        let g = self.grid;
        let mut worst = 0.0f64;
        for i in 0..g.nx {
            for j in 0..g.nv {
                let target = g.x(i) + (self.t - self.s) * a.eval(g.v(j));
                worst = worst.max((self.eval(i, self.psi[[i, j]]) - target).abs());
            }
        }
        worst
    }
}

/// Fourier-in-x, linear-in-time evaluator of `Phi(t, x, v_j)`.
struct PhiEvaluator<'a> {
    field: &'a BurgersField,
    series: Vec<Vec<TrigSeries>>,
}

impl<'a> PhiEvaluator<'a> {
    fn new(field: &'a BurgersField) -> Self {
        let g = field.grid;
        let series = field
            .phi
            .iter()
            .map(|p| {
                (0..g.nv)
                    .map(|j| TrigSeries::from_samples(&p.column(j).to_vec()))
                    .collect()
            })
            .collect();
        PhiEvaluator { field, series }
    }

    fn eval(&self, t: f64, x: f64, j: usize) -> f64 {
        let (n, w) = self.field.bracket(t);
        if self.series.len() == 1 {
            return self.series[0][j].value(x);
        }
        let lo = self.series[n][j].value(x);
        if w == 0.0 {
            return lo;
        }
        (1.0 - w) * lo + w * self.series[n + 1][j].value(x)
    }
}

/// Integrate `d_t X = a(Phi(t, X, v))` from `X(s) = x` to time `t` for every
/// grid node, then build `X~` and `Psi` by per-column monotone inversion.
pub fn straightened_flow(
    burgers: &BurgersField,
    a: &AdvectionField,
    s: f64,
    t: f64,
    dt: f64,
) -> Result<StraightenedFlow> {
    let g = burgers.grid;
    let t_end = *burgers.times.last().unwrap();
    for &time in &[s, t] {
        if time < -1e-12 || time > t_end + 1e-12 {
            return Err(KineticError::Horizon(format!(
                "time {time} outside the Burgers field range [0, {t_end}]"
            )));
        }
    }
    let eval = PhiEvaluator::new(burgers);
    let (n, h) = step_plan(s, t, dt);
    let mut xs = Array2::zeros((g.nx, g.nv));
    let mut xtilde = Array2::zeros((g.nx, g.nv));
    for j in 0..g.nv {
        let v = g.v(j);
        for i in 0..g.nx {
            let mut y = g.x(i);
            for k in 0..n {
                let tau = s + k as f64 * h;
                let k1 = a.eval(eval.eval(tau, y, j));
                let k2 = a.eval(eval.eval(tau + 0.5 * h, y + 0.5 * h * k1, j));
                let k3 = a.eval(eval.eval(tau + 0.5 * h, y + 0.5 * h * k2, j));
                let k4 = a.eval(eval.eval(tau + h, y + h * k3, j));
                y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            }
            xs[[i, j]] = y;
            if t != s {
                xtilde[[i, j]] = (y - g.x(i)) / (t - s) - a.eval(v);
            }
        }
    }
    let vs = g.vs();
    let orientation = if t >= s { 1.0 } else { -1.0 };
    let mut psi = Array2::zeros((g.nx, g.nv));
    if t == s {
        for i in 0..g.nx {
            for j in 0..g.nv {
                psi[[i, j]] = vs[j];
            }
        }
        return Ok(StraightenedFlow {
            s,
            t,
            x: xs,
            xtilde,
            psi,
            columns: None,
            orientation,
            grid: g,
        });
    }
    let mut columns = Vec::with_capacity(g.nx);
    for i in 0..g.nx {
        let col: Vec<f64> = xs.row(i).iter().map(|y| orientation * y).collect();
        let inv = invert_sampled_column(&vs, &col)?;
        for j in 0..g.nv {
            let target = orientation * (g.x(i) + (t - s) * a.eval(vs[j]));
            psi[[i, j]] = inv.eval(target);
        }
        columns.push(inv.forward);
    }
    Ok(StraightenedFlow {
        s,
        t,
        x: xs,
        xtilde,
        psi,
        columns: Some(columns),
        orientation,
        grid: g,
    })
}
