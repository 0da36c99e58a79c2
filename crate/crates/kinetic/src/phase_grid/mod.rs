//! Phase-space grid on `T x [-v_cut, v_cut]`, fields sampled on it, and the
//! calculus, norms and moments every other module measures with.

mod calculus;
mod dump;
mod norms;

pub use calculus::{fd_dv, fd_dv_row, spectral_dx, spectral_dx_spatial, FdDerivative};
pub use dump::{read_dump, read_dump_from, write_dump, write_dump_to, DUMP_MAGIC};
pub use norms::{
    aniso_norm, compute_thresholds, derivative_budget, moment, spatial_sobolev_norm,
    weighted_l2_distance, weighted_sobolev_norm, winf_norm, MIN_ANISO_V_ORDER,
};

use crate::error::{KineticError, Result};
use ndarray::Array2;
use std::fmt;
use std::sync::Arc;

/// Default outer-row decay tolerance relative to the field maximum.
pub const DEFAULT_DECAY_TOL: f64 = 1e-10;

/// Tensor grid: `nx` periodic points on `[0,1)` and `nv` cell-centred points
/// on `[-v_cut, v_cut]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub nx: usize,
    pub nv: usize,
    pub v_cut: f64,
    pub dx: f64,
    pub dv: f64,
}

/// Validated grid constructor.
pub fn build_grid(nx: usize, nv: usize, v_cut: f64) -> Result<Grid> {
    if !nx.is_power_of_two() || nx < 4 {
        return Err(KineticError::Config(format!(
            "nx = {nx} must be a power of two (at least 4)"
        )));
    }
    if !nv.is_power_of_two() || nv < 8 {
        return Err(KineticError::Config(format!(
            "nv = {nv} must be a power of two (at least 8)"
        )));
    }
    if !(v_cut > 0.0 && v_cut.is_finite()) {
        return Err(KineticError::Config(format!(
            "v_cut = {v_cut} must be positive"
        )));
    }
    let dv = 2.0 * v_cut / nv as f64;
    if dv >= 1.0 {
        return Err(KineticError::Config(format!(
            "dv = {dv} must be below 1 (increase nv or reduce v_cut)"
        )));
    }
    Ok(Grid {
        nx,
        nv,
        v_cut,
        dx: 1.0 / nx as f64,
        dv,
    })
}

impl Grid {
    pub fn new(nx: usize, nv: usize, v_cut: f64) -> Result<Grid> {
        build_grid(nx, nv, v_cut)
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.dx
    }

    #[inline]
    pub fn v(&self, j: usize) -> f64 {
        -self.v_cut + (j as f64 + 0.5) * self.dv
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.nx).map(|i| self.x(i)).collect()
    }

    pub fn vs(&self) -> Vec<f64> {
        (0..self.nv).map(|j| self.v(j)).collect()
    }

    /// Continuous row coordinate of velocity `v` (row `j` sits at `j`).
    #[inline]
    pub fn v_index(&self, v: f64) -> f64 {
        (v + self.v_cut) / self.dv - 0.5
    }

    pub fn cells(&self) -> usize {
        self.nx * self.nv
    }

    /// Short tag used in reports, e.g. `128x256`.
    pub fn tag(&self) -> String {
        format!("{}x{}", self.nx, self.nv)
    }
}

/// Distribution function sampled on a grid; `values[[i, j]] = f(x_i, v_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseField {
    pub grid: Grid,
    pub values: Array2<f64>,
    pub time: f64,
}

impl PhaseField {
    pub fn zeros(grid: Grid) -> Self {
        PhaseField {
            grid,
            values: Array2::zeros((grid.nx, grid.nv)),
            time: 0.0,
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = Array2::from_shape_fn((grid.nx, grid.nv), |(i, j)| f(grid.x(i), grid.v(j)));
        PhaseField {
            grid,
            values,
            time: 0.0,
        }
    }

    pub fn from_values(grid: Grid, values: Array2<f64>, time: f64) -> Result<Self> {
        if values.dim() != (grid.nx, grid.nv) {
            return Err(KineticError::Config(format!(
                "array shape {:?} does not match grid {}",
                values.dim(),
                grid.tag()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(KineticError::Domain(
                "field contains non-finite values".into(),
            ));
        }
        Ok(PhaseField { grid, values, time })
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// Largest magnitude on the two outermost velocity rows over the field maximum.
    pub fn decay_ratio(&self) -> f64 {
        let max = self.max_abs();
        if max == 0.0 {
            return 0.0;
        }
        let nv = self.grid.nv;
        let edge = (0..self.grid.nx).fold(0.0f64, |m, i| {
            m.max(self.values[[i, 0]].abs())
                .max(self.values[[i, nv - 1]].abs())
        });
        edge / max
    }

    pub fn check_decay(&self, tol: f64) -> Result<()> {
        let ratio = self.decay_ratio();
        if ratio > tol {
            Err(KineticError::DecayViolation { ratio, tol })
        } else {
            Ok(())
        }
    }

    /// `a * self + b * other` on the same grid.
    pub fn combine(&self, a: f64, other: &PhaseField, b: f64) -> PhaseField {
        assert_eq!(self.grid, other.grid, "fields live on different grids");
        let mut values = self.values.clone();
        values.zip_mut_with(&other.values, |x, &y| *x = a * *x + b * y);
        PhaseField {
            grid: self.grid,
            values,
            time: self.time,
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> PhaseField {
        PhaseField {
            grid: self.grid,
            values: self.values.mapv(f),
            time: self.time,
        }
    }

    /// Total mass by the trapezoid rule.
    pub fn mass(&self) -> f64 {
        self.values.sum() * self.grid.dx * self.grid.dv
    }
}

/// Function of `x` alone on the periodic grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialField {
    pub nx: usize,
    pub values: Vec<f64>,
    pub time: f64,
}

impl SpatialField {
    pub fn new(values: Vec<f64>, time: f64) -> Self {
        SpatialField {
            nx: values.len(),
            values,
            time,
        }
    }

    pub fn from_fn(nx: usize, f: impl Fn(f64) -> f64) -> Self {
        let values = (0..nx).map(|i| f(i as f64 / nx as f64)).collect();
        SpatialField {
            nx,
            values,
            time: 0.0,
        }
    }

    pub fn zeros(nx: usize) -> Self {
        SpatialField::new(vec![0.0; nx], 0.0)
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    /// Periodic index access.
    #[inline]
    pub fn at(&self, i: isize) -> f64 {
        self.values[i.rem_euclid(self.nx as isize) as usize]
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.nx as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// `L^2(T)` norm by the trapezoid rule.
    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v * v).sum::<f64>() / self.nx as f64).sqrt()
    }
}

/// Velocity test function `psi` defining a moment `int f psi dv`.
#[derive(Clone)]
pub struct MomentSpec {
    pub name: String,
    pub psi: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub r0: f64,
    pub derivative_order_available: usize,
}

impl fmt::Debug for MomentSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MomentSpec")
            .field("name", &self.name)
            .field("r0", &self.r0)
            .field(
                "derivative_order_available",
                &self.derivative_order_available,
            )
            .finish()
    }
}

impl MomentSpec {
    pub fn new(
        name: impl Into<String>,
        psi: impl Fn(f64) -> f64 + Send + Sync + 'static,
        r0: f64,
        derivative_order_available: usize,
    ) -> Self {
        MomentSpec {
            name: name.into(),
            psi: Arc::new(psi),
            r0,
            derivative_order_available,
        }
    }

    /// Density: `psi = 1`.
    pub fn density() -> Self {
        MomentSpec::new("density", |_| 1.0, 0.0, usize::MAX)
    }

    /// Current: `psi = v`.
    pub fn current() -> Self {
        MomentSpec::new("current", |v| v, 1.0, usize::MAX)
    }

    #[inline]
    pub fn eval(&self, v: f64) -> f64 {
        (self.psi)(v)
    }

    /// Growth bound `max_j |psi(v_j)| (1+v_j^2)^(-r0/2)` on the grid.
    pub fn growth_constant(&self, grid: &Grid) -> f64 {
        grid.vs().iter().fold(0.0f64, |m, &v| {
            m.max(self.eval(v).abs() * (1.0 + v * v).powf(-self.r0 / 2.0))
        })
    }

    pub fn check_growth(&self, grid: &Grid, bound: f64) -> Result<()> {
        let c = self.growth_constant(grid);
        if c.is_finite() && c <= bound {
            Ok(())
        } else {
            Err(KineticError::Config(format!(
                "moment '{}' violates the growth bound: {c:.3e} > {bound:.3e}",
                self.name
            )))
        }
    }
}

/// One recorded norm value.
#[derive(Debug, Clone, PartialEq)]
pub struct NormEntry {
    pub kind: String,
    pub params: String,
    pub time: f64,
    pub value: f64,
}

/// Table of norm values keyed by (kind, parameters, time), in insertion order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NormReport {
    pub entries: Vec<NormEntry>,
}

impl NormReport {
    pub fn insert(&mut self, kind: &str, params: &str, time: f64, value: f64) {
        assert!(value >= 0.0, "norm values are nonnegative, got {value}");
        self.entries.push(NormEntry {
            kind: kind.to_string(),
            params: params.to_string(),
            time,
            value,
        });
    }

    pub fn get(&self, kind: &str, params: &str, time: f64) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| e.kind == kind && e.params == params && e.time == time)
            .map(|e| e.value)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}
